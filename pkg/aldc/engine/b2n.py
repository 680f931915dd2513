"""
Base-to-novel distribution calibration.

Novel-class Gaussian statistics estimated from a handful of shots are blended
with the statistics of the most similar base classes, widened by a dispersion
constant, and sampled to synthesize extra training features.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from aldc.core import CalibrationError

logger = logging.getLogger(__name__)

_JITTER = 1e-6
_PSD_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class ClassStatistics:
    class_id: int
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True, eq=False)
class CalibratedDistribution:
    class_id: int
    mean_prime: np.ndarray
    cov_prime: np.ndarray
    alpha: float
    contributing_base_ids: Tuple[int, ...]


def class_statistics(samples: np.ndarray, class_id: int) -> ClassStatistics:
    """Population mean and covariance (divide by n, not n - 1)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    n = x.shape[0]
    if n == 0:
        raise CalibrationError(f"no samples for class {class_id}")
    mean = x.sum(axis=0) / n
    centered = x - mean
    cov = centered.T @ centered / n
    return ClassStatistics(class_id=class_id, mean=mean, covariance=(cov + cov.T) / 2.0, count=n)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def select_base_classes(
    novel_class: int,
    ambiguous_pairs: Sequence[Tuple[int, int]],
    base_stats: Mapping[int, ClassStatistics],
    novel_weight: np.ndarray,
    k: int,
) -> List[int]:
    """
    Top-k base classes for one novel class.

    Ranked by how often (base_arg=b, novel_arg=novel_class) occurs among the
    ambiguous pairs; frequency ties and shortfalls fall back to the cosine
    between the novel weight and the base mean, then to the lower id.
    """
    if k <= 0:
        return []
    if not base_stats:
        raise CalibrationError("no base statistics to select from")

    freq = Counter(b for b, nv in ambiguous_pairs if nv == novel_class)
    ranked = sorted(
        base_stats,
        key=lambda b: (-freq.get(b, 0), -_cosine(novel_weight, base_stats[b].mean), b),
    )
    return ranked[:k]


def repair_psd(cov: np.ndarray) -> np.ndarray:
    """
    Symmetrize; if an eigenvalue is negative add 1e-6 to the diagonal, and if
    that is still not enough clip the spectrum at 1e-6. PSD input is returned
    as is (after symmetrization).
    """
    cov = np.asarray(cov, dtype=np.float64)
    if not np.all(np.isfinite(cov)):
        raise CalibrationError("covariance not repairable: non-finite entries")
    cov = (cov + cov.T) / 2.0
    if cov.size == 0:
        return cov
    tol = _PSD_TOLERANCE * max(1.0, float(np.max(np.abs(np.diag(cov)))))

    if float(np.linalg.eigvalsh(cov)[0]) >= -tol:
        return cov

    jittered = cov + _JITTER * np.eye(cov.shape[0])
    if float(np.linalg.eigvalsh(jittered)[0]) >= -tol:
        logger.debug("[B2N] covariance repaired with diagonal jitter")
        return jittered

    eigvals, eigvecs = np.linalg.eigh(cov)
    clipped = (eigvecs * np.maximum(eigvals, _JITTER)) @ eigvecs.T
    logger.debug("[B2N] covariance repaired by eigenvalue clipping")
    return (clipped + clipped.T) / 2.0


def calibrate(
    novel_stats: ClassStatistics,
    selected_base_stats: Sequence[ClassStatistics],
    alpha: float,
) -> CalibratedDistribution:
    """
    mean' = (sum of base means + novel mean) / (k + 1)
    cov'  = (sum of base covariances + novel covariance) / (k + 1) + alpha
    with alpha added to every entry, followed by repair_psd.
    """
    d = novel_stats.dim
    for s in selected_base_stats:
        if s.dim != d or s.covariance.shape != (d, d):
            raise CalibrationError(
                f"dimension mismatch: base class {s.class_id} has d={s.dim}, novel has d={d}"
            )

    # Sum in id order so the result does not depend on the selection order.
    ordered = sorted(selected_base_stats, key=lambda s: s.class_id)
    k = len(ordered)
    mean_sum = novel_stats.mean.copy()
    cov_sum = novel_stats.covariance.copy()
    for s in ordered:
        mean_sum = mean_sum + s.mean
        cov_sum = cov_sum + s.covariance

    mean_prime = mean_sum / (k + 1)
    cov_prime = repair_psd(cov_sum / (k + 1) + alpha)
    return CalibratedDistribution(
        class_id=novel_stats.class_id,
        mean_prime=mean_prime,
        cov_prime=cov_prime,
        alpha=alpha,
        contributing_base_ids=tuple(s.class_id for s in ordered),
    )


def _factor(cov: np.ndarray) -> np.ndarray:
    """Cholesky factor; semidefinite matrices fall back to an eigen factor."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(cov)
        return eigvecs * np.sqrt(np.maximum(eigvals, 0.0))


def sample_features(dist: CalibratedDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from N(mean', cov') as rows of an (n, d) array."""
    d = dist.mean_prime.shape[0]
    if n < 0:
        raise CalibrationError("sample count must be non-negative")
    if n == 0:
        return np.zeros((0, d))
    if not (np.all(np.isfinite(dist.cov_prime)) and np.all(np.isfinite(dist.mean_prime))):
        raise CalibrationError("covariance not repairable: non-finite entries")
    factor = _factor(dist.cov_prime)
    z = rng.standard_normal((n, d))
    return dist.mean_prime + z @ factor.T


def class_rng(seed: int, session_index: int, class_id: int) -> np.random.Generator:
    """Independent stream per (session, class) derived from the master seed."""
    return np.random.default_rng([seed, session_index, class_id])
