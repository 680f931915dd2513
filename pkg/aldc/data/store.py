"""
Text persistence for features, configs, benchmarks and run reports.

Feature file: header ``dim=<d>,classes=<c>,samples=<n>`` then one row per
sample, ``class_id,v1,...,vd``. Floats are written with repr(), which
round-trips every float64 exactly.

Config file: ``key=value`` lines, keys exactly the ExperimentConfig fields.

Report file: a comma-separated table (``run,0,...,T,Avg``), a blank line,
then one ``[label]`` key-value block per run.
"""

import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from aldc.core import ConfigError, DataFormatError, validate_config
from aldc.data.models import (
    REQUIRED_CONFIG_KEYS,
    ClassSet,
    ExperimentConfig,
    FeatureFileHeader,
    FeatureSet,
    LabeledFeature,
    ReportRow,
    RunReport,
    SessionData,
    UnlabeledPool,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_HEADER_PATTERN = re.compile(r"^dim=(\d+),classes=(\d+),samples=(\d+)$")
_NULLABLE_KEYS = ("generated_per_class", "novel_class_count", "calibration")
_AUTO = "auto"
_MISSING = "-"
_AVG_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


def _format_float(value: float) -> str:
    return repr(float(value))


def write_features(path: PathLike, samples: Union[FeatureSet, Sequence[LabeledFeature]]) -> None:
    if isinstance(samples, FeatureSet):
        vectors, labels = samples.vectors, samples.labels
    else:
        if not samples:
            raise DataFormatError("empty dataset")
        dims = {np.asarray(s.vector).shape for s in samples}
        if len(dims) != 1:
            raise DataFormatError("samples differ in dimension")
        vectors = np.stack([np.asarray(s.vector, dtype=np.float64) for s in samples])
        labels = np.asarray([s.class_id for s in samples], dtype=np.int64)
    if len(labels) == 0:
        raise DataFormatError("empty dataset")
    if vectors.shape[1] == 0:
        raise DataFormatError("dim must be positive")

    header = FeatureFileHeader(
        dim=int(vectors.shape[1]),
        class_count=len(np.unique(labels)),
        sample_count=int(len(labels)),
    )
    lines = [f"dim={header.dim},classes={header.class_count},samples={header.sample_count}"]
    for label, row in zip(labels, vectors):
        lines.append(",".join([str(int(label))] + [_format_float(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(line: str) -> FeatureFileHeader:
    match = _HEADER_PATTERN.match(line.strip())
    if not match:
        raise DataFormatError(f"line 1: malformed header {line.strip()!r}")
    dim, classes, count = (int(g) for g in match.groups())
    if dim <= 0 or classes <= 0 or count <= 0:
        raise DataFormatError("line 1: header values must be positive")
    return FeatureFileHeader(dim=dim, class_count=classes, sample_count=count)


def read_feature_set(path: PathLike) -> FeatureSet:
    """Parse a feature file into a FeatureSet (sample ids left at -1)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataFormatError("empty dataset")
    header = _parse_header(lines[0])

    labels: List[int] = []
    rows: List[List[float]] = []
    for number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != header.dim + 1:
            raise DataFormatError(
                f"line {number}: expected {header.dim + 1} cells, found {len(cells)}"
            )
        try:
            label = int(cells[0])
            values = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise DataFormatError(f"line {number}: non-numeric cell ({exc})") from exc
        if label < 0:
            raise DataFormatError(f"line {number}: negative class id {label}")
        if not all(math.isfinite(v) for v in values):
            raise DataFormatError(f"line {number}: non-finite component")
        labels.append(label)
        rows.append(values)

    if len(rows) != header.sample_count:
        raise DataFormatError(
            f"header/body mismatch: header says samples={header.sample_count}, found {len(rows)}"
        )
    if len(set(labels)) != header.class_count:
        raise DataFormatError(
            f"header/body mismatch: header says classes={header.class_count}, "
            f"found {len(set(labels))}"
        )
    return FeatureSet.from_arrays(rows, labels)


def read_features(path: PathLike) -> List[LabeledFeature]:
    return read_feature_set(path).to_samples()


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------


def _format_config_value(value: object) -> str:
    if value is None:
        return _AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return _format_float(value)
    return str(value)


def config_lines(config: ExperimentConfig) -> List[str]:
    return [
        f"{name}={_format_config_value(getattr(config, name))}"
        for name in ExperimentConfig.model_fields
    ]


def write_config(path: PathLike, config: ExperimentConfig) -> None:
    Path(path).write_text("\n".join(config_lines(config)) + "\n", encoding="utf-8")


def parse_config_text(text: str) -> ExperimentConfig:
    values: Dict[str, Optional[str]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown key: {key}")
        if key in values:
            raise ConfigError(f"duplicate key: {key}")
        values[key] = None if key in _NULLABLE_KEYS and value.lower() == _AUTO else value

    for key in REQUIRED_CONFIG_KEYS:
        if key not in values:
            raise ConfigError(f"missing key: {key}")

    try:
        config = ExperimentConfig.model_validate(values)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise ConfigError(f"invalid value for {field}: {first.get('msg', 'parse failure')}") from exc
    return validate_config(config)


def read_config(path: PathLike) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _format_pct(value: Optional[float]) -> str:
    return _MISSING if value is None else f"{value:.2f}"


def _format_optional(value: Optional[float], fmt: str) -> str:
    return _MISSING if value is None else format(value, fmt)


def report_cells(report: RunReport) -> List[str]:
    """Session accuracies exactly as emitted (2-decimal percentages)."""
    return [_format_pct(s.acc_all) for s in report.sessions]


def emitted_average(cells: Sequence[str]) -> float:
    """Mean of the emitted session cells, the value written to the Avg column."""
    return sum(float(c) for c in cells) / len(cells)


def _report_block(report: RunReport) -> List[str]:
    lines = [f"[{report.label}]"]
    lines.extend(f"config.{line}" for line in config_lines(report.config))
    lines.append(f"avg_all={_format_pct(report.avg_all)}")
    lines.append(f"avg_base={_format_pct(report.avg_base)}")
    lines.append(f"avg_novel={_format_pct(report.avg_novel)}")
    for s in report.sessions:
        prefix = f"session.{s.session_index}"
        lines.extend(
            [
                f"{prefix}.acc_all={_format_pct(s.acc_all)}",
                f"{prefix}.acc_base={_format_pct(s.acc_base)}",
                f"{prefix}.acc_novel={_format_pct(s.acc_novel)}",
                f"{prefix}.pseudo_precision={_format_optional(s.pseudo_precision, '.4f')}",
                f"{prefix}.n_confident={s.n_confident}",
                f"{prefix}.n_ambiguous={s.n_ambiguous}",
                f"{prefix}.n_generated={s.n_generated}",
                f"{prefix}.tau_used={_format_optional(s.tau_used, '.6f')}",
                f"{prefix}.n_test={s.n_test}",
            ]
        )
    return lines


def write_report(path: PathLike, reports: Union[RunReport, Sequence[RunReport]]) -> None:
    """
    Table row per run (sessions 0..T then Avg) followed by the key-value
    blocks. Avg is the mean of the emitted cells, so re-parsing the row
    reproduces it.
    """
    runs = [reports] if isinstance(reports, RunReport) else list(reports)
    if not runs:
        raise DataFormatError("no runs to report")
    n_sessions = len(runs[0].sessions)
    for run in runs:
        if len(run.sessions) != n_sessions:
            raise DataFormatError(f"run {run.label!r} has a different session count")
        if "," in run.label or "\n" in run.label:
            raise DataFormatError(f"run label {run.label!r} contains a separator")

    lines = [",".join(["run"] + [str(t) for t in range(n_sessions)] + ["Avg"])]
    for run in runs:
        cells = report_cells(run)
        lines.append(",".join([run.label] + cells + [repr(emitted_average(cells))]))
    for run in runs:
        lines.append("")
        lines.extend(_report_block(run))

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("[STORE] report written path=%s runs=%d", path, len(runs))


def read_report(path: PathLike) -> List[ReportRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("run,"):
        raise DataFormatError("line 1: missing report table header")
    header = lines[0].split(",")
    if header[-1] != "Avg":
        raise DataFormatError("line 1: last column must be Avg")
    width = len(header)

    table: List[ReportRow] = []
    number = 1
    for number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            break
        cells = raw.split(",")
        if len(cells) != width:
            raise DataFormatError(f"line {number}: expected {width} cells, found {len(cells)}")
        try:
            accs = tuple(float(c) for c in cells[1:-1])
            avg = float(cells[-1])
        except ValueError as exc:
            raise DataFormatError(f"line {number}: non-numeric cell ({exc})") from exc
        table.append(ReportRow(label=cells[0], session_acc=accs, avg=avg))

    details: Dict[str, Dict[str, str]] = {}
    current: Optional[Dict[str, str]] = None
    for offset, raw in enumerate(lines[number:], start=number + 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = details.setdefault(line[1:-1], {})
            continue
        if current is None or "=" not in line:
            raise DataFormatError(f"line {offset}: expected key=value inside a run block")
        key, value = line.split("=", 1)
        current[key] = value

    return [
        ReportRow(label=r.label, session_acc=r.session_acc, avg=r.avg, details=details.get(r.label, {}))
        for r in table
    ]


def avg_consistent(row: ReportRow) -> bool:
    if not row.session_acc:
        return False
    return abs(sum(row.session_acc) / len(row.session_acc) - row.avg) <= _AVG_TOLERANCE


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


def _session_file(directory: Path, t: int, split: str) -> Path:
    return directory / f"session_{t}_{split}.csv"


def write_benchmark(directory: PathLike, sessions: Sequence[SessionData]) -> List[Path]:
    """
    One file per non-empty split per session. The unlabeled file carries the
    hidden classes as its class ids (diagnostics only).
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for data in sessions:
        t = data.session_index
        splits = {
            "labeled": data.labeled,
            "unlabeled": FeatureSet(
                vectors=data.unlabeled.vectors,
                labels=data.unlabeled_truth,
                sample_ids=data.unlabeled.sample_ids,
            ),
            "test": data.test,
        }
        for split, features in splits.items():
            if len(features) == 0:
                continue
            target = _session_file(out, t, split)
            write_features(target, features)
            written.append(target)
    logger.info("[STORE] benchmark written dir=%s files=%d", out, len(written))
    return written


def _with_ids(features: FeatureSet, start: int) -> FeatureSet:
    ids = np.arange(start, start + len(features), dtype=np.int64)
    return FeatureSet(vectors=features.vectors, labels=features.labels, sample_ids=ids)


def read_benchmark(directory: PathLike, config: Optional[ExperimentConfig] = None) -> List[SessionData]:
    """
    Load sessions written by write_benchmark (or prepared externally in the
    same layout). Sessions must be numbered contiguously from 0.
    """
    src = Path(directory)
    indices = sorted(
        int(m.group(1))
        for m in (re.match(r"^session_(\d+)_labeled\.csv$", p.name) for p in src.iterdir())
        if m
    )
    if not indices or indices != list(range(len(indices))):
        raise DataFormatError(f"{src}: expected session_0..session_T labeled files")

    sessions: List[SessionData] = []
    next_id = 0
    dim: Optional[int] = None
    for t in indices:
        labeled = _with_ids(read_feature_set(_session_file(src, t, "labeled")), next_id)
        next_id += len(labeled)
        dim = labeled.dim if dim is None else dim
        if config is not None and labeled.dim != config.dim:
            raise DataFormatError(f"session {t}: features have d={labeled.dim}, config dim={config.dim}")

        pool_path = _session_file(src, t, "unlabeled")
        if pool_path.exists():
            pool = _with_ids(read_feature_set(pool_path), next_id)
            next_id += len(pool)
        else:
            pool = FeatureSet.empty(dim)

        test_path = _session_file(src, t, "test")
        if not test_path.exists():
            raise DataFormatError(f"session {t}: missing test split")
        test = _with_ids(read_feature_set(test_path), next_id)
        next_id += len(test)

        for name, part in (("unlabeled", pool), ("test", test)):
            if len(part) and part.dim != dim:
                raise DataFormatError(f"session {t}: {name} split has d={part.dim}, expected {dim}")

        sessions.append(
            SessionData(
                session_index=t,
                labeled=labeled,
                unlabeled=UnlabeledPool(vectors=pool.vectors, sample_ids=pool.sample_ids),
                unlabeled_truth=pool.labels,
                test=test,
                new_classes=ClassSet(session_index=t, class_ids=tuple(labeled.class_ids())),
            )
        )
    logger.info("[STORE] benchmark read dir=%s sessions=%d", src, len(sessions))
    return sessions
