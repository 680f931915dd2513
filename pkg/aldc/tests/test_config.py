import unittest
from unittest.mock import patch

from aldc.config import Settings


class TestSettings(unittest.TestCase):
    def test_defaults_validate(self):
        with patch.object(Settings, "LOG_LEVEL", "INFO"), patch.object(
            Settings, "LOG_FORMAT", "json"
        ), patch.object(Settings, "SWEEP_WORKERS_RAW", "1"):
            Settings.validate()
            self.assertEqual(Settings.sweep_workers(), 1)

    def test_bad_worker_count(self):
        with patch.object(Settings, "SWEEP_WORKERS_RAW", "many"):
            with self.assertRaisesRegex(RuntimeError, "ALDC_SWEEP_WORKERS"):
                Settings.validate()

    def test_zero_workers(self):
        with patch.object(Settings, "SWEEP_WORKERS_RAW", "0"):
            with self.assertRaisesRegex(RuntimeError, ">= 1"):
                Settings.validate()

    def test_unknown_level(self):
        with patch.object(Settings, "LOG_LEVEL", "LOUD"):
            with self.assertRaisesRegex(RuntimeError, "ALDC_LOG_LEVEL"):
                Settings.validate()
