import contextlib
import io
import json
import logging
import tempfile
import unittest
from pathlib import Path

from cyclenet.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_USAGE, build_parser, main
from cyclenet.core.dataset import read_csv
from cyclenet.core.utils import LOGGER_NAME

# Small enough to run the whole pipeline in a test
TINY = {
    "trace": {"n_traces": 3},
    "regimes": {"train_traces": 2, "test_cycles": 2, "adapt_cycles": 1, "trace_length": 60},
    "grid": {"lhs_points": 8},
    "cycle": {"dtheta": 1.0},
    "train": {"epochs": 2, "transfer_epochs": 1},
}


def run_cli(*argv: str) -> int:
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return main(list(argv))


class TestCli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.config = self.tmp / "config.json"
        self.config.write_text(json.dumps(TINY))
        self.out = self.tmp / "out"

    def tearDown(self):
        for handler in list(logging.getLogger(LOGGER_NAME).handlers):
            logging.getLogger(LOGGER_NAME).removeHandler(handler)
            handler.close()
        self._tmp.cleanup()

    def common(self):
        return ["--config", str(self.config), "--out", str(self.out)]

    def test_parser(self):
        args = build_parser().parse_args(["evaluate", "--method", "lm", "--method", "dt", "--regime", "test-2"])
        self.assertEqual((args.methods, args.regime), (["lm", "dt"], "test-2"))
        args = build_parser().parse_args(["size-study", "--sizes", "60,120"])
        self.assertEqual(args.sizes, [60, 120])

    def test_usage_errors(self):
        self.assertEqual(run_cli("train", "--method", "svm"), EXIT_USAGE)
        self.assertEqual(run_cli("train"), EXIT_USAGE)
        self.assertEqual(run_cli("frobnicate"), EXIT_USAGE)
        self.assertEqual(run_cli("report", "--workers", "0", *self.common()), EXIT_USAGE)
        self.assertEqual(run_cli("--help"), EXIT_OK)

    def test_config_errors(self):
        self.config.write_text(json.dumps({"grid": {"lhs_point": 3}}))
        self.assertEqual(run_cli("generate", *self.common()), EXIT_CONFIG)
        self.config.write_text("not json")
        self.assertEqual(run_cli("generate", *self.common()), EXIT_CONFIG)

    def test_missing_inputs(self):
        self.assertEqual(run_cli("train", "--method", "lm", *self.common()), EXIT_IO)
        self.assertEqual(run_cli("transfer", *self.common()), EXIT_IO)
        self.assertEqual(run_cli("report", *self.common()), EXIT_USAGE)

    def test_pipeline(self):
        self.assertEqual(run_cli("generate", *self.common()), EXIT_OK)
        for regime, cycles in (("train", 8), ("test-1a", 2), ("test-1b", 2), ("test-2", 3)):
            data = read_csv(self.out / "regimes" / f"{regime}.csv")
            self.assertEqual(len(data.case_ids()), cycles, regime)
        self.assertEqual(len(list((self.out / "traces").glob("*.csv"))), 3)

        self.assertEqual(run_cli("train", "--method", "lm", *self.common()), EXIT_OK)
        self.assertEqual(run_cli("train", "--method", "dnn", *self.common()), EXIT_OK)
        model = json.loads((self.out / "models" / "dnn.json").read_text())
        self.assertEqual(len(model["meta"]["loss_history"]), 2)

        self.assertEqual(run_cli("evaluate", "--method", "lm", *self.common()), EXIT_OK)
        self.assertTrue((self.out / "reports" / "lm.test-1a.metrics.json").is_file())
        self.assertTrue((self.out / "reports" / "evaluate.test-1a.svg").is_file())

        self.assertEqual(run_cli("size-study", "--sizes", "70", *self.common()), EXIT_USAGE)
        self.assertEqual(run_cli("size-study", "--sizes", "60,120", *self.common()), EXIT_OK)

        self.assertEqual(run_cli("report", *self.common()), EXIT_OK)
        summary = (self.out / "reports" / "summary.csv").read_text().splitlines()
        self.assertEqual(len(summary) - 1, 3 * 5 * 2)

        manifest = json.loads((self.out / "manifest.json").read_text())
        for section in ("generate", "train_lm", "train_dnn", "evaluate_test-1a", "size_study"):
            self.assertIn(section, manifest)
        self.assertTrue((self.out / "logs" / "cyclenet.log").is_file())


if __name__ == "__main__":
    unittest.main()
