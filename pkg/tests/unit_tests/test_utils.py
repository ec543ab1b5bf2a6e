import logging
import tempfile
import unittest
from pathlib import Path

from cyclenet.core.utils import (
    LOGGER_NAME,
    config_hash,
    create_logger,
    derive_seed,
    elide_middle,
    format_ranges,
    format_table,
)


class TestStrings(unittest.TestCase):
    def test_format_ranges(self):
        self.assertEqual(format_ranges([1, 2, 3, 7, 9, 10]), "1-3 7 9-10")
        self.assertEqual(format_ranges([4]), "4")
        self.assertEqual(format_ranges([], sep=","), "")
        self.assertEqual(format_ranges([0, 1, 5], sep=","), "0-1,5")

    def test_elide_middle(self):
        self.assertEqual(elide_middle("torque", 10), "torque    ")
        elided = elide_middle("exhaust_pressure_long_name", 14)
        self.assertIn(" ... ", elided)
        self.assertEqual(elided, "exha ... _name")

    def test_format_table(self):
        table = format_table(["model", "torque"], [["dnn", 1.234567], ["lm", 2]], width=8)
        lines = table.splitlines()
        self.assertEqual(len(lines), 4)
        self.assertIn("1.235", lines[2])
        self.assertEqual(len({len(line) for line in lines}), 1)


class TestHashing(unittest.TestCase):
    def test_config_hash_is_key_order_independent(self):
        self.assertEqual(config_hash({"a": 1, "b": [1, 2]}), config_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(config_hash({"a": 1}), config_hash({"a": 2}))

    def test_derive_seed(self):
        self.assertEqual(derive_seed(1, "lhs"), derive_seed(1, "lhs"))
        self.assertNotEqual(derive_seed(1, "lhs"), derive_seed(1, "trace"))
        self.assertNotEqual(derive_seed(1, "lhs"), derive_seed(2, "lhs"))
        self.assertLess(derive_seed(3, "init"), 2**63)


class TestLogger(unittest.TestCase):
    def test_handlers_replaced(self):
        logger = logging.getLogger(LOGGER_NAME)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "logs" / "cyclenet.log"
            create_logger(path, stream=False)
            create_logger(path, stream=False)
            self.assertEqual(len(logger.handlers), 1)
            logging.getLogger(LOGGER_NAME + ".campaign").info("written")
            for handler in list(logger.handlers):
                handler.flush()
            self.assertIn("written", path.read_text())
            for handler in list(logger.handlers):
                logger.removeHandler(handler)
                handler.close()


if __name__ == "__main__":
    unittest.main()
