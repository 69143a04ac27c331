import logging
import sys

import pytest

from utils.logger import LoggerFactory, resolve_level, verbosity_level


class TestLevels:
    @pytest.mark.parametrize("name,level", [("debug", logging.DEBUG), ("WARNING", logging.WARNING), (40, 40)])
    def test_resolve(self, name, level):
        assert resolve_level(name) == level

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="chatty"):
            resolve_level("chatty")

    def test_verbosity(self):
        assert verbosity_level(True, False) == logging.DEBUG
        assert verbosity_level(False, True) == logging.WARNING
        assert verbosity_level(False, False, default="ERROR") == logging.ERROR
        with pytest.raises(ValueError):
            verbosity_level(True, True)


class TestLoggerFactory:
    def test_cached_and_on_stderr(self):
        logger = LoggerFactory.get_logger("kinward.test.cached")
        assert LoggerFactory.get_logger("kinward.test.cached") is logger
        assert not logger.propagate
        assert [h.stream for h in logger.handlers] == [sys.stderr]

    def test_bad_level_falls_back_to_info(self):
        logger = LoggerFactory.get_logger("kinward.test.fallback", log_level="chatty")
        assert logger.level == logging.INFO

    def test_file_handler(self, tmp_path):
        path = tmp_path / "kinward.log"
        logger = LoggerFactory.get_logger("kinward.test.file", log_to_file=True, log_file_path=str(path))
        logger.warning("written")
        for handler in logger.handlers:
            handler.flush()
        assert "written" in path.read_text()
