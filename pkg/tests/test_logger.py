#!/usr/bin/env python3
"""
Unit tests for the logger module
"""
import logging
import os
import shutil
import sys
import tempfile

# Add src directory to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.logger import DEBUG_CONSOLE_FORMAT, setup_logger


class TestSetupLogger:
    """Test cases for setup_logger"""

    def setup_method(self):
        """Set up a scratch directory"""
        self.temp_dir = tempfile.mkdtemp(prefix="test_qmke_log_")

    def teardown_method(self):
        """Remove the scratch directory and the test loggers' handlers"""
        for name in ('qmke_test', 'qmke_test_file'):
            for handler in logging.getLogger(name).handlers:
                handler.close()
            logging.getLogger(name).handlers.clear()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_level_names(self):
        """Test that level names and numbers are both accepted"""
        assert setup_logger('qmke_test', level='info').level == logging.INFO
        assert setup_logger('qmke_test', level=logging.ERROR).level == logging.ERROR

    def test_repeated_setup_keeps_one_console_handler(self):
        """Test that configuring twice does not duplicate output"""
        setup_logger('qmke_test')
        logger = setup_logger('qmke_test')
        assert len(logger.handlers) == 1
        assert logger.handlers[0].stream is sys.stderr

    def test_debug_console_names_module(self):
        """Test the module prefix at DEBUG level"""
        logger = setup_logger('qmke_test', level='DEBUG')
        assert logger.handlers[0].formatter._fmt == DEBUG_CONSOLE_FORMAT

    def test_file_handler(self):
        """Test that a log file is created with its parent directory"""
        path = os.path.join(self.temp_dir, 'logs', 'run.log')
        logger = setup_logger('qmke_test_file', log_file=path, level='INFO')
        logger.info("solver converged")
        for handler in logger.handlers:
            handler.flush()
        with open(path, encoding='utf-8') as f:
            content = f.read()
        assert 'qmke_test_file - INFO - solver converged' in content
