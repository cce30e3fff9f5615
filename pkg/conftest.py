import os
import sys
import pytest

# Add the project root directory to Python's path
# This allows imports from 'src' to work correctly in tests
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

@pytest.fixture(autouse=True)
def setup_test_env(monkeypatch):
    """Set up test environment for all tests."""
    # Set environment variable to indicate we're in test mode
    monkeypatch.setenv("TARGETMO_TEST_MODE", "1")

    # Patch the Logger class to use test_mode=True by default
    from src.utils.helpers import Logger
    original_init = Logger.__init__

    def patched_init(self, stream=None, test_mode=False, log_dir=None):
        # Always use test_mode=True in tests
        original_init(self, stream, test_mode=True, log_dir=log_dir)

    monkeypatch.setattr(Logger, "__init__", patched_init)

    yield
