import os
import sys
import json
import logging
import queue
import tempfile
import threading
from datetime import datetime
from typing import Any, Dict, Optional

import pandas as pd

from src.constants import THREADS_ENV_VAR

MASK64 = (1 << 64) - 1


class Logger:
    def __init__(self, stream=None, test_mode=False, log_dir=None):
        self.stream = stream
        self.log_queue = queue.Queue()
        self.write_thread = None
        self.should_stop = False
        self.line_number = 0  # Track line numbers for console display
        self.lock = threading.Lock()  # replications share one logger

        # Skip file logging in test mode
        self.test_mode = test_mode
        if test_mode or log_dir is None:
            self.current_log_file = None
            self.logger = logging.getLogger('targetmo_test' if test_mode else 'targetmo_console')
            self.logger.setLevel(logging.INFO)
            if not self.logger.handlers:
                self.logger.addHandler(logging.NullHandler())
            self.test_mode = True
            return

        self.log_dir = log_dir
        os.makedirs(self.log_dir, exist_ok=True)

        log_file = os.path.join(self.log_dir, f"targetmo_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
        self.file_handler = logging.FileHandler(log_file, encoding='utf-8')
        self.file_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))

        self.logger = logging.getLogger('targetmo')
        self.logger.setLevel(logging.INFO)

        # Remove existing handlers to avoid duplicates
        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)

        self.logger.addHandler(self.file_handler)
        self.current_log_file = log_file

        self.start_logging_thread()

    def start_logging_thread(self):
        """Start the background thread for file logging."""
        if self.test_mode:
            return

        def log_worker():
            while not self.should_stop or not self.log_queue.empty():
                try:
                    message, level = self.log_queue.get(timeout=0.1)
                    self.logger.log(level, message)
                    self.log_queue.task_done()
                except queue.Empty:
                    continue
                except Exception as e:
                    print(f"Error in log worker: {e}", file=sys.stderr)

        self.write_thread = threading.Thread(target=log_worker, daemon=True)
        self.write_thread.start()

    def append(self, message, level=logging.INFO):
        """Log a message to the file and to the console stream if one is attached."""
        with self.lock:
            self.line_number += 1
            if self.stream:
                width = max(4, len(str(self.line_number)))
                self.stream.write(f"[{self.line_number:0{width}d}] {message}\n")
                self.stream.flush()

        if not self.test_mode:
            self.log_queue.put((message, level))

    def get_log_file_path(self):
        """Return the path to the current log file."""
        return self.current_log_file

    def reset_line_numbers(self):
        with self.lock:
            self.line_number = 0

    def close(self):
        """Flush queued messages and release the file handler."""
        self.should_stop = True
        if self.write_thread:
            self.write_thread.join(timeout=2.0)
            self.write_thread = None
        if hasattr(self, 'file_handler') and not self.test_mode:
            self.file_handler.close()
            self.logger.removeHandler(self.file_handler)

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def splitmix64(value: int) -> int:
    """One round of the splitmix64 finalizer on a 64-bit integer."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *indices: int) -> int:
    """Mix a base seed with stream/replication indices into an independent 64-bit seed."""
    seed = int(base) & MASK64
    for index in indices:
        seed = splitmix64(seed ^ splitmix64(int(index) & MASK64))
    return seed


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """Number of workers allowed, capped by the TARGETMO_THREADS environment variable."""
    cap = os.environ.get(THREADS_ENV_VAR)
    workers = requested or os.cpu_count() or 1
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, workers)


def atomic_write_text(path: str, text: str):
    """Write a text file through a temporary file and an atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_frame(path: str, frame) -> None:
    """Write a pandas DataFrame as CSV atomically, header always present."""
    atomic_write_text(path, frame.to_csv(index=False, float_format='%.17g', lineterminator='\n'))


def read_frame(path: str):
    """Read a CSV written by atomic_write_frame back without losing float precision."""
    return pd.read_csv(path, float_precision='round_trip')


def save_json(path: str, payload: Dict[str, Any]):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def load_json(path: str) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _json_default(value):
    """Convert numpy scalars/arrays for json.dump."""
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, float):
        return value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
