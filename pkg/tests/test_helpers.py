import io
import json
import os
from concurrent.futures import ThreadPoolExecutor

import pandas as pd
import pytest

from src.utils.helpers import (
    Logger,
    atomic_write_frame,
    atomic_write_text,
    derive_seed,
    load_json,
    read_frame,
    resolve_worker_count,
    save_json,
    splitmix64,
)


class TestLogger:
    def test_numbered_console_lines(self):
        """Console lines are prefixed with a running number."""
        stream = io.StringIO()
        logger = Logger(stream=stream)
        logger.append("first")
        logger.append("second")
        lines = stream.getvalue().splitlines()
        assert lines == ["[0001] first", "[0002] second"]
        logger.close()

    def test_test_mode_has_no_file(self, tmp_path):
        logger = Logger(log_dir=str(tmp_path))
        assert logger.get_log_file_path() is None
        logger.append("nothing on disk")
        logger.close()
        assert os.listdir(tmp_path) == []

    def test_reset_line_numbers(self):
        stream = io.StringIO()
        logger = Logger(stream=stream)
        logger.append("a")
        logger.reset_line_numbers()
        logger.append("b")
        assert stream.getvalue().splitlines()[-1] == "[0001] b"

    def test_concurrent_appends_are_numbered_once(self):
        stream = io.StringIO()
        logger = Logger(stream=stream)
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda k: logger.append(f"message {k}"), range(400)))
        numbers = sorted(int(line[1:line.index("]")]) for line in stream.getvalue().splitlines())
        assert numbers == list(range(1, 401))
        assert logger.line_number == 400


class TestSeeds:
    def test_splitmix_known_value(self):
        # first output of the reference splitmix64 generator seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_derive_is_deterministic(self):
        assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)

    def test_streams_differ(self):
        seeds = {derive_seed(42, k) for k in range(100)}
        assert len(seeds) == 100
        assert derive_seed(42, 1, 2) != derive_seed(42, 2, 1)

    def test_fits_64_bits(self):
        assert 0 <= derive_seed(-1, 7) < 2 ** 64


class TestWorkerCount:
    def test_environment_cap(self, monkeypatch):
        monkeypatch.setenv('TARGETMO_THREADS', '2')
        assert resolve_worker_count(8) == 2

    def test_invalid_cap_ignored(self, monkeypatch):
        monkeypatch.setenv('TARGETMO_THREADS', 'many')
        assert resolve_worker_count(3) == 3

    def test_at_least_one(self, monkeypatch):
        monkeypatch.setenv('TARGETMO_THREADS', '0')
        assert resolve_worker_count(4) == 1


class TestFiles:
    def test_atomic_text(self, tmp_path):
        path = tmp_path / 'nested' / 'out.txt'
        atomic_write_text(str(path), "hello\n")
        assert path.read_text() == "hello\n"
        assert [p for p in os.listdir(path.parent) if p.startswith('.tmp_')] == []

    def test_frame_keeps_full_precision(self, tmp_path):
        path = tmp_path / 'frame.csv'
        value = 0.1 + 0.2
        atomic_write_frame(str(path), pd.DataFrame({'a': [value], 'b': [1]}))
        assert read_frame(str(path))['a'].iloc[0] == value

    def test_empty_frame_has_header(self, tmp_path):
        path = tmp_path / 'empty.csv'
        atomic_write_frame(str(path), pd.DataFrame(columns=['iter', 'f1']))
        assert path.read_text().strip() == 'iter,f1'

    def test_json_with_numpy(self, tmp_path):
        import numpy as np
        path = str(tmp_path / 'data.json')
        save_json(path, {'values': np.array([1.5, 2.0]), 'count': np.int64(3)})
        assert load_json(path) == {'values': [1.5, 2.0], 'count': 3}
        with open(path, encoding='utf-8') as f:
            assert json.load(f)['count'] == 3

    def test_json_rejects_objects(self, tmp_path):
        with pytest.raises(TypeError):
            save_json(str(tmp_path / 'bad.json'), {'x': object()})
