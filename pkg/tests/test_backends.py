import os
import subprocess
import sys
from pathlib import Path

import pytest

from matcoarsen import _core

ROOT = Path(__file__).resolve().parents[1]


def test_backend_selection():
    assert _core.BACKEND in _core.available_backends()
    assert "python" in _core.available_backends()
    with pytest.raises(ValueError):
        _core.get_match_kernel("fortran")


def test_pure_python_env_forces_fallback():
    code = "from matcoarsen import _core; print(_core.BACKEND)"
    env = dict(os.environ, MATCOARSEN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_script_runs(tmp_path):
    out = subprocess.run(
        [sys.executable, str(ROOT / "benchmarks" / "bench_matching.py"), "--sizes", "50x200", "--repeats", "1",
         "--json", str(tmp_path / "b.json")],
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stderr
    assert "50x200" in out.stdout and (tmp_path / "b.json").is_file()
