import importlib.util
import pathlib

BENCH = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_on_every_backend():
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    rows = mod.run(repeat=1, quick=True)
    from qrl import kernels

    assert {b for _, b, _ in rows} == set(kernels.available_backends())
    assert all(t > 0 for _, _, t in rows)


def test_pure_python_switch(monkeypatch):
    import subprocess
    import sys

    code = "import qrl.kernels as k; print(k.BACKEND)"
    env = {"QRL_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "python"
