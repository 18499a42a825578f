"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--quick]
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from qrl import kernels

CASES = {
    "gxor 8 qutrits": ((3,) * 8, "shift"),
    "gxor 16 qubits": ((2,) * 16, "shift"),
    "local 16 qubits": ((2,) * 16, "matrix"),
    "clocal 16 qubits": ((2,) * 16, "cmatrix"),
    "probabilities 16 qubits": ((2,) * 16, "probs"),
    "collapse 16 qubits": ((2,) * 16, "collapse"),
}


def _call(mod, kind, psi, dims, u):
    n = len(dims)
    if kind == "shift":
        return mod.controlled_shift(psi, dims, 1, n - 2, True)
    if kind == "matrix":
        return mod.apply_matrix(psi, dims, n // 2, u)
    if kind == "cmatrix":
        return mod.apply_matrix(psi, dims, n // 2, u, ((0, 1), (n - 1, 0)))
    if kind == "probs":
        return mod.outcome_probabilities(psi, dims, (n - 1, 2, 0))
    return mod.collapse(psi, dims, (n - 1, 2), (1, 0))


def run(repeat: int = 5, quick: bool = False) -> list[tuple[str, str, float]]:
    rng = np.random.default_rng(0)
    rows = []
    for name, (dims, kind) in CASES.items():
        if quick:
            dims = dims[:6]
        psi = rng.standard_normal(math.prod(dims)) + 1j * rng.standard_normal(math.prod(dims))
        d = dims[len(dims) // 2]
        u = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))[0]
        for backend, mod in sorted(kernels.available_backends().items()):
            t = min(timeit.repeat(lambda: _call(mod, kind, psi, dims, u), number=1, repeat=repeat))
            rows.append((name, backend, t))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="tiny sizes, for smoke tests")
    args = ap.parse_args()
    rows = run(args.repeat, args.quick)
    by_case: dict[str, dict[str, float]] = {}
    for name, backend, t in rows:
        by_case.setdefault(name, {})[backend] = t
    print(f"{'case':<26}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, times in by_case.items():
        py, cc = times.get("python"), times.get("compiled")
        speed = f"{py / cc:9.1f}x" if py and cc else "        -"
        cc_text = f"{cc * 1e3:14.3f}" if cc else f"{'-':>14}"
        print(f"{name:<26}{py * 1e3:12.3f}{cc_text}{speed}")


if __name__ == "__main__":
    main()
