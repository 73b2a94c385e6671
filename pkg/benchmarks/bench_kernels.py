"""Benchmark the compiled kernels against the NumPy fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py

Times the per-Gaussian inner loops (log-domain sums, measurement pair
expansion, Wigner and characteristic-function evaluation) and one
end-to-end herald pipeline on both backends.
"""

import time

import numpy as np

from lcgsim import _kernels_py as fallback

try:
    from lcgsim import _kernels as compiled
except ImportError:
    compiled = None


def timeit(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    rng = np.random.default_rng(0)
    rows = []

    n = 200_000
    w = rng.uniform(-30, 2, n) + 1j * rng.uniform(-np.pi, np.pi, n)
    rows.append(("logsumexp_complex (2e5 terms)", w))

    n_w, n_p, d_a = 6561, 81, 2
    pair_args = (
        rng.uniform(-5, 0, n_w) + 0j,
        rng.normal(size=(n_w, d_a)) + 1j * rng.normal(size=(n_w, d_a)),
        rng.normal(size=(n_w, 2)) + 1j * rng.normal(size=(n_w, 2)),
        rng.uniform(-5, 0, n_p) + 0j,
        rng.normal(size=(n_p, 2)) + 1j * rng.normal(size=(n_p, 2)),
        np.eye(2) + 0.1j * np.eye(2),
        rng.normal(size=(d_a, 2)) + 0j,
    )

    n_terms, n_q = 20_000, 64
    means = rng.normal(size=(n_terms, 2)) + 1j * rng.normal(size=(n_terms, 2))
    logw = rng.uniform(-8, 0, n_terms) + 1j * rng.uniform(-np.pi, np.pi, n_terms)
    cov = np.eye(2, dtype=complex)
    pts = rng.normal(size=(n_q, 2)).astype(complex)

    print(f"{'kernel':42s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, args in [
        ("logsumexp_complex (2e5 terms)", (w,)),
        ("pair_expand_shared (6561x81)", pair_args),
        ("wigner_chunk (64 pts x 2e4 terms)", (pts, logw, means, np.linalg.inv(cov), -np.log(2 * np.pi) + 0j)),
        ("charfun_chunk (64 pts x 2e4 terms)", (pts, logw, means, cov)),
    ]:
        fn = name.split(" ")[0]
        t_py = timeit(getattr(fallback, fn), *args)
        if compiled is None:
            print(f"{name:42s} {t_py*1e3:9.2f}ms {'-':>10s}")
            continue
        t_c = timeit(getattr(compiled, fn), *args)
        print(f"{name:42s} {t_py*1e3:9.2f}ms {t_c*1e3:9.2f}ms {t_py/t_c:7.1f}x")


def bench_pipeline():
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from lcgsim import gbs\n"
        "from lcgsim.symplectic import db_to_r\n"
        "spec = gbs.CircuitSpec(4, 'clements', squeeze=-db_to_r(np.array([-10.02,-13.15,-15.0,12.04])),\n"
        "                       bs=[1.45,0.46,1.37,0.68,0.10,1.27], pattern=(8,8,8))\n"
        "t0 = time.perf_counter(); state, lp = gbs.herald(spec)\n"
        "from lcgsim.characterize import effective_squeezing\n"
        "effective_squeezing(state, 'x'); effective_squeezing(state, 'p')\n"
        "print(f'{time.perf_counter()-t0:.3f}')\n"
    )
    print("\nherald pipeline, 4-mode pattern (8,8,8), 531441 Gaussians:")
    for flag, label in (("0", "compiled"), ("1", "numpy")):
        env = dict(os.environ, LCG_SIM_PURE_PYTHON=flag)
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        print(f"  {label:9s} {out.stdout.strip()}s")


if __name__ == "__main__":
    bench_kernels()
    bench_pipeline()
