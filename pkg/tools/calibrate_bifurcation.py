"""Structured scan for the staged-bifurcation squeezing ladder (dev tool)."""

import time

import numpy as np

from lcgsim import gbs
from lcgsim.characterize import effective_squeezing, symmetric_effective_squeezing_db


def eval_rs(rs, pat=(8, 8, 8)):
    spec = gbs.CircuitSpec(
        4, "inverse_cascade", squeeze=rs, bs=np.full(3, np.pi / 4), pattern=pat
    )
    st, lp = gbs.herald(spec)
    dx = effective_squeezing(st, "x")[0]
    dp = effective_squeezing(st, "p")[0]
    return symmetric_effective_squeezing_db(dx, dp), np.exp(lp)


if __name__ == "__main__":
    t0 = time.time()
    best = []
    grid_a = np.linspace(-1.73, 1.73, 9)
    grid_b = np.linspace(0.4, 1.73, 7)
    grid_c = (0.0, 0.1733, 0.3466, 0.5199)
    count = 0
    for a in grid_a:
        for b in grid_b:
            for c in grid_c:
                for sgn in (1, -1):
                    rs = np.array([a, sgn * b, sgn * (b - c), sgn * (b - 2 * c)])
                    if np.any(np.abs(rs) > 1.73):
                        continue
                    try:
                        ds, p = eval_rs(np.clip(rs, -1.73, 1.73))
                        count += 1
                        if ds > 5.0:
                            best.append((ds, p, rs.copy()))
                            print(f"ds {ds:.3f} p {p:.3e} rs {np.round(rs, 3)}", flush=True)
                    except Exception:
                        pass
    print(f"evaluated {count} in {time.time() - t0:.0f}s", flush=True)
    best.sort(key=lambda t: -t[0])
    for ds, p, rs in best[:10]:
        print(f"TOP ds {ds:.3f} p {p:.3e} rs {np.round(rs, 4)}", flush=True)
