"""Command-line front end.

Subcommands: ``herald`` (run a circuit config, write a state checkpoint and
a summary), ``wigner`` (grid evaluation to CSV), ``optimize`` (local /
basin-hopping runs from a config) and ``reduce`` (rank reduction of a
checkpoint). All outputs carry a provenance block; exit codes are 0 on
success, 2 for config errors, 3 for numerical-stability errors and 4 when
the time budget is exceeded.
"""

import argparse
import hashlib
import json
import os
import sys
import time

__version__ = "0.1.0"

_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "kind", "modes", "topology", "pattern"],
    "properties": {
        "schema": {"const": "lcg-sim/1"},
        "kind": {"const": "circuit"},
        "modes": {"type": "integer", "minimum": 1},
        "topology": {"enum": ["clements", "cascade", "inverse_cascade"]},
        "squeeze": {"type": "array", "items": {"type": "number"}},
        "squeeze_db": {"type": "array", "items": {"type": "number"}},
        "bs": {"type": "array", "items": {"type": "number"}},
        "losses": {"type": "array", "items": {"type": "number"}},
        "pattern": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "detector": {
            "enum": ["pnrd_coherent", "pnrd_thermal", "ppnrd", "click"]
        },
        "eps": {"type": "array", "items": {"type": "number"}},
        "optimize": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cost": {"enum": ["sum_delta", "sum_delta_minus_prob"]},
                "prob_coeff": {"type": "number"},
                "n_hops": {"type": "integer", "minimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "reoptimize_eta": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


def _fail(code: int, message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _load_config(path):
    import jsonschema

    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        doc = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(2, f"cannot read config {path}: {exc}")
    validator = jsonschema.Draft202012Validator(_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        e = errors[0]
        _fail(2, f"config invalid at {e.json_path}: {e.message}")
    if ("squeeze" in doc) == ("squeeze_db" in doc):
        _fail(2, "config needs exactly one of 'squeeze' or 'squeeze_db'")
    return doc, hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode()
    ).hexdigest()


def _spec_from_config(doc):
    import numpy as np

    from .gbs import CircuitSpec
    from .symplectic import db_to_r

    if "squeeze_db" in doc:
        # table convention for qunaught circuits: positive dB squeezes p
        squeeze = -db_to_r(np.asarray(doc["squeeze_db"], dtype=float))
    else:
        squeeze = np.asarray(doc["squeeze"], dtype=float)
    from .errors import InvalidArgumentError

    try:
        return CircuitSpec(
            num_modes=int(doc["modes"]),
            topology=doc["topology"],
            squeeze=squeeze,
            bs=np.asarray(doc.get("bs", []), dtype=float),
            losses=np.asarray(doc["losses"], dtype=float)
            if "losses" in doc
            else None,
            pattern=tuple(doc["pattern"]),
            detector=doc.get("detector", "pnrd_coherent"),
            eps=tuple(doc["eps"]) if "eps" in doc else None,
        )
    except InvalidArgumentError as exc:
        _fail(2, f"config rejected: {exc}")


def _provenance(config_hash, seed):
    from .symplectic import HBAR

    return {
        "version": __version__,
        "config_hash": config_hash,
        "seed": seed,
        "hbar": HBAR,
    }


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


class _Budget:
    def __init__(self, seconds):
        self.t0 = time.monotonic()
        self.seconds = seconds

    def check(self):
        if self.seconds and time.monotonic() - self.t0 > self.seconds:
            _fail(4, "time budget exceeded")


def cmd_herald(args):
    from .errors import NumericalStabilityError

    doc, cfg_hash = _load_config(args.config)
    spec = _spec_from_config(doc)
    budget = _Budget(args.budget_seconds)
    import numpy as np

    from .gbs import characterize_heralded, herald

    t0 = time.monotonic()
    try:
        state, log_p = herald(spec)
        budget.check()
        summary = characterize_heralded(state, log_p)
    except NumericalStabilityError as exc:
        _fail(3, f"numerical stability: {exc}")
    summary["runtime_ms"] = 1000.0 * (time.monotonic() - t0)
    summary["seed"] = args.seed
    summary["conventions"] = {"hbar": 2.0}
    summary["provenance"] = _provenance(cfg_hash, args.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "summary.json"), summary)
    if args.checkpoint:
        state.save(args.checkpoint)
    else:
        state.save(os.path.join(args.out, "state.json"))
    print(json.dumps({k: summary[k] for k in ("log_prob", "delta_s_db")}))
    return 0


def _parse_grid(text):
    try:
        xs, ps = text.split(",")
        x0, x1, nx = xs.split(":")
        p0, p1, np_ = ps.split(":")
        return (float(x0), float(x1), int(nx)), (float(p0), float(p1), int(np_))
    except ValueError:
        _fail(2, f"cannot parse grid spec {text!r}")


def cmd_wigner(args):
    import numpy as np

    from .errors import NumericalStabilityError
    from .state import LcogState

    try:
        state = LcogState.load(args.checkpoint)
    except Exception as exc:
        _fail(2, f"cannot load checkpoint: {exc}")
    if state.num_modes != 1:
        _fail(2, "wigner grids are written for single-mode checkpoints")
    (x0, x1, nx), (p0, p1, npts) = _parse_grid(args.grid)
    xs = np.linspace(x0, x1, nx)
    ps = np.linspace(p0, p1, npts)
    grid = np.stack(np.meshgrid(xs, ps, indexing="ij"), axis=-1).reshape(-1, 2)
    try:
        vals = state.wigner(grid)
    except NumericalStabilityError as exc:
        _fail(3, f"numerical stability: {exc}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("x,p,W\n")
        for (x, p), w in zip(grid, vals):
            fh.write(f"{x:.17g},{p:.17g},{w:.17g}\n")
    return 0


def cmd_optimize(args):
    import numpy as np

    from .errors import NumericalStabilityError
    from .gbs import basin_hop, local_minimize, reoptimize_with_loss

    doc, cfg_hash = _load_config(args.config)
    spec = _spec_from_config(doc)
    opts = doc.get("optimize", {})
    seed = args.seed if args.seed is not None else opts.get("seed", 0)
    cost = opts.get("cost", "sum_delta")
    n_hops = opts.get("n_hops", 0)
    max_iter = opts.get("max_iter", 200)
    prob_coeff = opts.get("prob_coeff", 0.0)
    os.makedirs(args.out, exist_ok=True)
    try:
        if "reoptimize_eta" in opts:
            rows = reoptimize_with_loss(
                spec, opts["reoptimize_eta"], cost=cost, max_iter=max_iter
            )
            out = {
                "schema": "lcg-sim/1",
                "kind": "reoptimization_report",
                "rows": [
                    {
                        "eta": r["eta"],
                        "original": r["original"],
                        "reoptimized": r["reoptimized"].to_json_dict(),
                    }
                    for r in rows
                ],
                "provenance": _provenance(cfg_hash, seed),
            }
            _write_json(os.path.join(args.out, "report.json"), out)
            return 0
        if n_hops > 0:
            report = basin_hop(
                spec,
                cost,
                n_hops=n_hops,
                seed=seed,
                max_iter=max_iter,
                prob_coeff=prob_coeff,
            )
        else:
            report = local_minimize(
                spec, cost, max_iter=max_iter, prob_coeff=prob_coeff, seed=seed
            )
    except NumericalStabilityError as exc:
        _fail(3, f"numerical stability: {exc}")
    doc_out = report.to_json_dict()
    doc_out["provenance"] = _provenance(cfg_hash, seed)
    _write_json(os.path.join(args.out, "report.json"), doc_out)
    with open(os.path.join(args.out, "trace.csv"), "w", encoding="utf-8") as fh:
        fh.write("iteration,best_cost\n")
        for it, val in report.trace:
            fh.write(f"{it},{val:.17g}\n")
    print(json.dumps({"cost": report.cost, "delta_s_db": report.delta_s_db}))
    return 0


def cmd_reduce(args):
    from .characterize import overlap, purity
    from .errors import NumericalStabilityError, ReductionFailedError
    from .state import LcogState
    from .stellar import rank_reduce

    try:
        state = LcogState.load(args.checkpoint)
    except Exception as exc:
        _fail(2, f"cannot load checkpoint: {exc}")
    try:
        reduced = rank_reduce(
            state, eps_out=args.eps, k_std=args.kstd, rank=args.rank
        )
        cross = overlap(state, reduced)
        pur_out = purity(reduced)
    except ReductionFailedError as exc:
        _fail(3, f"reduction failed: {exc}")
    except NumericalStabilityError as exc:
        _fail(3, f"numerical stability: {exc}")
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    reduced.save(args.out)
    report = {
        "schema": "lcg-sim/1",
        "kind": "reduction_report",
        "count_in": state.num_weights,
        "count_out": reduced.num_weights,
        "overlap": cross,
        "normalized_overlap": cross / pur_out,
        "k_std": args.kstd,
        "eps_out": args.eps,
        "rank": args.rank,
        "provenance": _provenance("-", None),
    }
    _write_json(args.out + ".report.json", report)
    print(json.dumps({"count_out": reduced.num_weights, "overlap": cross}))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lcg-sim",
        description="Simulate continuous-variable circuits as combinations of Gaussians",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for the numeric kernels (env LCG_SIM_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("herald", help="run a heralding circuit from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--budget-seconds", type=float, default=None)
    p.set_defaults(func=cmd_herald)

    p = sub.add_parser("wigner", help="evaluate a checkpoint on a phase-space grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--grid", required=True, help='"xmin:xmax:n,pmin:pmax:n"')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("optimize", help="optimize a circuit from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget-seconds", type=float, default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("reduce", help="rank-reduce a single-mode checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--kstd", type=float, default=6.0)
    p.add_argument("--rank", type=int, default=None)
    p.set_defaults(func=cmd_reduce)

    args = parser.parse_args(argv)
    threads = args.threads or os.environ.get("LCG_SIM_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
