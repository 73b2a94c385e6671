"""Gaussian boson sampling circuits for heralded state preparation.

Builds the interferometer topologies (rectangular/Clements and the two
cascades), runs the herald pipeline (squeezers, beamsplitters, per-mode
loss, sequential photon-number post-selection), evaluates grid-state cost
functions with analytic gradients, and wraps a bounded quasi-Newton local
minimizer inside a seeded basin-hopping loop.

Conventions: all beamsplitter and squeezing phases are fixed at zero; the
parameter vector concatenates the squeezing values and the beamsplitter
angles in builder order. Beamsplitters are applied column by column as
drawn, top pair first (for the cascades, the pair containing the
first-measured mode comes first in the ``inverse_cascade`` topology and
last in ``cascade``).
"""

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .characterize import (
    db_from_linear,
    effective_squeezing,
    gkp_nonlinear_squeezing,
    overlap,
    symmetric_effective_squeezing_db,
)
from .errors import (
    DegenerateStateError,
    InvalidArgumentError,
    NumericalStabilityError,
)
from .gradients import (
    attach_gradients,
    grad_effective_squeezing,
    grad_log_prob,
    grad_overlap,
)
from .measure import herald_sequence, post_select
from .povm import fock_coherent_povm
from .state import LcogState
from .stellar import rank_reduce
from .symplectic import beamsplitter_symplectic, d_symplectic, squeeze_symplectic

SQUEEZE_BOUND = 1.73
THETA_BOUNDS = (0.1, np.pi / 2 - 0.1)

TOPOLOGIES = ("clements", "cascade", "inverse_cascade")


def beamsplitter_pairs(topology: str, num_modes: int):
    """Mode pairs of the interferometer in application order."""
    n = num_modes
    if topology == "clements":
        pairs = []
        for col in range(n):
            pairs.extend((i, i + 1) for i in range(col % 2, n - 1, 2))
        return pairs
    if topology == "inverse_cascade":
        return [(i, i + 1) for i in range(n - 1)]
    if topology == "cascade":
        return [(i, i + 1) for i in reversed(range(n - 1))]
    raise InvalidArgumentError(f"unknown topology {topology!r}")


def num_bs(topology: str, num_modes: int) -> int:
    return len(beamsplitter_pairs(topology, num_modes))


@dataclass(frozen=True)
class CircuitSpec:
    """Topology, parameters, losses and photon pattern of a herald circuit."""

    num_modes: int
    topology: str
    squeeze: np.ndarray
    bs: np.ndarray
    losses: np.ndarray | None = None
    pattern: tuple = ()
    detector: str = "pnrd_coherent"
    eps: tuple | None = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise InvalidArgumentError(f"unknown topology {self.topology!r}")
        sq = np.asarray(self.squeeze, dtype=float)
        bs = np.asarray(self.bs, dtype=float)
        if sq.shape != (self.num_modes,):
            raise InvalidArgumentError("need one squeezing value per mode")
        if bs.shape != (num_bs(self.topology, self.num_modes),):
            raise InvalidArgumentError(
                f"{self.topology} on {self.num_modes} modes takes "
                f"{num_bs(self.topology, self.num_modes)} beamsplitter angles"
            )
        object.__setattr__(self, "squeeze", sq)
        object.__setattr__(self, "bs", bs)
        if self.losses is not None:
            losses = np.asarray(self.losses, dtype=float)
            if losses.shape != (self.num_modes,):
                raise InvalidArgumentError("need one transmissivity per mode")
            object.__setattr__(self, "losses", losses)
        pattern = tuple(int(n) for n in self.pattern)
        if len(pattern) >= self.num_modes:
            raise InvalidArgumentError("pattern must leave one unmeasured mode")
        object.__setattr__(self, "pattern", pattern)
        if self.eps is not None:
            object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))

    @property
    def num_params(self) -> int:
        return self.num_modes + self.bs.size

    def params(self) -> np.ndarray:
        return np.concatenate([self.squeeze, self.bs])

    def with_params(self, vec) -> "CircuitSpec":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.num_params,):
            raise InvalidArgumentError("parameter vector has the wrong length")
        return replace(
            self, squeeze=vec[: self.num_modes], bs=vec[self.num_modes :]
        )

    def bounds(self):
        return [(-SQUEEZE_BOUND, SQUEEZE_BOUND)] * self.num_modes + [
            THETA_BOUNDS
        ] * self.bs.size

    def to_json_dict(self) -> dict:
        doc = {
            "schema": "lcg-sim/1",
            "kind": "circuit",
            "modes": self.num_modes,
            "topology": self.topology,
            "squeeze": list(map(float, self.squeeze)),
            "bs": list(map(float, self.bs)),
            "pattern": list(self.pattern),
            "detector": self.detector,
        }
        if self.losses is not None:
            doc["losses"] = list(map(float, self.losses))
        if self.eps is not None:
            doc["eps"] = list(self.eps)
        return doc

    @staticmethod
    def from_json_dict(doc: dict) -> "CircuitSpec":
        return CircuitSpec(
            num_modes=int(doc["modes"]),
            topology=doc["topology"],
            squeeze=np.asarray(doc["squeeze"], dtype=float),
            bs=np.asarray(doc["bs"], dtype=float),
            losses=np.asarray(doc["losses"], dtype=float)
            if "losses" in doc
            else None,
            pattern=tuple(doc.get("pattern", ())),
            detector=doc.get("detector", "pnrd_coherent"),
            eps=tuple(doc["eps"]) if "eps" in doc else None,
        )


def build_symplectic(spec: CircuitSpec, with_derivatives: bool = False):
    """Composed circuit symplectic and, optionally, its parameter derivatives.

    The matrix is ``B_K ... B_1 (squeezers)``; derivatives follow from the
    product rule over the gate stack, ordered like the parameter vector.
    """
    n = spec.num_modes
    pairs = beamsplitter_pairs(spec.topology, n)
    gates = [_squeeze_layer(spec.squeeze)]
    for theta, (i, j) in zip(spec.bs, pairs):
        gates.append(_embed_pair(beamsplitter_symplectic(theta), i, j, n))
    s_total = gates[0]
    prefix = [np.eye(2 * n)]
    for g in gates[1:]:
        s_total = g @ s_total
    if not with_derivatives:
        return s_total, None
    # suffix[k] = product of gates after k; running[k] = product up to k - 1
    suffix = [np.eye(2 * n)]
    for g in reversed(gates[1:]):
        suffix.append(suffix[-1] @ g)
    suffix.reverse()  # suffix[k] multiplies from the left of gate k
    running = np.eye(2 * n)
    d_stack = np.zeros((spec.num_params, 2 * n, 2 * n))
    # squeezer derivatives (gate 0)
    for m in range(n):
        d_layer = np.zeros((2 * n, 2 * n))
        block = d_symplectic("squeeze", (spec.squeeze[m], 0.0), 0)
        d_layer[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] = block
        d_stack[m] = suffix[0] @ d_layer
    running = gates[0]
    for k, (theta, (i, j)) in enumerate(zip(spec.bs, pairs)):
        d_bs = _embed_pair_zero(
            d_symplectic("beamsplitter", (theta, 0.0), 0), i, j, n
        )
        d_stack[n + k] = suffix[k + 1] @ d_bs @ running
        running = gates[k + 1] @ running
    return s_total, d_stack


def _squeeze_layer(rs) -> np.ndarray:
    n = len(rs)
    out = np.eye(2 * n)
    for m, r in enumerate(rs):
        out[2 * m : 2 * m + 2, 2 * m : 2 * m + 2] = squeeze_symplectic(r)
    return out


def _embed_pair(block: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    out = np.eye(2 * n)
    idx = np.array([2 * i, 2 * i + 1, 2 * j, 2 * j + 1])
    out[np.ix_(idx, idx)] = block
    return out


def _embed_pair_zero(block: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    out = np.zeros((2 * n, 2 * n))
    idx = np.array([2 * i, 2 * i + 1, 2 * j, 2 * j + 1])
    out[np.ix_(idx, idx)] = block
    return out


def herald(spec: CircuitSpec, with_gradients: bool = False, reduced: bool = False):
    """Run the herald pipeline; returns ``(single_mode_state, log_prob)``.

    The state is normalized; with gradients requested it carries a tape
    whose accumulated log-probability gradient matches the returned
    probability.
    """
    state = LcogState.vacuum(spec.num_modes)
    if with_gradients:
        if reduced:
            raise InvalidArgumentError("gradient pipelines run in full form")
        state = attach_gradients(state, spec.num_params)
        s_mat, d_stack = build_symplectic(spec, with_derivatives=True)
        state = state.apply_symplectic(s_mat, d_s=d_stack)
    else:
        s_mat, _ = build_symplectic(spec)
        state = state.apply_symplectic(s_mat)
    if spec.losses is not None:
        state = state.apply_loss(spec.losses)
    eps = list(spec.eps) if spec.eps is not None else None
    return herald_sequence(
        state, spec.pattern, detector=spec.detector, eps=eps, reduced=reduced
    )


def bifurcation_herald(
    squeeze,
    pattern,
    thetas=None,
    eps=None,
    reduce_between: bool = True,
    k_std: float = 6.0,
):
    """Staged inverse-cascade pipeline with rank reduction between stages.

    Stage ``i`` tensors the surviving mode with a fresh squeezed vacuum,
    interferes them on a phase-less beamsplitter (50:50 by default) and
    post-selects the photon count ``pattern[i]`` on the old mode. Equivalent
    to the monolithic inverse-cascade herald, but the per-stage reduction
    keeps the Gaussian count at the stellar-rank minimum.
    """
    squeeze = np.asarray(squeeze, dtype=float)
    pattern = [int(n) for n in pattern]
    if squeeze.size != len(pattern) + 1:
        raise InvalidArgumentError("need one squeezer per stage plus the survivor")
    if thetas is None:
        thetas = np.full(len(pattern), np.pi / 4)
    thetas = np.broadcast_to(np.asarray(thetas, dtype=float), (len(pattern),))
    state = LcogState.squeezed_vacuum(squeeze[0])
    total = 0.0
    rank_sum = 0
    for i, n_i in enumerate(pattern):
        fresh = LcogState.squeezed_vacuum(squeeze[i + 1])
        state = state.tensor(fresh)
        state = state.apply_symplectic(
            beamsplitter_symplectic(thetas[i]), modes=[0, 1]
        )
        povm = fock_coherent_povm(n_i, eps if np.isscalar(eps) or eps is None else eps[i])
        state, log_p = post_select(state, 0, povm)
        total += log_p
        rank_sum += n_i
        if reduce_between:
            state = rank_reduce(state, k_std=k_std, rank=rank_sum)
    return state, float(total)


@dataclass
class OptimizationReport:
    """Result record of a local or basin-hopping optimization run."""

    params: np.ndarray
    cost: float
    delta_x_db: float
    delta_p_db: float
    delta_s_db: float
    xi_db: float
    log_prob: float
    iterations: int
    n_evals: int
    seed: int | None = None
    success: bool = True
    failure: str | None = None
    trace: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "schema": "lcg-sim/1",
            "kind": "optimization_report",
            "params": list(map(float, self.params)),
            "cost": self.cost,
            "delta_x_db": self.delta_x_db,
            "delta_p_db": self.delta_p_db,
            "delta_s_db": self.delta_s_db,
            "xi_db": self.xi_db,
            "log_prob": self.log_prob,
            "iterations": self.iterations,
            "n_evals": self.n_evals,
            "seed": self.seed,
            "success": self.success,
            "failure": self.failure,
        }


def characterize_heralded(state, log_prob) -> dict:
    dx, dx_db = effective_squeezing(state, "x")
    dp, dp_db = effective_squeezing(state, "p")
    xi, xi_db = gkp_nonlinear_squeezing(state)
    return {
        "delta_x_db": dx_db,
        "delta_p_db": dp_db,
        "delta_s_db": symmetric_effective_squeezing_db(dx, dp),
        "xi_db": xi_db,
        "log_prob": log_prob,
        "n_weights": state.num_weights,
    }


def cost_eval(
    spec: CircuitSpec,
    params=None,
    cost: str = "sum_delta",
    prob_coeff: float = 0.0,
    target: LcogState | None = None,
):
    """Cost value and analytic gradient at a parameter point.

    Kinds: ``sum_delta`` is ``Delta_x + Delta_p``;
    ``sum_delta_minus_prob`` is ``(Delta_x + Delta_p)/2 - c p``;
    ``infidelity`` is ``1 - overlap(state, target)``.
    """
    work = spec if params is None else spec.with_params(params)
    state, log_p = herald(work, with_gradients=True)
    if cost in ("sum_delta", "sum_delta_minus_prob"):
        dx, _ = effective_squeezing(state, "x")
        dp, _ = effective_squeezing(state, "p")
        g = grad_effective_squeezing(state, "x") + grad_effective_squeezing(state, "p")
        value = dx + dp
        if cost == "sum_delta_minus_prob":
            p = np.exp(log_p)
            value = 0.5 * value - prob_coeff * p
            g = 0.5 * g - prob_coeff * p * grad_log_prob(state)
        return float(value), np.real(g)
    if cost == "infidelity":
        if target is None:
            raise InvalidArgumentError("infidelity cost needs a target state")
        val = overlap(state, target)
        g = -np.real(grad_overlap(state, target))
        return float(1.0 - val), g
    raise InvalidArgumentError(f"unknown cost kind {cost!r}")


def local_minimize(
    spec: CircuitSpec,
    cost: str = "sum_delta",
    x0=None,
    max_iter: int = 200,
    prob_coeff: float = 0.0,
    target: LcogState | None = None,
    seed: int | None = None,
) -> OptimizationReport:
    """Bounded quasi-Newton descent (L-BFGS-B) with analytic gradients.

    A numerical-stability failure during evaluation aborts the run and
    reports the last feasible point with the failure flag set.
    """
    x0 = spec.params() if x0 is None else np.asarray(x0, dtype=float)
    bounds = spec.bounds()
    x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
    trace = []
    state_box = {"best_x": x0.copy(), "best_f": np.inf, "evals": 0}

    def fun(x):
        state_box["evals"] += 1
        value, grad = cost_eval(spec, x, cost, prob_coeff, target)
        if value < state_box["best_f"]:
            state_box["best_f"], state_box["best_x"] = value, x.copy()
        return value, grad

    failure = None
    try:
        res = minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": max_iter, "gtol": 1e-7},
            callback=lambda xk: trace.append(
                (len(trace), float(state_box["best_f"]))
            ),
        )
        best_x = res.x if res.fun <= state_box["best_f"] else state_box["best_x"]
        iterations = int(res.nit)
    except (NumericalStabilityError, DegenerateStateError, FloatingPointError) as exc:
        failure = str(exc)
        best_x = state_box["best_x"]
        iterations = len(trace)
    state, log_p = herald(spec.with_params(best_x))
    try:
        summary = characterize_heralded(state, log_p)
        value, _ = cost_eval(spec, best_x, cost, prob_coeff, target)
    except (NumericalStabilityError, DegenerateStateError) as exc:
        # the optimum may sit in an ill-conditioned corner; report it with
        # the failure flag instead of aborting the whole run
        failure = failure or str(exc)
        summary = {k: float("nan") for k in ("delta_x_db", "delta_p_db", "delta_s_db", "xi_db")}
        value = float(state_box["best_f"])
    return OptimizationReport(
        params=np.asarray(best_x, dtype=float),
        cost=float(value),
        delta_x_db=summary["delta_x_db"],
        delta_p_db=summary["delta_p_db"],
        delta_s_db=summary["delta_s_db"],
        xi_db=summary["xi_db"],
        log_prob=float(log_p),
        iterations=iterations,
        n_evals=state_box["evals"],
        seed=seed,
        success=failure is None,
        failure=failure,
        trace=trace,
    )


def basin_hop(
    spec: CircuitSpec,
    cost: str = "sum_delta",
    n_hops: int = 10,
    seed: int = 0,
    step: float = 0.5,
    temperature: float = 1.0,
    max_iter: int = 200,
    prob_coeff: float = 0.0,
    target: LcogState | None = None,
) -> OptimizationReport:
    """Seeded basin hopping: local minimization plus Metropolis hops.

    The proposal perturbs each parameter uniformly within ``step`` and clips
    to the bounds; identical seeds reproduce runs bit for bit. ``n_hops=0``
    equals a single local minimization.
    """
    rng = np.random.default_rng(seed)
    bounds = spec.bounds()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    current = local_minimize(
        spec, cost, spec.params(), max_iter, prob_coeff, target, seed
    )
    best = current
    for _ in range(n_hops):
        proposal = np.clip(
            current.params + rng.uniform(-step, step, current.params.size), lo, hi
        )
        trial = local_minimize(spec, cost, proposal, max_iter, prob_coeff, target, seed)
        accept = trial.cost < current.cost or rng.random() < np.exp(
            (current.cost - trial.cost) / temperature
        )
        if accept:
            current = trial
        if trial.cost < best.cost:
            best = trial
    best.seed = seed
    return best


def reoptimize_with_loss(
    spec_opt: CircuitSpec,
    eta_grid,
    cost: str = "sum_delta",
    max_iter: int = 200,
):
    """Local re-optimization of a lossless optimum under uniform loss.

    For each transmissivity, reports the figures of the original parameters
    under loss next to the locally re-optimized ones (started from the
    lossless optimum).
    """
    rows = []
    for eta in eta_grid:
        lossy = replace(
            spec_opt, losses=np.full(spec_opt.num_modes, float(eta))
        )
        state, log_p = herald(lossy)
        original = characterize_heralded(state, log_p)
        report = local_minimize(lossy, cost, spec_opt.params(), max_iter)
        rows.append({"eta": float(eta), "original": original, "reoptimized": report})
    return rows
