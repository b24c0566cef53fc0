"""Brute-force checks that do not use the closed-form cheat expressions.

The preparer and receiver oracles maximize the actual win probability over
explicit strategy parameterizations with random-restart gradient ascent,
where gradients come from central finite differences. Only the objective
(overlap with the verifier's target state) is shared with the protocol
model; nothing here calls the closed forms being checked.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import cheating
from .cheating import DiagonalProfile
from .errors import BadDimension, DimensionTooLarge
from .protocol import Protocol, post_measurement_state
from .sampling import make_rng, random_protocol

SCHEMA_AUDIT = "weakflip.audit/1"
SCHEMA_SEARCH = "weakflip.search/1"
SCHEMA_ORACLE = "weakflip.oracle/1"

FD_STEP = 1e-5
STALL_WINDOW = 50
STALL_GAIN = 1e-10
AGREE_TOL = 1e-6
MAX_PREPARER_DIM = 36
MAX_RECEIVER_DIM_B = 4
AUDIT_TOL = 1e-6


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmax_descriptor: np.ndarray
    restarts_used: int
    converged: bool
    restart_values: tuple = ()

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_ORACLE,
            "value": self.value,
            "argmax_descriptor": [float(x) for x in self.argmax_descriptor],
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "restart_values": list(self.restart_values),
        }


def gradient_ascent(f, x0: np.ndarray, *, max_iter: int = 3000) -> tuple:
    """Maximize a batched objective from ``x0``.

    ``f`` maps an ``(m, n)`` array of points to ``m`` values. Gradients are
    central differences with step 1e-5; steps come from a backtracking
    ladder (largest step meeting the Armijo condition wins). Stops once the
    total gain over the last 50 iterations is below 1e-10.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    eye = np.eye(n) * FD_STEP
    fx = float(f(x[None, :])[0])
    history = [fx]
    step = 1.0
    ladder = 0.5 ** np.arange(16)
    for _ in range(max_iter):
        probes = np.concatenate([x + eye, x - eye])
        vals = f(probes)
        g = (vals[:n] - vals[n:]) / (2 * FD_STEP)
        gg = float(g @ g)
        if gg == 0.0:
            break
        steps = 4.0 * step * ladder
        cand = x[None, :] + steps[:, None] * g[None, :]
        cv = f(cand)
        ok = np.flatnonzero(cv >= fx + 1e-4 * steps * gg)
        if ok.size == 0:
            break
        k = int(ok[0])
        step = float(steps[k])
        x, fx = cand[k], float(cv[k])
        history.append(fx)
        if len(history) > STALL_WINDOW and fx - history[-1 - STALL_WINDOW] < STALL_GAIN:
            break
    return x, fx


def _run_restarts(objective, draw_start, restarts: int, seed: int, tag: int, max_iter: int):
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    values, points = [], []
    for r in range(restarts):
        rng = make_rng(seed, tag, r)
        x, fx = gradient_ascent(objective, draw_start(rng), max_iter=max_iter)
        values.append(fx)
        points.append(x)
    best = int(np.argmax(values))
    top = sorted(values, reverse=True)
    converged = len(top) >= 2 and top[0] - top[1] <= AGREE_TOL
    return OracleResult(float(values[best]), points[best], restarts, converged, tuple(values))


# -- preparer ---------------------------------------------------------------

def state_from_angles(params: np.ndarray, n: int) -> np.ndarray:
    """Unit vectors from ``2n - 2`` real parameters (batched on axis 0).

    The first ``n - 1`` entries are hyperspherical angles for the moduli;
    the rest are phases of components 2..n (component 1 stays real).
    """
    params = np.atleast_2d(params)
    ang, ph = params[:, : n - 1], params[:, n - 1 :]
    m = params.shape[0]
    mod = np.ones((m, n))
    s = np.ones(m)
    for k in range(n - 1):
        mod[:, k] = s * np.cos(ang[:, k])
        s = s * np.sin(ang[:, k])
    mod[:, n - 1] = s
    phases = np.concatenate([np.zeros((m, 1)), ph], axis=1)
    return mod * np.exp(1j * phases)


def angles_from_state(v: np.ndarray) -> np.ndarray:
    n = v.size
    v = v * np.exp(-1j * np.angle(v[0]))
    r = np.abs(v)
    ang = np.empty(n - 1)
    for k in range(n - 1):
        ang[k] = math.atan2(float(np.linalg.norm(r[k + 1 :])), float(r[k]))
    return np.concatenate([ang, np.angle(v[1:])])


def preparer_objective(p: Protocol, w: int):
    """Batched win probability of a preparer sending the parameterized state.

    Outcome ``w`` occurs with ``|(I (x) sqrt(E_w)) psi'|^2`` and then passes
    with the squared overlap of the renormalized state and ``psi_w``; the
    product is ``|<psi_w| I (x) sqrt(E_w) |psi'>|^2``.
    """
    n = p.dim_a * p.dim_b
    target = post_measurement_state(p, w).as_matrix()
    probe = (target @ p.sqrt_element(w).conj()).reshape(-1)  # (I x sqrt(E_w))^dagger psi_w

    def f(params):
        states = state_from_angles(params, n)
        return np.abs(states @ probe.conj()) ** 2

    return f


def preparer_oracle(p: Protocol, w: int, restarts: int = 16, seed: int = 0, *, max_iter: int = 3000) -> OracleResult:
    n = p.dim_a * p.dim_b
    if n > MAX_PREPARER_DIM:
        raise DimensionTooLarge(f"dim_a*dim_b = {n} exceeds {MAX_PREPARER_DIM}")
    if cheating.is_degenerate(p, w):
        return OracleResult(0.0, np.zeros(2 * n - 2), restarts, True, (0.0,) * restarts)
    if n == 1:
        f = preparer_objective(p, w)
        return OracleResult(float(f(np.zeros((1, 0)))[0]), np.zeros(0), restarts, True, ())

    def start(rng):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        return angles_from_state(z / np.linalg.norm(z))

    return _run_restarts(preparer_objective(p, w), start, restarts, seed, 10 + w, max_iter)


# -- receiver ---------------------------------------------------------------

def hermitian_from_params(params: np.ndarray, d: int) -> np.ndarray:
    """Batched Hermitian ``d x d`` matrices from ``d*d`` real parameters."""
    params = np.atleast_2d(params)
    m = params.shape[0]
    iu = np.triu_indices(d, 1)
    t = iu[0].size
    h = np.zeros((m, d, d), dtype=np.complex128)
    h[:, np.arange(d), np.arange(d)] = params[:, :d]
    off = params[:, d : d + t] + 1j * params[:, d + t : d + 2 * t]
    h[:, iu[0], iu[1]] = off
    h[:, iu[1], iu[0]] = off.conj()
    return h


def unitary_from_params(params: np.ndarray, d: int) -> np.ndarray:
    """``exp(iH)`` for the Hermitian ``H`` built from ``params`` (batched)."""
    w, v = np.linalg.eigh(hermitian_from_params(params, d))
    return (v * np.exp(1j * w)[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))


def channel_isometry(params: np.ndarray, dim_b: int) -> np.ndarray:
    """Isometry ``B -> B (x) anc`` realized by the parameterized unitary.

    Returned with shape ``(dim_b, dim_anc, dim_b)``: entry ``[j, k, l]`` maps
    input ``|l>`` to ``|j>_B |k>_anc``. Slicing ``[:, k, :]`` gives Kraus
    operators.
    """
    d_anc = dim_b * dim_b
    u = unitary_from_params(params, dim_b * d_anc)[0]
    cols = u[:, np.arange(dim_b) * d_anc]
    return cols.reshape(dim_b, d_anc, dim_b)


def kraus_from_params(params: np.ndarray, dim_b: int) -> list:
    iso = channel_isometry(params, dim_b)
    return [iso[:, k, :] for k in range(iso.shape[1])]


def receiver_objective(p: Protocol, w: int):
    """Batched pass probability when the receiver applies the dilated channel and announces ``w``."""
    da, db = p.dim_a, p.dim_b
    d_anc = db * db
    d = db * d_anc
    m_psi = p.psi.as_matrix()
    target = post_measurement_state(p, w).as_matrix()
    inputs = np.arange(db) * d_anc

    def f(params):
        u = unitary_from_params(params, d)
        iso = u[:, :, inputs]  # (m, d, db)
        out = np.einsum("il,mxl->mix", m_psi, iso).reshape(-1, da, db, d_anc)
        amp = np.einsum("ij,mijk->mk", target.conj(), out)
        return np.sum(np.abs(amp) ** 2, axis=1)

    return f


def receiver_oracle(p: Protocol, w: int, restarts: int = 8, seed: int = 0, *, max_iter: int = 600) -> OracleResult:
    if p.dim_b > MAX_RECEIVER_DIM_B:
        raise DimensionTooLarge(f"dim_b = {p.dim_b} exceeds {MAX_RECEIVER_DIM_B}")
    d = p.dim_b**3
    if cheating.is_degenerate(p, w):
        return OracleResult(0.0, np.zeros(d * d), restarts, True, (0.0,) * restarts)
    scale = math.pi / math.sqrt(d)

    def start(rng):
        return rng.normal(scale=scale, size=d * d)

    return _run_restarts(receiver_objective(p, w), start, restarts, seed, 20 + w, max_iter)


# -- label audit ----------------------------------------------------------

QUANTITIES = ("preparer_0", "preparer_1", "receiver_0", "receiver_1")
FORMULAS = ("paper_pa", "paper_pb")


def audit_labels(sample_count: int, seed: int = 0) -> dict:
    """Match each printed formula against the four operational optima.

    Samples random fair protocols on two qubits and records, for every
    (formula, quantity) pair, the largest absolute deviation seen.
    """
    report = {"schema": SCHEMA_AUDIT, "samples": int(sample_count), "seed": int(seed), "pairings": [], "matches": {}}
    if sample_count <= 0:
        return report
    dev = {(f, q): 0.0 for f in FORMULAS for q in QUANTITIES}
    for i in range(sample_count):
        p = random_protocol(make_rng(seed, 30, i), 2, 2, fair=True)
        printed = {"paper_pa": cheating.paper_pa(p), "paper_pb": cheating.paper_pb(p)}
        ops = {
            "preparer_0": cheating.preparer_max(p, 0),
            "preparer_1": cheating.preparer_max(p, 1),
            "receiver_0": cheating.receiver_max(p, 0),
            "receiver_1": cheating.receiver_max(p, 1),
        }
        for f, fv in printed.items():
            for q, qv in ops.items():
                dev[f, q] = max(dev[f, q], abs(fv - qv))
    for f in FORMULAS:
        for q in QUANTITIES:
            report["pairings"].append(
                {"formula": f, "quantity": q, "max_deviation": dev[f, q], "match": dev[f, q] < AUDIT_TOL}
            )
        report["matches"][f] = [q for q in QUANTITIES if dev[f, q] < AUDIT_TOL]
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True)


# -- fair-profile search ----------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    best_profile: DiagonalProfile
    best_max: float
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_SEARCH,
            "best_max": self.best_max,
            "a": [float(x) for x in self.best_profile.a],
            "b": [float(x) for x in self.best_profile.b],
            "trace": [[int(i), float(v)] for i, v in self.trace],
        }


def symmetric_objective(a: np.ndarray, b: np.ndarray) -> float:
    """``max(2 sum a b^2, 2 (sum a sqrt(b))^2)``."""
    return max(2.0 * float(a @ b**2), 2.0 * float(a @ np.sqrt(b)) ** 2)


def _make_fair(a: np.ndarray, b: np.ndarray):
    s = float(a @ b)
    if s <= 0.0:
        return None
    b = b * (0.5 / s)
    if b.max() > 1.0:
        return None
    return b


def _local_search(rng: np.random.Generator, dim: int, iterations: int):
    while True:
        a = rng.exponential(size=dim)
        a /= a.sum()
        b = _make_fair(a, rng.random(dim))
        if b is not None:
            break
    f = symmetric_objective(a, b)
    sigma = 0.1
    for _ in range(iterations):
        a2 = np.abs(a + sigma * rng.normal(size=dim))
        a2 /= a2.sum()
        b2 = _make_fair(a2, np.clip(b + sigma * rng.normal(size=dim), 0.0, 1.0))
        if b2 is not None:
            f2 = symmetric_objective(a2, b2)
            if f2 < f:
                a, b, f = a2, b2, f2
                sigma = min(sigma * 1.5, 0.5)
                continue
        sigma *= 0.9
        if sigma < 1e-10:
            break
    return a, b, f


def search_fair_minimum(dim: int, restarts: int = 100, seed: int = 0, *, iterations: int = 4000) -> SearchResult:
    """Minimize the larger of the two printed cheat probabilities over fair profiles.

    Projected random-restart local search: proposals perturb ``(a, b)``,
    project ``a`` to the simplex and ``b`` into [0, 1], then rescale ``b`` to
    restore ``sum a_i b_i = 1/2``. Rescales that push ``b`` above 1 are
    rejected.
    """
    if not isinstance(dim, (int, np.integer)) or not 2 <= dim <= 8:
        raise BadDimension(f"dim must be an integer in [2, 8], got {dim!r}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = None
    trace = []
    for r in range(restarts):
        a, b, f = _local_search(make_rng(seed, 40, r), int(dim), iterations)
        if best is None or f < best[2]:
            best = (a, b, f)
        trace.append((r, best[2]))
    a, b, f = best
    return SearchResult(DiagonalProfile(a, b), f, trace)
