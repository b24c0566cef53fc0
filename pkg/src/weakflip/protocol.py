"""Protocol instances: a shared state plus the receiver's two-outcome POVM.

The preparer holds subsystem A and sends B. The receiver measures
``{E0, I - E0}`` on B and announces the bit. On outcome ``b`` the joint state
should be ``psi_b = (I (x) sqrt(E_b)) psi / sqrt(p_b)`` and the party that
receives the other half checks for it.

``E1`` is never stored; it is always ``I - E0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import qla
from .errors import (
    DegenerateOutcome,
    DimensionMismatch,
    NotPOVM,
    ParseError,
    WeakFlipError,
)
from .qla import BipartiteState

POVM_TOL = 1e-8
FAIRNESS_TOL = 1e-6
DEGENERATE_P = 1e-12


@dataclass(frozen=True)
class FairnessVerdict:
    p0: float
    fair: bool
    tolerance: float = FAIRNESS_TOL


def apply_on_b(op: np.ndarray, state: BipartiteState) -> np.ndarray:
    """Flat vector ``(I_A (x) op) |state>`` (not normalized)."""
    m = state.as_matrix()
    return (m @ np.asarray(op).T).reshape(-1)


@dataclass(frozen=True, eq=False)
class Protocol:
    """A validated protocol. Build instances with :func:`validate`."""

    dim_a: int
    dim_b: int
    psi: BipartiteState
    e0: np.ndarray
    rho: np.ndarray
    p0: float

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    @property
    def e1(self) -> np.ndarray:
        return np.eye(self.dim_b, dtype=np.complex128) - self.e0

    def element(self, b: int) -> np.ndarray:
        _check_bit(b)
        return self.e0 if b == 0 else self.e1

    @cached_property
    def _sqrt_elements(self) -> tuple:
        return (qla.psd_sqrt(self.e0), qla.psd_sqrt(self.e1))

    def sqrt_element(self, b: int) -> np.ndarray:
        _check_bit(b)
        return self._sqrt_elements[b]

    def fairness(self, tolerance: float = FAIRNESS_TOL) -> FairnessVerdict:
        return FairnessVerdict(self.p0, abs(self.p0 - 0.5) <= tolerance, tolerance)

    @property
    def is_fair(self) -> bool:
        return self.fairness().fair

    def __repr__(self):
        return f"Protocol(dim_a={self.dim_a}, dim_b={self.dim_b}, p0={self.p0:.12g})"


def _check_bit(b):
    if b not in (0, 1):
        raise ValueError(f"outcome bit must be 0 or 1, got {b!r}")


def validate(dim_a: int, dim_b: int, psi_raw, e0_raw) -> Protocol:
    """Check a raw (psi, E0) pair and return a :class:`Protocol`.

    Raises
    ------
    DimensionMismatch
        Wrong vector length or operator shape.
    BadNorm
        ``|psi|`` differs from 1 by more than 1e-8.
    NotHermitian, NotPOVM
        ``E0`` fails Hermiticity or has an eigenvalue outside [0, 1]
        (slack 1e-8).
    """
    if int(dim_a) != dim_a or int(dim_b) != dim_b or dim_a < 1 or dim_b < 1:
        raise DimensionMismatch(f"dimensions must be positive integers, got {dim_a}, {dim_b}")
    dim_a, dim_b = int(dim_a), int(dim_b)
    vec = np.asarray(psi_raw, dtype=np.complex128).reshape(-1)
    if vec.size != dim_a * dim_b:
        raise DimensionMismatch(f"psi has {vec.size} amplitudes, expected {dim_a * dim_b}")
    e0 = np.asarray(e0_raw, dtype=np.complex128)
    if e0.shape != (dim_b, dim_b):
        raise DimensionMismatch(f"E0 has shape {e0.shape}, expected ({dim_b}, {dim_b})")
    psi = BipartiteState(dim_a, dim_b, vec)
    e0 = qla.hermitize(e0, "E0")
    w = np.linalg.eigvalsh(e0)
    if w[0] < -POVM_TOL or w[-1] > 1 + POVM_TOL:
        raise NotPOVM(f"E0 eigenvalues span [{w[0]:.6g}, {w[-1]:.6g}], outside [0, 1]")
    e0.setflags(write=False)
    rho = qla.partial_trace(psi.projector(), dim_a, dim_b, "A")
    rho = 0.5 * (rho + rho.conj().T)
    rho.setflags(write=False)
    p0 = float(np.vdot(psi.amplitudes, apply_on_b(e0, psi)).real)
    p0 = min(max(p0, 0.0), 1.0)
    return Protocol(dim_a, dim_b, psi, e0, rho, p0)


def from_profile(a, b) -> Protocol:
    """Expand the aligned shorthand: ``psi = sum sqrt(a_i)|i>|i>``, ``E0 = diag(b)``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size or a.size == 0:
        raise DimensionMismatch(f"profile lengths differ: a has {a.size}, b has {b.size}")
    if np.any(a < -1e-12):
        raise WeakFlipError("profile weights must be nonnegative")
    k = a.size
    psi = np.zeros(k * k, dtype=np.complex128)
    psi[np.arange(k) * (k + 1)] = np.sqrt(np.clip(a, 0.0, None))
    return validate(k, k, psi, np.diag(b))


def outcome_prob(p: Protocol, b: int) -> float:
    """Honest probability ``<psi| I (x) E_b |psi>`` of announcing ``b``."""
    _check_bit(b)
    return p.p0 if b == 0 else p.p1


def post_measurement_state(p: Protocol, b: int) -> BipartiteState:
    """Normalized ``(I (x) sqrt(E_b)) psi``; the state the verifier expects."""
    pb = outcome_prob(p, b)
    if pb < DEGENERATE_P:
        raise DegenerateOutcome(f"outcome {b} has probability {pb:.3e}")
    v = apply_on_b(p.sqrt_element(b), p.psi)
    return BipartiteState(p.dim_a, p.dim_b, v / np.linalg.norm(v))


def reduced_state(p: Protocol) -> np.ndarray:
    """Receiver-side density matrix ``Tr_A |psi><psi|``."""
    return p.rho.copy()


# -- file format ------------------------------------------------------------

def _num(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise WeakFlipError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _pair(z) -> str:
    z = complex(z)
    return f"[{_num(z.real)}, {_num(z.imag)}]"


def serialize_protocol(p: Protocol) -> str:
    """Explicit-form JSON document (17 significant digits per number)."""
    psi = ", ".join(_pair(z) for z in p.psi.amplitudes)
    rows = ",\n    ".join("[" + ", ".join(_pair(z) for z in row) + "]" for row in p.e0)
    return (
        "{\n"
        f'  "dims": {{"A": {p.dim_a}, "B": {p.dim_b}}},\n'
        f'  "psi": [{psi}],\n'
        f'  "E0": [\n    {rows}\n  ]\n'
        "}\n"
    )


def serialize_profile(a, b) -> str:
    """Aligned-shorthand JSON document."""
    av = ", ".join(_num(x) for x in a)
    bv = ", ".join(_num(x) for x in b)
    return f'{{"aligned": {{"a": [{av}], "b": [{bv}]}}}}\n'


def _real(x, field):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"expected a number, got {type(x).__name__}", field=field)
    return float(x)


def _complex(x, field):
    if not isinstance(x, list) or len(x) != 2:
        raise ParseError("expected a [re, im] pair", field=field)
    return complex(_real(x[0], field + "[0]"), _real(x[1], field + "[1]"))


def _real_list(x, field):
    if not isinstance(x, list) or not x:
        raise ParseError("expected a non-empty list of numbers", field=field)
    return [_real(v, f"{field}[{i}]") for i, v in enumerate(x)]


def _check_keys(obj, allowed, field):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", field=field)
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ParseError(f"unknown keys {extra}", field=field)
    missing = sorted(set(allowed) - set(obj))
    if missing:
        raise ParseError(f"missing keys {missing}", field=field)


def parse_protocol(text: str) -> Protocol:
    """Parse either document form and validate the result.

    Raises ParseError on malformed documents (JSON syntax errors carry the
    line number, structural errors the offending field), then whatever
    :func:`validate` raises.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if "aligned" in doc:
        _check_keys(doc, ["aligned"], "<root>")
        body = doc["aligned"]
        _check_keys(body, ["a", "b"], "aligned")
        a = _real_list(body["a"], "aligned.a")
        b = _real_list(body["b"], "aligned.b")
        if len(a) != len(b):
            raise ParseError(f"length mismatch: a has {len(a)}, b has {len(b)}", field="aligned")
        if min(a) < 0 or abs(sum(a) - 1.0) > 1e-9:
            raise ParseError("a must be a probability vector", field="aligned.a")
        if min(b) < 0 or max(b) > 1:
            raise ParseError("b entries must lie in [0, 1]", field="aligned.b")
        return from_profile(a, b)

    _check_keys(doc, ["dims", "psi", "E0"], "<root>")
    dims = doc["dims"]
    _check_keys(dims, ["A", "B"], "dims")
    da, db = dims["A"], dims["B"]
    for key, d in (("A", da), ("B", db)):
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ParseError("dimension must be a positive integer", field=f"dims.{key}")
    psi = doc["psi"]
    if not isinstance(psi, list):
        raise ParseError("expected a list of [re, im] pairs", field="psi")
    psi_v = [_complex(z, f"psi[{i}]") for i, z in enumerate(psi)]
    e0 = doc["E0"]
    if not isinstance(e0, list):
        raise ParseError("expected a list of rows", field="E0")
    rows = []
    for i, row in enumerate(e0):
        if not isinstance(row, list):
            raise ParseError("expected a row list", field=f"E0[{i}]")
        rows.append([_complex(z, f"E0[{i}][{j}]") for j, z in enumerate(row)])
    if len(rows) != db or any(len(r) != db for r in rows):
        raise ParseError(f"E0 must be {db}x{db}", field="E0")
    return validate(da, db, psi_v, rows)


def load_protocol(path) -> Protocol:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read())
