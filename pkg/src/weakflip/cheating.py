"""Closed-form cheating analysis.

Two families of quantities live here and are deliberately kept apart:

* ``paper_pa`` / ``paper_pb`` evaluate the two textbook expressions
  ``2 Tr(rho E0^2)`` and ``2 (Tr sqrt(rho E0 rho))^2`` exactly as written,
  both keyed to ``E0``.
* ``preparer_max`` / ``receiver_max`` are the operational optima for a
  cheater steering toward an explicit outcome ``w``.

For fair protocols ``paper_pa == preparer_max(., 0)`` and
``paper_pb == receiver_max(., 0)``; the oracle module audits this.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import qla
from .errors import NotAligned, OutOfRange, WeakFlipError
from .protocol import (
    DEGENERATE_P,
    Protocol,
    from_profile,
    outcome_prob,
    post_measurement_state,
    validate,
)

REPORT_SCHEMA = "weakflip.cheat-report/1"
COMMUTATOR_TOL = 1e-8
BOUND_SLACK = 1e-9
PROFILE_TOL = 1e-9


@dataclass(frozen=True)
class DiagonalProfile:
    """Weights ``a`` (eigenvalues of rho) and ``b`` (eigenvalues of E0) in a shared basis."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.size != b.size or a.size == 0:
            raise WeakFlipError(f"profile lengths differ: {a.size} vs {b.size}")
        if np.any(a < -PROFILE_TOL) or abs(a.sum() - 1.0) > PROFILE_TOL:
            raise WeakFlipError("a must be a probability vector")
        if np.any(b < -PROFILE_TOL) or np.any(b > 1 + PROFILE_TOL):
            raise WeakFlipError("b entries must lie in [0, 1]")
        a = np.clip(a, 0.0, None)
        b = np.clip(b, 0.0, 1.0)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def p0(self) -> float:
        return float(self.a @ self.b)

    def pa(self) -> float:
        return 2.0 * float(self.a @ self.b**2)

    def pb(self) -> float:
        return 2.0 * float(self.a @ np.sqrt(self.b)) ** 2

    def to_protocol(self) -> Protocol:
        return from_profile(self.a, self.b)


# -- printed closed forms ---------------------------------------------------

def paper_pa(p: Protocol) -> float:
    """``2 Tr(rho E0^2)``."""
    return 2.0 * float(np.trace(p.rho @ p.e0 @ p.e0).real)


def paper_pb(p: Protocol) -> float:
    """``2 (Tr sqrt(rho E0 rho))^2``.

    The trace norm is taken as the sum of singular values of
    ``rho sqrt(E0)``, whose Gram matrix is ``rho E0 rho``. Going through the
    eigenvalues of ``rho E0 rho`` instead loses about half the digits when
    rho is rank deficient (see :func:`paper_pb_eig`).
    """
    eig = qla.herm_eig(p.e0)
    root_b = np.sqrt(np.clip(eig.eigenvalues, 0.0, None))
    x = p.rho @ (eig.eigenvectors * root_b)
    return 2.0 * float(np.sum(np.linalg.svd(x, compute_uv=False))) ** 2


def paper_pb_eig(p: Protocol) -> float:
    """Same quantity via ``trace_sqrt_psd`` of the symmetrized ``rho E0 rho``."""
    g = p.rho @ p.e0 @ p.rho
    g = 0.5 * (g + g.conj().T)
    return 2.0 * qla.trace_sqrt_psd(g) ** 2


def holder_floor(profile: DiagonalProfile) -> float:
    """``4 (sum a_i b_i)^3``, the lower bound on ``pa * pb`` from Hölder."""
    return 4.0 * profile.p0**3


# -- shared eigenbasis and alignment -----------------------------------------

def _standard_order(basis: np.ndarray) -> np.ndarray:
    """Permutation placing each column near the standard-basis slot it weighs most on."""
    weight = np.abs(basis) ** 2
    rows, cols = linear_sum_assignment(-weight)
    order = np.empty_like(cols)
    order[rows] = cols
    return order


def shared_basis(rho: np.ndarray, e0: np.ndarray) -> np.ndarray:
    """Orthonormal eigenbasis of ``E0`` that also diagonalizes rho's compressions.

    Inside each degenerate eigenspace of ``E0`` the basis is rotated to
    diagonalize ``rho`` restricted there; for commuting pairs the result is a
    common eigenbasis. Columns are ordered by a max-weight assignment to the
    standard basis so that diagonal inputs come back in their own order.
    """
    eig = qla.herm_eig(e0)
    vecs = np.array(eig.eigenvectors)
    for group in qla._tie_groups(eig.eigenvalues):
        idx = list(group)
        if len(idx) < 2:
            continue
        sub = vecs[:, idx]
        comp = sub.conj().T @ rho @ sub
        inner = qla.herm_eig(0.5 * (comp + comp.conj().T))
        rotated = sub @ inner.eigenvectors
        vecs[:, idx] = np.column_stack([qla.fix_phase(rotated[:, c]) for c in range(len(idx))])
    return vecs[:, _standard_order(vecs)]


def commutator_norm(p: Protocol) -> float:
    c = p.rho @ p.e0 - p.e0 @ p.rho
    return float(np.linalg.norm(c))


def is_aligned(p: Protocol, tol: float = COMMUTATOR_TOL) -> bool:
    return commutator_norm(p) <= tol


def align(p: Protocol) -> Protocol:
    """Replace psi by ``sum_i lambda_i |i>|phi_i>`` over E0's eigenbasis.

    ``lambda_i = sqrt(<phi_i|rho|phi_i>)``. The outcome probability and
    ``paper_pa`` are unchanged; ``paper_pb`` can only go down. The result
    has ``dim_a == dim_b``.
    """
    basis = shared_basis(p.rho, p.e0)
    weights = np.einsum("ji,jk,ki->i", basis.conj(), p.rho, basis).real
    lam = np.sqrt(np.clip(weights, 0.0, None))
    amps = (lam[:, None] * basis.T).reshape(-1)
    amps = amps / np.linalg.norm(amps)
    return validate(p.dim_b, p.dim_b, amps, p.e0)


def diagonal_profile(p: Protocol) -> DiagonalProfile:
    """Diagonals of rho and E0 in their common eigenbasis.

    Raises NotAligned when ``|[rho, E0]|_F`` exceeds 1e-8.
    """
    cn = commutator_norm(p)
    if cn > COMMUTATOR_TOL:
        raise NotAligned(f"rho and E0 do not commute (|[rho, E0]|_F = {cn:.3e})")
    basis = shared_basis(p.rho, p.e0)
    a = np.einsum("ji,jk,ki->i", basis.conj(), p.rho, basis).real
    b = np.einsum("ji,jk,ki->i", basis.conj(), p.e0, basis).real
    return DiagonalProfile(a, b)


# -- operational optima ---------------------------------------------------

def is_degenerate(p: Protocol, w: int) -> bool:
    return outcome_prob(p, w) < DEGENERATE_P


def preparer_max(p: Protocol, w: int) -> float:
    """Best win probability for a preparer steering the outcome to ``w``.

    Equals ``Tr(rho E_w^2) / p_w``, attained by sending
    ``(I (x) sqrt(E_w)) psi_w`` normalized. Defined as 0 when ``p_w`` is
    below 1e-12.
    """
    if is_degenerate(p, w):
        return 0.0
    ew = p.element(w)
    return float(np.trace(p.rho @ ew @ ew).real) / outcome_prob(p, w)


def receiver_max(p: Protocol, w: int) -> float:
    """Best pass probability for a receiver who announces ``w`` regardless.

    The receiver may apply any channel to B before returning it; by Uhlmann's
    theorem the optimum is the fidelity between the preparer-side reductions
    of ``psi`` and ``psi_w``. Defined as 0 when ``p_w`` is below 1e-12.
    """
    if is_degenerate(p, w):
        return 0.0
    target = post_measurement_state(p, w)
    sigma = qla.partial_trace(p.psi.projector(), p.dim_a, p.dim_b, "B")
    sigma_w = qla.partial_trace(target.projector(), p.dim_a, p.dim_b, "B")
    return qla.fidelity(sigma, sigma_w)


# -- frontier protocols ------------------------------------------------------

FAMILIES = ("paper", "operational")


def frontier_profile(target: float, family: str = "paper") -> DiagonalProfile:
    """Two-level fair profile with cheat product exactly 1/2.

    ``paper``: ``b = (c, 0)``, ``a = (1/(2c), 1 - 1/(2c))`` so that
    ``paper_pa = c`` and ``paper_pb = 1/(2c)``.

    ``operational``: ``b = (1, t)``, ``a = ((1/2 - t)/(1 - t), (1/2)/(1 - t))``
    with ``t = 1 - c``, so that ``preparer_max(., 0) = c`` and
    ``receiver_max(., 1) = 1/(2c)``.
    """
    c = float(target)
    if not (0.5 <= c <= 1.0):
        raise OutOfRange(f"target must lie in [0.5, 1], got {target!r}")
    if family == "paper":
        a1 = 1.0 / (2.0 * c)
        a2 = 1.0 - a1
        # at c = 1/2 the second level carries no weight; put it at c too so E0 = I/2
        b2 = c if a2 == 0.0 else 0.0
        return DiagonalProfile((a1, a2), (c, b2))
    if family == "operational":
        t = 1.0 - c
        return DiagonalProfile(((0.5 - t) / (1.0 - t), 0.5 / (1.0 - t)), (1.0, t))
    raise WeakFlipError(f"unknown frontier family {family!r}; expected one of {FAMILIES}")


def frontier(target: float, family: str = "paper") -> Protocol:
    return frontier_profile(target, family).to_protocol()


# -- report ---------------------------------------------------------------

@dataclass(frozen=True)
class CheatReport:
    p0: float
    paper_pa: float
    paper_pb: float
    op_preparer: tuple
    op_receiver: tuple
    holder_floor: float
    product: float
    fair: bool
    fair_bound_holds: str  # "holds" | "violated" | "not-applicable"
    degenerate: tuple = field(default=(False, False))
    schema: str = REPORT_SCHEMA

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "p0": self.p0,
            "paper_pa": self.paper_pa,
            "paper_pb": self.paper_pb,
            "product": self.product,
            "holder_floor": self.holder_floor,
            "op_preparer_0": self.op_preparer[0],
            "op_preparer_1": self.op_preparer[1],
            "op_receiver_0": self.op_receiver[0],
            "op_receiver_1": self.op_receiver[1],
            "degenerate_0": self.degenerate[0],
            "degenerate_1": self.degenerate[1],
            "fair": self.fair,
            "fair_bound_holds": self.fair_bound_holds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CheatReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise WeakFlipError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            p0=d["p0"],
            paper_pa=d["paper_pa"],
            paper_pb=d["paper_pb"],
            op_preparer=(d["op_preparer_0"], d["op_preparer_1"]),
            op_receiver=(d["op_receiver_0"], d["op_receiver_1"]),
            holder_floor=d["holder_floor"],
            product=d["product"],
            fair=d["fair"],
            fair_bound_holds=d["fair_bound_holds"],
            degenerate=(d["degenerate_0"], d["degenerate_1"]),
        )


def bound_verdict(p: Protocol, product: float) -> str:
    if not p.is_fair:
        return "not-applicable"
    return "holds" if product >= 0.5 - BOUND_SLACK else "violated"


def analyze(p: Protocol) -> CheatReport:
    pa, pb = paper_pa(p), paper_pb(p)
    product = pa * pb
    floor = holder_floor(diagonal_profile(align(p)))
    return CheatReport(
        p0=p.p0,
        paper_pa=pa,
        paper_pb=pb,
        op_preparer=(preparer_max(p, 0), preparer_max(p, 1)),
        op_receiver=(receiver_max(p, 0), receiver_max(p, 1)),
        holder_floor=floor,
        product=product,
        fair=p.is_fair,
        fair_bound_holds=bound_verdict(p, product),
        degenerate=(is_degenerate(p, 0), is_degenerate(p, 1)),
    )


SYMMETRIC_POINT = 1.0 / math.sqrt(2.0)
