"""Sampled runs of the protocol with honest or cheating parties.

Each round consumes exactly two uniforms from the stream: one for the
announced bit and one for the verification test. Round ``r`` of a batch
seeded with ``s`` always reads uniforms ``2r`` and ``2r + 1`` of the PCG64
stream keyed by ``SeedSequence(s)``, so any split of a batch into round
ranges reproduces the unsplit result.

Winner table (fixed): outcome 0 and pass -> B; outcome 0 and fail -> A
caught B; outcome 1 and pass -> A; outcome 1 and fail -> B caught A.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cheating
from .errors import UnsupportedStrategy, WeakFlipError
from .protocol import DEGENERATE_P, Protocol, apply_on_b, post_measurement_state
from .qla import BipartiteState

SCHEMA_BATCH = "weakflip.batch/1"
DRAWS_PER_ROUND = 2
TP_TOL = 1e-8

WINNERS = ("A", "B", "caught-A", "caught-B")


@dataclass(frozen=True)
class Strategy:
    """How one party behaves.

    ``kind`` is ``"honest"``, ``"optimal"`` (cheat toward ``target``) or
    ``"custom"``. A custom preparer carries a state vector in ``payload``;
    a custom receiver carries a list of Kraus operators and announces
    ``target``.
    """

    role: str
    kind: str = "honest"
    target: int = 0
    payload: object = None

    def __post_init__(self):
        if self.role not in ("preparer", "receiver"):
            raise WeakFlipError(f"unknown role {self.role!r}")
        if self.kind not in ("honest", "optimal", "custom"):
            raise WeakFlipError(f"unknown strategy kind {self.kind!r}")
        if self.target not in (0, 1):
            raise WeakFlipError(f"target must be 0 or 1, got {self.target!r}")
        if self.kind == "custom" and self.payload is None:
            raise WeakFlipError("custom strategy needs a payload")

    @property
    def cheating(self) -> bool:
        return self.kind != "honest"

    @classmethod
    def honest(cls, role):
        return cls(role)

    @classmethod
    def optimal(cls, role, target):
        return cls(role, "optimal", target)

    @classmethod
    def custom_state(cls, vector):
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > TP_TOL:
            raise WeakFlipError("custom preparer state must be normalized")
        return cls("preparer", "custom", 0, v)

    @classmethod
    def custom_channel(cls, kraus, target):
        ops = [np.asarray(k, dtype=np.complex128) for k in kraus]
        total = sum(k.conj().T @ k for k in ops)
        if np.linalg.norm(total - np.eye(total.shape[0])) > TP_TOL:
            raise WeakFlipError("custom channel is not trace preserving")
        return cls("receiver", "custom", target, ops)


@dataclass(frozen=True)
class RoundModel:
    """Probabilities that fully determine one round."""

    q0: float  # probability the announced bit is 0
    pass_prob: tuple  # verification pass probability given bit 0 / bit 1


@dataclass(frozen=True)
class Transcript:
    outcome_bit: int
    verification_passed: bool
    winner: str
    rng_draws: int = DRAWS_PER_ROUND


def winner_for(bit: int, passed: bool) -> str:
    if bit == 0:
        return "B" if passed else "caught-B"
    return "A" if passed else "caught-A"


def _overlap2(target: BipartiteState, vec: np.ndarray) -> float:
    return float(abs(np.vdot(target.amplitudes, vec)) ** 2)


def _targets(p: Protocol):
    return tuple(
        post_measurement_state(p, b) if (p.p0 if b == 0 else p.p1) >= DEGENERATE_P else None
        for b in (0, 1)
    )


def round_model(p: Protocol, alice: Strategy, bob: Strategy) -> RoundModel:
    """Reduce a strategy pair to (P[bit 0], P[pass | bit]).

    At most one party may deviate: the verifier must run the honest test.
    """
    if alice.role != "preparer" or bob.role != "receiver":
        raise UnsupportedStrategy("alice must be the preparer and bob the receiver")
    if alice.cheating and bob.cheating:
        raise UnsupportedStrategy("at most one party may deviate")
    targets = _targets(p)

    if bob.kind == "honest":
        if alice.kind == "honest":
            # exact: the verifier's target is the honest branch itself
            return RoundModel(p.p0, (1.0, 1.0))
        elif alice.kind == "optimal":
            w = alice.target
            if targets[w] is None:
                sent = p.psi.amplitudes
            else:
                v = apply_on_b(p.sqrt_element(w), targets[w])
                sent = v / np.linalg.norm(v)
        else:
            sent = alice.payload
            if sent.size != p.dim_a * p.dim_b:
                raise UnsupportedStrategy("custom state has the wrong dimension")
        state = BipartiteState(p.dim_a, p.dim_b, sent)
        q, passes = [], []
        for b in (0, 1):
            branch = apply_on_b(p.sqrt_element(b), state)
            qb = float(np.vdot(branch, branch).real)
            q.append(qb)
            if qb < DEGENERATE_P or targets[b] is None:
                passes.append(0.0 if targets[b] is None else 1.0)
            else:
                passes.append(min(1.0, _overlap2(targets[b], branch) / qb))
        return RoundModel(min(max(q[0] / (q[0] + q[1]), 0.0), 1.0), tuple(passes))

    w = bob.target
    if targets[w] is None:
        pw = 0.0
    elif bob.kind == "optimal":
        if not cheating.is_aligned(p):
            raise UnsupportedStrategy(
                "optimal receiver cheat is only simulated for aligned protocols; "
                "pass the oracle's channel as a custom strategy instead"
            )
        pw = _overlap2(targets[w], p.psi.amplitudes)
    else:
        pw = 0.0
        for k in bob.payload:
            if k.shape != (p.dim_b, p.dim_b):
                raise UnsupportedStrategy("Kraus operator has the wrong shape")
            pw += _overlap2(targets[w], apply_on_b(k, p.psi))
        pw = min(pw, 1.0)
    passes = (pw, 0.0) if w == 0 else (0.0, pw)
    return RoundModel(1.0 if w == 0 else 0.0, passes)


def _play(model: RoundModel, u_bit: float, u_pass: float) -> Transcript:
    bit = 0 if u_bit < model.q0 else 1
    passed = bool(u_pass < model.pass_prob[bit])
    return Transcript(bit, passed, winner_for(bit, passed))


def simulate_round(p: Protocol, alice: Strategy, bob: Strategy, rng: np.random.Generator) -> Transcript:
    model = round_model(p, alice, bob)
    u = rng.random(DRAWS_PER_ROUND)
    return _play(model, u[0], u[1])


def round_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for rounds ``start .. start+count-1``, shape ``(count, 2)``."""
    bg = np.random.PCG64(np.random.SeedSequence(int(seed)))
    bg.advance(DRAWS_PER_ROUND * int(start))
    return np.random.Generator(bg).random((int(count), DRAWS_PER_ROUND))


@dataclass(frozen=True)
class BatchStats:
    rounds: int
    freq_outcome0: float
    freq_win_A: float
    freq_win_B: float
    freq_caught: float
    standard_error: float
    freq_caught_A: float = 0.0
    freq_caught_B: float = 0.0
    freq_cheater_win: Optional[float] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_BATCH,
            "rounds": self.rounds,
            "seed": self.seed,
            "freq_outcome0": self.freq_outcome0,
            "freq_win_A": self.freq_win_A,
            "freq_win_B": self.freq_win_B,
            "freq_caught": self.freq_caught,
            "freq_caught_A": self.freq_caught_A,
            "freq_caught_B": self.freq_caught_B,
            "freq_cheater_win": self.freq_cheater_win,
            "standard_error": self.standard_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "BatchStats":
        if d.get("schema") != SCHEMA_BATCH:
            raise WeakFlipError(f"unsupported batch schema {d.get('schema')!r}")
        fields = {k: v for k, v in d.items() if k != "schema"}
        return cls(**fields)

    def table(self) -> str:
        rows = [
            ("rounds", f"{self.rounds:d}"),
            ("outcome 0", f"{self.freq_outcome0:.6f}"),
            ("A wins", f"{self.freq_win_A:.6f}"),
            ("B wins", f"{self.freq_win_B:.6f}"),
            ("caught", f"{self.freq_caught:.6f}"),
            ("  A caught", f"{self.freq_caught_A:.6f}"),
            ("  B caught", f"{self.freq_caught_B:.6f}"),
        ]
        if self.freq_cheater_win is not None:
            rows.append(("cheater wins", f"{self.freq_cheater_win:.6f}"))
        rows.append(("std error", f"{self.standard_error:.6f}"))
        return "\n".join(f"{k:<14}{v:>14}" for k, v in rows)


def bernoulli_se(p: float, rounds: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / rounds)


def count_rounds(model: RoundModel, uniforms: np.ndarray) -> dict:
    """Category counts for a block of rounds (vectorized :func:`_play`)."""
    bits = (uniforms[:, 0] >= model.q0).astype(int)
    thresh = np.where(bits == 0, model.pass_prob[0], model.pass_prob[1])
    passed = uniforms[:, 1] < thresh
    return {
        "outcome0": int(np.sum(bits == 0)),
        "B": int(np.sum((bits == 0) & passed)),
        "caught-B": int(np.sum((bits == 0) & ~passed)),
        "A": int(np.sum((bits == 1) & passed)),
        "caught-A": int(np.sum((bits == 1) & ~passed)),
    }


def run_batch(
    p: Protocol,
    alice: Strategy,
    bob: Strategy,
    rounds: int,
    seed: int,
    *,
    shards: int = 1,
) -> BatchStats:
    """Play ``rounds`` independent rounds and tally the outcomes.

    ``standard_error`` is the worst-case Bernoulli error ``0.5/sqrt(rounds)``,
    valid for every reported frequency. ``freq_cheater_win`` is the share of
    rounds in which the deviating party's target bit came up and passed.
    """
    if rounds < 1:
        raise WeakFlipError("rounds must be at least 1")
    model = round_model(p, alice, bob)
    totals = dict.fromkeys(("outcome0", "A", "B", "caught-A", "caught-B"), 0)
    bounds = np.linspace(0, rounds, max(1, int(shards)) + 1).astype(int)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi > lo:
            for k, v in count_rounds(model, round_uniforms(seed, lo, hi - lo)).items():
                totals[k] += v
    n = float(rounds)
    cheater = None
    if alice.cheating or bob.cheating:
        w = alice.target if alice.cheating else bob.target
        cheater = (totals["B"] if w == 0 else totals["A"]) / n
    return BatchStats(
        rounds=int(rounds),
        freq_outcome0=totals["outcome0"] / n,
        freq_win_A=totals["A"] / n,
        freq_win_B=totals["B"] / n,
        freq_caught=(totals["caught-A"] + totals["caught-B"]) / n,
        standard_error=0.5 / math.sqrt(n),
        freq_caught_A=totals["caught-A"] / n,
        freq_caught_B=totals["caught-B"] / n,
        freq_cheater_win=cheater,
        seed=int(seed),
    )
