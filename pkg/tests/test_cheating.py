import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from weakflip import cheating as ch
from weakflip.errors import NotAligned, OutOfRange
from weakflip.protocol import from_profile, validate
from weakflip.sampling import make_rng, random_fair_profile, random_protocol

from conftest import S

SQ = 1 / math.sqrt(2)
seeds = st.integers(0, 2**31)


def sum_pa(a, b):
    return 2 * sum(x * y * y for x, y in zip(a, b))


def sum_pb(a, b):
    return 2 * sum(x * math.sqrt(y) for x, y in zip(a, b)) ** 2


# -- printed forms ------------------------------------------------------------

@pytest.mark.parametrize(
    "b, pa, pb",
    [
        ((0.5, 0.5), 0.5, 1.0),
        ((1.0, 0.0), 2 * (0.5 * 1 + 0.5 * 0), 2 * (0.5 * 1 + 0.5 * 0) ** 2),
        ((0.9, 0.1), 2 * (0.5 * 0.81 + 0.5 * 0.01), 2 * ((math.sqrt(0.9) + math.sqrt(0.1)) / 2) ** 2),
    ],
)
def test_paper_forms_examples(b, pa, pb):
    p = from_profile([0.5, 0.5], b)
    assert ch.paper_pa(p) == pytest.approx(pa, abs=1e-12)
    assert ch.paper_pb(p) == pytest.approx(pb, abs=1e-12)


def test_skewed_values_are_the_stated_decimals(skewed):
    assert ch.paper_pa(skewed) == pytest.approx(0.82, abs=1e-12)
    assert ch.paper_pb(skewed) == pytest.approx(0.8, abs=1e-12)


def scipy_pb(p):
    g = p.rho @ p.e0 @ p.rho
    return 2 * np.trace(scipy.linalg.sqrtm(g)).real ** 2


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_paper_pb_matches_scipy_route(seed, da, db):
    p = random_protocol(make_rng(seed), da, db)
    assert ch.paper_pb(p) == pytest.approx(scipy_pb(p), abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 8))
def test_aligned_reduction(seed, k):
    rng = make_rng(seed)
    a = rng.exponential(size=k)
    a /= a.sum()
    b = rng.random(k)
    p = from_profile(a, b)
    assert ch.paper_pa(p) == pytest.approx(sum_pa(a, b), abs=1e-12)
    assert ch.paper_pb(p) == pytest.approx(sum_pb(a, b), abs=1e-12)


# -- alignment -----------------------------------------------------------------

def test_align_fixed_point(skewed):
    q = ch.align(skewed)
    assert np.allclose(q.psi.amplitudes, skewed.psi.amplitudes, atol=1e-12)
    assert np.allclose(q.e0, skewed.e0)


def test_align_example():
    p = validate(1, 2, [S, S], np.diag([1, 0]))
    assert ch.paper_pb(p) == pytest.approx(1.0, abs=1e-12)
    assert ch.paper_pa(p) == pytest.approx(1.0, abs=1e-12)
    q = ch.align(p)
    assert (q.dim_a, q.dim_b) == (2, 2)
    assert np.allclose(q.psi.amplitudes, [S, 0, 0, S])
    assert ch.paper_pb(q) == pytest.approx(0.5, abs=1e-12)
    assert ch.paper_pa(q) == pytest.approx(1.0, abs=1e-12)
    prof = ch.diagonal_profile(q)
    assert np.allclose(prof.a, [0.5, 0.5]) and np.allclose(prof.b, [1, 0])


def test_align_degenerate_povm(bell_half):
    q = ch.align(bell_half)
    assert ch.paper_pa(q) == pytest.approx(0.5, abs=1e-12)
    assert ch.paper_pb(q) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4), st.booleans())
def test_alignment_monotonicity(seed, da, db, fair):
    p = random_protocol(make_rng(seed), da, db, fair=fair)
    q = ch.align(p)
    assert ch.is_aligned(q)
    assert q.p0 == pytest.approx(p.p0, abs=1e-9)
    assert ch.paper_pa(q) == pytest.approx(ch.paper_pa(p), abs=1e-9)
    assert ch.paper_pb(q) <= ch.paper_pb(p) + 1e-9


# -- diagonal profile ------------------------------------------------------------

def test_profile_examples(bell_proj, bell_half):
    prof = ch.diagonal_profile(bell_proj)
    assert np.allclose(prof.a, [0.5, 0.5]) and np.allclose(prof.b, [1, 0])
    prof = ch.diagonal_profile(bell_half)
    assert np.allclose(prof.a, [0.5, 0.5]) and np.allclose(prof.b, [0.5, 0.5])


def test_profile_requires_alignment():
    p = validate(1, 2, [S, S], np.diag([1, 0]))
    with pytest.raises(NotAligned):
        ch.diagonal_profile(p)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_profile_reconstructs_forms(seed, da, db):
    p = random_protocol(make_rng(seed), da, db, aligned=True)
    prof = ch.diagonal_profile(p)
    assert ch.paper_pa(p) == pytest.approx(sum_pa(prof.a, prof.b), abs=1e-10)
    assert ch.paper_pb(p) == pytest.approx(sum_pb(prof.a, prof.b), abs=1e-10)


# -- Hölder floor and the bound ---------------------------------------------------

@pytest.mark.parametrize(
    "b, product",
    [((1.0, 0.0), 0.5), ((0.5, 0.5), 0.5), ((0.9, 0.1), 0.82 * 0.8)],
)
def test_holder_examples(b, product):
    prof = ch.DiagonalProfile([0.5, 0.5], b)
    assert ch.holder_floor(prof) == pytest.approx(0.5, abs=1e-12)
    p = prof.to_protocol()
    assert ch.paper_pa(p) * ch.paper_pb(p) == pytest.approx(product, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4), st.booleans())
def test_holder_chain(seed, da, db, fair):
    p = random_protocol(make_rng(seed), da, db, fair=fair)
    floor = ch.holder_floor(ch.diagonal_profile(ch.align(p)))
    assert ch.paper_pa(p) * ch.paper_pb(p) >= floor - 1e-9


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_fair_product_and_floors(seed, da, db):
    p = random_protocol(make_rng(seed), da, db, fair=True)
    pa, pb = ch.paper_pa(p), ch.paper_pb(p)
    assert pa * pb >= 0.5 - 1e-9
    assert pa >= 0.5 - 1e-9 and pb >= 0.5 - 1e-9
    assert pa <= 2 * p.p0 + 1e-9 and pb <= 2 * p.p0 + 1e-9


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_caps_hold_when_unfair(seed, da, db):
    p = random_protocol(make_rng(seed), da, db)
    assert ch.paper_pa(p) <= 2 * p.p0 + 1e-9
    assert ch.paper_pb(p) <= 2 * p.p0 + 1e-9


# -- operational optima -------------------------------------------------------------

def test_preparer_examples(bell_proj, bell_half):
    assert ch.preparer_max(bell_half, 0) == pytest.approx(0.5, abs=1e-12)
    assert ch.preparer_max(bell_proj, 0) == pytest.approx(ch.paper_pa(bell_proj), abs=1e-12)
    # E1 = diag(0, 1) is a projector: Tr(rho E1^2) / p1 = 0.5 / 0.5
    assert ch.preparer_max(bell_proj, 1) == pytest.approx(1.0, abs=1e-12)


def test_receiver_examples(bell_proj, bell_half, skewed):
    assert ch.receiver_max(bell_proj, 0) == pytest.approx(0.5, abs=1e-12)
    assert ch.receiver_max(bell_half, 0) == pytest.approx(1.0, abs=1e-12)
    expected = (0.5 * math.sqrt(0.9) + 0.5 * math.sqrt(0.1)) ** 2 / 0.5
    assert ch.receiver_max(skewed, 0) == pytest.approx(expected, abs=1e-9)
    assert ch.receiver_max(skewed, 0) == pytest.approx(0.8, abs=1e-9)


def test_degenerate_target_is_zero():
    p = from_profile([1.0], [1.0])
    assert ch.is_degenerate(p, 1)
    assert ch.preparer_max(p, 1) == 0.0
    assert ch.receiver_max(p, 1) == 0.0


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_operational_identities(seed, da, db):
    p = random_protocol(make_rng(seed), da, db)
    for w in (0, 1):
        pw = p.p0 if w == 0 else p.p1
        if pw < 1e-6:
            continue
        ew = p.element(w)
        assert ch.preparer_max(p, w) == pytest.approx(np.trace(p.rho @ ew @ ew).real / pw, abs=1e-9)
        g = p.rho @ ew @ p.rho
        tr = np.trace(scipy.linalg.sqrtm(0.5 * (g + g.conj().T))).real
        assert ch.receiver_max(p, w) == pytest.approx(tr**2 / pw, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(2, 8))
def test_aligned_receiver_formula(seed, k):
    prof = random_fair_profile(make_rng(seed), k)
    p = prof.to_protocol()
    expected = float(prof.a @ np.sqrt(prof.b)) ** 2 / p.p0
    assert ch.receiver_max(p, 0) == pytest.approx(expected, abs=1e-9)
    assert ch.receiver_max(p, 0) == pytest.approx(ch.paper_pb(p), abs=1e-9)


# -- frontier -----------------------------------------------------------------------

def test_frontier_symmetric_point():
    prof = ch.frontier_profile(SQ)
    assert np.allclose(prof.a, [0.7071068, 0.2928932], atol=1e-7)
    assert np.allclose(prof.b, [0.7071068, 0.0], atol=1e-7)
    p = prof.to_protocol()
    assert ch.paper_pa(p) == pytest.approx(SQ, abs=1e-12)
    assert ch.paper_pb(p) == pytest.approx(SQ, abs=1e-12)
    assert ch.paper_pa(p) * ch.paper_pb(p) == pytest.approx(0.5, abs=1e-12)


def test_frontier_endpoints():
    prof = ch.frontier_profile(1.0)
    assert np.allclose(prof.a, [0.5, 0.5]) and np.allclose(prof.b, [1, 0])
    p = prof.to_protocol()
    assert (ch.paper_pa(p), ch.paper_pb(p)) == pytest.approx((1.0, 0.5), abs=1e-12)
    prof = ch.frontier_profile(0.5)
    assert np.allclose(prof.b, [0.5, 0.5])
    p = prof.to_protocol()
    assert (ch.paper_pa(p), ch.paper_pb(p)) == pytest.approx((0.5, 1.0), abs=1e-12)


@pytest.mark.parametrize("c", [0.5 + 0.05 * i for i in range(11)])
def test_frontier_grid(c):
    p = ch.frontier(c, "paper")
    assert abs(p.p0 - 0.5) <= 1e-12
    assert abs(ch.paper_pa(p) - c) <= 1e-12
    assert abs(ch.paper_pa(p) * ch.paper_pb(p) - 0.5) <= 1e-12
    q = ch.frontier(c, "operational")
    assert abs(q.p0 - 0.5) <= 1e-12
    assert ch.preparer_max(q, 0) == pytest.approx(c, abs=1e-9)
    assert abs(ch.preparer_max(q, 0) * ch.receiver_max(q, 1) - 0.5) <= 1e-9


@pytest.mark.parametrize("bad", [0.49, 1.01, float("nan")])
def test_frontier_out_of_range(bad):
    with pytest.raises(OutOfRange):
        ch.frontier(bad)


# -- report --------------------------------------------------------------------------

def test_analyze_frontier():
    rep = ch.analyze(ch.frontier(SQ))
    assert abs(rep.product - 0.5) <= 1e-12
    assert rep.fair_bound_holds == "holds"
    assert rep.product == pytest.approx(rep.paper_pa * rep.paper_pb, abs=1e-12)


def test_analyze_skewed(skewed):
    rep = ch.analyze(skewed)
    assert rep.product == pytest.approx(0.656, abs=1e-12)
    assert rep.holder_floor == pytest.approx(0.5, abs=1e-12)
    assert rep.fair_bound_holds == "holds"


def test_analyze_unfair():
    rep = ch.analyze(from_profile([1.0], [0.3]))
    assert rep.p0 == pytest.approx(0.3)
    assert rep.fair_bound_holds == "not-applicable"
    assert rep.holder_floor == pytest.approx(4 * 0.027, abs=1e-12)
    assert rep.product >= rep.holder_floor - 1e-9


def test_report_json_round_trip(skewed):
    rep = ch.analyze(skewed)
    back = ch.CheatReport.from_dict(json.loads(rep.to_json()))
    assert back == rep


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_pb_routes_agree(seed, da, db):
    p = random_protocol(make_rng(seed), da, db)
    assert ch.paper_pb(p) == pytest.approx(ch.paper_pb_eig(p), abs=1e-7)


def test_pb_exact_on_pure_reduced_state():
    v = np.array([0.6, 0.8j])
    e0 = np.diag([0.3, 0.9])
    p = validate(1, 2, v, e0)
    # rho = |v><v| so Tr sqrt(rho E0 rho) = sqrt(<v|E0|v>)
    assert ch.paper_pb(p) == pytest.approx(2 * (0.36 * 0.3 + 0.64 * 0.9), abs=1e-15)
