"""Random protocol generators used by the audit, the search and the tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .cheating import DiagonalProfile
from .protocol import Protocol, validate

MAX_TRIES = 10_000


def make_rng(seed, *stream) -> np.random.Generator:
    """PCG64 generator keyed by ``seed`` and an optional sub-stream index path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def random_state_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return z / np.linalg.norm(z)


def _fair_rescale(weights: np.ndarray, b: np.ndarray):
    """Scale ``b`` so that ``weights @ b == 1/2``; None if some entry leaves [0, 1]."""
    s = float(weights @ b)
    if s <= 0:
        return None
    b = b * (0.5 / s)
    if b.max() > 1.0:
        return None
    return b


def random_fair_profile(rng: np.random.Generator, dim: int) -> DiagonalProfile:
    """``a`` from normalized exponentials, ``b`` uniform then rescaled to fairness.

    Draws that push an entry of ``b`` above 1 are rejected and redrawn.
    """
    for _ in range(MAX_TRIES):
        a = rng.exponential(size=dim)
        a /= a.sum()
        b = _fair_rescale(a, rng.random(dim))
        if b is not None:
            return DiagonalProfile(a, b)
    raise RuntimeError("could not draw a fair profile")


def random_protocol(
    rng: np.random.Generator,
    dim_a: int,
    dim_b: int,
    *,
    fair: bool = False,
    aligned: bool = False,
) -> Protocol:
    """Random (psi, E0) pair.

    ``E0 = U diag(b) U^dagger`` with Haar ``U`` and uniform ``b``. With
    ``aligned`` the receiver-side Schmidt vectors of psi are columns of ``U``.
    With ``fair`` the spectrum ``b`` is rescaled so that ``p0 = 1/2``.
    """
    for _ in range(MAX_TRIES):
        u = haar_unitary(rng, dim_b)
        b = rng.random(dim_b)
        if aligned:
            k = min(dim_a, dim_b)
            lam = rng.exponential(size=k)
            lam = np.sqrt(lam / lam.sum())
            left = haar_unitary(rng, dim_a)[:, :k]
            cols = rng.permutation(dim_b)[:k]
            m = (left * lam) @ u[:, cols].T
            psi = m.reshape(-1)
        else:
            psi = random_state_vector(rng, dim_a * dim_b)
        psi = psi / np.linalg.norm(psi)
        if fair:
            mm = psi.reshape(dim_a, dim_b)
            rho = mm.T @ mm.conj()
            weights = np.einsum("ji,jk,ki->i", u.conj(), rho, u).real
            b = _fair_rescale(weights, b)
            if b is None:
                continue
        e0 = (u * b) @ u.conj().T
        return validate(dim_a, dim_b, psi, e0)
    raise RuntimeError("could not draw a protocol")
