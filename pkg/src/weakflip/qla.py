"""Dense complex linear algebra for small quantum systems.

Matrices are plain ``complex128`` numpy arrays. Everything here is a pure
function; arrays handed back to callers are fresh copies or read-only.

Conventions
-----------
* Composite index ``i * dim_b + j`` corresponds to ``|i>_A |j>_B``.
* Eigenvectors and Schmidt vectors are phase-fixed so that their
  largest-magnitude component is real and positive.
* Inside an eigenvalue tie (gap below ``TIE_GAP``) vectors are ordered by a
  descending lexicographic comparison of their rounded components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadNorm, DimensionMismatch, NotDensity, NotHermitian, NotPSD

HERMITIAN_RTOL = 1e-8
PSD_CLIP_RTOL = 1e-10
TIE_GAP = 1e-10
DENSITY_TOL = 1e-8
NORM_TOL = 1e-8
_ROUND_DIGITS = 8


def as_square(m, name="matrix") -> np.ndarray:
    """Coerce ``m`` to a square complex128 array or raise DimensionMismatch."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(m))))
    return hermitian_defect(m) <= rtol * scale


def hermitize(m, name="matrix") -> np.ndarray:
    """Check Hermiticity within tolerance and return the exactly Hermitian part."""
    arr = as_square(m, name)
    if not is_hermitian(arr):
        raise NotHermitian(f"{name} is not Hermitian (defect {hermitian_defect(arr):.3e})")
    return 0.5 * (arr + arr.conj().T)


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude entry is real and positive."""
    mags = np.abs(v)
    top = float(mags.max())
    if top == 0.0:
        return v.copy()
    # first index within rounding of the maximum, so near-ties resolve stably
    k = int(np.flatnonzero(mags >= top * (1 - 1e-12))[0])
    return v * (np.conj(v[k]) / mags[k])


def _vector_key(v: np.ndarray) -> tuple:
    return tuple(
        (round(float(z.real), _ROUND_DIGITS) + 0.0, round(float(z.imag), _ROUND_DIGITS) + 0.0)
        for z in v
    )


def _tie_groups(values: np.ndarray, gap: float = TIE_GAP):
    """Yield index ranges of consecutive (sorted) values closer than ``gap``."""
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i] - values[i - 1]) >= gap:
            yield range(start, i)
            start = i


def _order_ties(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Column permutation sorting each tie group by descending vector key.

    ``values`` must be monotone (either direction).
    """
    order = []
    for group in _tie_groups(values):
        idx = list(group)
        if len(idx) > 1:
            idx.sort(key=lambda c: _vector_key(vectors[:, c]), reverse=True)
        order.extend(idx)
    return np.array(order, dtype=int)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def herm_eig(h) -> Spectrum:
    """Hermitian eigendecomposition with canonical phases and tie order.

    Raises NotHermitian when ``max|H - H^dagger|`` exceeds
    ``1e-8 * max(1, max|H|)``.
    """
    hm = hermitize(h)
    w, v = np.linalg.eigh(hm)
    v = np.column_stack([fix_phase(v[:, c]) for c in range(v.shape[1])])
    perm = _order_ties(w, v)
    w, v = w[perm], v[:, perm]
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v)


def _clip_threshold(h: np.ndarray) -> float:
    return -PSD_CLIP_RTOL * max(1.0, float(np.linalg.norm(h)))


def _clipped_eigenvalues(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    lo = _clip_threshold(h)
    if w.size and w[0] < lo:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below clip threshold {lo:.3e}")
    return np.clip(w, 0.0, None)


def psd_sqrt(h) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    eig = herm_eig(h)
    hm = np.asarray(h, dtype=np.complex128)
    w = _clipped_eigenvalues(hm, eig.eigenvalues)
    v = eig.eigenvectors
    r = (v * np.sqrt(w)) @ v.conj().T
    return 0.5 * (r + r.conj().T)


def trace_sqrt_psd(h) -> float:
    """Sum of square roots of the (clipped) eigenvalues of ``h``."""
    hm = hermitize(h)
    # same driver as herm_eig so this equals Tr(psd_sqrt(h)) to rounding
    w = _clipped_eigenvalues(hm, np.linalg.eigh(hm)[0])
    return float(np.sum(np.sqrt(w)))


def partial_trace(m, dim_a: int, dim_b: int, side: str) -> np.ndarray:
    """Trace out subsystem ``side`` ("A" or "B") of an operator on A (x) B.

    Tracing out A leaves a ``dim_b`` square matrix; tracing out B leaves
    ``dim_a``.
    """
    arr = as_square(m)
    if arr.shape[0] != dim_a * dim_b:
        raise DimensionMismatch(
            f"operator dimension {arr.shape[0]} != dim_a*dim_b = {dim_a * dim_b}"
        )
    t = arr.reshape(dim_a, dim_b, dim_a, dim_b)
    if side == "A":
        return np.einsum("ijik->jk", t)
    if side == "B":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


@dataclass(frozen=True)
class BipartiteState:
    """Unit vector on H_A (x) H_B, stored flat with index ``i*dim_b + j``."""

    dim_a: int
    dim_b: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.dim_a < 1 or self.dim_b < 1:
            raise DimensionMismatch("dimensions must be positive")
        if amps.size != self.dim_a * self.dim_b:
            raise DimensionMismatch(
                f"amplitude count {amps.size} != {self.dim_a}*{self.dim_b}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise BadNorm(f"state norm {norm:.12g} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def as_matrix(self) -> np.ndarray:
        """Coefficient matrix ``M[i, j]`` of ``|i>_A |j>_B``."""
        return self.amplitudes.reshape(self.dim_a, self.dim_b)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    @classmethod
    def from_vector(cls, vec, dim_a: int, dim_b: int) -> "BipartiteState":
        return cls(dim_a, dim_b, np.asarray(vec, dtype=np.complex128))


@dataclass(frozen=True)
class SchmidtForm:
    coefficients: np.ndarray
    left_vectors: np.ndarray  # columns in H_A
    right_vectors: np.ndarray  # columns in H_B

    def reconstruct(self) -> np.ndarray:
        m = (self.left_vectors * self.coefficients) @ self.right_vectors.T
        return m.reshape(-1)


SCHMIDT_CUTOFF = 1e-12


def schmidt_decompose(state: BipartiteState) -> SchmidtForm:
    """Schmidt decomposition of a pure bipartite state.

    Coefficients are descending and strictly positive (terms below 1e-12 are
    dropped). Right vectors are phase-fixed; the compensating phase goes to
    the left vectors so the product is unchanged.
    """
    m = state.as_matrix()
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > SCHMIDT_CUTOFF
    u, s, vh = u[:, keep], s[keep], vh[keep]
    right = vh.T.copy()
    left = u.copy()
    for k in range(s.size):
        fixed = fix_phase(right[:, k])
        # fixed = right * phase, so left must absorb conj(phase)
        idx = int(np.argmax(np.abs(right[:, k])))
        if right[idx, k] != 0:
            phase = fixed[idx] / right[idx, k]
            left[:, k] *= np.conj(phase)
        right[:, k] = fixed
    perm = _order_ties(s, right)
    return SchmidtForm(s[perm].copy(), left[:, perm].copy(), right[:, perm].copy())


def _check_density(rho, name: str) -> np.ndarray:
    try:
        m = hermitize(rho, name)
    except NotHermitian as exc:
        raise NotDensity(str(exc)) from None
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > DENSITY_TOL:
        raise NotDensity(f"{name} has trace {tr:.12g}")
    w = np.linalg.eigvalsh(m)
    if w[0] < -DENSITY_TOL:
        raise NotDensity(f"{name} has negative eigenvalue {w[0]:.3e}")
    return m


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``, which
    is the same quantity and is exactly symmetric in its arguments.
    """
    r = _check_density(rho, "rho")
    s = _check_density(sigma, "sigma")
    if r.shape != s.shape:
        raise DimensionMismatch(f"shapes differ: {r.shape} vs {s.shape}")
    x = psd_sqrt(r) @ psd_sqrt(s)
    return float(np.sum(np.linalg.svd(x, compute_uv=False)) ** 2)
