"""Dense complex linear algebra and entropy kernels.

Everything downstream (channels, optimizers, Monte Carlo loops) reduces to a
handful of primitives defined here: validated state / density-matrix
containers, Hermitian eigendecomposition, von Neumann entropy in nats, trace
norm, and the maximally entangled state.  All containers are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Tolerances used by the validated containers.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-10
EIG_NEG_TOL = 1e-10  # eigenvalues below -EIG_NEG_TOL are a genuine PSD violation
EIG_ZERO_FLOOR = 1e-12  # eigenvalues in [-EIG_NEG_TOL, EIG_ZERO_FLOOR] count as 0


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


def _as_complex_vector(a) -> np.ndarray:
    v = np.ascontiguousarray(a, dtype=np.complex128)
    if v.ndim != 1:
        raise ValidationError(f"expected a 1-d amplitude vector, got shape {v.shape}")
    return v


def _as_complex_matrix(a) -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class PureState:
    """Unit-norm complex vector.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes; Euclidean norm must be 1 within 1e-10.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        v = _as_complex_vector(self.amplitudes)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {nrm!r} deviates from 1 by {abs(nrm - 1.0):.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        """Rank-one density matrix |psi><psi| as a raw array."""
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace complex matrix.

    Hermiticity and trace are checked at 1e-10; eigenvalues may dip to -1e-10
    (numerical noise) but no further.
    """

    entries: np.ndarray
    _validate_psd: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if asym > HERMITICITY_TOL:
            raise ValidationError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace {tr!r} deviates from 1 by {abs(tr - 1.0):.3e}")
        m = (m + m.conj().T) / 2.0  # strip accumulation noise
        if self._validate_psd:
            w = np.linalg.eigvalsh(m)
            if w[0] < -EIG_NEG_TOL:
                raise ValidationError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a density matrix, sorted descending.

    Values live in [-1e-10, 1 + 1e-10] and, after clipping tiny noise to
    zero, sum to 1 within 1e-9.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValidationError(f"expected a nonempty 1-d eigenvalue vector, got shape {v.shape}")
        if np.any(np.diff(v) > 0):
            v = np.sort(v)[::-1].copy()
        if v[-1] < -EIG_NEG_TOL or v[0] > 1.0 + 1e-10:
            raise ValidationError(
                f"eigenvalues outside [-1e-10, 1+1e-10]: min {v[-1]:.3e}, max {v[0]:.6f}"
            )
        total = float(np.sum(np.where(v < EIG_ZERO_FLOOR, 0.0, v)))
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"clipped eigenvalues sum to {total!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def hermitize(m: np.ndarray) -> np.ndarray:
    """Symmetrize (m + m^dagger)/2 after checking asymmetry is within tolerance."""
    m = _as_complex_matrix(m)
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > HERMITICITY_TOL:
        raise ValidationError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
    return (m + m.conj().T) / 2.0


def hermitian_eigenvalues(m: DensityMatrix | np.ndarray) -> Spectrum:
    """All eigenvalues of a Hermitian density matrix, sorted descending.

    Accepts either a validated :class:`DensityMatrix` or a raw array (which
    is then hermitized and checked).
    """
    a = m.entries if isinstance(m, DensityMatrix) else hermitize(m)
    w = np.linalg.eigvalsh(a)
    return Spectrum(w[::-1])


def entropy_from_eigenvalues(w: np.ndarray) -> float:
    """-sum p ln p over raw eigenvalues, with the 0 ln 0 = 0 convention.

    Eigenvalues in [-1e-10, 1e-12] are clipped to 0 (numerical noise); values
    below -1e-10 raise, since they indicate a genuine PSD violation rather
    than roundoff.
    """
    w = np.asarray(w, dtype=np.float64)
    wmin = float(w.min()) if w.size else 0.0
    if wmin < -EIG_NEG_TOL:
        raise ValidationError(f"negative eigenvalue {wmin:.3e} below noise floor")
    p = np.where(w < EIG_ZERO_FLOOR, 0.0, w)
    nz = p[p > 0.0]
    return max(float(-np.sum(nz * np.log(nz))), 0.0)


def von_neumann_entropy(s: Spectrum | np.ndarray) -> float:
    """Von Neumann entropy in nats of a spectrum; lies in [0, ln dim]."""
    v = s.values if isinstance(s, Spectrum) else Spectrum(np.asarray(s)).values
    return entropy_from_eigenvalues(v)


def trace_norm(m) -> float:
    """Sum of singular values; for Hermitian input this is sum |eigenvalues|."""
    m = _as_complex_matrix(m)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def maximally_entangled(n: int) -> PureState:
    """The n^2-dimensional state with amplitude 1/sqrt(n) on each pair |a>|a>."""
    if n < 1:
        raise ValidationError(f"subsystem dimension must be >= 1, got {n}")
    v = np.zeros(n * n, dtype=np.complex128)
    v[:: n + 1] = 1.0 / np.sqrt(n)
    return PureState(v)
