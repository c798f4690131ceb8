"""Seeded random sampling: Haar unitaries, Haar orthogonals, amplitude draws,
and random pure / bipartite states.

Every sampler takes an explicit :class:`SeededStream`.  A stream is defined
by a (master_seed, stream_id) pair of 64-bit integers mapped directly onto a
Philox 4x64 key, so equal pairs reproduce bit-identical sequences and
distinct pairs give independent streams.  Derived child streams make
parallel Monte Carlo loops deterministic regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matcore import PureState, ValidationError

#: Identifier recorded in output metadata; bump if the mapping from
#: (master_seed, stream_id) to the bit stream ever changes.
GENERATOR_ID = "philox4x64-key-v1"

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 scrambling step; used to derive child stream ids."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass
class SeededStream:
    """Reproducible random stream keyed by (master_seed, stream_id)."""

    master_seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValidationError(f"master_seed must be a 64-bit integer, got {self.master_seed}")
        if not 0 <= self.stream_id <= _MASK64:
            raise ValidationError(f"stream_id must be a 64-bit integer, got {self.stream_id}")

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy Generator (created lazily, then stateful)."""
        if self._gen is None:
            self._gen = np.random.Generator(
                np.random.Philox(key=[self.master_seed, self.stream_id])
            )
        return self._gen

    def child(self, index: int) -> "SeededStream":
        """Independent derived stream for worker/sample `index`.

        Deterministic in (stream_id, index) only, so the derivation is
        schedule-independent.
        """
        if index < 0:
            raise ValidationError(f"child index must be nonnegative, got {index}")
        derived = _splitmix64(self.stream_id ^ _splitmix64((index + 1) & _MASK64))
        return SeededStream(self.master_seed, derived)


@dataclass(frozen=True)
class BipartiteState:
    """Pure state on B (dim N) x E (dim D), stored E-major.

    ``amplitudes[e * dim_b + b]`` is the coefficient of |e>|b>; equivalently
    ``amplitudes.reshape(dim_e, dim_b)`` has one row per environment index.
    """

    dim_b: int
    dim_e: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.dim_b < 1 or self.dim_e < 1:
            raise ValidationError(f"subsystem dims must be >= 1, got ({self.dim_b}, {self.dim_e})")
        v = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if v.shape != (self.dim_b * self.dim_e,):
            raise ValidationError(f"expected {self.dim_b * self.dim_e} amplitudes, got shape {v.shape}")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-10:
            raise ValidationError(f"state norm deviates from 1 by {abs(nrm - 1.0):.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def as_matrix(self) -> np.ndarray:
        """(dim_e, dim_b) coefficient matrix A with rho_E = A A^dagger."""
        return self.amplitudes.reshape(self.dim_e, self.dim_b)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def complex_ginibre(shape, rng: SeededStream) -> np.ndarray:
    """I.i.d. standard complex normal entries (unit total variance per entry)."""
    g = rng.generator
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2.0)


def _phase_correct(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    # Column phases conj(R_jj)/|R_jj| make the draw QR-convention independent.
    d = np.diagonal(r, axis1=-2, axis2=-1)
    absd = np.abs(d)
    phases = np.where(absd > 0, np.conj(d) / np.where(absd > 0, absd, 1.0), 1.0)
    return q * phases[..., None, :]


def haar_unitary(n: int, rng: SeededStream) -> np.ndarray:
    """Haar-distributed n x n unitary via QR of a complex Ginibre matrix."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    q, r = np.linalg.qr(complex_ginibre((n, n), rng))
    return _phase_correct(q, r)


def haar_unitaries(count: int, n: int, rng: SeededStream) -> np.ndarray:
    """Stack of `count` independent Haar unitaries, shape (count, n, n)."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    q, r = np.linalg.qr(complex_ginibre((count, n, n), rng))
    return _phase_correct(q, r)


def haar_orthogonal(n: int, rng: SeededStream) -> np.ndarray:
    """Haar-distributed n x n real orthogonal via QR of a real Gaussian matrix."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    a = rng.generator.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    signs = np.where(d >= 0, 1.0, -1.0)
    return q * signs[None, :]


def sample_amplitudes(d: int, n: int, rng: SeededStream) -> np.ndarray:
    """D i.i.d. nonnegative amplitudes with density proportional to
    l^(2N-1) exp(-N D l^2).

    Constructed exactly as the Euclidean norm of an N-dimensional complex
    Gaussian vector whose entries each carry total variance 1/(N D), so
    E[l_i^2] = 1/D with no quadrature error.
    """
    if d < 1 or n < 1:
        raise ValidationError(f"need d >= 1 and n >= 1, got ({d}, {n})")
    z = complex_ginibre((d, n), rng) / np.sqrt(n * d)
    return np.linalg.norm(z, axis=1)


def random_pure_state(n: int, rng: SeededStream) -> PureState:
    """Uniform state on the unit sphere of C^n (normalized complex Gaussian)."""
    if n < 1:
        raise ValidationError(f"dimension must be >= 1, got {n}")
    v = complex_ginibre(n, rng)
    return PureState(v / np.linalg.norm(v))


def random_bipartite_state(n: int, d: int, rng: SeededStream) -> BipartiteState:
    """Uniform pure state on the n*d-dimensional bipartite space."""
    if n < 1 or d < 1:
        raise ValidationError(f"need n >= 1 and d >= 1, got ({n}, {d})")
    v = complex_ginibre(n * d, rng)
    return BipartiteState(n, d, v / np.linalg.norm(v))
