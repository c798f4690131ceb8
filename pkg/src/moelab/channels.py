"""Random-unitary channels and their derived objects.

A channel here mixes ``D`` unitary conjugations ``U_i^dagger rho U_i`` with
probabilities ``P_i = l_i^2 / L^2``.  Alongside the channel itself the module
constructs its entrywise complex conjugate, the complementary channel whose
``D x D`` output records which unitary acted, and the Gram matrix of the pure
components of the tensor pair acting on the maximally entangled state.  The
Gram route gives the exact spectrum of the ``N^2 x N^2`` pair output from a
``D^2 x D^2`` matrix, which is what makes large ``N`` tractable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    DensityMatrix,
    PureState,
    Spectrum,
    ValidationError,
    entropy_from_eigenvalues,
    hermitize,
    maximally_entangled,
    von_neumann_entropy,
)
from .randgen import GENERATOR_ID, SeededStream, haar_orthogonal, haar_unitaries, sample_amplitudes

UNITARITY_TOL = 1e-10
CHANNEL_FORMAT = "moelab-channel"
CHANNEL_FORMAT_VERSION = 1

# Working-set cap for the flat pairwise-overlap path; above it we fall back
# to a slower blocked loop rather than allocating a (D^2, N^2) matrix.
_GRAM_MEMORY_BUDGET_BYTES = 2_000_000_000


@dataclass(frozen=True)
class ChannelProvenance:
    """How a channel was drawn, sufficient to regenerate it bit-identically."""

    master_seed: int
    stream_id: int
    orthogonal: bool = False
    uniform_p: bool = False
    generator_id: str = GENERATOR_ID


@dataclass(frozen=True)
class ChannelSpec:
    """A random-unitary channel: D unitaries of size N x N plus amplitudes.

    Attributes
    ----------
    n, d : int
        Input/output dimension and number of unitaries.
    unitaries : ndarray, shape (d, n, n)
        The U_i; each verified unitary within 1e-10.
    amplitudes : ndarray, shape (d,)
        Nonnegative amplitudes l_i.
    l_norm : float
        L = sqrt(sum l_i^2).
    probabilities : ndarray, shape (d,)
        P_i = l_i^2 / L^2.
    """

    n: int
    d: int
    unitaries: np.ndarray
    amplitudes: np.ndarray
    l_norm: float = field(init=False)
    probabilities: np.ndarray = field(init=False)
    provenance: ChannelProvenance | None = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValidationError(f"need n >= 1 and d >= 1, got ({self.n}, {self.d})")
        u = np.ascontiguousarray(self.unitaries, dtype=np.complex128)
        if u.shape != (self.d, self.n, self.n):
            raise ValidationError(f"expected unitaries of shape {(self.d, self.n, self.n)}, got {u.shape}")
        eye = np.eye(self.n)
        for i in range(self.d):
            resid = float(np.max(np.abs(u[i].conj().T @ u[i] - eye)))
            if resid > UNITARITY_TOL:
                raise ValidationError(f"matrix {i} is not unitary: max residual {resid:.3e}")
        l = np.ascontiguousarray(self.amplitudes, dtype=np.float64)
        if l.shape != (self.d,):
            raise ValidationError(f"expected {self.d} amplitudes, got shape {l.shape}")
        if np.any(l < 0):
            raise ValidationError("amplitudes must be nonnegative")
        l_norm = float(np.linalg.norm(l))
        if l_norm <= 0.0:
            raise ValidationError("amplitude vector must be nonzero")
        p = (l / l_norm) ** 2
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {p.sum()!r}, not 1")
        u.setflags(write=False)
        l.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "unitaries", u)
        object.__setattr__(self, "amplitudes", l)
        object.__setattr__(self, "l_norm", l_norm)
        object.__setattr__(self, "probabilities", p)

    def conjugate(self) -> "ChannelSpec":
        """The channel built from the entrywise conjugates of the U_i."""
        return ChannelSpec(self.n, self.d, self.unitaries.conj(), self.amplitudes)


def make_channel(
    n: int,
    d: int,
    rng: SeededStream,
    orthogonal: bool = False,
    uniform_p: bool = False,
) -> ChannelSpec:
    """Draw a random channel: d Haar unitaries, then the amplitude vector.

    With ``orthogonal`` the matrices come from the real orthogonal group (so
    the conjugate channel coincides with the channel itself); with
    ``uniform_p`` the amplitudes are all 1/sqrt(d) and no amplitude draw is
    consumed from the stream.
    """
    if orthogonal:
        u = np.stack([haar_orthogonal(n, rng).astype(np.complex128) for _ in range(d)])
    else:
        u = haar_unitaries(d, n, rng)
    if uniform_p:
        l = np.full(d, 1.0 / np.sqrt(d))
    else:
        l = sample_amplitudes(d, n, rng)
    prov = ChannelProvenance(rng.master_seed, rng.stream_id, orthogonal, uniform_p)
    return ChannelSpec(n, d, u, l, provenance=prov)


# ---------------------------------------------------------------------------
# Channel application
# ---------------------------------------------------------------------------


def apply(ch: ChannelSpec, rho: DensityMatrix | np.ndarray, conjugated: bool = False) -> DensityMatrix:
    """Apply the channel (or its conjugate) to a density matrix.

    Returns sum_i P_i U_i^dagger rho U_i, with the conjugated unitaries when
    ``conjugated`` is set.
    """
    m = rho.entries if isinstance(rho, DensityMatrix) else hermitize(rho)
    if m.shape[0] != ch.n:
        raise ValidationError(f"state dimension {m.shape[0]} does not match channel dimension {ch.n}")
    u = ch.unitaries.conj() if conjugated else ch.unitaries
    uh = u.conj().transpose(0, 2, 1)
    out = np.tensordot(ch.probabilities, (uh @ m) @ u, axes=(0, 0))
    return DensityMatrix(out)


def conjugate_components(ch: ChannelSpec, psi: np.ndarray) -> np.ndarray:
    """Rotated copies U_i^dagger psi of one state (or a stack of states).

    ``psi`` of shape (n,) gives (d, n); shape (n, s) gives (d, n, s).
    """
    return ch.unitaries.conj().transpose(0, 2, 1) @ psi


def ec_matrix_from_components(ch: ChannelSpec, comps: np.ndarray) -> np.ndarray:
    """D x D complementary output(s) from precomputed rotated components."""
    w = np.outer(ch.amplitudes, ch.amplitudes) / ch.l_norm**2
    if comps.ndim == 2:
        return w * (comps.conj() @ comps.T).T
    overlaps = np.einsum("jns,ins->ijs", comps.conj(), comps)
    return w[:, :, None] * overlaps


def apply_conjugate_channel(ch: ChannelSpec, psi: PureState) -> DensityMatrix:
    """Complementary-channel output: the D x D matrix with entries
    (l_i l_j / L^2) Tr(U_i^dagger |psi><psi| U_j).

    Rows/columns are indexed by which unitary acted; the (i, j) entry is the
    overlap of the i-th and j-th rotated copies of ``psi``.  Shares its
    nonzero spectrum with the channel output on the same pure state.
    """
    if psi.dim != ch.n:
        raise ValidationError(f"state dimension {psi.dim} does not match channel dimension {ch.n}")
    m = ec_matrix_from_components(ch, conjugate_components(ch, psi.amplitudes))
    return DensityMatrix(m)


def cross_output_matrix(ch: ChannelSpec, phi: PureState, psi0: PureState) -> np.ndarray:
    """Complementary channel applied to the rank-one cross term |phi><psi0|.

    Not a density matrix (not Hermitian in general); its trace norm measures
    how much the two inputs interfere through the channel.
    """
    if phi.dim != ch.n or psi0.dim != ch.n:
        raise ValidationError("state dimensions do not match channel dimension")
    a = conjugate_components(ch, psi0.amplitudes)  # a[j] = U_j^dagger psi0
    b = conjugate_components(ch, phi.amplitudes)  # b[i] = U_i^dagger phi
    w = np.outer(ch.amplitudes, ch.amplitudes) / ch.l_norm**2
    return w * (a.conj() @ b.T).T


# ---------------------------------------------------------------------------
# Tensor-pair output on the maximally entangled state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairOutputGram:
    """Gram matrix of the D^2 weighted pure components of the pair output.

    Entry ((i,j),(k,l)) is ``(l_i l_j l_k l_l / L^4) <phi_kl | phi_ij>`` where
    ``|phi_ij>`` applies ``U_i^dagger`` on one side and the conjugate of
    ``U_j^dagger`` on the other side of the maximally entangled state.  Its
    spectrum equals the nonzero spectrum of the full N^2 x N^2 output.
    """

    d: int
    gram: np.ndarray

    def __post_init__(self):
        g = np.ascontiguousarray(self.gram, dtype=np.complex128)
        dd = self.d * self.d
        if g.shape != (dd, dd):
            raise ValidationError(f"expected gram of shape {(dd, dd)}, got {g.shape}")
        asym = float(np.max(np.abs(g - g.conj().T)))
        if asym > 1e-10:
            raise ValidationError(f"gram is not Hermitian: max asymmetry {asym:.3e}")
        tr = float(np.trace(g).real)
        if abs(tr - 1.0) > 1e-9:
            raise ValidationError(f"gram trace {tr!r} deviates from 1")
        g = (g + g.conj().T) / 2.0
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    def spectrum(self) -> Spectrum:
        """Eigenvalues sorted descending (validates PSD up to noise)."""
        return Spectrum(np.linalg.eigvalsh(self.gram)[::-1])


def _pairwise_overlap_matrix(u: np.ndarray, budget: int = _GRAM_MEMORY_BUDGET_BYTES) -> np.ndarray:
    """S[(ij),(kl)] = Tr((U_k^dagger U_l)^dagger (U_i^dagger U_j))."""
    d, n, _ = u.shape
    uh = u.conj().transpose(0, 2, 1)
    if 16 * (d * d) * (n * n) <= budget:
        b = (uh[:, None] @ u[None, :]).reshape(d * d, n * n)
        return b.conj() @ b.T
    # Blocked fallback: recompute one row-block U_i^dagger U_j at a time.
    s = np.empty((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        bi = (uh[i] @ u).reshape(d, n * n)
        for k in range(i + 1):
            bk = bi if k == i else (uh[k] @ u).reshape(d, n * n)
            blk = bk.conj() @ bi.T  # [(l), (j)] for this (k, i)
            s[i * d : (i + 1) * d, k * d : (k + 1) * d] = blk.T
            if k != i:
                s[k * d : (k + 1) * d, i * d : (i + 1) * d] = blk.conj()
    return s


def pair_output_gram(ch: ChannelSpec) -> PairOutputGram:
    """Gram matrix of the pair output on the maximally entangled state.

    Uses ``<Psi|(A x B)|Psi> = Tr(A B^T)/N`` to express every overlap through
    N x N products, costing O(D^2 N^3 + D^4 N^2) instead of touching the
    N^2 x N^2 output.
    """
    s = _pairwise_overlap_matrix(ch.unitaries) / ch.n
    w = (np.outer(ch.amplitudes, ch.amplitudes) / ch.l_norm**2).reshape(-1)
    g = np.outer(w, w) * s.T
    return PairOutputGram(ch.d, g)


def pair_output_direct(ch: ChannelSpec) -> np.ndarray:
    """Brute-force N^2 x N^2 pair output density matrix (small N only)."""
    psi = maximally_entangled(ch.n).amplitudes
    p = ch.probabilities
    out = np.zeros((ch.n**2, ch.n**2), dtype=np.complex128)
    for i in range(ch.d):
        for j in range(ch.d):
            op = np.kron(ch.unitaries[i].conj().T, ch.unitaries[j].T)
            v = op @ psi
            out += (p[i] * p[j]) * np.outer(v, v.conj())
    return out


def me_output_entropy(ch: ChannelSpec) -> float:
    """Exact entropy of the pair output on the maximally entangled state."""
    return von_neumann_entropy(pair_output_gram(ch).spectrum())


# ---------------------------------------------------------------------------
# Holevo quantity
# ---------------------------------------------------------------------------


def holevo_quantity(
    ch: ChannelSpec,
    ensemble: list[tuple[float, DensityMatrix]],
    conjugated: bool = False,
) -> float:
    """H(sum_i p_i out_i) - sum_i p_i H(out_i) for a signal ensemble."""
    if not ensemble:
        raise ValidationError("ensemble must contain at least one state")
    probs = np.array([p for p, _ in ensemble], dtype=np.float64)
    if np.any(probs < 0) or abs(float(probs.sum()) - 1.0) > 1e-12:
        raise ValidationError(f"ensemble probabilities sum to {probs.sum()!r}, not 1")
    avg = np.zeros((ch.n, ch.n), dtype=np.complex128)
    mean_h = 0.0
    for p, rho in ensemble:
        out = apply(ch, rho, conjugated=conjugated)
        avg += p * out.entries
        mean_h += p * entropy_from_eigenvalues(np.linalg.eigvalsh(out.entries))
    h_avg = entropy_from_eigenvalues(np.linalg.eigvalsh(hermitize(avg)))
    return h_avg - mean_h


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def channel_to_dict(ch: ChannelSpec, include_matrices: bool = True) -> dict:
    """JSON-ready channel description.

    Without matrices the channel must carry provenance, from which loading
    regenerates it bit-identically.  Matrices are stored row-major as
    [re, im] pairs, one flat list per unitary.
    """
    if ch.provenance is None and not include_matrices:
        raise ValidationError("channel without provenance must be stored with matrices")
    doc = {
        "format": CHANNEL_FORMAT,
        "version": CHANNEL_FORMAT_VERSION,
        "d": ch.d,
        "n": ch.n,
        "seed": ch.provenance.master_seed if ch.provenance else None,
        "stream_id": ch.provenance.stream_id if ch.provenance else None,
        "generator_id": ch.provenance.generator_id if ch.provenance else GENERATOR_ID,
        "orthogonal": bool(ch.provenance.orthogonal) if ch.provenance else False,
        "uniform_p": bool(ch.provenance.uniform_p) if ch.provenance else False,
        "matrices": None,
    }
    if include_matrices:
        doc["matrices"] = {
            "unitaries": [
                [[float(z.real), float(z.imag)] for z in u.reshape(-1)] for u in ch.unitaries
            ],
            "amplitudes": [float(x) for x in ch.amplitudes],
        }
    return doc


def channel_from_dict(doc: dict) -> ChannelSpec:
    """Rebuild a channel from its file form, verifying unitarity on load."""
    if doc.get("format") != CHANNEL_FORMAT:
        raise ValidationError(f"not a channel document: format={doc.get('format')!r}")
    if doc.get("version") != CHANNEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported channel format version {doc.get('version')!r}")
    d, n = int(doc["d"]), int(doc["n"])
    mats = doc.get("matrices")
    orthogonal = bool(doc.get("orthogonal", False))
    uniform_p = bool(doc.get("uniform_p", False))
    if mats is None:
        if doc.get("generator_id") != GENERATOR_ID:
            raise ValidationError(
                f"cannot regenerate: file generator {doc.get('generator_id')!r} != {GENERATOR_ID!r}"
            )
        if doc.get("seed") is None or doc.get("stream_id") is None:
            raise ValidationError("matrix-free channel file lacks seed/stream_id")
        rng = SeededStream(int(doc["seed"]), int(doc["stream_id"]))
        return make_channel(n, d, rng, orthogonal=orthogonal, uniform_p=uniform_p)
    raw = mats["unitaries"]
    if len(raw) != d:
        raise ValidationError(f"expected {d} unitaries, found {len(raw)}")
    u = np.empty((d, n, n), dtype=np.complex128)
    for i, flat in enumerate(raw):
        arr = np.asarray(flat, dtype=np.float64)
        if arr.shape != (n * n, 2):
            raise ValidationError(f"unitary {i} has wrong entry count {arr.shape}")
        u[i] = (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)
    l = np.asarray(mats["amplitudes"], dtype=np.float64)
    if orthogonal and float(np.max(np.abs(u.imag))) > 0.0:
        raise ValidationError("orthogonal channel file contains non-real matrices")
    prov = None
    if doc.get("seed") is not None and doc.get("stream_id") is not None:
        prov = ChannelProvenance(
            int(doc["seed"]), int(doc["stream_id"]), orthogonal, uniform_p, doc["generator_id"]
        )
    return ChannelSpec(n, d, u, l, provenance=prov)  # ChannelSpec re-verifies unitarity


def save_channel(ch: ChannelSpec, path, include_matrices: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(channel_to_dict(ch, include_matrices), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_channel(path) -> ChannelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"channel file is not valid JSON: {exc}") from exc
    return channel_from_dict(doc)
