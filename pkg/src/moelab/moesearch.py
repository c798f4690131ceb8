"""Multi-start estimation of the minimum output entropy.

The objective is the entropy of the complementary-channel output, a D x D
matrix, which shares its nonzero spectrum with the full channel output on
pure inputs but is far cheaper to eigendecompose.  Minimization is projected
gradient descent on the unit sphere of C^N (treated as 2N real coordinates)
with Armijo backtracking, run from random starts plus the analytic seeds:
eigenvectors of U_a U_b^dagger for the two heaviest branches (a, b), each of
which forces those two output components to coincide.  The best value found
is an upper bound on the true minimum, never a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import merged_entropy_bound
from .channels import ChannelSpec, conjugate_components, ec_matrix_from_components, me_output_entropy
from .matcore import PureState, ValidationError, entropy_from_eigenvalues
from .randgen import SeededStream, random_pure_state

GRAD_EIG_FLOOR = 1e-14  # floor inside ln(rho) only; keeps gradients bounded


class EntropyGradient(NamedTuple):
    """Objective value, unconstrained gradient, and a conditioning flag."""

    value: float
    gradient: np.ndarray
    near_singular: bool


@dataclass(frozen=True)
class MoeConfig:
    """Optimizer configuration.

    ``starts`` random initializations are drawn from the stream; eigenvector
    seeds (lowest seed entropy first) fill the remaining budget up to
    ``max_total_starts``.
    """

    starts: int = 32
    max_iters: int = 2000
    grad_tol: float = 1e-8
    max_total_starts: int = 64
    use_eigenvector_seeds: bool = True
    init_step: float = 1.0
    armijo: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-14
    conjugate_starts: bool = False
    record_traces: bool = False

    def __post_init__(self):
        if self.starts < 1:
            raise ValidationError(f"need at least one start, got {self.starts}")
        if self.max_iters < 1 or self.grad_tol <= 0:
            raise ValidationError("max_iters must be >= 1 and grad_tol > 0")


@dataclass(frozen=True)
class MoeResult:
    """Outcome of a multi-start minimization (an upper bound on the minimum)."""

    entropy_estimate: float
    argmin_state: PureState
    starts: int
    iterations_per_start: list[int]
    converged_flags: list[bool]
    seed_provenance: list[str]
    final_entropies: list[float]
    traces: list[np.ndarray] | None = None


def output_entropy(ch: ChannelSpec, psi) -> float:
    """Entropy of the complementary-channel output at one state."""
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=np.complex128)
    m = ec_matrix_from_components(ch, conjugate_components(ch, v))
    return entropy_from_eigenvalues(np.linalg.eigvalsh(m))


def output_entropy_and_gradient(ch: ChannelSpec, psi) -> EntropyGradient:
    """Objective value and its unconstrained real gradient at ``psi``.

    The gradient is with respect to the 2N real coordinates of the complex
    amplitude vector, packed as a complex vector (real parts differentiate
    the real coordinates, imaginary parts the imaginary ones); callers
    project it onto the sphere tangent.  It is the adjoint of the
    complementary channel applied to -(ln out + 1), so central finite
    differences of the raw (unnormalized) objective reproduce it.  Output
    eigenvalues below 1e-14 are floored inside the logarithm only and flag
    the point as near-singular.
    """
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=np.complex128)
    if v.shape != (ch.n,):
        raise ValidationError(f"state shape {v.shape} does not match channel dimension {ch.n}")
    comps = conjugate_components(ch, v)  # comps[i] = U_i^dagger psi
    m = ec_matrix_from_components(ch, comps)
    w, vecs = np.linalg.eigh(m)
    near_singular = bool(w.min() < GRAD_EIG_FLOOR)
    value = entropy_from_eigenvalues(w)
    wf = np.maximum(w, GRAD_EIG_FLOOR)
    a = -((vecs * (np.log(wf) + 1.0)) @ vecs.conj().T)  # -(ln out + I)
    coef = ch.amplitudes / ch.l_norm
    b = (np.outer(coef, coef) * a) @ comps  # b[j] = sum_i w_ij A[j,i] comps[i]
    kpsi = np.einsum("jab,jb->a", ch.unitaries, b)
    return EntropyGradient(value, 2.0 * kpsi, near_singular)


def batch_output_entropies(ch: ChannelSpec, states: np.ndarray) -> np.ndarray:
    """Objective values for a stack of states, shape (n, s) -> (s,)."""
    m = ec_matrix_from_components(ch, conjugate_components(ch, states))
    w = np.linalg.eigvalsh(m.transpose(2, 0, 1))
    wc = np.where(w < 1e-12, 0.0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(wc > 0.0, wc * np.log(wc), 0.0)
    return np.maximum(-terms.sum(axis=1), 0.0)


def eigenvector_seeds(ch: ChannelSpec) -> list[PureState]:
    """Eigenvectors of U_a U_b^dagger for the two heaviest branches (a, b).

    Any such eigenvector makes the a-th and b-th rotated output components
    proportional, so its output entropy is at most the merged-distribution
    bound.  Amplitude ties are broken toward the lowest index.  Empty for
    single-branch channels.
    """
    if ch.d < 2:
        return []
    order = np.argsort(-ch.amplitudes, kind="stable")
    a, b = int(order[0]), int(order[1])
    pair = ch.unitaries[a] @ ch.unitaries[b].conj().T
    _, vecs = np.linalg.eig(pair)
    seeds = []
    for k in range(ch.n):
        v = vecs[:, k]
        seeds.append(PureState(v / np.linalg.norm(v)))
    return seeds


def heaviest_pair(ch: ChannelSpec) -> tuple[int, int]:
    """Indices of the two largest amplitudes (ties toward the lowest index)."""
    if ch.d < 2:
        raise ValidationError("need at least two branches")
    order = np.argsort(-ch.amplitudes, kind="stable")
    return int(order[0]), int(order[1])


def _phase_gauge(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    piv = v[idx]
    if abs(piv) > 0:
        v = v * (piv.conj() / abs(piv))
    return v


def _descend(ch: ChannelSpec, v0: np.ndarray, config: MoeConfig):
    """Projected gradient descent from one start; objective never increases.

    The trial step uses a Barzilai-Borwein estimate from the last accepted
    move, backstopped by Armijo backtracking, so each accepted iterate
    strictly decreases the objective.
    """
    x = v0 / np.linalg.norm(v0)
    f, g, _ = output_entropy_and_gradient(ch, x)
    trace = [f] if config.record_traces else None
    step = config.init_step
    prev_x = prev_gt = None
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        gt = g - np.real(np.vdot(x, g)) * x  # tangent projection on the real sphere
        gn = float(np.linalg.norm(gt))
        if gn <= config.grad_tol:
            converged = True
            iters -= 1
            break
        if prev_x is not None:
            s = x - prev_x
            yv = gt - prev_gt
            denom = float(np.real(np.vdot(s, yv)))
            if denom > 1e-30:
                step = min(max(float(np.real(np.vdot(s, s))) / denom, config.min_step), 1e3)
        alpha = step
        accepted = False
        while alpha >= config.min_step:
            xn = x - alpha * gt
            xn = xn / np.linalg.norm(xn)
            fn = output_entropy(ch, xn)
            if fn <= f - config.armijo * alpha * gn * gn:
                accepted = True
                break
            alpha *= config.shrink
        if not accepted:
            break  # stalled at numerical floor; f unchanged
        prev_x, prev_gt = x, gt
        x, f = xn, fn
        if trace is not None:
            trace.append(f)
        f2, g, _ = output_entropy_and_gradient(ch, x)
        f = min(f, f2)  # same point; guard roundoff between the two paths
    else:
        iters = config.max_iters
    return x, f, iters, converged, (np.asarray(trace) if trace is not None else None)


def minimize_output_entropy(
    ch: ChannelSpec,
    config: MoeConfig | None = None,
    rng: SeededStream | None = None,
) -> MoeResult:
    """Best output entropy over random starts plus eigenvector seeds.

    Each random start draws from its own child stream, so results do not
    depend on evaluation order.  The returned estimate is the minimum over
    starts and upper-bounds the true minimum output entropy.
    """
    config = config or MoeConfig()
    rng = rng or SeededStream(0)
    starts: list[tuple[str, np.ndarray]] = []
    for i in range(config.starts):
        v = random_pure_state(ch.n, rng.child(i)).amplitudes
        if config.conjugate_starts:
            v = v.conj()
        starts.append((f"random({i})", v))
    if config.use_eigenvector_seeds and ch.d >= 2:
        seeds = eigenvector_seeds(ch)
        budget = max(config.max_total_starts - len(starts), 0)
        if budget and seeds:
            a, b = heaviest_pair(ch)
            mat = np.stack([s.amplitudes for s in seeds], axis=1)
            ent = batch_output_entropies(ch, mat)
            for k in np.argsort(ent, kind="stable")[:budget]:
                starts.append((f"eigvec({a},{b},{int(k)})", seeds[int(k)].amplitudes))
    best = None
    iterations, flags, tags, finals, traces = [], [], [], [], []
    for idx, (tag, v0) in enumerate(starts):
        x, f, iters, conv, trace = _descend(ch, v0, config)
        iterations.append(iters)
        flags.append(conv)
        tags.append(tag)
        finals.append(f)
        if config.record_traces:
            traces.append(trace)
        if best is None or f < best[0]:
            best = (f, idx, x)
    f_best, _, x_best = best
    return MoeResult(
        entropy_estimate=float(f_best),
        argmin_state=PureState(_phase_gauge(x_best)),
        starts=len(starts),
        iterations_per_start=iterations,
        converged_flags=flags,
        seed_provenance=tags,
        final_entropies=finals,
        traces=traces if config.record_traces else None,
    )


@dataclass(frozen=True)
class GapResult:
    """Entangled-input entropy vs twice the product-input estimate."""

    h_me: float
    h_min_estimate: float
    gap: float
    moe: MoeResult = field(repr=False)


def entropy_gap_experiment(
    ch: ChannelSpec,
    config: MoeConfig | None = None,
    rng: SeededStream | None = None,
) -> GapResult:
    """Compare the exact entangled-state output entropy against twice the
    estimated minimum output entropy.

    ``gap = 2 h_min_estimate - h_me``; a positive gap points in the direction
    of the entangled-input advantage, but since h_min_estimate is only an
    upper bound this is reported, never asserted.
    """
    h_me = me_output_entropy(ch)
    moe = minimize_output_entropy(ch, config, rng)
    gap = 2.0 * moe.entropy_estimate - h_me
    return GapResult(h_me=h_me, h_min_estimate=moe.entropy_estimate, gap=gap, moe=moe)


def seed_entropy_bound_check(ch: ChannelSpec) -> tuple[float, float]:
    """(best seed entropy, merged-distribution bound) for one channel."""
    seeds = eigenvector_seeds(ch)
    if not seeds:
        raise ValidationError("channel has no eigenvector seeds (d < 2)")
    mat = np.stack([s.amplitudes for s in seeds], axis=1)
    ent = batch_output_entropies(ch, mat)
    return float(ent.min()), merged_entropy_bound(ch.probabilities)
