"""Monte Carlo experiments for the probabilistic structure of the channels.

Four experiment families: eigenvalue statistics of random bipartite reduced
states against the exact quadrature oracle, the equivalence of those spectra
with complementary-channel outputs over fresh random channels, the
close-to-maximally-mixed band probabilities, and decomposition statistics of
random inputs around a reference state.  All loops are vectorized in fixed
chunks fed from derived streams, so results are reproducible and independent
of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .channels import (
    ChannelSpec,
    conjugate_components,
    ec_matrix_from_components,
    make_channel,
)
from .matcore import PureState, Spectrum, ValidationError
from .randgen import BipartiteState, SeededStream, random_pure_state

_CHUNK = 4096  # fixed so draws are chunk-layout independent of sample count


@dataclass(frozen=True)
class McConfig:
    """Shared Monte Carlo configuration.

    ``c_mm`` scales the close-to-maximally-mixed band half-width
    ``c_mm * sqrt(ln n / (n - d))``.
    """

    d: int
    n: int
    samples: int
    c_mm: float = 2.0
    master_seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError(f"need samples >= 1, got {self.samples}")
        if self.c_mm <= 0:
            raise ValidationError(f"need c_mm > 0, got {self.c_mm}")

    def require_density_regime(self, strict: bool = True):
        # Purity statistics remain well defined at n = d (density exponent 0);
        # band/envelope experiments need n > d strictly.
        if self.n < self.d or (strict and self.n == self.d):
            op = ">" if strict else ">="
            raise ValidationError(f"experiment needs n {op} d, got ({self.d}, {self.n})")

    def stream(self) -> SeededStream:
        return SeededStream(self.master_seed)


@dataclass(frozen=True)
class McSummary:
    """Monte Carlo estimates with standard errors and pass/fail checks.

    ``estimates``/``stderrs``/``references`` share keys; ``checks`` holds the
    4-sigma (or stated-threshold) verdicts computed from those numbers; bulky
    per-sample material goes to ``extra``.
    """

    experiment_id: str
    samples: int
    estimates: dict = field(default_factory=dict)
    stderrs: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in self.estimates.items():
            if key.endswith("_prob") or key.startswith(("p_", "q_")):
                if not -1e-12 <= val <= 1.0 + 1e-12:
                    raise ValidationError(f"probability estimate {key}={val!r} outside [0, 1]")

    def to_record(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "samples": self.samples,
            "estimates": dict(self.estimates),
            "stderrs": dict(self.stderrs),
            "references": dict(self.references),
            "checks": dict(self.checks),
            "extra": dict(self.extra),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class DecompositionSample:
    """One random input decomposed against the reference state.

    ``orth_amplitude`` is the weight x on the orthogonal complement,
    ``ref_weight`` is y = 1 - x^2, and ``overlap_phase`` the unit phase of
    the retained overlap.  ``output_spectrum`` holds the complementary-output
    eigenvalues of the sample, ``reference_spectrum`` those of the reference.
    """

    orth_amplitude: float
    ref_weight: float
    overlap_phase: complex
    output_spectrum: Spectrum
    reference_spectrum: Spectrum
    deviation: float
    cross_trace_norm: float


def binomial_stderr(p: float, n: int) -> float:
    """sqrt(p(1-p)/n)."""
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


# ---------------------------------------------------------------------------
# Exact-density quadrature oracle (d = 2)
# ---------------------------------------------------------------------------


def max_eigenvalue_density_d2(n: int):
    """Unnormalized density of the larger reduced eigenvalue at d = 2.

    The exact joint law with the simplex constraint eliminated leaves
    ``(2p - 1)^2 (p (1 - p))^(n-2)`` on [1/2, 1].
    """
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")

    def dens(p):
        p = np.asarray(p, dtype=np.float64)
        return (2.0 * p - 1.0) ** 2 * (p * (1.0 - p)) ** (n - 2)

    return dens


def max_eigenvalue_cdf_d2(n: int, grid_points: int = 4097):
    """Numerically integrated CDF of the larger reduced eigenvalue at d = 2."""
    dens = max_eigenvalue_density_d2(n)
    grid = np.linspace(0.5, 1.0, grid_points)
    cum = integrate.cumulative_trapezoid(dens(grid), grid, initial=0.0)
    cum /= cum[-1]

    def cdf(p):
        return np.interp(np.asarray(p, dtype=np.float64), grid, cum, left=0.0, right=1.0)

    return cdf


def mean_purity_quadrature_d2(n: int) -> float:
    """Mean purity of the d = 2 reduced state by adaptive quadrature.

    Independent numerical route to the closed form (n + d)/(n d + 1).
    """
    dens = max_eigenvalue_density_d2(n)
    norm, _ = integrate.quad(dens, 0.5, 1.0)
    val, _ = integrate.quad(lambda p: (p * p + (1.0 - p) ** 2) * dens(p), 0.5, 1.0)
    return val / norm


def mean_purity_reference(d: int, n: int) -> float:
    """(n + d)/(n d + 1); agrees with the d = 2 quadrature oracle."""
    return (n + d) / (n * d + 1.0)


# ---------------------------------------------------------------------------
# Reduced spectra of random bipartite states
# ---------------------------------------------------------------------------


def reduced_spectrum(s: BipartiteState) -> Spectrum:
    """Eigenvalues of the environment-side reduced density matrix."""
    a = s.as_matrix()
    return Spectrum(np.linalg.eigvalsh(a @ a.conj().T)[::-1])


def _gaussian_chunks(rng: SeededStream, total: int, shape_tail: tuple):
    """Yield complex Gaussian chunks of fixed size for `total` samples."""
    g = rng.generator
    done = 0
    while done < total:
        b = min(_CHUNK, total - done)
        yield (g.standard_normal((b, *shape_tail)) + 1j * g.standard_normal((b, *shape_tail)))
        done += b


def purity_statistics(cfg: McConfig) -> McSummary:
    """Sample reduced spectra and compare purity with the quadrature oracle.

    Also records, at d = 2, the one-sample KS distance between the empirical
    larger-eigenvalue CDF and the numerically integrated exact density.
    """
    cfg.require_density_regime(strict=False)
    rng = cfg.stream().child(0)
    purities = np.empty(cfg.samples)
    pos = 0
    for z in _gaussian_chunks(rng, cfg.samples, (cfg.d, cfg.n)):
        nrm2 = np.sum(np.abs(z) ** 2, axis=(1, 2))
        gram = z @ z.conj().transpose(0, 2, 1)
        purities[pos : pos + z.shape[0]] = np.sum(np.abs(gram) ** 2, axis=(1, 2)) / nrm2**2
        pos += z.shape[0]
    mean = float(purities.mean())
    stderr = float(purities.std(ddof=1) / np.sqrt(cfg.samples)) if cfg.samples > 1 else 0.0
    ref = mean_purity_reference(cfg.d, cfg.n)
    summary_kwargs = dict(
        estimates={"purity_mean": mean},
        stderrs={"purity_mean": stderr},
        references={"purity_mean": ref},
        checks={"purity_within_4sigma": bool(abs(mean - ref) <= 4.0 * stderr) if stderr else mean == ref},
        metadata={"d": cfg.d, "n": cfg.n, "master_seed": cfg.master_seed},
    )
    if cfg.d == 2:
        p_max = 0.5 * (1.0 + np.sqrt(np.clip(2.0 * purities - 1.0, 0.0, None)))
        ks = float(stats.ks_1samp(p_max, max_eigenvalue_cdf_d2(cfg.n)).statistic)
        summary_kwargs["estimates"]["ks_max_eigenvalue"] = ks
    return McSummary("purity-spectra", cfg.samples, **summary_kwargs)


# ---------------------------------------------------------------------------
# Channel outputs vs bipartite reductions
# ---------------------------------------------------------------------------


def _batch_channel_spectra(d: int, n: int, count: int, rng: SeededStream) -> np.ndarray:
    """Spectra of complementary outputs for `count` fresh (channel, state) draws."""
    g = rng.generator
    out = np.empty((count, d))
    pos = 0
    while pos < count:
        b = min(_CHUNK // 4 + 1, count - pos)
        gin = (g.standard_normal((b * d, n, n)) + 1j * g.standard_normal((b * d, n, n))) / np.sqrt(2)
        q, r = np.linalg.qr(gin)
        diag = np.diagonal(r, axis1=-2, axis2=-1)
        absd = np.abs(diag)
        u = (q * (np.conj(diag) / np.where(absd > 0, absd, 1.0))[..., None, :]).reshape(b, d, n, n)
        lz = (g.standard_normal((b, d, n)) + 1j * g.standard_normal((b, d, n))) / np.sqrt(2 * n * d)
        l = np.linalg.norm(lz, axis=2)
        chi = g.standard_normal((b, n)) + 1j * g.standard_normal((b, n))
        chi /= np.linalg.norm(chi, axis=1, keepdims=True)
        comps = np.einsum("siab,sa->sib", u.conj(), chi)
        overlaps = np.einsum("sjb,sib->sij", comps.conj(), comps)
        w = l[:, :, None] * l[:, None, :] / np.sum(l * l, axis=1)[:, None, None]
        out[pos : pos + b] = np.linalg.eigvalsh(w * overlaps)
        pos += b
    return out


def _batch_bipartite_spectra(d: int, n: int, count: int, rng: SeededStream) -> np.ndarray:
    out = np.empty((count, d))
    pos = 0
    for z in _gaussian_chunks(rng, count, (d, n)):
        nrm2 = np.sum(np.abs(z) ** 2, axis=(1, 2))
        gram = z @ z.conj().transpose(0, 2, 1) / nrm2[:, None, None]
        out[pos : pos + z.shape[0]] = np.linalg.eigvalsh(gram)
        pos += z.shape[0]
    return out


def channel_vs_bipartite_equivalence(cfg: McConfig, ks_threshold: float = 0.01) -> McSummary:
    """Compare complementary-output spectra (fresh channel per sample) with
    reduced spectra of random bipartite states.

    The mean eigenvalue is 1/d in both ensembles by trace normalization; the
    second and third spectral moments are compared at 4 sigma and the pooled
    eigenvalues by a two-sample KS distance.
    """
    cfg.require_density_regime()
    base = cfg.stream()
    spec_ch = _batch_channel_spectra(cfg.d, cfg.n, cfg.samples, base.child(1))
    spec_bp = _batch_bipartite_spectra(cfg.d, cfg.n, cfg.samples, base.child(2))
    estimates, stderrs, references, checks = {}, {}, {}, {}
    for k in (1, 2, 3):
        a = np.sum(spec_ch**k, axis=1)
        b = np.sum(spec_bp**k, axis=1)
        ma, mb = float(a.mean()), float(b.mean())
        se = float(np.sqrt(a.var(ddof=1) / cfg.samples + b.var(ddof=1) / cfg.samples))
        estimates[f"moment{k}_channel"] = ma
        estimates[f"moment{k}_bipartite"] = mb
        stderrs[f"moment{k}_diff"] = se
        if k == 1:
            checks["moment1_exact"] = bool(abs(ma - 1.0) < 1e-9 and abs(mb - 1.0) < 1e-9)
        else:
            checks[f"moment{k}_within_4sigma"] = bool(abs(ma - mb) <= 4.0 * se if se else ma == mb)
    ks = float(stats.ks_2samp(spec_ch.reshape(-1), spec_bp.reshape(-1)).statistic)
    estimates["ks_two_sample"] = ks
    references["ks_two_sample"] = ks_threshold
    checks["ks_within_threshold"] = bool(ks <= ks_threshold)
    return McSummary(
        "channel-vs-bipartite",
        cfg.samples,
        estimates=estimates,
        stderrs=stderrs,
        references=references,
        checks=checks,
        metadata={"d": cfg.d, "n": cfg.n, "master_seed": cfg.master_seed, "ks_threshold": ks_threshold},
    )


# ---------------------------------------------------------------------------
# Close-to-maximally-mixed probabilities
# ---------------------------------------------------------------------------


def mixed_band_halfwidth(d: int, n: int, c_mm: float) -> float:
    """c_mm sqrt(ln n / (n - d)): allowed eigenvalue deviation from 1/d."""
    if n <= d:
        raise ValidationError(f"band requires n > d, got ({d}, {n})")
    return float(c_mm * np.sqrt(np.log(n) / (n - d)))


def mixed_probability(cfg: McConfig, channels: int, states_per_channel: int) -> McSummary:
    """Per-channel fraction of inputs whose output spectrum stays in the band.

    For each of ``channels`` fresh channels, estimates the probability that a
    random input yields a complementary output with every eigenvalue within
    the band around 1/d; ``q_hat`` is the fraction of channels where that
    estimate falls below 1/2.  No analytic reference exists at fixed (d, n),
    so this is a report, not a pass/fail check.
    """
    if channels < 1 or states_per_channel < 1:
        raise ValidationError("need at least one channel and one state per channel")
    if cfg.d == 1:
        p_per_channel = np.ones(channels)
        band = None
    else:
        cfg.require_density_regime()
        band = mixed_band_halfwidth(cfg.d, cfg.n, cfg.c_mm)
        base = cfg.stream()
        p_per_channel = np.empty(channels)
        for c in range(channels):
            sub = base.child(c)
            ch = make_channel(cfg.n, cfg.d, sub)
            g = sub.generator
            chi = g.standard_normal((states_per_channel, cfg.n)) + 1j * g.standard_normal(
                (states_per_channel, cfg.n)
            )
            chi /= np.linalg.norm(chi, axis=1, keepdims=True)
            m = ec_matrix_from_components(ch, conjugate_components(ch, chi.T))
            w = np.linalg.eigvalsh(m.transpose(2, 0, 1))
            in_band = np.max(np.abs(w - 1.0 / cfg.d), axis=1) <= band
            p_per_channel[c] = float(in_band.mean())
    q_hat = float(np.mean(p_per_channel < 0.5))
    p_mean = float(p_per_channel.mean())
    return McSummary(
        "mixed-prob",
        channels * states_per_channel,
        estimates={"p_in_band_mean": p_mean, "q_hat": q_hat},
        stderrs={
            "p_in_band_per_channel": binomial_stderr(p_mean, states_per_channel),
            "q_hat": binomial_stderr(q_hat, channels),
        },
        extra={"p_in_band_per_channel": [float(x) for x in p_per_channel]},
        metadata={
            "d": cfg.d,
            "n": cfg.n,
            "c_mm": cfg.c_mm,
            "band_halfwidth": band,
            "channels": channels,
            "states_per_channel": states_per_channel,
            "master_seed": cfg.master_seed,
        },
    )


# ---------------------------------------------------------------------------
# Overlap law and decomposition statistics
# ---------------------------------------------------------------------------


def overlap_probability(n: int, samples: int, rng: SeededStream) -> McSummary:
    """Estimate the chance a random state keeps at least half its weight on a
    fixed reference, i.e. that the orthogonal mass x^2 is at most 1/2.

    The exact value is 2^-(n-1); the summary records whether the estimate
    lands within 4 binomial standard errors of it.
    """
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if samples < 1:
        raise ValidationError(f"need samples >= 1, got {samples}")
    psi0 = random_pure_state(n, rng.child(0)).amplitudes
    draw = rng.child(1)
    hits = 0
    for z in _gaussian_chunks(draw, samples, (n,)):
        overlap2 = np.abs(z @ psi0.conj()) ** 2 / np.sum(np.abs(z) ** 2, axis=1)
        hits += int(np.count_nonzero(overlap2 >= 0.5))
    p_hat = hits / samples
    ref = 2.0 ** (-(n - 1))
    se = binomial_stderr(ref, samples)
    return McSummary(
        "overlap",
        samples,
        estimates={"overlap_half_prob": p_hat},
        stderrs={"overlap_half_prob": se},
        references={"overlap_half_prob": ref},
        checks={"within_4sigma": bool(abs(p_hat - ref) <= 4.0 * se)},
        metadata={"n": n},
    )


def decomposition_statistics(
    ch: ChannelSpec,
    psi0: PureState,
    samples: int,
    rng: SeededStream,
    keep_samples: bool = True,
) -> tuple[list[DecompositionSample], McSummary]:
    """Decompose random inputs against ``psi0`` and track how the output
    spectrum interpolates between the reference spectrum and maximal mixing.

    Inputs are built as ``z sqrt(y) psi0 + sqrt(1-y) phi`` with the retained
    weight y drawn uniformly on [0, 1) and phi a random state orthogonal to
    psi0.  Uniform inputs put only 2^-(n-1) mass on y >= 1/2, so stratifying
    y is what makes the conditioned statistics measurable; the per-sample
    deviation is max_i |q_i - (y p_i + (1-y)/d)| over descending spectra, and
    the cross-term trace norm tracks the interference between psi0 and phi
    through the channel.
    """
    if psi0.dim != ch.n:
        raise ValidationError("reference state dimension does not match channel")
    if samples < 1:
        raise ValidationError(f"need samples >= 1, got {samples}")
    ref = psi0.amplitudes
    p_ref = np.sort(
        np.linalg.eigvalsh(ec_matrix_from_components(ch, conjugate_components(ch, ref)))
    )[::-1]
    ref_spectrum = Spectrum(p_ref)
    g = rng.child(0).generator
    y = g.uniform(0.0, 1.0, size=samples)
    z = np.exp(2j * np.pi * g.uniform(0.0, 1.0, size=samples))
    theta = g.standard_normal((samples, ch.n)) + 1j * g.standard_normal((samples, ch.n))
    theta -= (theta @ ref.conj())[:, None] * ref[None, :]
    phi = theta / np.linalg.norm(theta, axis=1, keepdims=True)
    chi = (z * np.sqrt(y))[:, None] * ref[None, :] + np.sqrt(1.0 - y)[:, None] * phi
    comps = conjugate_components(ch, chi.T)
    q = np.linalg.eigvalsh(ec_matrix_from_components(ch, comps).transpose(2, 0, 1))
    q = np.sort(q, axis=1)[:, ::-1]
    mix = y[:, None] * p_ref[None, :] + (1.0 - y)[:, None] / ch.d
    deviations = np.max(np.abs(q - mix), axis=1)
    # cross term: complementary channel applied to |phi><psi0|
    a = conjugate_components(ch, ref)
    b = conjugate_components(ch, phi.T)
    w = np.outer(ch.amplitudes, ch.amplitudes) / ch.l_norm**2
    cross = w[:, :, None] * np.einsum("jn,ins->ijs", a.conj(), b)
    cross_tn = np.linalg.svd(cross.transpose(2, 0, 1), compute_uv=False).sum(axis=1)
    records = []
    if keep_samples:
        for s in range(samples):
            records.append(
                DecompositionSample(
                    orth_amplitude=float(np.sqrt(1.0 - y[s])),
                    ref_weight=float(y[s]),
                    overlap_phase=complex(z[s]),
                    output_spectrum=Spectrum(q[s]),
                    reference_spectrum=ref_spectrum,
                    deviation=float(deviations[s]),
                    cross_trace_norm=float(cross_tn[s]),
                )
            )
    upper = y >= 0.5
    dev_upper = deviations[upper]
    summary = McSummary(
        "decomposition",
        samples,
        estimates={
            "deviation_median_y_half": float(np.median(dev_upper)) if dev_upper.size else float("nan"),
            "deviation_mean_y_half": float(dev_upper.mean()) if dev_upper.size else float("nan"),
            "deviation_median_all": float(np.median(deviations)),
            "cross_trace_norm_mean": float(cross_tn.mean()),
            "cross_trace_norm_q95": float(np.quantile(cross_tn, 0.95)),
        },
        stderrs={},
        extra={
            "ref_spectrum": [float(x) for x in p_ref],
            "samples_y_half": int(upper.sum()),
        },
        metadata={"d": ch.d, "n": ch.n},
    )
    return records, summary
