"""Random-unitary channels: exact output entropies, analytic bounds, and
seeded Monte Carlo experiments.

The library builds channels that mix a small set of Haar-random unitary
conjugations, evaluates everything about them that is exactly computable
(entangled-state output entropy through a low-rank Gram matrix,
complementary-channel spectra, closed-form bounds), estimates the minimum
output entropy by multi-start projected gradient descent, and verifies the
measurable distributional facts by reproducible Monte Carlo.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    entropy_deficit_max,
    fannes_slack,
    me_bound_channel,
    me_bound_universal,
    merged_entropy_bound,
    product_envelope_bound,
    quadratic_entropy_deficit_bound,
    spectral_envelope,
)
from .channels import (
    ChannelSpec,
    PairOutputGram,
    apply,
    apply_conjugate_channel,
    holevo_quantity,
    load_channel,
    make_channel,
    me_output_entropy,
    pair_output_direct,
    pair_output_gram,
    save_channel,
)
from .matcore import (
    DensityMatrix,
    PureState,
    Spectrum,
    ValidationError,
    hermitian_eigenvalues,
    maximally_entangled,
    trace_norm,
    von_neumann_entropy,
)
from .mclab import (
    DecompositionSample,
    McConfig,
    McSummary,
    channel_vs_bipartite_equivalence,
    decomposition_statistics,
    mixed_probability,
    overlap_probability,
    purity_statistics,
    reduced_spectrum,
)
from .moesearch import (
    MoeConfig,
    MoeResult,
    eigenvector_seeds,
    entropy_gap_experiment,
    minimize_output_entropy,
    output_entropy,
    output_entropy_and_gradient,
)
from .randgen import (
    GENERATOR_ID,
    BipartiteState,
    SeededStream,
    haar_orthogonal,
    haar_unitary,
    random_bipartite_state,
    random_pure_state,
    sample_amplitudes,
)

__all__ = [
    "__version__",
    "BipartiteState",
    "BoundReport",
    "ChannelSpec",
    "DecompositionSample",
    "DensityMatrix",
    "GENERATOR_ID",
    "McConfig",
    "McSummary",
    "MoeConfig",
    "MoeResult",
    "PairOutputGram",
    "PureState",
    "SeededStream",
    "Spectrum",
    "ValidationError",
    "apply",
    "apply_conjugate_channel",
    "channel_vs_bipartite_equivalence",
    "decomposition_statistics",
    "eigenvector_seeds",
    "entropy_deficit_max",
    "entropy_gap_experiment",
    "fannes_slack",
    "haar_orthogonal",
    "haar_unitary",
    "hermitian_eigenvalues",
    "holevo_quantity",
    "load_channel",
    "make_channel",
    "maximally_entangled",
    "me_bound_channel",
    "me_bound_universal",
    "me_output_entropy",
    "merged_entropy_bound",
    "minimize_output_entropy",
    "mixed_probability",
    "output_entropy",
    "output_entropy_and_gradient",
    "overlap_probability",
    "pair_output_direct",
    "pair_output_gram",
    "product_envelope_bound",
    "purity_statistics",
    "quadratic_entropy_deficit_bound",
    "random_bipartite_state",
    "random_pure_state",
    "reduced_spectrum",
    "sample_amplitudes",
    "save_channel",
    "spectral_envelope",
    "trace_norm",
    "von_neumann_entropy",
]
