"""Desk-scale simulator of a three-photon OAM state entangled in 3x3x2
dimensions: pair sources, a parity-sorting beam splitter, heralding,
witness certification, and a layered three-party key protocol."""

__version__ = "0.1.0"

from .errors import ConfigError, IncompleteDataError
from .hilbert import (
    BasisKet,
    DensityMatrix,
    MixedState,
    PhotonMode,
    PureState,
    fidelity,
    normalize,
    project,
    rank_vector,
    reduce,
    schmidt_coefficients,
    state_from_text,
    state_to_text,
    target_state,
    tensor,
)
from .optics import (
    HeraldSpec,
    PairSpec,
    SpectralParams,
    SplitterConfig,
    dip_curve,
    dip_fwhm,
    four_photon_state,
    herald,
    lambda_of_delay,
    parity_split_coincidence,
    simulate_heralded,
    spdc_pair,
    visibility_effective,
    visibility_theory,
)
from .measurement import (
    CountRow,
    CountTable,
    ElementEstimate,
    MeasurementSetting,
    ProjectorSpec,
    expected_probability,
    ingest_counts,
    probability_table,
    projector_state,
    reconstruct_diagonals,
    reconstruct_offdiagonal,
    sigma_decomposition,
    simulate_counts,
    witness_plan,
)
from .witness import (
    RankClass,
    WitnessResult,
    bounded_rank_overlap,
    certify,
    fexp_estimate,
    fmax_bound,
    truncate_to_rank,
)
from .qkd import LayeredKeys, RoundOutcome, run_protocol, security_check, sift
from .config import ExperimentConfig, default_config, load_config
