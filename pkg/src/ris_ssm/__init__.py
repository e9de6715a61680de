"""Link-level simulator and ABEP analysis for scatterer-index modulation
assisted by a phase-tuned reflecting surface over mmWave MIMO channels."""

__version__ = "0.1.0"

from .analysis import (
    AbepCurve,
    abep_curve,
    abep_union_bound,
    average_pep,
    cpep_correct_beam,
    cpep_wrong_beam,
    cpep_wrong_beam_quadrature,
    cpep_wrong_beam_series,
    ordered_gain_ensemble,
    q_function,
    snr_at_abep,
    wrong_beam_noncentrality,
)
from .array_geometry import (
    UlaGeometry,
    UpaGeometry,
    steering_inner_product,
    ula_inner_closed_form,
    ula_spatial_frequency,
    ula_steering,
    upa_steering,
    wrap_angle,
)
from .channel import (
    ChannelRealization,
    PathParams,
    RisPhaseProfile,
    SamplingError,
    build_ris_rx_channel,
    build_tx_ris_channel,
    complex_gaussian,
    composite_channel,
    effective_gain,
    optimize_ris_phases,
    sample_channel,
    select_scatterers,
)
from .montecarlo import (
    BerEstimate,
    SimConfig,
    ValidationReport,
    compare_with_bound,
    compute_bound,
    run_point,
    run_sweep,
    wilson_interval,
    wilson_sigma,
)
from .transceiver import (
    Constellation,
    SsmSymbol,
    build_psk,
    combine,
    demap,
    hamming_distance,
    hamming_table,
    map_bits,
    ml_detect,
    ml_detect_batch,
    rx_combiner,
    transmit_beamspace,
    transmit_physical,
)
