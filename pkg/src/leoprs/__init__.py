"""leoprs: Monte Carlo interference modeling for comb-multiplexed
positioning pilots broadcast from LEO constellations.

Pipeline: constellation geometry -> pilot waveforms -> delay/Doppler
channel -> matched-filter interference -> extreme-value statistics.
"""

from .channel import (
    LinkTruth,
    ReceivedComposite,
    SatLink,
    apply_channel,
    combine,
    composite_from_links,
)
from .constants import (
    EARTH_GM,
    EARTH_RADIUS_M,
    EARTH_ROTATION_RATE,
    SPEED_OF_LIGHT,
)
from .geometry import (
    ChannelParams,
    LookGeometry,
    SatelliteState,
    ShellConfig,
    UserLocation,
    VisibleSet,
    channel_params,
    fibonacci_lattice,
    look_geometry,
    max_slant_range,
    propagate,
    shell_states,
    visible_set,
    write_pass_table,
)
from .montecarlo import (
    CampaignConfig,
    ConfigError,
    GeometryError,
    PassTable,
    PassTableError,
    SampleSet,
    apply_overrides,
    build_links,
    config_from_file,
    load_passes,
    read_samples_csv,
    run_campaign,
    run_draw,
    sweep_points,
    write_samples_csv,
)
from .prs import (
    BasebandSignal,
    PrsConfig,
    ResourceGrid,
    body_sample_mask,
    gold_sequence,
    grid_to_csv,
    map_resource_grid,
    ofdm_demodulate,
    ofdm_modulate,
    prs_c_init,
    prs_symbols,
)
from .receiver import (
    Contribution,
    DelayDopplerMap,
    InterferenceSample,
    caf,
    correlate_at,
    interference_sample,
    sinr,
)
from .stats import (
    CandidateFit,
    CsModel,
    Ecdf,
    EvaluationError,
    FitError,
    FitReport,
    GevModel,
    GevParams,
    RegressionError,
    ecdf,
    fit_candidates,
    fit_gev,
    fit_parameter_models,
    gev_cdf,
    gev_loglik,
    gev_pdf,
    gev_ppf,
    gev_pwm_estimate,
    gev_sample,
    ks_test,
    kolmogorov_p,
    model_eval,
)

__version__ = "0.1.0"
