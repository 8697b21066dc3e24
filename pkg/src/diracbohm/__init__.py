"""Bohmian trajectories and speed-of-light diagnostics for free Dirac waves.

The package evaluates closed-form solutions of the free Dirac equation,
integrates the Bohmian guidance law along them, samples ensembles from
the conserved density, and probes the set where the guidance speed
reaches the speed of light.
"""
from . import _kernels
from .algebra import (
    ALPHA,
    ALPHA_X,
    ALPHA_Y,
    ALPHA_Z,
    GAMMA,
    GAMMA0,
    GAMMA5,
    IG0G5,
    PSI_FLOOR,
    alpha_omega,
    bohm_velocity,
    current,
    current_many,
    eigen_projector,
    lorentz_invariants,
    lorentz_invariants_many,
    minkowski_norm_squared,
    norm_squared,
    s_deviation,
    s_deviation_many,
)
from .config import (
    ScenarioConfig,
    build_model,
    canonical_json,
    load_config,
    parse_config,
    scenario_hash,
)
from .dynamics import (
    IntegratorOptions,
    Trajectory,
    TrajectoryEvent,
    TrajectorySample,
    TransportResult,
    detect_speed_c_events,
    integrate,
    transport_batch,
    velocity_field,
    write_trajectory_csv,
)
from .ensemble import (
    EnsembleReport,
    EquivarianceResult,
    HistogramSpec,
    SamplingRegion,
    binned_density,
    density_at,
    equivariance_distance,
    run_ensemble,
    sample_positions,
    speed_c_fraction,
)
from .errors import (
    ConfigError,
    DegenerateDensityError,
    DiracBohmError,
    MixedMassError,
    NearNodeError,
    NodeAtOriginError,
    NotUnitError,
    SingularSystemError,
    StepFailureError,
    TooManyLostError,
    ZeroSpinorError,
    ZeroWaveVectorError,
)
from .models import (
    CircularWave,
    PlaneWaveSpec,
    PlaneWaveSuperposition,
    QuadratureSpec,
    ScaledModel,
    SumModel,
    WaveFunctionModel,
    dirac_residual,
    four_momentum,
    gaussian_packet,
    plane_wave,
    plane_wave_spinor,
    spacetime_point,
    spanning_waves,
    speed_c_coefficients,
    speed_c_superposition,
)
from .transversality import (
    CompactBox,
    PerturbationStatistics,
    PerturbationTrial,
    SigmaPoint,
    TransversalityReport,
    constraint_jacobian,
    constraint_value,
    locate_sigma,
    perturb_and_compare,
    transversality_report,
)
from .validate import CheckResult, DiracMatrices, run_checks

__version__ = "0.1.0"

kernel_backend = _kernels.BACKEND_NAME
