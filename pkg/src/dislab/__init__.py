"""Disagreement and risk of random-features ridge regression under covariate shift.

Two engines over one set of quantities: closed-form high-dimensional limits
(``asymptotics``) and finite-size seeded Monte Carlo (``simulator``), tied
together by a config-driven harness and CLI.
"""

from .activation import (
    Activation,
    ActivationProfile,
    DegenerateActivationError,
    activation_constants,
    gaussian_moments,
    get_activation,
    profile_for_measure,
)
from .asymptotics import (
    LineCoefficients,
    RegimeDegeneracyError,
    TheoryReport,
    bias_variance,
    deviation_profile,
    disagreement_ridge,
    disagreement_ridgeless,
    line_coefficients,
    risk_line_slope,
    sweep_psi,
    theory_report,
)
from .estimator import RandomFeaturesRidge
from .harness import (
    ConfigError,
    CurveRecord,
    LineFit,
    dataset_curves,
    estimate_slope,
    fit_line,
    read_curves,
    run_compare,
    run_dataset,
    run_estimate_slope,
    run_simulate,
    run_theory,
    sample_covariance,
    write_curves,
)
from .selfconsistent import (
    ConvergenceError,
    RegimeParams,
    SelfConsistentSolution,
    dkappa_dgamma,
    solve_kappa,
    solve_kappa_ridgeless,
    tau_pair,
)
from .simulator import (
    EmpiricalEstimate,
    FittedModel,
    SimulationConfig,
    covariance_from_measure,
    estimate_disagreement,
    estimate_risk,
    estimate_suite,
    fit,
    gaussian_equivalent_features,
    generate_dataset,
    trial_rng,
)
from .spectra import (
    SpectralAtom,
    SpectralMeasure,
    empirical_joint_spectrum,
    integral_functional,
    moments,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
