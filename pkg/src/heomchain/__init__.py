"""Open-quantum-chain dynamics: hierarchical, rotating-wave and Markovian
generators for a dissipative 1D lattice, with non-Hermitian spectral analysis.

The public surface groups into five layers:

* baths -- spectral densities and sum-of-exponentials decompositions
  (:func:`pade_decompose`, :func:`rwa_correlation_decompose_aaa`,
  the analytic zero-temperature Lorentzian forms);
* generators -- :func:`build_heom_generator`,
  :func:`build_rwa_heom_generator`, :func:`build_bmme_generator` over a
  :class:`LatticeSpec`;
* spectra -- :func:`eigendecompose`, :func:`classify_modes`,
  :func:`relaxation_time`, :func:`localization_length`;
* dynamics -- :func:`propagate`, :func:`observables`, the two-site
  closed form :func:`two_site_analytic`;
* sweeps -- :class:`ScanPlan` / :func:`run_scan` and the YAML
  configuration front end in :mod:`heomchain.config` /
  :mod:`heomchain.cli`.
"""

from .aaa import (
    PoleSet,
    aaa_fit,
    channel_reconstruction_errors,
    rwa_correlation_decompose_aaa,
)
from .bath import (
    BathSpec,
    Channel,
    DrudeLorentz,
    ExponentialDecomposition,
    ExponentialTerm,
    Lorentzian,
    bose_einstein,
    channel_correlation_direct,
    correlation_direct,
    lorentzian_zero_t_decompose,
    lorentzian_zero_t_rwa_decompose,
    pade_decompose,
)
from .bmme import MarkovRates, build_bmme_generator, markov_rates
from .config import Config, ConfigError, parse_config
from .dynamics import (
    Trajectory,
    observables,
    propagate,
    relaxation_time_from_dynamics,
    trace_distance,
    two_site_amplitude,
    two_site_analytic,
)
from .heom import (
    AdoSpace,
    Generator,
    build_heom_generator,
    build_rwa_heom_generator,
    embed_initial_state,
    enumerate_ados,
    reduced_system_state,
)
from .lattice import (
    CouplingMode,
    LatticeSpec,
    build_coupling,
    build_hamiltonian,
    dephasing_ops,
    lindblad_hopping_ops,
    lowering_operator,
    split_raising_lowering,
)
from .scan import CellResult, ScanPlan, ScanResult, convergence_check, run_scan
from .spectral import (
    EigenSystem,
    LocalizationFit,
    ModeReport,
    classify_modes,
    eigendecompose,
    expansion_coefficients,
    localization_length,
    reconstruct_state,
    relaxation_time,
    steady_state,
)

__version__ = "0.1.0"

__all__ = [
    "AdoSpace",
    "BathSpec",
    "CellResult",
    "Channel",
    "Config",
    "ConfigError",
    "CouplingMode",
    "DrudeLorentz",
    "EigenSystem",
    "ExponentialDecomposition",
    "ExponentialTerm",
    "Generator",
    "LatticeSpec",
    "LocalizationFit",
    "Lorentzian",
    "MarkovRates",
    "ModeReport",
    "PoleSet",
    "ScanPlan",
    "ScanResult",
    "Trajectory",
    "aaa_fit",
    "bose_einstein",
    "build_bmme_generator",
    "build_coupling",
    "build_hamiltonian",
    "build_heom_generator",
    "build_rwa_heom_generator",
    "channel_correlation_direct",
    "channel_reconstruction_errors",
    "classify_modes",
    "convergence_check",
    "correlation_direct",
    "dephasing_ops",
    "eigendecompose",
    "embed_initial_state",
    "enumerate_ados",
    "expansion_coefficients",
    "lindblad_hopping_ops",
    "localization_length",
    "lorentzian_zero_t_decompose",
    "lorentzian_zero_t_rwa_decompose",
    "lowering_operator",
    "markov_rates",
    "observables",
    "pade_decompose",
    "parse_config",
    "propagate",
    "reconstruct_state",
    "reduced_system_state",
    "relaxation_time",
    "relaxation_time_from_dynamics",
    "run_scan",
    "rwa_correlation_decompose_aaa",
    "split_raising_lowering",
    "steady_state",
    "trace_distance",
    "two_site_amplitude",
    "two_site_analytic",
    "__version__",
]
