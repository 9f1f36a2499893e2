"""Instanton-corrected hyperkähler and quaternionic-Kähler metrics from special Kähler data."""
from .lattice import (
    BpsStructure,
    ChargeLattice,
    LatticeError,
    charge_gcds,
    complete_darboux_basis,
    pairing_eval,
    validate_mutual_locality,
)
from .bessel import bessel_k, k0_k1
from .cask import (
    CaskDomain,
    GeometryError,
    Plugin,
    Quadratic,
    TorusPoint,
    cask_potential_r2,
    central_charge,
    chn_domain,
    psk_data,
    semiflat_forms,
    tau_matrix,
)
from .hk import (
    MetricSample,
    SeriesError,
    compatibility_check,
    complex_structures,
    exterior_derivative_residual,
    hk_metric,
    hk_point,
    instanton_series,
    kahler_forms,
    rotating_vector,
)
from .chart import QkPoint, embed, heisenberg_action, slice_geometry
from .bundle import (
    bundle_data,
    connection_eta,
    eta_gamma_inst,
    moment_data,
    qk_metric_global,
    region_classify,
    theta_p_forms,
)
from .coord import fs_metric, ingredient_forms, isometry_residual, qk_metric_coord
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .suites import Report, run_suite

__version__ = "0.1.0"
