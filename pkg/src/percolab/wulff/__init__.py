"""Norms, Wulff crystals, surface tension and flow-constant estimation."""

from .geometry import (
    GeometryError,
    IsoperimetricReport,
    NormTable,
    PhiResult,
    Polytope,
    candidate_battery,
    dilate_to_volume,
    isoperimetric_check,
    load_norm_table,
    phi_of_p,
    quasi_uniform_directions,
    surface_tension,
    volume,
    wulff_set,
)
from .flow import (
    CertificateError,
    FlowEstimate,
    FlowResult,
    ScanRow,
    estimate_flow_constant,
    max_flow,
    scan_row,
    scan_to_csv,
    strip_lattice,
    theta_estimate,
    vanishing_scan,
)
