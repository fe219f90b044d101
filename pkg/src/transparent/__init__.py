"""Transparent SU(2) connections on the unit tangent bundle of a flat torus,
their fiber-Fourier discretisation, and the Bäcklund raising and lowering
steps driven by holomorphic line subbundles."""

from .algebra import j_twist, random_su2_algebra, su2_exp
from .backlund import (
    DEFAULT_GATES,
    BacklundParams,
    Gates,
    LineSeed,
    backlund_transform,
    construct_a,
    extract_top_line,
    holomorphic_line_residual,
    line_from_meromorphic,
    line_from_vectors,
    lower_degree,
    pipeline_residuals,
    weierstrass_seed,
)
from .linesearch import LineSearchResult, find_holomorphic_line, search_holomorphic_line
from .operators import (
    connection_from_u,
    eta_minus,
    eta_plus,
    f_from_u,
    geodesic,
    horizontal,
    inner,
    is_connection_residual,
    mu_minus,
    mu_plus,
    mypde_residual,
    norm,
    transport_pde_residual,
    vertical,
)
from .thetafield import Connection, InvolutionField, Metric, ThetaField, TorusGrid, degree_of, multiply, parity_of
from .transport import GeodesicLoop, enumerate_loops, holonomy_defect, parallel_cocycle

__version__ = "0.1.0"
