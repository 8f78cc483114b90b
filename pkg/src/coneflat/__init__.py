"""Exact coframe calculus for certifying local flatness of isotrivial cone structures."""

from coneflat.funcfield import (
    BadPrimeError,
    FuncFieldError,
    MultiPoly,
    ParseError,
    PoleError,
    RatFunc,
    Rational,
    TermBudgetError,
    parse_poly,
    parse_ratfunc,
    set_term_bound,
    term_bound,
)
from coneflat.coframe import (
    Chart,
    Coframe,
    SingularCoframeError,
    dual_frame,
    exterior_derivative,
    geodesic_flow,
    induced_coframe,
    structure_function,
)
from coneflat.xi import XiConfig, iota, membership, xi_V, xi_Z
from coneflat.cone import (
    ConeError,
    ConeStructure,
    Hypersurface,
    adapted_cone,
    characteristic_check,
    double_bracket_check,
    geodesic_tangency_check,
    smooth_check,
)
from coneflat.flatten import (
    CertifyConfig,
    FlattenCertificate,
    FlattenError,
    InternalIdentityError,
    certify,
    conformal_closedness_test,
    conformal_factor,
    flat_coordinates,
    integrate_h,
)

__version__ = "0.1.0"

__all__ = [
    "BadPrimeError",
    "CertifyConfig",
    "Chart",
    "Coframe",
    "ConeError",
    "ConeStructure",
    "FlattenCertificate",
    "FlattenError",
    "FuncFieldError",
    "Hypersurface",
    "InternalIdentityError",
    "MultiPoly",
    "ParseError",
    "PoleError",
    "RatFunc",
    "Rational",
    "SingularCoframeError",
    "TermBudgetError",
    "XiConfig",
    "adapted_cone",
    "certify",
    "characteristic_check",
    "conformal_closedness_test",
    "conformal_factor",
    "double_bracket_check",
    "dual_frame",
    "exterior_derivative",
    "flat_coordinates",
    "geodesic_flow",
    "geodesic_tangency_check",
    "induced_coframe",
    "integrate_h",
    "iota",
    "membership",
    "parse_poly",
    "parse_ratfunc",
    "set_term_bound",
    "smooth_check",
    "structure_function",
    "term_bound",
    "xi_V",
    "xi_Z",
    "__version__",
]
