"""Birkhoff normal forms and effective stability times.

The package normalizes polynomial Hamiltonians around an elliptic
equilibrium order by order with truncated Lie series, then turns the
surviving remainder at each order into a drift bound and an escape time,
optimizing over the order.  A small celestial-mechanics layer converts
orbital elements into the Poincare variables the secular application
needs.
"""

__version__ = "0.1.0"

from .errors import (
    ConditioningError,
    DegenerateRadiusError,
    DimensionMismatchError,
    Error,
    FormatError,
    GradingError,
    HyperbolicOrbitError,
    NotEllipticError,
    OrderRangeError,
    RealityViolationError,
    ResonanceError,
    SmallDivisorError,
    StabilityDomainError,
    TruncationOrderError,
    UnknownFixtureError,
)
from .polyalg import (
    GradedSeries,
    Polynomial,
    PolydiscSpec,
    lie_exp,
    poisson_bracket,
    polydisc_norm,
    sample_polydisc,
)
from .spectrum import (
    LinearSymplecticMap,
    ResonanceCertificate,
    check_nonresonance,
    diagonalize_quadratic,
)
from .birkhoff import (
    ActionPolynomial,
    NormalFormState,
    birkhoff_normal_form,
    compose_transform,
    frequencies_of_actions,
    normalize_step,
    solve_homological,
)
from .stability import (
    DriftBound,
    StabilityReport,
    drift_bound,
    escape_time,
    stability_time,
    sweep,
)
from .celestial import (
    BodyParameters,
    PoincareState,
    load_fixture,
    poincare_variables,
    secular_radii,
)

__all__ = [
    "ActionPolynomial",
    "BodyParameters",
    "ConditioningError",
    "DegenerateRadiusError",
    "DimensionMismatchError",
    "DriftBound",
    "Error",
    "FormatError",
    "GradedSeries",
    "GradingError",
    "HyperbolicOrbitError",
    "LinearSymplecticMap",
    "NormalFormState",
    "NotEllipticError",
    "OrderRangeError",
    "PoincareState",
    "PolydiscSpec",
    "Polynomial",
    "RealityViolationError",
    "ResonanceCertificate",
    "ResonanceError",
    "SmallDivisorError",
    "StabilityDomainError",
    "StabilityReport",
    "TruncationOrderError",
    "UnknownFixtureError",
    "birkhoff_normal_form",
    "check_nonresonance",
    "compose_transform",
    "diagonalize_quadratic",
    "drift_bound",
    "escape_time",
    "frequencies_of_actions",
    "lie_exp",
    "load_fixture",
    "normalize_step",
    "poincare_variables",
    "poisson_bracket",
    "polydisc_norm",
    "sample_polydisc",
    "secular_radii",
    "solve_homological",
    "stability_time",
    "sweep",
]
