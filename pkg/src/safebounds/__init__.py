"""Certified lower and upper bounds on the probabilistic safety of
discrete-time stochastic systems, by interval abstraction and by
piecewise-constant stochastic barrier functions."""

from .abstraction import (
    IntervalAbstraction,
    PointAbstraction,
    build_imc,
    build_imdp,
    build_mc,
    kernel_lipschitz_bound,
    suggested_partition,
)
from .barrier import BarrierCertificate, PiecewiseBarrier, beta_of, certify, eta_of, synthesize
from .errors import (
    AbstractionError,
    DegeneracyError,
    EmptyIntersectionError,
    InfeasibleError,
    NonConvergenceError,
    SafeBoundsError,
    UnsupportedDimensionError,
)
from .geometry import HyperRect, UniformGrid
from .kernel import (
    AffineGaussianSystem,
    ProbInterval,
    mean_image,
    transition_bounds,
    transition_prob,
    unsafe_bounds,
)
from .lp import LinearProgram, LpResult, solve
from .oracle import MeshFunction, OracleSolution, exact_dp
from .value_iteration import (
    SynthesizedPolicy,
    ValueBounds,
    omax,
    omin,
    safety_over_initial,
    vi_fixed_policy,
    vi_mc,
    vi_synthesize,
)

__version__ = "0.1.0"
