"""Flows that generate nonlinear eigenfunctions p(u) = lambda * u of convex
one-homogeneous regularizers (TV, TGV2), with validation oracles, the
spectral TV transform and a nonlinear inverse power method baseline."""

from .analysis import (
    SpectralResult,
    ValidationReport,
    affinity,
    rayleigh_lambda,
    spectral_filter,
    spectral_transform,
    theta_deg,
    validate_eigenfunction,
)
from .errors import (
    DegenerateInput,
    EigenflowError,
    MaxItersExceeded,
    ShapeMismatchError,
    StepTooLarge,
    ZeroImage,
    ZeroNorm,
    ZeroSubgradient,
)
from .flows import (
    EigenResult,
    FlowConfig,
    FlowTrace,
    forward_step,
    inverse_step,
    run_forward,
    run_gradient_flow,
    run_inverse,
    run_linear,
)
from .functionals import (
    FunctionalKind,
    j_value,
    one_hom_check,
    subgrad_inequality_check,
    tgv2_value,
    tv_value,
)
from .grid import (
    GridField,
    SymTensorField,
    VecField,
    inner,
    norm,
    null_project,
)
from .ipm import ipm_step, run_ipm
from .operators import div, div2, grad, neg_laplacian, sym_grad
from .solver import ProxResult, SolverParams, prox, subgradient_at

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
