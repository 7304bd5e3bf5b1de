"""Desk-scale laboratory for Renyi entropies and channels on weighted block algebras."""
from .channels import (Channel, ChannelProperties, adjoint_channel, apply_channel,
                       build_channel, classify_channel, random_channel)
from .entropy import (EntropyValue, entropy_functional, relative_entropy, renyi_entropy,
                      segal_entropy)
from .errors import (AlgebraMismatch, DegenerateDensity, DomainError, GenerationFailure,
                     InvalidAlpha, InvalidParameter, InvalidSchedule, NumericalFailure,
                     PreconditionViolated, RenyiLabError, TraceMismatch)
from .integrals import (ConvergenceTrace, QuadratureScheme, convergence_diagnostic,
                        scalar_power_integral, scalar_power_integral_convex, truncate,
                        z_convex, z_tilde)
from .operators import (BlockAlgebra, Density, HermitianOperator, Operator, OrderVerdict,
                        SpectralDecomposition, apply_function, chebyshev_tail,
                        jordan_product, l1_norm, loewner_leq, power, resolvent_product,
                        spectral_decompose, support_projection, trace)
from .theorems import (PreservationReport, alpha_ge_2_reduction_check,
                       jensen_concave_check, jensen_convex_check, jordan_isomorphism_test,
                       l1_power_continuity_check, monotonicity_check, preservation_test,
                       relative_entropy_invariance_test, resolvent_jensen_check,
                       trace_jensen_check)

__version__ = "0.1.0"

__all__ = [
    "adjoint_channel", "AlgebraMismatch", "alpha_ge_2_reduction_check", "apply_channel",
    "apply_function", "BlockAlgebra", "build_channel", "Channel", "ChannelProperties",
    "chebyshev_tail", "classify_channel", "convergence_diagnostic", "ConvergenceTrace",
    "DegenerateDensity", "Density", "DomainError", "entropy_functional", "EntropyValue",
    "GenerationFailure", "HermitianOperator", "InvalidAlpha", "InvalidParameter",
    "InvalidSchedule", "jensen_concave_check", "jensen_convex_check",
    "jordan_isomorphism_test", "jordan_product", "l1_norm", "l1_power_continuity_check",
    "loewner_leq", "monotonicity_check", "NumericalFailure", "Operator", "OrderVerdict",
    "power", "PreconditionViolated", "preservation_test", "PreservationReport",
    "QuadratureScheme", "random_channel", "relative_entropy",
    "relative_entropy_invariance_test", "renyi_entropy", "RenyiLabError",
    "resolvent_jensen_check", "resolvent_product", "scalar_power_integral",
    "scalar_power_integral_convex", "segal_entropy", "spectral_decompose",
    "SpectralDecomposition", "support_projection", "trace", "trace_jensen_check",
    "TraceMismatch", "truncate", "z_convex", "z_tilde",
]
