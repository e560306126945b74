"""Discrete Jacobi operators: semigroups, square functions, multipliers and weights."""

from .bessel import bessel_i_scaled, chebyshev_heat_kernel, chebyshev_heat_kernel_dt, heat_deriv_recurrence
from .core import (
    CHEBYSHEV,
    CoeffTable,
    FiniteSequence,
    JacobiParams,
    apply_jacobi,
    as_sequence,
    build_coeff_table,
    eval_basis,
    eval_poly,
    jacobi_mass,
    synthesize,
)
from .halfline import ConvergenceError, halfline_quad
from .multipliers import (
    MultiplierSymbol,
    SymbolError,
    apply_multiplier,
    gk_multiplier_bound_check,
    imaginary_power,
    laplace_multiplier_heatpath,
    laplace_type,
    marcinkiewicz_check,
    named_density,
    tabulated,
)
from .quadrature import (
    NumericalFault,
    QuadratureRule,
    SpectralModel,
    converge_in_L,
    gauss_jacobi_rule,
    policy_size,
    spectral_model,
)
from .semigroups import HeatKernelQuery, apply_semigroup, heat_kernel, poisson_kernel, poisson_kernel_matrix
from .squarefn import (
    BkSpace,
    bk_kernel_norm,
    bk_norms_extrapolated,
    fit_loglog_slope,
    gk_all,
    gk_heat,
    gk_numeric_oracle,
    gk_poisson,
    gk_ratio,
    schlafli_b1_oracle,
)
from .weights import (
    DiscreteWeight,
    ap_constant,
    apply_transplantation,
    composition_check,
    transplantation_kernel,
    weighted_norm,
)

__version__ = "0.1.0"
