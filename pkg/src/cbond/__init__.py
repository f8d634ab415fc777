"""Defaultable discrete-coupon bond pricing with barrier and intensity default."""

from .contract import BarrierSchedule, CouponBondSpec, PriceBreakdown
from .errors import (CbondError, ConfigError, DimensionError, DomainError, NumericalError,
                     UnsupportedCaseError)
from .mc_oracle import (McEstimate, SimConfig, mc_bond_and_equity, mc_equity, mc_price_one_factor,
                        mc_price_two_factor, mc_zcb)
from .mvn import CorrMatrix, MvnProblem, flip_last_sign, mvn_boundary_slice, mvn_cdf, nested_corr
from .one_factor import (bankruptcy_cost, bond_initial_breakdown, bond_price, default_free_duration,
                         duration, equity_price, solve_barriers, taxed_bond_price)
from .term_structure import (OneFactorMarket, VasicekMarket, accumulated_variance, default_free_pv,
                             sx_squared, zcb_coeffs, zcb_price)
from .two_factor import (Duration2F, bankruptcy_cost_2f, bond_initial_breakdown_2f, bond_price_2f,
                         duration_2f, equity_price_2f, solve_barriers_2f, taxed_bond_price_2f)

__version__ = "0.1.0"

__all__ = [
    "BarrierSchedule", "CouponBondSpec", "PriceBreakdown",
    "CbondError", "ConfigError", "DimensionError", "DomainError", "NumericalError",
    "UnsupportedCaseError",
    "McEstimate", "SimConfig", "mc_bond_and_equity", "mc_equity", "mc_price_one_factor",
    "mc_price_two_factor", "mc_zcb",
    "CorrMatrix", "MvnProblem", "flip_last_sign", "mvn_boundary_slice", "mvn_cdf", "nested_corr",
    "bankruptcy_cost", "bond_initial_breakdown", "bond_price", "default_free_duration", "duration",
    "equity_price", "solve_barriers", "taxed_bond_price",
    "OneFactorMarket", "VasicekMarket", "accumulated_variance", "default_free_pv", "sx_squared",
    "zcb_coeffs", "zcb_price",
    "Duration2F", "bankruptcy_cost_2f", "bond_initial_breakdown_2f", "bond_price_2f", "duration_2f",
    "equity_price_2f", "solve_barriers_2f", "taxed_bond_price_2f",
]
