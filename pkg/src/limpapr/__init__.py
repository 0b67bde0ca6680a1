"""Asymptotic analysis and simulation of box-constrained (limited-PAPR) ridge precoding."""

from .asymptotics import AsymptoticReport, DistortionLaw, full_report, report_from_saddle
from .exceptions import (ConvergenceError, InfeasibleError, InsufficientDataError,
                         LimPaprError, NonMonotoneError, TargetUnreachableError)
from .monte_carlo import EmpiricalReport, run_experiment
from .precoder import (ChannelInstance, LimitedPaprPrecoder, Method, OneBitPrecoder,
                       RzfPrecoder, ZfPrecoder, limited_papr_precode, precode)
from .saddle_point import SaddlePoint, SystemParams, solve_saddle
from .special_cases import large_delta_limit, large_rho_expansion, rzf_limit, small_delta_limit, small_rho_limit, zf_limit
from .tuning import TuneResult, rho_for_target_pb

__version__ = "0.1.0"
