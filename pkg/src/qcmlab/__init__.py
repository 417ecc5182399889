"""Kernel maps of measures, doubling-type checks, Riesz products and a staircase counterexample."""
from .exceptions import (AllPairsDegenerate, BudgetExceededWarning, DecayViolated, DegenerateTriple,
                         InjectivityViolation, NonIntegrable, PrecisionLoss, QCMError, SetTooSmall, ZeroMass)
from .geometry import kernel_diff_exact, kernel_inner_exact, tau, triangle_stats
from .quadrature import QuadratureConfig
from .measures import (Ball, DistancePower, GaussianWeight, GridMeasure, OrientedBox, PowerWeight, RieszProduct,
                       SelfSimilarSet, Truncated, UniformBall, UniformBox, cantor_four_corner, cone_condition_check,
                       decay_check, doubling_constant_estimate, lebesgue, mass)
from .mapping import (KernelMapEval, f_mu, jacobian_norm_estimate, kappa_condition_estimate, riesz_potential,
                      v_mu)
from .reports import CheckReport
from .checkers import (delta_monotone_estimate, face_projection_check, isotropic_doubling_check,
                       quasisymmetry_eta_estimate, segment_integral_check, ulnc_check)
from .singular import Lambda_m, bad_set, line_integral_comparability, mass_normalization
from .counterexample import Staircase, gamma_polyline, h_k, neighborhood_mass_probe

__version__ = "0.1.0"
