"""Numerical laboratory for large values of zeta derivatives on vertical
homogeneous progressions: resonator constructions near the critical line and
near the 1-line, weighted discrete sums with explicit error terms, and the
closed-form comparison constants."""

from .dickman import DickmanTable, d_j_of_A, dickman_rho, lambda_of_A, y_j
from .errors import (BudgetExceededError, DomainError, EmptyBandError,
                     ExtensionRequiredError, InsufficientGridError, PrecisionError,
                     QuadratureError, TailNotCertifiedError, ZresError)
from .harness import (CSV_HEADER, ExperimentReport, brute_max, emit_report,
                      parse_report, run_near_half_experiment, run_near_one_experiment)
from .nearhalf import (FactoredInteger, PrimeBand, ResonatorConfig, ResonatorNearHalf,
                       build_prime_band, build_resonator_near_half, compute_A_N,
                       delta_k, eval_resonator, in_pruned_support, prop31_lower_bound,
                       read_resonator, weight_f, write_resonator)
from .nearone import (ResonatorNearOne, build_resonator_near_one, key_ratio,
                      read_resonator_near_one, write_resonator_near_one)
from .params import (EvalConfig, ProgressionParams, SigmaMode, iterated_log, sigma_of)
from .sums import (G1G2, GallagherResult, KernelKind, SumReport, WeightKernel,
                   discrete_mean_square, error_E1, error_E2, gallagher_check,
                   gallagher_check_zeta, kernel_transform, kernel_value,
                   poisson_check, sum_G1_G2, sum_S1, sum_S2)
from .zeta import (ZetaSample, continuous_second_moment, dirichlet_partial_sum,
                   zeta_derivative_approx, zeta_derivative_ref, zeta_derivative_ref_batch)

__version__ = "0.1.0"
