from .signals import SignalSpec, SignalKind, NoiseSpec, NoiseKind, sample_clean, second_derivative_bound, sample_noise
from .differentiators import Family, FirstOrderKind, DiffState, HybridParams, HybridDiscontinuousParams, NonlinearParams, LevantParams, \
    LinearParams, GredParams, FirstOrderParams, pow_sgn, hybrid_rhs, levant_rhs, linear_rhs, gred_weight, \
    gred_output, first_order_rhs
from .integrator import Method, SimConfig, TimeSeries, simulate, step
from .analysis import build_hybrid_matrices, build_second_order_certificate, lambda_min_sym, lyapunov_V, \
    steady_bound_theorem1, noise_bound_theorem2, linear_decay, describing_gain, linearize_levant, \
    linearize_linear, linearize_hybrid, linear_freq_response
from .metrics import RunReport, MetricsConfig, error_series, settling_time, chattering_index, accuracy_scaling
from .scenario import Scenario, load_scenario, parse_scenario
from .errors import HybridDiffError, ScenarioError, NonFiniteState, AsymmetricInput, NonPositiveLambdaMin, \
    HypothesisViolated, WindowOutOfRange, PreconditionError
