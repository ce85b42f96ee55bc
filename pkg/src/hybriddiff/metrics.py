import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Trajectory metrics: errors, settling, steady sup norms, chattering, noise-accuracy exponents
#########################################################################################################
from typing import Optional, Tuple, List, Dict, Any, NamedTuple
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .common_utils import num2str
from .errors import WindowOutOfRange, PreconditionError
from .integrator import TimeSeries, SimConfig, simulate
from .differentiators import Family, LinearParams
from .signals import SignalSpec, SignalKind, NoiseSpec, NoiseKind
from .analysis import theorem1_report, theorem2_report, linear_decay

WINDOW_TOL = 1e-9

####################################################################
# Models
####################################################################
class MetricsConfig(BaseModel):
    """
    steady_window / chattering_window: explicit (t_a, t_b) in seconds; when absent the
    steady window is the final steady_fraction of the run and chattering uses the steady window.
    """
    model_config = ConfigDict(extra="forbid")

    steady_fraction: float = Field(default=0.2, gt=0.0, le=1.0)
    steady_window: Optional[Tuple[float, float]] = None
    chattering_window: Optional[Tuple[float, float]] = None
    tol_e1: float = Field(default=1e-3, gt=0.0)
    tol_e2: float = Field(default=1e-2, gt=0.0)

    @model_validator(mode="after")
    def _check(self)->"MetricsConfig":
        for window in (self.steady_window, self.chattering_window):
            if window is not None and not window[0] < window[1]:
                raise ValueError("window start must be before window end")
        return self

    def resolve_steady_window(self, t:np.ndarray)->Tuple[float, float]:
        if self.steady_window is not None:
            return self.steady_window
        t0, t1 = float(t[0]), float(t[-1])
        return t1 - self.steady_fraction * (t1 - t0), t1

    def resolve_chattering_window(self, t:np.ndarray)->Tuple[float, float]:
        if self.chattering_window is not None:
            return self.chattering_window
        return self.resolve_steady_window(t)


class RunReport(BaseModel):
    name: str
    family: str
    settling_time_e1: Optional[float] = None
    settling_time_e2: Optional[float] = None
    steady_e1_sup: float
    steady_e2_sup: float
    steady_zeta_sup: Optional[float] = None
    chattering_index: Optional[float] = None
    sign_flips: Optional[int] = None
    peak_x2: float
    bound_theorem1: Optional[float] = None
    theorem1_flag: Optional[str] = None
    bound_theorem2: Optional[float] = None
    theorem2_flag: Optional[str] = None
    bound_linear: Optional[float] = None

    def to_kv(self)->str:
        lines = []
        for key, value in self.model_dump().items():
            if isinstance(value, float) or value is None:
                lines.append(f"{key}={num2str(value)}")
            else:
                lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def to_row(self)->Dict[str, str]:
        row = {}
        for key, value in self.model_dump().items():
            row[key] = num2str(value) if isinstance(value, float) or value is None else str(value)
        return row

REPORT_COLUMNS = list(RunReport.model_fields.keys())

class ScalingResult(NamedTuple):
    exponent_e1: float
    exponent_e2: float
    eps: List[float]
    e1_sup: List[float]
    e2_sup: List[float]

####################################################################
# Series metrics
####################################################################
def error_series(ts:TimeSeries)->Tuple[np.ndarray, np.ndarray]:
    # against the clean signal, never against v_meas
    return ts.x1 - ts.v0, ts.x2 - ts.dv0

def settling_time(e:np.ndarray, t:np.ndarray, tol:float)->Optional[float]:
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    outside = np.flatnonzero(np.abs(np.asarray(e)) > tol)
    if len(outside) == 0:
        return float(t[0])
    last = int(outside[-1])
    if last == len(t) - 1:
        return None
    return float(t[last + 1])

def window_mask(t:np.ndarray, window:Tuple[float, float])->np.ndarray:
    t_a, t_b = window
    slack = WINDOW_TOL * max(1.0, abs(float(t[-1])))
    if not t_a < t_b or t_a < float(t[0]) - slack or t_b > float(t[-1]) + slack:
        raise WindowOutOfRange(f"window ({t_a}, {t_b}) outside series range [{t[0]}, {t[-1]}]")
    return (t >= t_a - slack) & (t <= t_b + slack)

def total_variation(x:np.ndarray)->float:
    return float(np.sum(np.abs(np.diff(x))))

def chattering_index(x2:np.ndarray, dv0:np.ndarray, t:np.ndarray, window:Tuple[float, float])->float:
    """
    Excess total variation TV(x2) - TV(dv0) over the window.
    """
    mask = window_mask(t, window)
    if np.count_nonzero(mask) < 2:
        raise WindowOutOfRange(f"window ({window[0]}, {window[1]}) holds fewer than 2 samples")
    return total_variation(np.asarray(x2)[mask]) - total_variation(np.asarray(dv0)[mask])

def count_sign_flips(x:np.ndarray, t:np.ndarray, window:Tuple[float, float])->int:
    s = np.sign(np.asarray(x)[window_mask(t, window)])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))

def steady_sup(e:np.ndarray, t:np.ndarray, window:Tuple[float, float])->float:
    return float(np.max(np.abs(np.asarray(e)[window_mask(t, window)])))

def zeta_norm(alpha:float, e1:np.ndarray, e2:np.ndarray)->np.ndarray:
    s = np.sign(e1) * np.abs(e1) ** ((alpha + 1.0) / 2.0)
    return np.sqrt(s * s + e1 * e1 + e2 * e2)

####################################################################
# Report
####################################################################
def build_report(
    name:str,
    ts:TimeSeries,
    cfg:MetricsConfig,
    *,
    params:Optional[BaseModel]=None,
    L2:float=0.0,
    eps:float=0.0
)->RunReport:
    """
    :param params: params active at the end of the run, used for the bound columns
    """
    e1, e2 = error_series(ts)
    t = ts.t
    steady = cfg.resolve_steady_window(t)
    fields:Dict[str, Any] = dict(
        name=name,
        family=ts.family.value if ts.family is not None else "unknown",
        settling_time_e1=settling_time(e1, t, cfg.tol_e1),
        settling_time_e2=settling_time(e2, t, cfg.tol_e2),
        steady_e1_sup=steady_sup(e1, t, steady),
        steady_e2_sup=steady_sup(e2, t, steady),
        peak_x2=float(np.max(np.abs(ts.x2))),
    )

    if ts.family == Family.FIRST_ORDER:
        fields["sign_flips"] = count_sign_flips(e1, t, cfg.resolve_chattering_window(t))
    else:
        fields["chattering_index"] = chattering_index(ts.x2, ts.dv0, t, cfg.resolve_chattering_window(t))

    if ts.family == Family.HYBRID and params is not None:
        zeta = zeta_norm(params.alpha, e1, e2)
        fields["steady_zeta_sup"] = steady_sup(zeta, t, steady)
        t1 = theorem1_report(params, L2)
        fields["bound_theorem1"] = t1.value
        fields["theorem1_flag"] = t1.flag
        t2 = theorem2_report(params, L2, eps)
        fields["bound_theorem2"] = t2.value
        fields["theorem2_flag"] = t2.flag
        if not t2.hypothesis_ok:
            logger.warning(f"[metrics] build_report: {name}: bound hypotheses fail: {'; '.join(t2.failed)}")
    elif ts.family == Family.LINEAR and params is not None:
        fields["bound_linear"] = linear_decay(params).steady_bound(L2)

    return RunReport(**fields)

####################################################################
# Noise-accuracy exponents
####################################################################
def fit_exponents(eps:List[float], e1_sup:List[float], e2_sup:List[float])->ScalingResult:
    """
    Least-squares slopes of log(steady sup error) against log(eps).
    """
    if len(eps) < 4:
        raise PreconditionError(f"need at least 4 noise levels, got {len(eps)}")
    if any(not e > 0 for e in eps):
        raise PreconditionError("noise levels must be positive (log 0 undefined)")
    if max(eps) / min(eps) < 10.0 * (1.0 - 1e-9):
        raise PreconditionError("noise levels must span at least one decade")
    if any(not e > 0 for e in list(e1_sup) + list(e2_sup)):
        raise PreconditionError("steady errors must be positive to fit exponents")

    log_eps = np.log(eps)
    exponent_e1 = float(np.polyfit(log_eps, np.log(e1_sup), 1)[0])
    exponent_e2 = float(np.polyfit(log_eps, np.log(e2_sup), 1)[0])
    return ScalingResult(exponent_e1, exponent_e2, list(eps), list(e1_sup), list(e2_sup))

def accuracy_scaling(
    family:Family,
    params:BaseModel,
    signal:SignalSpec,
    eps_grid:List[float],
    *,
    noise:Optional[NoiseSpec]=None,
    cfg:Optional[SimConfig]=None,
    metrics:Optional[MetricsConfig]=None
)->ScalingResult:
    """
    Run one simulation per noise level and fit the accuracy exponents.
    :param noise: noise template, its epsilon is replaced by each grid value (default sinusoidal)
    """
    fit_exponents(eps_grid, [1.0] * len(eps_grid), [1.0] * len(eps_grid))     # preconditions first

    noise = NoiseSpec(kind=NoiseKind.SINUSOIDAL) if noise is None else noise
    cfg = SimConfig() if cfg is None else cfg
    metrics = MetricsConfig() if metrics is None else metrics

    e1_sup = []
    e2_sup = []
    for eps in eps_grid:
        ts = simulate(family, params, signal, noise.model_copy(update={"epsilon": eps}), cfg)
        e1, e2 = error_series(ts)
        window = metrics.resolve_steady_window(ts.t)
        e1_sup.append(steady_sup(e1, ts.t, window))
        e2_sup.append(steady_sup(e2, ts.t, window))
        logger.debug(f"[metrics] accuracy_scaling: eps={eps:.6g}, e1={e1_sup[-1]:.6g}, e2={e2_sup[-1]:.6g}")
    return fit_exponents(eps_grid, e1_sup, e2_sup)

####################################################################
# Frequency probes (simulation side of the transfer functions)
####################################################################
class ProbeResult(NamedTuple):
    omega: float
    mag_track: float
    mag_deriv: float

def sinusoid_amplitude(x:np.ndarray, t:np.ndarray, omega:float)->float:
    # least-squares fit of a*sin + b*cos + c
    basis = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return float(np.hypot(coef[0], coef[1]))

def probe_amplitude_ratio(p:LinearParams, omega:float, *, amplitude:float=1.0, cycles:int=2)->ProbeResult:
    """
    Drive the linear differentiator with amplitude*sin(omega t) and measure the steady
    amplitude ratios of x1 and x2 against the input.
    """
    decay = linear_decay(p)
    period = 2.0 * math.pi / omega
    dt = min(1e-3, period / 200.0)
    t_settle = 40.0 * p.tau / decay.lambda_
    cfg = SimConfig(dt=dt, t_end=t_settle + cycles * period, hold_input=False)
    signal = SignalSpec(kind=SignalKind.SINUSOID, amplitude=amplitude, omega=omega)
    ts = simulate(Family.LINEAR, p, signal, NoiseSpec(), cfg)

    mask = ts.t >= ts.t[-1] - cycles * period
    t = ts.t[mask]
    return ProbeResult(
        omega,
        sinusoid_amplitude(ts.x1[mask], t, omega) / amplitude,
        sinusoid_amplitude(ts.x2[mask], t, omega) / amplitude,
    )
