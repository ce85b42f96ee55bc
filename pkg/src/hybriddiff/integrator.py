import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Fixed-step simulation of a differentiator against a measured signal
#
# simulate      API, runs one family over [0, t_end] and returns a truth-annotated TimeSeries
# step          one Euler / RK4 step with the measured input held (or staged, see hold_input)
#########################################################################################################
from typing import Optional, List, Dict, Any, Tuple, IO
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .common_utils import grid_size
from .differentiators import Family, DiffSystem, State, Rhs, make_system
from .errors import NonFiniteState
from .signals import SignalSpec, NoiseSpec, clean_path, clean_value_fn, noise_path

CSV_COLUMNS = ["t", "x1", "x2", "v0", "dv0", "v_meas", "e1", "e2"]
CSV_FORMAT = "%.12g"

class Method(str, Enum):
    EULER   = "euler"
    RK4     = "rk4"

####################################################################
# Models
####################################################################
class ScheduleEntry(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float                    # switch time, seconds
    params: Any                 # full params model of the family, active from the first grid point >= t

class SimConfig(BaseModel):
    """
    param_schedule holds the switches after t=0; the t=0 entry is the params
    argument of simulate().
    """
    model_config = ConfigDict(extra="forbid")

    dt: float = Field(default=1e-4, gt=0.0)
    t_end: float = Field(default=10.0, gt=0.0)
    method: Method = Method.RK4
    x0: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    hold_input: bool = True
    param_schedule: List[ScheduleEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self)->"SimConfig":
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if len(self.x0) == 0 or len(self.x0) > 2:
            raise ValueError("x0 must have 1 or 2 components")
        if not all(math.isfinite(x) for x in self.x0):
            raise ValueError("x0 must be finite")
        last_t = 0.0
        for entry in self.param_schedule:
            if not entry.t > last_t:
                raise ValueError("schedule switch times must be strictly increasing and after t=0")
            last_t = entry.t
        return self

    @property
    def n_samples(self)->int:
        return grid_size(self.t_end, self.dt)


class TimeSeries:
    family: Optional[Family]
    dt: float
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    v0: np.ndarray
    dv0: np.ndarray
    v_meas: np.ndarray
    aux: Dict[str, np.ndarray]      # family-specific extra columns, e.g. GRED sub-states

    def __init__(
        self,
        *,
        t:np.ndarray,
        x1:np.ndarray,
        x2:np.ndarray,
        v0:np.ndarray,
        dv0:np.ndarray,
        v_meas:np.ndarray,
        dt:float,
        family:Optional[Family]=None,
        aux:Optional[Dict[str, np.ndarray]]=None
    ):
        self.t = t
        self.x1 = x1
        self.x2 = x2
        self.v0 = v0
        self.dv0 = dv0
        self.v_meas = v_meas
        self.dt = dt
        self.family = family
        self.aux = {} if aux is None else aux

    def __len__(self):
        return len(self.t)

    def __repr__(self):
        family = None if self.family is None else self.family.value
        return f"TimeSeries(family={family}, n={len(self)}, dt={self.dt})"

    def to_array(self)->np.ndarray:
        return np.column_stack([
            self.t, self.x1, self.x2, self.v0, self.dv0, self.v_meas,
            self.x1 - self.v0, self.x2 - self.dv0
        ])

    def write_csv(self, f:IO[str]):
        np.savetxt(f, self.to_array(), fmt=CSV_FORMAT, delimiter=",", header=",".join(CSV_COLUMNS), comments="", newline="\n")

    def save_csv(self, filename:str):
        with open(filename, "wt", newline="") as f:
            self.write_csv(f)


####################################################################
# Stepping
####################################################################
def step(
    method:Method,
    rhs:Rhs,
    state:State,
    v_meas_held:float,
    dt:float,
    *,
    v_mid:Optional[float]=None,
    v_end:Optional[float]=None
)->State:
    """
    Advance state by one step.
    :param v_meas_held: measured input at the start of the step, held through all RK4 stages
    :param v_mid, v_end: if given, input used at the half-step and end stages instead of the held value
    """
    if method == Method.EULER:
        k1 = rhs(state, v_meas_held)
        return tuple(x + dt * d for x, d in zip(state, k1))

    v_mid = v_meas_held if v_mid is None else v_mid
    v_end = v_meas_held if v_end is None else v_end
    half = 0.5 * dt
    k1 = rhs(state, v_meas_held)
    k2 = rhs(tuple(x + half * d for x, d in zip(state, k1)), v_mid)
    k3 = rhs(tuple(x + half * d for x, d in zip(state, k2)), v_mid)
    k4 = rhs(tuple(x + dt * d for x, d in zip(state, k3)), v_end)
    sixth = dt / 6.0
    return tuple(
        x + sixth * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        for x, d1, d2, d3, d4 in zip(state, k1, k2, k3, k4)
    )

def _is_finite(state:State)->bool:
    return all(math.isfinite(x) for x in state)

def _switch_index(t_switch:float, dt:float)->int:
    # first grid index k with k*dt >= t_switch
    return int(math.ceil(t_switch / dt - 1e-9))

def initial_state(system:DiffSystem, x0:List[float])->State:
    pair = (float(x0[0]), float(x0[1]) if len(x0) > 1 else 0.0)
    if system.n_states == 4:
        return pair + pair
    return pair

####################################################################
# Simulation
####################################################################
def simulate(family:Family, params:BaseModel, signal:SignalSpec, noise:NoiseSpec, cfg:SimConfig)->TimeSeries:
    log_prefix = "[integrator] simulate"
    _check_levant_gain(family, params, signal)

    schedule:List[Tuple[int, DiffSystem]] = [(0, make_system(family, params))]
    for entry in cfg.param_schedule:
        schedule.append((_switch_index(entry.t, cfg.dt), make_system(family, entry.params)))

    n = cfg.n_samples
    dt = cfg.dt
    t = np.arange(n) * dt
    v0, dv0, _ = clean_path(signal, t)
    v_meas = v0 + noise_path(noise, n, dt)
    v_meas_list = v_meas.tolist()
    delta_list = (v_meas - v0).tolist()
    clean_value = None if cfg.hold_input else clean_value_fn(signal)

    logger.debug(f"{log_prefix}: family={family.value}, n={n}, dt={dt}, method={cfg.method.value}, hold_input={cfg.hold_input}")

    schedule_pos = 0
    system = schedule[0][1]
    state = initial_state(system, cfg.x0)
    x1 = [0.0] * n
    x2 = [0.0] * n
    raw:List[State] = [state] * n if system.n_states > 2 else []

    for k in range(n):
        while schedule_pos + 1 < len(schedule) and schedule[schedule_pos + 1][0] <= k:
            schedule_pos += 1
            system = schedule[schedule_pos][1]
            logger.debug(f"{log_prefix}: switched params at t={k * dt:.9g}: {system!r}")

        x1[k], x2[k] = system.output(state)
        if raw:
            raw[k] = state
        if k == n - 1:
            break

        if clean_value is None:
            new_state = step(cfg.method, system.rhs, state, v_meas_list[k], dt)
        else:
            tk = k * dt
            delta = delta_list[k]
            new_state = step(
                cfg.method, system.rhs, state, v_meas_list[k], dt,
                v_mid=clean_value(tk + 0.5 * dt) + delta,
                v_end=clean_value(tk + dt) + delta
            )
        if not _is_finite(new_state):
            logger.error(f"{log_prefix}: non-finite state at t={(k + 1) * dt:.9g}")
            raise NonFiniteState(t=(k + 1) * dt, last_t=k * dt, last_state=tuple(state))
        state = new_state

    aux = {}
    if raw:
        raw_arr = np.asarray(raw)
        for i, name in enumerate(("x11", "x12", "x21", "x22")):
            aux[name] = raw_arr[:, i]

    return TimeSeries(
        t=t, x1=np.asarray(x1), x2=np.asarray(x2), v0=v0, dv0=dv0, v_meas=v_meas,
        dt=dt, family=family, aux=aux
    )

def _check_levant_gain(family:Family, params:BaseModel, signal:SignalSpec):
    if family == Family.LEVANT:
        lambda1 = params.lambda1
    elif family == Family.GRED:
        lambda1 = params.levant.lambda1
    else:
        return
    if lambda1 <= signal.L2:
        logger.warning(f"[integrator] simulate: lambda1={lambda1} does not exceed L2={signal.L2}, exact convergence is not guaranteed")
