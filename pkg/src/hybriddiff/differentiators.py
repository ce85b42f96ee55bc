import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Right-hand sides of every differentiator family, plus the GRED output blender
#
# Gain naming is canonical to the hybrid differentiator:
#   dx1 = x2 - k1*|e|^((a+1)/2)*sgn(e) - k2*e
#   dx2 =    - k3*|e|^a*sgn(e)         - k4*e          e = x1 - v
# i.e. k1, k3 drive the fractional-power terms and k2, k4 the linear ones.
#########################################################################################################
from typing import Tuple, Callable, NamedTuple, Union, Dict, Type
from enum import Enum
import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

class Family(str, Enum):
    HYBRID                  = "hybrid"
    LEVANT                  = "levant"
    LINEAR                  = "linear"
    NONLINEAR               = "nonlinear"
    HYBRID_DISCONTINUOUS    = "hybrid-discontinuous"
    GRED                    = "gred"
    FIRST_ORDER             = "first-order"

class FirstOrderKind(str, Enum):
    SMC     = "smc"         # xdot = -2 sgn(x)
    LINEAR  = "linear"      # xdot = -2 x
    POWER   = "power"       # xdot = -2 |x|^0.5 sgn(x)

class DiffState(NamedTuple):
    x1: float       # signal estimate
    x2: float       # derivative estimate

State = Tuple[float, ...]
Rhs = Callable[[State, float], State]

####################################################################
# Models
####################################################################
class HybridParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k1: float = Field(default=1.0, gt=0.0)
    k2: float = Field(default=1.0, gt=0.0)
    k3: float = Field(default=8.0, gt=0.0)
    k4: float = Field(default=8.0, gt=0.0)
    alpha: float = Field(default=0.2, ge=0.0, lt=1.0)

class HybridDiscontinuousParams(HybridParams):
    alpha: float = Field(default=0.0, ge=0.0, le=0.0)            # power terms fixed at 1/2 and sgn

class NonlinearParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k1: float = Field(default=6.0, gt=0.0)
    k3: float = Field(default=9.0, gt=0.0)
    alpha: float = Field(default=0.2, ge=0.0, lt=1.0)

class LevantParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lambda1: float = Field(default=28.0, gt=0.0)
    lambda2: float = Field(default=6.0, gt=0.0)

class LinearParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a1: float = Field(default=2.0, gt=0.0)
    a2: float = Field(default=1.0, gt=0.0)
    tau: float = Field(default=0.1, gt=0.0)

    @model_validator(mode="after")
    def _check(self)->"LinearParams":
        if not math.isfinite(math.sqrt(self.a2) / self.tau):
            raise ValueError("natural frequency sqrt(a2)/tau must be finite")
        return self

class GredParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    levant: LevantParams = Field(default_factory=LevantParams)
    linear: LinearParams = Field(default_factory=lambda: LinearParams(a1=0.14, a2=0.2, tau=0.1))
    eps_p: float = Field(default=1.0, gt=0.0)
    c_p: float = Field(default=0.05, gt=0.0)
    eps_d: float = Field(default=0.5, gt=0.0)
    c_d: float = Field(default=0.05, gt=0.0)

    @model_validator(mode="after")
    def _check(self)->"GredParams":
        if self.c_p >= self.eps_p:
            raise ValueError("c_p must be smaller than eps_p")
        if self.c_d >= self.eps_d:
            raise ValueError("c_d must be smaller than eps_d")
        return self

class FirstOrderParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: FirstOrderKind = FirstOrderKind.SMC

DifferentiatorParams = Union[HybridParams, HybridDiscontinuousParams, NonlinearParams, LevantParams, LinearParams, GredParams, FirstOrderParams]

FAMILY_PARAMS:Dict[Family, Type[BaseModel]] = {
    Family.HYBRID:                  HybridParams,
    Family.HYBRID_DISCONTINUOUS:    HybridDiscontinuousParams,
    Family.NONLINEAR:               NonlinearParams,
    Family.LEVANT:                  LevantParams,
    Family.LINEAR:                  LinearParams,
    Family.GRED:                    GredParams,
    Family.FIRST_ORDER:             FirstOrderParams,
}

####################################################################
# Elementary nonlinearity
####################################################################
def pow_sgn(x:float, p:float)->float:
    """
    |x|^p * sgn(x), with sgn(0) = 0.
    """
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** p, x)

def sgn(x:float)->float:
    if x == 0.0:
        return 0.0
    return math.copysign(1.0, x)

####################################################################
# Right-hand sides
####################################################################
def hybrid_rhs(p:HybridParams, s:DiffState, v_meas:float)->Tuple[float, float]:
    e = s[0] - v_meas
    dx1 = s[1] - p.k1 * pow_sgn(e, (p.alpha + 1.0) / 2.0) - p.k2 * e
    dx2 = -p.k3 * pow_sgn(e, p.alpha) - p.k4 * e
    return dx1, dx2

def hybrid_discontinuous_rhs(p:HybridDiscontinuousParams, s:DiffState, v_meas:float)->Tuple[float, float]:
    e = s[0] - v_meas
    dx1 = s[1] - p.k1 * pow_sgn(e, 0.5) - p.k2 * e
    dx2 = -p.k3 * sgn(e) - p.k4 * e
    return dx1, dx2

def nonlinear_rhs(p:NonlinearParams, s:DiffState, v_meas:float)->Tuple[float, float]:
    e = s[0] - v_meas
    dx1 = s[1] - p.k1 * pow_sgn(e, (p.alpha + 1.0) / 2.0)
    dx2 = -p.k3 * pow_sgn(e, p.alpha)
    return dx1, dx2

def levant_rhs(p:LevantParams, s:DiffState, v_meas:float)->Tuple[float, float]:
    e = s[0] - v_meas
    dx1 = s[1] - p.lambda2 * pow_sgn(e, 0.5)
    dx2 = -p.lambda1 * sgn(e)
    return dx1, dx2

def linear_rhs(p:LinearParams, s:DiffState, v_meas:float)->Tuple[float, float]:
    e = s[0] - v_meas
    dx1 = s[1] - (p.a1 / p.tau) * e
    dx2 = -(p.a2 / (p.tau * p.tau)) * e
    return dx1, dx2

def first_order_rhs(kind:FirstOrderKind, x:float)->float:
    if kind == FirstOrderKind.SMC:
        return -2.0 * sgn(x)
    if kind == FirstOrderKind.LINEAR:
        return -2.0 * x
    return -2.0 * pow_sgn(x, 0.5)

####################################################################
# GRED blending
####################################################################
def gred_weight(e:float, eps:float, c:float)->float:
    a = abs(e)
    if a < eps - c:
        return 0.0
    if a < eps:
        return (a - eps + c) / c
    return 1.0

def gred_output(levant_state:DiffState, linear_state:DiffState, p:GredParams)->Tuple[float, float]:
    x11, x12 = levant_state
    x21, x22 = linear_state
    w1 = gred_weight(x11 - x21, p.eps_p, p.c_p)
    w2 = gred_weight(x12 - x22, p.eps_d, p.c_d)
    y1 = w1 * x21 + (1.0 - w1) * x11
    y2 = w2 * x22 + (1.0 - w2) * x12
    return y1, y2

####################################################################
# Systems: a family + params bound into (state size, rhs, output)
####################################################################
class DiffSystem:
    family: Family
    params: BaseModel
    n_states: int
    rhs: Rhs
    output: Callable[[State], Tuple[float, float]]

    def __init__(self, *, family:Family, params:BaseModel, n_states:int, rhs:Rhs, output:Callable[[State], Tuple[float, float]]):
        self.family = family
        self.params = params
        self.n_states = n_states
        self.rhs = rhs
        self.output = output

    def __repr__(self):
        return f"DiffSystem(family=\"{self.family.value}\", params={self.params!r})"

def _first_two(state:State)->Tuple[float, float]:
    return state[0], state[1]

def make_system(family:Family, params:BaseModel)->DiffSystem:
    expected = FAMILY_PARAMS[family]
    if not isinstance(params, expected):
        raise TypeError(f"family {family.value} expects {expected.__name__}, got {type(params).__name__}")

    if family == Family.HYBRID:
        rhs = lambda s, v: hybrid_rhs(params, s, v)
    elif family == Family.HYBRID_DISCONTINUOUS:
        rhs = lambda s, v: hybrid_discontinuous_rhs(params, s, v)
    elif family == Family.NONLINEAR:
        rhs = lambda s, v: nonlinear_rhs(params, s, v)
    elif family == Family.LEVANT:
        rhs = lambda s, v: levant_rhs(params, s, v)
    elif family == Family.LINEAR:
        rhs = lambda s, v: linear_rhs(params, s, v)
    elif family == Family.FIRST_ORDER:
        kind = params.kind
        rhs = lambda s, v: (first_order_rhs(kind, s[0] - v), 0.0)
    else:
        return _make_gred_system(params)

    return DiffSystem(family=family, params=params, n_states=2, rhs=rhs, output=_first_two)

def _make_gred_system(params:GredParams)->DiffSystem:
    # state = (x11, x12, x21, x22): Levant pair then linear pair, both fed the same input
    levant = params.levant
    linear = params.linear

    def rhs(s:State, v:float)->State:
        d11, d12 = levant_rhs(levant, (s[0], s[1]), v)
        d21, d22 = linear_rhs(linear, (s[2], s[3]), v)
        return d11, d12, d21, d22

    def output(s:State)->Tuple[float, float]:
        return gred_output(DiffState(s[0], s[1]), DiffState(s[2], s[3]), params)

    return DiffSystem(family=Family.GRED, params=params, n_states=4, rhs=rhs, output=output)
