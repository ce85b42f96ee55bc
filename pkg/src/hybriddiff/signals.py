import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Reference signal v0(t) with analytic derivatives, and bounded measurement noise delta(t)
#########################################################################################################
from typing import Tuple, List, Callable
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_DT = 1e-4

class SignalKind(str, Enum):
    SINUSOID    = "sinusoid"
    CONSTANT    = "constant"
    POLYNOMIAL  = "polynomial"

class NoiseKind(str, Enum):
    NONE            = "none"
    SEEDED_UNIFORM  = "seeded-uniform"
    SINUSOIDAL      = "sinusoidal"

####################################################################
# Models
####################################################################
class SignalSpec(BaseModel):
    """
    v0(t) = offset + amplitude * sin(omega * t + phase)        sinusoid
    v0(t) = offset                                            constant
    v0(t) = offset + c[1] * t + c[2] * t^2                    polynomial (c[0] is added to offset)
    """
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    kind: SignalKind = SignalKind.SINUSOID
    amplitude: float = 2.0
    omega: float = 1.0
    phase: float = 0.0
    offset: float = 0.0
    coefficients: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])

    @field_validator("amplitude", "omega", "phase", "offset")
    @classmethod
    def _finite(cls, value:float)->float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @field_validator("coefficients")
    @classmethod
    def _degree_at_most_two(cls, value:List[float])->List[float]:
        if len(value) > 3:
            raise ValueError("polynomial degree must be <= 2 (at most 3 coefficients)")
        if not all(math.isfinite(c) for c in value):
            raise ValueError("coefficients must be finite")
        return list(value) + [0.0] * (3 - len(value))

    @property
    def L2(self)->float:
        return second_derivative_bound(self)


class NoiseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: NoiseKind = NoiseKind.NONE
    epsilon: float = Field(default=0.0, ge=0.0)
    noise_omega: float = 1000.0
    seed: int = 42

    @model_validator(mode="after")
    def _check(self)->"NoiseSpec":
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")
        if self.kind == NoiseKind.SINUSOIDAL and not math.isfinite(self.noise_omega):
            raise ValueError("noise_omega must be finite")
        return self


####################################################################
# Clean signal
####################################################################
def sample_clean(spec:SignalSpec, t:float)->Tuple[float, float, float]:
    if spec.kind == SignalKind.SINUSOID:
        phi = spec.omega * t + spec.phase
        s = math.sin(phi)
        c = math.cos(phi)
        return (
            spec.offset + spec.amplitude * s,
            spec.amplitude * spec.omega * c,
            -spec.amplitude * spec.omega * spec.omega * s,
        )
    if spec.kind == SignalKind.CONSTANT:
        return spec.offset, 0.0, 0.0

    c0, c1, c2 = spec.coefficients
    return (
        spec.offset + c0 + c1 * t + c2 * t * t,
        c1 + 2.0 * c2 * t,
        2.0 * c2,
    )

def clean_value_fn(spec:SignalSpec)->Callable[[float], float]:
    # scalar v0(t) only, used at integrator stage times
    if spec.kind == SignalKind.SINUSOID:
        offset, amplitude, omega, phase = spec.offset, spec.amplitude, spec.omega, spec.phase
        return lambda t: offset + amplitude * math.sin(omega * t + phase)
    return lambda t: sample_clean(spec, t)[0]

def clean_path(spec:SignalSpec, t:np.ndarray)->Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    if spec.kind == SignalKind.SINUSOID:
        phi = spec.omega * t + spec.phase
        s = np.sin(phi)
        return (
            spec.offset + spec.amplitude * s,
            spec.amplitude * spec.omega * np.cos(phi),
            -spec.amplitude * spec.omega * spec.omega * s,
        )
    if spec.kind == SignalKind.CONSTANT:
        return np.full_like(t, spec.offset), np.zeros_like(t), np.zeros_like(t)

    c0, c1, c2 = spec.coefficients
    return (
        spec.offset + c0 + c1 * t + c2 * t * t,
        c1 + 2.0 * c2 * t,
        np.full_like(t, 2.0 * c2),
    )

def second_derivative_bound(spec:SignalSpec)->float:
    """
    Exact sup over t of |v0''(t)|.
    """
    if spec.kind == SignalKind.SINUSOID:
        return abs(spec.amplitude) * spec.omega * spec.omega
    if spec.kind == SignalKind.CONSTANT:
        return 0.0
    return abs(2.0 * spec.coefficients[2])


####################################################################
# Noise
# Noise is indexed by integration step, not by continuous time: the
# seeded-uniform path is draw k of a PCG64 stream seeded with `seed`,
# held over [t_k, t_k + dt).
####################################################################
def step_index(t:float, dt:float)->int:
    return max(int(math.floor(t / dt + 1e-9)), 0)

def noise_path(noise:NoiseSpec, n:int, dt:float)->np.ndarray:
    if noise.kind == NoiseKind.NONE or noise.epsilon == 0.0:
        return np.zeros(n)
    if noise.kind == NoiseKind.SEEDED_UNIFORM:
        rng = np.random.default_rng(noise.seed)
        return rng.uniform(-noise.epsilon, noise.epsilon, size=n)
    t = np.arange(n) * dt
    return noise.epsilon * np.sin(noise.noise_omega * t)

def sample_noise(noise:NoiseSpec, t:float, dt:float=DEFAULT_DT)->float:
    if noise.kind == NoiseKind.NONE or noise.epsilon == 0.0:
        return 0.0
    if noise.kind == NoiseKind.SINUSOIDAL:
        return noise.epsilon * math.sin(noise.noise_omega * t)
    k = step_index(t, dt)
    return float(noise_path(noise, k + 1, dt)[k])
