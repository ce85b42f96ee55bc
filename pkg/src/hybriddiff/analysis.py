import logging
logger = logging.getLogger(__name__)

#########################################################################################################
# Certificates, bounds and frequency analysis
#
# build_hybrid_matrices         Pi, Omega1, Omega2, Gamma1, Gamma2 of the hybrid error system
# lyapunov_V                    V(e1, e2) = zeta^T Pi zeta
# theorem1_report / theorem2    residual bounds with hypothesis flags
# linear_decay                  decay rate / transient amplification of the linear differentiator
# describing_gain, linearize_*  describing-function equivalent linearizations
# linear_freq_response          |X21/V|, |X22/V| of the linear differentiator
#########################################################################################################
from typing import Optional, NamedTuple, List
import math

import numpy as np
from scipy import integrate, linalg, special

from .differentiators import HybridParams, LevantParams, LinearParams, pow_sgn
from .errors import AsymmetricInput, NonPositiveLambdaMin, HypothesisViolated

SYMMETRY_TOL = 1e-12
SIGMA_GRID_POINTS = 2000
SIGMA_HORIZON = 20.0            # in units of tau

####################################################################
# Results
####################################################################
class CertificateMatrices:
    Pi: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray
    Gamma1: np.ndarray
    Gamma2: np.ndarray

    def __init__(self, *, Pi:np.ndarray, Omega1:np.ndarray, Omega2:np.ndarray, Gamma1:np.ndarray, Gamma2:np.ndarray):
        self.Pi = Pi
        self.Omega1 = Omega1
        self.Omega2 = Omega2
        self.Gamma1 = Gamma1
        self.Gamma2 = Gamma2

    @property
    def lambda_min_Pi(self)->float:
        return lambda_min_sym(self.Pi)

    @property
    def lambda_max_Pi(self)->float:
        return lambda_max_sym(self.Pi)

    @property
    def lambda_min_Omega1(self)->float:
        return lambda_min_sym(self.Omega1)

    @property
    def lambda_min_Omega2(self)->float:
        return lambda_min_sym(self.Omega2)

    @property
    def positive(self)->bool:
        return self.lambda_min_Pi > 0 and self.lambda_min_Omega1 > 0 and self.lambda_min_Omega2 > 0

    def __repr__(self):
        return (
            f"CertificateMatrices(lambda_min_Pi={self.lambda_min_Pi:.6g}, "
            f"lambda_min_Omega1={self.lambda_min_Omega1:.6g}, lambda_min_Omega2={self.lambda_min_Omega2:.6g})"
        )

class SecondOrderCertificate:
    P: np.ndarray
    Q: np.ndarray
    theta: float            # exponent of V in Vdot <= -c V^theta

    def __init__(self, *, P:np.ndarray, Q:np.ndarray, theta:float):
        self.P = P
        self.Q = Q
        self.theta = theta

    @property
    def positive(self)->bool:
        return lambda_min_sym(self.P) > 0 and lambda_min_sym(self.Q) > 0

class LinearDecay:
    """
    ||e^{At}|| <= sigma1 * exp(-(lambda_/tau) t), evaluated on the time-normalized
    error system (s = t/tau, state (e1, tau*e2)) so sigma1 does not depend on tau.
    sigma1 is a grid estimate over [0, 20 tau], i.e. a lower bound of the true sup.
    """
    lambda_: float
    sigma1: float
    tau: float
    A: np.ndarray

    def __init__(self, *, lambda_:float, sigma1:float, tau:float, A:np.ndarray):
        self.lambda_ = lambda_
        self.sigma1 = sigma1
        self.tau = tau
        self.A = A

    def steady_bound(self, L2:float)->float:
        return self.tau * self.sigma1 * L2 / self.lambda_

    def __repr__(self):
        return f"LinearDecay(lambda_={self.lambda_:.6g}, sigma1={self.sigma1:.6g}, tau={self.tau})"

class LinearizationResult(NamedTuple):
    omega_n: float
    zeta: float
    amplitude: Optional[float]

class FreqResponse(NamedTuple):
    mag_track: float
    mag_deriv: float
    L_track_dB: float
    L_deriv_dB: float

class BoundReport:
    name: str
    value: float
    hypothesis_ok: bool
    failed: List[str]               # human readable failed inequalities
    lambda_min_Omega1: float
    lambda_min_Omega2: float
    gamma1_norm: float
    gamma2_norm: float
    psi1: Optional[float]
    psi2: Optional[float]

    def __init__(
        self,
        *,
        name:str,
        value:float,
        failed:List[str],
        lambda_min_Omega1:float,
        lambda_min_Omega2:float,
        gamma1_norm:float,
        gamma2_norm:float,
        psi1:Optional[float]=None,
        psi2:Optional[float]=None
    ):
        self.name = name
        self.value = value
        self.failed = failed
        self.hypothesis_ok = len(failed) == 0
        self.lambda_min_Omega1 = lambda_min_Omega1
        self.lambda_min_Omega2 = lambda_min_Omega2
        self.gamma1_norm = gamma1_norm
        self.gamma2_norm = gamma2_norm
        self.psi1 = psi1
        self.psi2 = psi2

    @property
    def flag(self)->str:
        return "OK" if self.hypothesis_ok else "FAILED-HYPOTHESIS"

    def __repr__(self):
        return f"BoundReport(name=\"{self.name}\", value={self.value:.6g}, flag={self.flag})"

class DecreaseCheck(NamedTuple):
    max_increase_rel: float         # max_k (V[k+1]-V[k]) / V[0]
    rate_fraction: float            # share of checked steps with dV/dt <= -c V + rate_tol
    rate_constant: float            # c = lambda_min(Omega2) / lambda_max(Pi)
    checked_steps: int

####################################################################
# Symmetric eigenvalues
####################################################################
def _check_symmetric(M:np.ndarray)->np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise AsymmetricInput(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise AsymmetricInput("matrix is not symmetric")
    return M

def lambda_min_sym(M:np.ndarray)->float:
    return float(np.linalg.eigvalsh(_check_symmetric(M))[0])

def lambda_max_sym(M:np.ndarray)->float:
    return float(np.linalg.eigvalsh(_check_symmetric(M))[-1])

####################################################################
# Hybrid certificate
####################################################################
def build_hybrid_matrices(p:HybridParams)->CertificateMatrices:
    """
    V = zeta^T Pi zeta and
    Vdot = -|e1|^((a-1)/2) zeta^T Omega1 zeta - zeta^T Omega2 zeta + v''(t) Gamma1 zeta
    with zeta = [|e1|^((a+1)/2) sgn(e1), e1, e2].
    """
    k1, k2, k3, k4, a = p.k1, p.k2, p.k3, p.k4, p.alpha
    Pi = 0.5 * np.array([
        [4.0 * k3 / (a + 1.0) + k1 * k1,    k1 * k2,                -k1],
        [k1 * k2,                           2.0 * k4 + k2 * k2,     -k2],
        [-k1,                               -k2,                    2.0],
    ])
    Omega1 = 0.5 * k1 * np.array([
        [2.0 * k3 + k1 * k1 * (a + 1.0),    0.0,                                -k1 * (a + 1.0)],
        [0.0,                               2.0 * k4 + k2 * k2 * (a + 5.0),     -k2 * (a + 3.0)],
        [-k1 * (a + 1.0),                   -k2 * (a + 3.0),                    a + 1.0],
    ])
    Omega2 = k2 * np.array([
        [k3 + k1 * k1 * (a + 2.0),  0.0,            0.0],
        [0.0,                       k4 + k2 * k2,   -k2],
        [0.0,                       -k2,            1.0],
    ])
    return CertificateMatrices(
        Pi=Pi,
        Omega1=Omega1,
        Omega2=Omega2,
        Gamma1=np.array([k1, k2, -2.0]),
        Gamma2=np.array([k1, k2, -1.0]),
    )

def build_second_order_certificate(k1:float, k2:float, alpha:float)->SecondOrderCertificate:
    """
    Certificate of the continuous nonlinear second-order system
        z1' = z2 - k1 |z1|^((a+1)/2) sgn(z1),   z2' = -k2 |z1|^a sgn(z1)
    (here k2 is the gain of the second equation).
    """
    if k1 <= 0 or k2 <= 0:
        raise ValueError("gains must be positive")
    a = alpha
    P = 0.5 * np.array([
        [4.0 * k2 / (a + 1.0) + k1 * k1,    -k1],
        [-k1,                               2.0],
    ])
    Q = 0.5 * k1 * np.array([
        [2.0 * k2 + k1 * k1 * (a + 1.0),    -k1 * (a + 1.0)],
        [-k1 * (a + 1.0),                   a + 1.0],
    ])
    theta = (3.0 * a + 1.0) / (2.0 * (a + 1.0))
    if not 0.0 < theta < 1.0:
        logger.warning(f"[analysis] build_second_order_certificate: theta={theta} outside (0, 1)")
    return SecondOrderCertificate(P=P, Q=Q, theta=theta)

def zeta_vector(alpha:float, e1:float, e2:float)->np.ndarray:
    return np.array([pow_sgn(e1, (alpha + 1.0) / 2.0), e1, e2])

def lyapunov_V(p:HybridParams, e1:float, e2:float)->float:
    a = p.alpha
    z = p.k1 * pow_sgn(e1, (a + 1.0) / 2.0) + p.k2 * e1 - e2
    return (
        (2.0 * p.k3 / (a + 1.0)) * abs(e1) ** (a + 1.0)
        + p.k4 * e1 * e1
        + 0.5 * e2 * e2
        + 0.5 * z * z
    )

def lyapunov_trace(p:HybridParams, e1:np.ndarray, e2:np.ndarray)->np.ndarray:
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    a = p.alpha
    s = np.sign(e1) * np.abs(e1) ** ((a + 1.0) / 2.0)
    z = p.k1 * s + p.k2 * e1 - e2
    return (2.0 * p.k3 / (a + 1.0)) * np.abs(e1) ** (a + 1.0) + p.k4 * e1 * e1 + 0.5 * e2 * e2 + 0.5 * z * z

def lyapunov_decrease_check(
    p:HybridParams,
    e1:np.ndarray,
    e2:np.ndarray,
    dt:float,
    *,
    rate_tol:float=1e-6,
    floor_rel:float=1e-6
)->DecreaseCheck:
    """
    Check a sampled autonomous trajectory (v == 0) against the certificate.
    The rate inequality is checked on steps with V[k] > floor_rel * V[0]; below that the
    sampled trajectory sits in the discretization residual around the origin.
    """
    V = lyapunov_trace(p, e1, e2)
    mats = build_hybrid_matrices(p)
    c = mats.lambda_min_Omega2 / mats.lambda_max_Pi
    dV = np.diff(V)
    V0 = V[0] if V[0] > 0 else 1.0
    max_increase_rel = float(np.max(dV) / V0) if len(dV) else 0.0

    mask = V[:-1] > floor_rel * V0
    checked = int(np.count_nonzero(mask))
    if checked == 0:
        return DecreaseCheck(max_increase_rel, 1.0, c, 0)
    ok = (dV[mask] / dt) <= (-c * V[:-1][mask] + rate_tol)
    return DecreaseCheck(max_increase_rel, float(np.count_nonzero(ok)) / checked, c, checked)

####################################################################
# Theorem 1 / Theorem 2 bounds
####################################################################
def _theorem1_value(alpha:float, ratio:float)->float:
    if ratio == 0.0:
        return 0.0
    if alpha == 0.0:
        # exponent (a+1)/(2a) -> infinity
        if ratio < 1.0:
            return 0.0
        return 1.0 if ratio == 1.0 else math.inf
    return ratio ** ((alpha + 1.0) / (2.0 * alpha))

def theorem1_report(p:HybridParams, L2:float)->BoundReport:
    mats = build_hybrid_matrices(p)
    lmin1 = mats.lambda_min_Omega1
    lmin2 = mats.lambda_min_Omega2
    g1 = float(np.linalg.norm(mats.Gamma1))
    g2 = float(np.linalg.norm(mats.Gamma2))
    failed = []
    if lmin1 <= 0:
        failed.append(f"lambda_min(Omega1)={lmin1:.6g} > 0")
        value = math.inf
    else:
        ratio = L2 * g1 / lmin1
        if ratio >= 1.0:
            failed.append(f"lambda_min(Omega1)={lmin1:.6g} > L2*||Gamma1||={L2 * g1:.6g}")
        value = _theorem1_value(p.alpha, ratio)
    return BoundReport(
        name="theorem1", value=value, failed=failed,
        lambda_min_Omega1=lmin1, lambda_min_Omega2=lmin2, gamma1_norm=g1, gamma2_norm=g2
    )

def steady_bound_theorem1(p:HybridParams, L2:float)->float:
    """
    ||zeta||_2 <= (L2 ||Gamma1||_2 / lambda_min(Omega1))^((a+1)/(2a)) after finite time.
    """
    report = theorem1_report(p, L2)
    if report.lambda_min_Omega1 <= 0:
        raise NonPositiveLambdaMin(f"lambda_min(Omega1)={report.lambda_min_Omega1:.6g}, certificate fails")
    if not report.hypothesis_ok:
        logger.warning(f"[analysis] steady_bound_theorem1: {report.failed[0]} does not hold, bound={report.value:.6g}")
    return report.value

def psi1(p:HybridParams, eps:float, gamma2_norm:float)->float:
    a = p.alpha
    inner = p.k1 * 2.0 ** ((1.0 - a) / 2.0) * pow_sgn(eps, (a + 1.0) / 2.0) + p.k2 * eps
    return (2.0 * p.k3 + 0.5 * p.k1 * (a + 1.0) * gamma2_norm) * inner

def psi2(p:HybridParams, eps:float, gamma2_norm:float)->float:
    a = p.alpha
    inner = p.k1 * 2.0 ** ((1.0 - a) / 2.0) * pow_sgn(eps, (a + 1.0) / 2.0) + p.k2 * eps
    outer = p.k3 * 2.0 ** (1.0 - a) * pow_sgn(eps, a) + p.k4 * eps
    return (2.0 * p.k4 + p.k2 * gamma2_norm) * inner + (1.0 + gamma2_norm) * outer

def theorem2_report(p:HybridParams, L2:float, eps:float)->BoundReport:
    mats = build_hybrid_matrices(p)
    lmin1 = mats.lambda_min_Omega1
    lmin2 = mats.lambda_min_Omega2
    g1 = float(np.linalg.norm(mats.Gamma1))
    g2 = float(np.linalg.norm(mats.Gamma2))
    p1 = psi1(p, eps, g2)
    p2 = psi2(p, eps, g2)
    margin1 = lmin1 - L2 * g1

    failed = []
    if margin1 <= 0:
        failed.append(f"lambda_min(Omega1)={lmin1:.6g} > L2*||Gamma1||={L2 * g1:.6g}")
    if lmin2 <= 0:
        failed.append(f"lambda_min(Omega2)={lmin2:.6g} > 0")

    if failed:
        value = math.inf
    else:
        value = max(p1 / margin1, p2 / lmin2)
    return BoundReport(
        name="theorem2", value=value, failed=failed,
        lambda_min_Omega1=lmin1, lambda_min_Omega2=lmin2, gamma1_norm=g1, gamma2_norm=g2,
        psi1=p1, psi2=p2
    )

def noise_bound_theorem2(p:HybridParams, L2:float, eps:float)->float:
    report = theorem2_report(p, L2, eps)
    if not report.hypothesis_ok:
        raise HypothesisViolated("; ".join(report.failed))
    return report.value

####################################################################
# Linear differentiator
####################################################################
def linear_decay(p:LinearParams)->LinearDecay:
    tau = p.tau
    A = np.array([[-p.a1 / tau, 1.0], [-p.a2 / (tau * tau), 0.0]])
    # time-normalized error system: d/ds (e1, tau e2) = A_hat (e1, tau e2)
    A_hat = np.array([[-p.a1, 1.0], [-p.a2, 0.0]])
    lam = -float(np.max(np.linalg.eigvals(A_hat).real))

    s = np.linspace(0.0, SIGMA_HORIZON, SIGMA_GRID_POINTS)
    expm_stack = linalg.expm(s[:, None, None] * A_hat[None, :, :])
    norms = np.linalg.norm(expm_stack, ord=2, axis=(1, 2))
    sigma1 = max(1.0, float(np.max(norms * np.exp(lam * s))))
    return LinearDecay(lambda_=lam, sigma1=sigma1, tau=tau, A=A)

def linear_freq_response(p:LinearParams, omega:float)->FreqResponse:
    s = 1j * omega
    b1 = p.a1 / p.tau
    b2 = p.a2 / (p.tau * p.tau)
    den = s * s + b1 * s + b2
    mag_track = abs((b1 * s + b2) / den)
    mag_deriv = abs(b2 * s / den)
    return FreqResponse(mag_track, mag_deriv, 20.0 * math.log10(mag_track), 20.0 * math.log10(mag_deriv))

def bode_slope(p:LinearParams, omega_lo:float, omega_hi:float)->tuple:
    """
    dB/decade slopes (tracking, derivative) between two frequencies.
    """
    lo = linear_freq_response(p, omega_lo)
    hi = linear_freq_response(p, omega_hi)
    decades = math.log10(omega_hi / omega_lo)
    return (hi.L_track_dB - lo.L_track_dB) / decades, (hi.L_deriv_dB - lo.L_deriv_dB) / decades

####################################################################
# Describing functions
####################################################################
def describing_gain(pexp:float)->float:
    """
    c(p) = (2/pi) * int_0^pi |sin th|^(p+1) dth = (2/pi) * B((p+2)/2, 1/2).
    The describing function of |e|^p sgn(e) at amplitude A is c(p) * A^(p-1).
    """
    if pexp < 0:
        raise ValueError("pexp must be >= 0")
    return float(2.0 / math.pi * special.beta((pexp + 2.0) / 2.0, 0.5))

def describing_gain_quad(pexp:float)->float:
    value, _ = integrate.quad(lambda th: math.sin(th) ** (pexp + 1.0), 0.0, math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 / math.pi * value

def linearize_levant(p:LevantParams, A:float)->LinearizationResult:
    if A <= 0:
        raise ValueError("amplitude must be positive")
    omega_n = 2.0 * math.sqrt(p.lambda1) / (math.sqrt(math.pi) * math.sqrt(A))
    zeta = p.lambda2 * describing_gain(0.5) * math.sqrt(math.pi) / (4.0 * math.sqrt(p.lambda1))
    return LinearizationResult(omega_n, zeta, A)

def linearize_linear(p:LinearParams)->LinearizationResult:
    return LinearizationResult(math.sqrt(p.a2) / p.tau, p.a1 / (2.0 * math.sqrt(p.a2)), None)

def linearize_hybrid(p:HybridParams, A:float)->LinearizationResult:
    if A <= 0:
        raise ValueError("amplitude must be positive")
    a = p.alpha
    rho1 = describing_gain((a + 1.0) / 2.0)
    rho2 = describing_gain(a)
    stiffness = p.k3 * rho2 * A ** (a - 1.0) + p.k4
    omega_n = math.sqrt(stiffness)
    zeta = (p.k1 * A ** ((a - 1.0) / 2.0) * rho1 + p.k2) / (2.0 * omega_n)
    return LinearizationResult(omega_n, zeta, A)
