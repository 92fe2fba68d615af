"""Special functions and integration primitives.

Everything here is a pure function. Integrands handed to :func:`integrate`
must accept a numpy array of abscissae and return an array of the same shape.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, DomainError

__all__ = [
    "QuadratureSettings",
    "DEFAULT_SETTINGS",
    "q_function",
    "q_inverse",
    "integrate",
    "meijer_g_integral",
    "shifted_log_moment",
    "laplace_approx",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


# ---------------------------------------------------------------------------
# Gaussian tail


def q_function(x: float) -> float:
    """Upper tail probability of the standard normal, P[N(0,1) > x]."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"q_function needs a finite argument, got {x}")
    return 0.5 * math.erfc(x / _SQRT2)


def _q_inverse_guess(p: float) -> float:
    # Rational approximation for the upper-tail quantile, |error| < 4.5e-4 for p <= 0.5.
    t = math.sqrt(-2.0 * math.log(p))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return t - num / den


def q_inverse(epsilon: float) -> float:
    """Inverse of :func:`q_function`.

    A rational starting point is refined by Newton steps on ``log Q(x) = log eps``;
    working in log space keeps the iteration well conditioned deep in the tail.
    """
    eps = float(epsilon)
    if not (0.0 < eps < 1.0):
        raise DomainError(f"q_inverse needs 0 < epsilon < 1, got {epsilon}")
    if eps == 0.5:
        return 0.0
    if eps > 0.5:
        return -q_inverse(1.0 - eps)

    x = _q_inverse_guess(eps)
    log_eps = math.log(eps)
    for _ in range(8):
        q = q_function(x)
        pdf = math.exp(-0.5 * x * x) / _SQRT2PI
        step = (math.log(q) - log_eps) * q / pdf
        x += step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature (7-point Gauss embedded in 15-point Kronrod)

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point rule on [-1, 1]; gauss weights sit on the odd Kronrod indices.
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_K_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[[1, 3, 5]] = _WG[:3]
_G_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
_G_WEIGHTS[7] = _WG[3]


def _gk15_batch(f, lefts: np.ndarray, rights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    centers = 0.5 * (lefts + rights)
    half = 0.5 * (rights - lefts)
    pts = centers[:, None] + half[:, None] * _NODES[None, :]
    vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
    if not np.all(np.isfinite(vals)):
        raise DomainError("integrand returned a non-finite value")
    kron = half * (vals @ _K_WEIGHTS)
    gauss = half * (vals @ _G_WEIGHTS)
    return kron, np.abs(kron - gauss)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Integrate ``f`` over ``[lower, upper]``; ``upper`` may be ``inf``.

    A semi-infinite range is mapped onto ``[0, 1)`` with ``x = lower + u/(1-u)``
    before globally adaptive bisection. Raises :class:`ConvergenceError` when
    the tolerance is not met within ``settings.max_subdivisions`` bisections.
    """
    lower = float(lower)
    upper = float(upper)
    if not math.isfinite(lower) or math.isnan(upper):
        raise DomainError("lower limit must be finite")
    if upper < lower:
        raise DomainError("upper limit must not be below lower limit")
    if upper == lower:
        return 0.0

    if math.isinf(upper):
        def g(u):
            one_minus = 1.0 - u
            return f(lower + u / one_minus) / (one_minus * one_minus)
        a, b = 0.0, 1.0
    else:
        g = f
        a, b = lower, upper

    est, err = _gk15_batch(g, np.array([a]), np.array([b]))
    total = float(est[0])
    total_err = float(err[0])
    # heap entries: (-error, left, right, estimate)
    heap = [(-total_err, a, b, total)]
    subdivisions = 0
    while total_err > max(settings.abs_tol, settings.rel_tol * abs(total)):
        if subdivisions >= settings.max_subdivisions:
            raise ConvergenceError("quadrature did not converge", total, total_err)
        neg_err, left, right, old = heapq.heappop(heap)
        mid = 0.5 * (left + right)
        if not (left < mid < right):
            raise ConvergenceError("quadrature interval underflow", total, total_err)
        est, err = _gk15_batch(g, np.array([left, mid]), np.array([mid, right]))
        total += float(est[0] + est[1]) - old
        total_err += float(err[0] + err[1]) + neg_err
        heapq.heappush(heap, (-float(err[0]), left, mid, float(est[0])))
        heapq.heappush(heap, (-float(err[1]), mid, right, float(est[1])))
        subdivisions += 1
    # re-sum to shed the drift from incremental updates
    return math.fsum(item[3] for item in heap)


# ---------------------------------------------------------------------------
# Logarithmic moments appearing in the capacity expansion


def shifted_log_moment(i: int, inv_gamma: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """``exp(inv_gamma) * int_1^inf y**i ln(y) exp(-inv_gamma*y) dy``.

    The exponential prefactor is removed analytically (substituting ``y = 1+s``)
    so the value keeps full relative precision for large ``inv_gamma``.
    """
    if i < 0 or int(i) != i:
        raise DomainError("i must be a nonnegative integer")
    if not inv_gamma > 0:
        raise DomainError("inv_gamma must be positive")
    i = int(i)

    def integrand(s):
        return np.exp(i * np.log1p(s) - inv_gamma * s) * np.log1p(s)

    return integrate(integrand, 0.0, math.inf, settings)


def meijer_g_integral(i: int, inv_gamma: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """``int_1^inf y**i ln(y) exp(-inv_gamma*y) dy`` evaluated by quadrature.

    This is the integral representation of G^{3,0}_{2,3}(-i,-i; 0,-1-i,-1-i | inv_gamma).
    """
    return math.exp(-inv_gamma) * shifted_log_moment(i, inv_gamma, settings)


# ---------------------------------------------------------------------------
# Laplace method


def laplace_approx(
    eta: float,
    g: Callable[[float], float],
    phi: Callable[[float], float],
    t0: Optional[float] = None,
    g_second: Optional[float] = None,
    bounds: Tuple[float, float] = (1e-9, 1e3),
) -> float:
    """Laplace approximation of ``int exp(eta*g(t)) phi(t) dt``.

    ``t0`` (the maximiser of ``g``) and ``g_second`` (``g''(t0)``) are located
    numerically inside ``bounds`` when not supplied.
    """
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if t0 is None:
        res = minimize_scalar(lambda t: -g(t), bounds=bounds, method="bounded",
                              options={"xatol": 1e-12})
        t0 = float(res.x)
    if g_second is None:
        h = 1e-4 * max(1.0, abs(t0))
        g_second = (g(t0 + h) - 2.0 * g(t0) + g(t0 - h)) / (h * h)
    if not g_second < 0:
        raise DomainError("g must have a strict interior maximum (g''(t0) < 0)")
    return math.exp(eta * g(t0)) * phi(t0) * math.sqrt(2.0 * math.pi / (eta * abs(g_second)))
