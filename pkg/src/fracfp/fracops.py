"""Fractional kernels, convolution weights and the Mittag-Leffler function.

The Riemann-Liouville kernel is ``omega(beta, t) = t**(beta - 1) / Gamma(beta)``.
Integrating the order-``alpha`` kernel over a time step gives the weights used
by the implicit scheme in :mod:`fracfp.stepper`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "KernelParams",
    "ConvolutionWeights",
    "omega",
    "a_seq",
    "weights_row",
    "iter_weights",
    "mittag_leffler",
    "conv_quadratic_form",
]


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def omega(beta, t):
    """Kernel ``t**(beta-1)/Gamma(beta)``; accepts scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if beta <= 0:
        raise ValueError(f"kernel order must be positive, got {beta}")
    if np.any(t_arr < 0):
        raise ValueError("kernel argument must be non-negative")
    if beta < 1 and np.any(t_arr == 0):
        raise ValueError(f"omega({beta}, 0) is singular")
    out = np.power(t_arr, beta - 1.0) * special.rgamma(beta)
    return float(out) if out.ndim == 0 else out


def a_seq(alpha, m):
    """``(m+1)**alpha - m**alpha`` without cancellation for large ``m``."""
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < 0):
        raise ValueError("index must be non-negative")
    safe = np.where(m_arr > 0, m_arr, 1.0)
    out = np.where(
        m_arr > 0,
        np.power(safe, alpha) * np.expm1(alpha * np.log1p(1.0 / safe)),
        1.0,
    )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConvolutionWeights:
    """Weights ``omega_{nj}`` (j = 1..n) for step ``n`` and the previous row.

    ``row[j-1]`` holds ``omega_{nj}``; ``prev_row`` has length ``n-1``.
    """

    n: int
    row: np.ndarray
    prev_row: np.ndarray
    diff: np.ndarray  # omega_{nj} - omega_{n-1,j}, j = 1..n-1

    @property
    def diag(self) -> float:
        return float(self.row[-1])


def _integral_row(t: np.ndarray, alpha: float, n: int) -> np.ndarray:
    # omega_{1+a}(b + k) - omega_{1+a}(b) = omega_{1+a}(b) * expm1(a*log1p(k/b)),
    # with b = t_n - t_j and k = k_j; the last entry has b = 0.
    tn = t[n]
    b = tn - t[1 : n + 1]
    k = t[1 : n + 1] - t[:n]
    row = np.empty(n)
    c = special.rgamma(1.0 + alpha)
    bb = b[:-1]
    row[:-1] = c * np.power(bb, alpha) * np.expm1(alpha * np.log1p(k[:-1] / bb))
    row[-1] = c * k[-1] ** alpha
    return row


def _uniform_row(step: float, alpha: float, n: int) -> np.ndarray:
    # omega_{nj} = omega_{1+a}(k) a_{n-j}, j = 1..n
    return omega(1.0 + alpha, step) * a_seq(alpha, np.arange(n - 1, -1, -1))


def _is_uniform(mesh) -> bool:
    return getattr(mesh, "gamma", None) == 1.0


def _row(mesh, alpha: float, n: int, uniform: bool) -> np.ndarray:
    if n == 0:
        return np.empty(0)
    if uniform:
        return _uniform_row(mesh.T / mesh.N, alpha, n)
    return _integral_row(np.asarray(mesh.t, dtype=float), alpha, n)


def _difference(row: np.ndarray, prev: np.ndarray, step: float, alpha: float,
                uniform: bool) -> np.ndarray:
    n = row.size
    if uniform:
        m = np.arange(n - 1, 0, -1)
        # a_m - a_{m-1} evaluated directly from the definition of a_seq
        return omega(1.0 + alpha, step) * (a_seq(alpha, m) - a_seq(alpha, m - 1))
    return row[:-1] - prev


def weights_row(mesh, alpha: float, n: int, uniform: bool | None = None) -> ConvolutionWeights:
    """Convolution weights for step ``n`` of ``mesh`` (a :class:`TemporalMesh`).

    ``uniform=None`` uses the ``a_seq`` form whenever the mesh grading is 1;
    pass ``False`` to force the integral-difference formula.
    """
    if not 1 <= n <= mesh.N:
        raise ValueError(f"step index {n} outside 1..{mesh.N}")
    if uniform is None:
        uniform = _is_uniform(mesh)
    row = _row(mesh, alpha, n, uniform)
    prev = _row(mesh, alpha, n - 1, uniform)
    step = mesh.T / mesh.N
    return ConvolutionWeights(n, row, prev, _difference(row, prev, step, alpha, uniform))


def iter_weights(mesh, alpha: float, uniform: bool | None = None):
    """Yield :class:`ConvolutionWeights` for n = 1..N, keeping only two rows alive."""
    if uniform is None:
        uniform = _is_uniform(mesh)
    step = mesh.T / mesh.N
    prev = np.empty(0)
    for n in range(1, mesh.N + 1):
        row = _row(mesh, alpha, n, uniform)
        yield ConvolutionWeights(n, row, prev, _difference(row, prev, step, alpha, uniform))
        prev = row


# -- Mittag-Leffler ---------------------------------------------------------

# Regime switches on s = (-z)**(1/beta): the largest series term grows like
# exp(s) and the optimally truncated asymptotic remainder decays like exp(-s).
_SERIES_MAX = 9.0
_ASYMPTOTIC_MIN = 30.0
_Z_MAX = 2.0


def _ml_series(beta: float, z: np.ndarray) -> np.ndarray:
    total = np.zeros_like(z)
    comp = np.zeros_like(z)
    absz = np.abs(z)
    logz = np.log(np.where(absz > 0, absz, 1.0))
    sign = np.where(z < 0, -1.0, 1.0)
    n = 0
    while True:
        if n == 0:
            term = np.ones_like(z)
        else:
            mag = np.exp(n * logz - special.gammaln(1.0 + n * beta))
            term = np.where(absz > 0, sign**n * mag, 0.0)
        # Kahan-compensated accumulation
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        n += 1
        past_peak = n * beta > 1.0 and np.all(
            np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)
        )
        if past_peak or n > 10_000:
            return total


def _ml_asymptotic(beta: float, z: np.ndarray, kmax: int = 600) -> np.ndarray:
    # E_b(z) ~ -sum_k z**-k / Gamma(1 - k b), truncated where the envelope
    # Gamma(k b) / |z|**k of the (divergent) series is smallest.
    k = np.arange(1, kmax + 1)[:, None]
    logx = np.log(-z)[None, :]
    envelope = special.gammaln(k * beta) - k * logx
    cutoff = np.argmin(envelope, axis=0) + 1
    k = k[: cutoff.max()]
    arg = 1.0 - k * beta
    pole = (arg <= 0) & (arg == np.round(arg))
    with np.errstate(divide="ignore", over="ignore"):
        log_rg = np.where(pole, -np.inf, -special.gammaln(np.where(pole, 0.5, arg)))
    sign = special.gammasgn(np.where(pole, 0.5, arg)) * (-1.0) ** (k + 1)
    terms = sign * np.exp(log_rg - k * logx)
    terms = np.where(k <= cutoff[None, :], terms, 0.0)
    return np.sum(terms[::-1], axis=0)


def _ml_integral(beta: float, x: float) -> float:
    # E_b(-x) = sin(b pi)/(b pi) * int_0^inf x exp(-u**(1/b)) / (u^2 + 2 u x cos(b pi) + x^2) du
    c = math.cos(beta * math.pi)
    upper = 60.0**beta
    pts = [-x * c] if 0.0 < -x * c < upper else None

    def f(u):
        return x * math.exp(-(u ** (1.0 / beta))) / (u * u + 2.0 * u * x * c + x * x)

    val, _ = integrate.quad(f, 0.0, upper, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return math.sin(beta * math.pi) / (beta * math.pi) * val


def mittag_leffler(beta: float, z):
    """One-parameter Mittag-Leffler function ``E_beta(z)`` for real ``z <= 2``.

    Supports ``0 < beta <= 1``. Accepts a scalar or an array of arguments.
    Negative arguments are evaluated by the power series, an integral
    representation or the asymptotic expansion, depending on how large
    ``(-z)**(1/beta)`` is.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if np.iscomplexobj(z):
        raise ValueError("complex arguments are not supported")
    z_arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)):
        raise ValueError("argument must be finite")
    if np.any(z_arr > _Z_MAX):
        raise ValueError(f"arguments above {_Z_MAX} are not supported")
    if beta == 1.0:
        out = np.exp(z_arr)
        return float(out) if out.ndim == 0 else out

    flat = z_arr.reshape(-1)
    out = np.empty_like(flat)
    scale = np.where(flat < 0, -flat, 0.0) ** (1.0 / beta)
    if np.any(np.where(flat > 0, flat, 0.0) ** (1.0 / beta) > 700.0):
        raise ValueError("E_beta(z) overflows for this argument")

    series = (flat >= 0) | (scale <= _SERIES_MAX)
    asym = ~series & (scale >= _ASYMPTOTIC_MIN)
    middle = ~series & ~asym
    if series.any():
        out[series] = _ml_series(beta, flat[series])
    if asym.any():
        out[asym] = _ml_asymptotic(beta, flat[asym])
    for i in np.flatnonzero(middle):
        out[i] = _ml_integral(beta, -flat[i])
    out = out.reshape(z_arr.shape)
    return float(out) if out.ndim == 0 else out


def conv_quadratic_form(alpha: float, U) -> tuple[float, float]:
    """Return ``(sum_n (A U)^n U^n, 0.5 * sum_n (U^n)^2)``.

    ``(A U)^n = sum_{j<=n} a_{n-j} U^j`` is the discrete convolution with
    :func:`a_seq`; the first value never falls below the second.
    """
    u = np.asarray(U, dtype=float)
    if u.size == 0:
        return 0.0, 0.0
    a = a_seq(alpha, np.arange(u.size))
    au = np.convolve(a, u)[: u.size]
    return math.fsum(au * u), 0.5 * math.fsum(u * u)
