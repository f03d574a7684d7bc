"""Concrete Fokker-Planck problems: manufactured, application and rough-data runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fem1d
from .fracops import mittag_leffler, omega

__all__ = [
    "ProblemSpec",
    "manufactured_problem",
    "application_problem",
    "random_initial_problem",
    "reference_first_moment",
    "QuadratureError",
]


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, estimate: float):
        super().__init__(f"{msg} (error estimate {estimate:.2e})")
        self.estimate = estimate


@dataclass(frozen=True)
class ProblemSpec:
    """``u_t - D u_xx + (F D u)_x = g`` on ``(x_left, x_left + L)`` with ``D = d_t^{1-alpha}``.

    ``g=None`` means a zero source. ``u0_nodal``, when given, supplies the
    discrete initial data directly instead of interpolating ``u0``.
    """

    alpha: float
    x_left: float
    L: float
    T: float
    F: Callable
    g: Callable | None
    u0: Callable | None
    exact: Callable | None = None
    u0_nodal: Callable[[fem1d.SpatialMesh], np.ndarray] | None = None
    name: str = "custom"
    kappa: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if self.L <= 0 or self.T <= 0:
            raise ValueError("domain length and final time must be positive")
        if self.u0 is None and self.u0_nodal is None:
            raise ValueError("initial data missing")

    @property
    def x_right(self) -> float:
        return self.x_left + self.L

    def mesh(self, P: int) -> fem1d.SpatialMesh:
        return fem1d.SpatialMesh(self.x_left, self.L, P)

    def initial_values(self, smesh: fem1d.SpatialMesh) -> np.ndarray:
        if self.u0_nodal is not None:
            return np.asarray(self.u0_nodal(smesh), dtype=float)
        return fem1d.interpolate(smesh, self.u0)


def manufactured_problem(alpha: float) -> ProblemSpec:
    """Exact solution ``(1 + omega_{1+alpha}(t)) sin x`` on ``(0, pi)`` with ``F = x + sin t``."""

    def F(x, t):
        return x + math.sin(t)

    def exact(x, t):
        return (1.0 + omega(1.0 + alpha, t)) * np.sin(x)

    ca, c2a = 1.0 / math.gamma(alpha), 1.0 / math.gamma(2.0 * alpha)

    def g(x, t):
        # u_t = w_a sin x and d_t^{1-a} u = (w_a + w_2a) sin x, w_b = omega(b, t)
        wa = ca * t ** (alpha - 1.0)
        d = wa + c2a * t ** (2.0 * alpha - 1.0)
        sx = np.sin(x)
        return wa * sx + d * (2.0 * sx + (x + math.sin(t)) * np.cos(x))

    return ProblemSpec(alpha, 0.0, math.pi, 1.0, F, g, np.sin, exact=exact, name="manufactured")


def _gaussian(sigma: float):
    c = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def u0(x):
        return c * np.exp(-0.5 * (np.asarray(x) / sigma) ** 2)

    return u0


def _drift(x, t):
    return -x + math.sin(t)


def _check_tail(sigma: float, L: float, tol: float = 1e-12) -> None:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    tail = _gaussian(sigma)(L)
    if tail > tol:
        raise ValueError(
            f"initial density is {tail:.2e} at x = +-{L}; widen the domain so the "
            "boundary conditions hold"
        )


def application_problem(alpha: float = 0.75, sigma: float = 0.5, L: float = 9.0,
                        T: float = 10.0) -> ProblemSpec:
    """Zero source on ``(-L, L)`` with ``F = -x + sin t`` and Gaussian initial density."""
    _check_tail(sigma, L)
    return ProblemSpec(alpha, -L, 2.0 * L, T, _drift, None, _gaussian(sigma), name="application")


def random_initial_problem(alpha: float = 0.75, seed: int = 0, L: float = 9.0,
                           T: float = 40.0) -> ProblemSpec:
    """As :func:`application_problem`, but with uniform pseudorandom nodal initial values."""

    def u0_nodal(smesh: fem1d.SpatialMesh) -> np.ndarray:
        return np.random.default_rng(seed).random(smesh.ndof)

    return ProblemSpec(alpha, -L, 2.0 * L, T, _drift, None, None, u0_nodal=u0_nodal,
                       name=f"random[{seed}]")


def _gauss_panel(f, a: float, b: float, order: int) -> float:
    x, w = fem1d.gauss_rule(order)
    return (b - a) * float(np.dot(w, f(a + (b - a) * x)))


def _adaptive_gauss(f, a: float, b: float, tol: float, order: int = 10,
                    max_panels: int = 20_000) -> tuple[float, float]:
    """Composite Gauss-Legendre with panel bisection; returns (value, error estimate)."""
    stack = [(a, b, tol)]
    total, err_total, panels = 0.0, 0.0, 0
    while stack:
        lo, hi, ptol = stack.pop()
        mid = 0.5 * (lo + hi)
        coarse = _gauss_panel(f, lo, hi, order)
        fine = _gauss_panel(f, lo, mid, order) + _gauss_panel(f, mid, hi, order)
        err = abs(fine - coarse)
        panels += 1
        if err <= ptol or hi - lo < 1e-12 * max(1.0, abs(b - a)):
            total += fine
            err_total += err
        elif panels > max_panels:
            raise QuadratureError("first-moment quadrature did not converge", err_total + err)
        else:
            stack.append((mid, hi, 0.5 * ptol))
            stack.append((lo, mid, 0.5 * ptol))
    return total, err_total


def reference_first_moment(alpha: float, t: float, tol: float = 1e-7) -> float:
    """First moment of the unbounded-domain application problem at time ``t``.

    Taking moments of the equation gives ``m' = -d_t^{1-a} m + omega_a(t) sin t``,
    whose solution is

        m(t) = (1/Gamma(a)) int_0^t E_a(-(t-s)**a) s**(a-1) sin s ds.

    The integral is evaluated after substituting ``s = v**(1/a)``, which
    removes the endpoint singularity, by adaptive composite Gauss quadrature.
    ``alpha = 1`` is accepted and gives the classical (exponential) limit.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0:
        return 0.0
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    inv = 1.0 / alpha

    def integrand(v):
        s = np.minimum(v**inv, t)
        return mittag_leffler(alpha, -((t - s) ** alpha)) * np.sin(s)

    upper = t**alpha
    # start from panels on the oscillation scale of sin s
    edges = np.linspace(0.0, upper, int(math.ceil(t / math.pi)) + 2)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = _adaptive_gauss(integrand, float(lo), float(hi), tol * alpha / len(edges))
        total += val
    return total / (alpha * math.gamma(alpha))
