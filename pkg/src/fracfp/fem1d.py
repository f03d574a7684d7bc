"""Piecewise-linear finite elements on a uniform 1-D mesh.

Homogeneous Dirichlet conditions are built in: operators and nodal vectors
only carry the ``P - 1`` interior nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "SpatialMesh",
    "TriDiagMatrix",
    "BreakdownError",
    "assemble_mass",
    "assemble_B",
    "load_vector",
    "interpolate",
    "l2_norm",
    "first_moment",
    "thomas_solve",
    "gauss_rule",
]


class BreakdownError(ArithmeticError):
    """Zero pivot met during tridiagonal elimination."""

    def __init__(self, row: int, pivot: float):
        super().__init__(f"tridiagonal elimination broke down at row {row} (pivot {pivot:.3e})")
        self.row = row
        self.pivot = pivot


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to the reference interval [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@dataclass(frozen=True)
class SpatialMesh:
    x_left: float
    L: float
    P: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.P < 2:
            raise ValueError(f"need at least 2 subintervals, got P={self.P}")
        if not self.L > 0:
            raise ValueError(f"interval length must be positive, got {self.L}")
        nodes = self.x_left + self.L * np.arange(self.P + 1) / self.P
        nodes[-1] = self.x_left + self.L
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return self.L / self.P

    @property
    def x_right(self) -> float:
        return self.x_left + self.L

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def ndof(self) -> int:
        return self.P - 1

    def element_points(self, order: int) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points, shape (P, order), and reference weights per element."""
        xi, w = gauss_rule(order)
        return self.nodes[:-1, None] + self.h * xi[None, :], w


@dataclass(frozen=True)
class TriDiagMatrix:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = self.diag.size
        if self.sub.size != max(n - 1, 0) or self.sup.size != max(n - 1, 0):
            raise ValueError("off-diagonals must have one entry fewer than the diagonal")

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.sup * v[1:]
        out[1:] += self.sub * v[:-1]
        return out

    def scaled_add(self, other: TriDiagMatrix, c: float) -> TriDiagMatrix:
        """Return ``self + c * other``."""
        return TriDiagMatrix(self.sub + c * other.sub, self.diag + c * other.diag,
                             self.sup + c * other.sup)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.sup)
        row[1:] += np.abs(self.sub)
        return float(row.max())


def assemble_mass(mesh: SpatialMesh) -> TriDiagMatrix:
    n, h = mesh.ndof, mesh.h
    off = np.full(n - 1, h / 6.0)
    return TriDiagMatrix(off, np.full(n, 2.0 * h / 3.0), off.copy())


def assemble_stiffness(mesh: SpatialMesh) -> TriDiagMatrix:
    n, h = mesh.ndof, mesh.h
    off = np.full(n - 1, -1.0 / h)
    return TriDiagMatrix(off, np.full(n, 2.0 / h), off.copy())


def assemble_convection(mesh: SpatialMesh, F, t: float) -> TriDiagMatrix:
    """Entries ``-(F(., t) phi_q, phi_p')`` by 2-point Gauss on each element."""
    x, w = mesh.element_points(2)
    xi, _ = gauss_rule(2)
    f = np.broadcast_to(np.asarray(F(x, t), dtype=float), x.shape)
    # Per element: (F, left hat)/h and (F, right hat)/h. Hat slopes are -1/h, +1/h.
    fl = f @ (w * (1.0 - xi))
    fr = f @ (w * xi)
    diag = np.zeros(mesh.P + 1)
    diag[:-1] -= fl
    diag[1:] += fr
    return TriDiagMatrix(-fl[1:-1], -diag[1:-1], fr[1:-1])


def assemble_B(mesh: SpatialMesh, F, t_n: float, stiffness: TriDiagMatrix | None = None) -> TriDiagMatrix:
    """``B_pq = (phi_q', phi_p') - (F(., t_n) phi_q, phi_p')`` on interior nodes.

    The stiffness part does not depend on time and can be passed in.
    """
    if stiffness is None:
        stiffness = assemble_stiffness(mesh)
    return stiffness.scaled_add(assemble_convection(mesh, F, t_n), 1.0)


def load_vector(mesh: SpatialMesh, g, interval: tuple[float, float],
                space_order: int = 3, time_order: int = 10) -> np.ndarray:
    """``G_p = int_{t0}^{t1} (g(., t), phi_p) dt`` by tensor Gauss quadrature.

    The default 10-point rule in time keeps the error from an integrable
    ``t**(alpha-1)`` singularity in the first step well below the time
    discretisation error.
    """
    t0, t1 = interval
    x, w = mesh.element_points(space_order)
    xi, _ = gauss_rule(space_order)
    tau, wt = gauss_rule(time_order)
    k = t1 - t0
    wl, wr = w * (1.0 - xi), w * xi
    G = np.zeros(mesh.P + 1)
    for s, ws in zip(t0 + k * tau, wt):
        gv = np.broadcast_to(np.asarray(g(x, s), dtype=float), x.shape)
        G[:-1] += ws * (gv @ wl)
        G[1:] += ws * (gv @ wr)
    return k * mesh.h * G[1:-1]


def interpolate(mesh: SpatialMesh, f) -> np.ndarray:
    return np.array(np.broadcast_to(np.asarray(f(mesh.interior), dtype=float), (mesh.ndof,)))


def _full(mesh: SpatialMesh, v: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.asarray(v, dtype=float), [0.0]))


def evaluate(mesh: SpatialMesh, v: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Value of the piecewise-linear function with interior values ``v`` at ``x``."""
    return np.interp(x, mesh.nodes, _full(mesh, v))


def l2_norm(mesh: SpatialMesh, v: np.ndarray | None = None, f=None, order: int = 3,
            composite: bool = True) -> float:
    """``||v_h - f||`` in L2, where either operand may be omitted.

    ``v`` is a nodal vector, ``f`` a vectorised callable of ``x``. With
    ``composite=True`` an ``order``-point Gauss rule is applied on every
    element; otherwise a single ``order``-point rule spans the whole interval.
    """
    if composite:
        x, w = mesh.element_points(order)
        w = mesh.h * np.broadcast_to(w, x.shape)
    else:
        xi, wi = gauss_rule(order)
        x, w = mesh.x_left + mesh.L * xi, mesh.L * wi
    vals = np.zeros_like(x)
    if v is not None:
        vals += evaluate(mesh, v, x)
    if f is not None:
        vals -= np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    return math.sqrt(float(np.sum(w * vals**2)))


def integral(mesh: SpatialMesh, v: np.ndarray) -> float:
    """Exact integral of the piecewise-linear function ``v``."""
    return mesh.h * float(np.sum(v))


def first_moment(mesh: SpatialMesh, U: np.ndarray) -> float:
    """Exact ``int x U_h(x) dx`` over the mesh."""
    full = _full(mesh, U)
    a, b = mesh.nodes[:-1], mesh.nodes[1:]
    ua, ub = full[:-1], full[1:]
    # int_a^b x (ua (b-x) + ub (x-a)) / h dx = h/6 (ua (2a + b) + ub (a + 2b))
    return mesh.h / 6.0 * float(np.sum(ua * (2 * a + b) + ub * (a + 2 * b)))


def thomas_solve(A: TriDiagMatrix, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` by elimination without pivoting.

    Raises :class:`BreakdownError` on a (numerically) zero pivot.
    """
    n = A.size
    if len(b) != n:
        raise ValueError(f"right-hand side has length {len(b)}, expected {n}")
    sub, diag, sup = A.sub.tolist(), A.diag.tolist(), A.sup.tolist()
    rhs = list(map(float, b))
    scale = A.norm_inf()
    tiny = 1e-14 * scale if scale > 0 else 0.0
    cp = [0.0] * n
    dp = [0.0] * n
    piv = diag[0]
    if abs(piv) <= tiny:
        raise BreakdownError(0, piv)
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        s = sub[i - 1]
        piv = diag[i] - s * cp[i - 1]
        if abs(piv) <= tiny or piv != piv:
            raise BreakdownError(i, piv)
        if i < n - 1:
            cp[i] = sup[i] / piv
        dp[i] = (rhs[i] - s * dp[i - 1]) / piv
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return np.array(x)
