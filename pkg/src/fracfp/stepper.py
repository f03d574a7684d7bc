"""Graded time meshes and the implicit fractional time-marching scheme.

At step ``n`` the scheme solves

    (M + w_nn B^n) U^n = M U^{n-1} + G^n - B^n sum_{j<n} (w_nj - w_{n-1,j}) U^j

where ``M`` is the mass matrix, ``B^n`` the convection-diffusion operator at
``t_n`` and ``w`` the convolution weights from :mod:`fracfp.fracops`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import fem1d
from .fem1d import SpatialMesh, TriDiagMatrix
from .fracops import ConvolutionWeights, iter_weights

__all__ = [
    "TemporalMesh",
    "Trajectory",
    "StepError",
    "build_temporal_mesh",
    "step",
    "solve",
]

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    """A time step could not be completed; usually the step is too large."""

    def __init__(self, n: int, cause: Exception):
        super().__init__(f"time step too large: step {n} failed ({cause})")
        self.n = n


@dataclass(frozen=True)
class TemporalMesh:
    N: int
    T: float
    gamma: float = 1.0
    t: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"need at least one time step, got N={self.N}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got T={self.T}")
        if self.gamma < 1:
            raise ValueError(f"grading exponent must be >= 1, got gamma={self.gamma}")
        t = (np.arange(self.N + 1) / self.N) ** self.gamma * self.T
        t[0], t[-1] = 0.0, self.T
        t.flags.writeable = False
        object.__setattr__(self, "t", t)

    @property
    def k(self) -> np.ndarray:
        """Step sizes k_1..k_N."""
        return np.diff(self.t)

    @property
    def k_max(self) -> float:
        return float(self.k.max())

    @property
    def uniform(self) -> bool:
        return self.gamma == 1.0


def build_temporal_mesh(N: int, T: float, gamma: float = 1.0) -> TemporalMesh:
    """Mesh with ``t_n = (n/N)**gamma * T``."""
    return TemporalMesh(N, T, gamma)


@dataclass
class Trajectory:
    smesh: SpatialMesh
    tmesh: TemporalMesh
    states: np.ndarray  # (N + 1, P - 1); row n holds U^n

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, n: int) -> np.ndarray:
        return self.states[n]

    @property
    def times(self) -> np.ndarray:
        return self.tmesh.t


def step(
    n: int,
    history: np.ndarray,
    M: TriDiagMatrix,
    B: TriDiagMatrix,
    weights: ConvolutionWeights,
    G: np.ndarray | None,
) -> np.ndarray:
    """Advance to ``U^n`` given ``history[j] = U^j`` for ``j < n``."""
    if weights.n != n:
        raise ValueError(f"weights are for step {weights.n}, not {n}")
    if history.shape[0] < n:
        raise ValueError(f"step {n} needs {n} previous states, got {history.shape[0]}")
    rhs = M.matvec(history[n - 1])
    if G is not None:
        rhs += G
    if n > 1:
        # B^n is linear, so apply it once to the weighted sum of past states
        memory = weights.diff @ history[1:n]
        rhs -= B.matvec(memory)
    A = M.scaled_add(B, weights.diag)
    try:
        return fem1d.thomas_solve(A, rhs)
    except fem1d.BreakdownError as exc:
        raise StepError(n, exc) from exc


def solve(
    problem,
    smesh: SpatialMesh,
    tmesh: TemporalMesh,
    uniform_weights: bool | None = None,
    load_time_order: int = 10,
) -> Trajectory:
    """March ``problem`` from ``t = 0`` to ``t = T`` on the given meshes.

    ``problem`` needs ``alpha``, ``F(x, t)``, ``g(x, t)`` (or ``None`` for a zero
    source) and ``initial_values(smesh)``.
    """
    states = np.empty((tmesh.N + 1, smesh.ndof))
    states[0] = problem.initial_values(smesh)
    M = fem1d.assemble_mass(smesh)
    K = fem1d.assemble_stiffness(smesh)
    t = tmesh.t
    for w in iter_weights(tmesh, problem.alpha, uniform_weights):
        n = w.n
        B = fem1d.assemble_B(smesh, problem.F, t[n], stiffness=K)
        G = None
        if problem.g is not None:
            G = fem1d.load_vector(smesh, problem.g, (t[n - 1], t[n]), time_order=load_time_order)
        states[n] = step(n, states, M, B, w, G)
    log.debug("solved N=%d P=%d alpha=%g gamma=%g", tmesh.N, smesh.P, problem.alpha, tmesh.gamma)
    return Trajectory(smesh, tmesh, states)
