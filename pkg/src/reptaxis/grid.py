"""Node-centred rectangular grids and initial-condition synthesis.

Fields are plain numpy arrays whose shape equals ``grid.shape``; array axis
``k`` runs along coordinate axis ``k`` (``ij`` indexing).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform node-centred grid on ``[0, extents[0]] x ... ``.

    The first and last node of every axis sit on the boundary.  Neumann
    conditions are realised by mirror ghosts (see :mod:`reptaxis.stencils`).
    """

    dim: int
    extents: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.extents) != self.dim or len(self.nodes) != self.dim:
            raise ValueError("extents and nodes need one entry per axis")
        if any(n < 3 for n in self.nodes):
            raise ValueError(f"need at least 3 nodes per axis, got {self.nodes}")
        if any(not (e > 0) for e in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / (n - 1) for e, n in zip(self.extents, self.nodes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(n) * h for n, h in zip(self.nodes, self.spacing)]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one array of ``grid.shape`` per axis."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def cell_volumes(self) -> np.ndarray:
        """Trapezoidal quadrature weights (dual-cell volumes) per node."""
        w = np.ones(self.shape)
        for ax, (n, h) in enumerate(zip(self.nodes, self.spacing)):
            w1 = np.full(n, h)
            w1[0] = w1[-1] = h / 2
            shape = [1] * self.dim
            shape[ax] = n
            w = w * w1.reshape(shape)
        return w

    def integrate(self, values: np.ndarray) -> float:
        # fixed summation order keeps reductions reproducible
        return float(np.sum(self.cell_volumes() * values))

    def l2_norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.integrate(values * values)))


def build_grid(dim: int, extents: Sequence[float], nodes_per_axis: Sequence[int]) -> Grid:
    return Grid(int(dim), tuple(float(e) for e in extents), tuple(int(n) for n in nodes_per_axis))


@dataclass(frozen=True)
class InitialConditionSpec:
    """Gaussian bumps for the infected density.

    ``I0 = min(1, sum_i C_i exp(-|x - c_i|^2 / (2 width)))`` and
    ``S0 = floor + (1 - floor) (1 - I0)``; ``floor = 0`` gives ``S0 = 1 - I0``.
    Note ``width`` enters as a variance, not a standard deviation.
    """

    amplitudes: tuple[float, ...] = (0.1, 0.2, 0.3)
    centers: tuple[tuple[float, ...], ...] = ((2.5, 2.5), (5.0, 7.5), (7.5, 5.0))
    width: float = 0.25
    susceptible_floor: float = 0.0

    def __post_init__(self):
        if len(self.amplitudes) != len(self.centers):
            raise ValueError("amplitudes and centers must have equal length")
        if any(c < 0 for c in self.amplitudes):
            raise ValueError("bump amplitudes must be nonnegative")
        if not self.width > 0:
            raise ValueError("bump width must be positive")
        if not 0.0 <= self.susceptible_floor <= 1.0:
            raise ValueError("susceptible_floor must lie in [0, 1]")


def synthesize_initials(grid: Grid, spec: InitialConditionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S0, I0)`` on ``grid``.

    Centres with more coordinates than ``grid.dim`` are truncated, so the
    default 2D centres project onto their x-coordinates in 1D.
    """
    xs = grid.coords()
    total = np.zeros(grid.shape)
    for amp, center in zip(spec.amplitudes, spec.centers):
        if len(center) < grid.dim:
            raise ValueError(f"bump centre {center} has fewer than {grid.dim} coordinates")
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
        total += amp * np.exp(-r2 / (2.0 * spec.width))
    I0 = np.clip(total, 0.0, 1.0)
    S0 = 1.0 - I0
    if spec.susceptible_floor > 0:
        S0 = spec.susceptible_floor + (1.0 - spec.susceptible_floor) * S0
    return S0, I0
