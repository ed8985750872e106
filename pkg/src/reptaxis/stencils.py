"""Finite-difference operators with mirror-ghost Neumann boundaries.

Every operator treats the node at a boundary as the centre of a half (or,
at corners, quarter) dual cell.  Fluxes through the physical boundary are
zero, which makes the volume-weighted sums of the Laplacian and of the taxis
divergence telescope to zero.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid
from .kinetics import chi


def _axis_slice(ndim, axis, sl):
    idx = [slice(None)] * ndim
    idx[axis] = sl
    return tuple(idx)


def neumann_laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    """3-point (1D) / 5-point (2D) Laplacian, ghosts mirrored across the boundary."""
    padded = np.pad(u, 1, mode="reflect")
    out = np.zeros(grid.shape)
    inner = [slice(1, -1)] * grid.dim
    for ax, h in enumerate(grid.spacing):
        fwd = list(inner)
        bwd = list(inner)
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(None, -2)
        out += (padded[tuple(fwd)] - 2.0 * u + padded[tuple(bwd)]) / (h * h)
    return out


def central_gradient(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Central differences, shape ``(dim, *grid.shape)``.

    With mirror ghosts the normal component on the boundary is exactly zero.
    """
    padded = np.pad(u, 1, mode="reflect")
    inner = [slice(1, -1)] * grid.dim
    comps = []
    for ax, h in enumerate(grid.spacing):
        fwd = list(inner)
        bwd = list(inner)
        fwd[ax] = slice(2, None)
        bwd[ax] = slice(None, -2)
        comps.append((padded[tuple(fwd)] - padded[tuple(bwd)]) / (2.0 * h))
    return np.stack(comps)


def face_differences(u: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Forward differences across interior faces, one array per axis."""
    return [np.diff(u, axis=ax) / h for ax, h in enumerate(grid.spacing)]


def divergence_of_face_fluxes(fluxes: list[np.ndarray], grid: Grid) -> np.ndarray:
    """Nodal divergence of per-axis face fluxes with zero flux on the boundary."""
    out = np.zeros(grid.shape)
    for ax, (F, h, n) in enumerate(zip(fluxes, grid.spacing, grid.nodes)):
        pad = [(0, 0)] * grid.dim
        pad[ax] = (1, 1)
        Fp = np.pad(F, pad)
        width = np.full(n, h)
        width[0] = width[-1] = h / 2
        shape = [1] * grid.dim
        shape[ax] = n
        hi = Fp[_axis_slice(grid.dim, ax, slice(1, None))]
        lo = Fp[_axis_slice(grid.dim, ax, slice(None, -1))]
        out += (hi - lo) / width.reshape(shape)
    return out


def taxis_face_fluxes(S: np.ndarray, I: np.ndarray, K: float, grid: Grid, mode: str = "crowding") -> list[np.ndarray]:
    """Face values of ``chi(S) S dI`` with ``chi(S) S`` taken from the upwind node.

    The susceptibles drift with velocity ``-chi(S) grad I``: for a face with
    ``dI > 0`` the upwind node is the right one, for ``dI < 0`` the left one.
    Ties and faces where the averaged sensitivity vanishes use the mean.
    """
    chi_node = chi(S, K, mode)
    q = chi_node * S
    fluxes = []
    for ax, dI in enumerate(face_differences(I, grid)):
        lo = _axis_slice(grid.dim, ax, slice(None, -1))
        hi = _axis_slice(grid.dim, ax, slice(1, None))
        q_lo, q_hi = q[lo], q[hi]
        chi_face = 0.5 * (chi_node[lo] + chi_node[hi])
        velocity = -chi_face * dI
        q_up = np.where(velocity < 0, q_hi, np.where(velocity > 0, q_lo, 0.5 * (q_lo + q_hi)))
        fluxes.append(q_up * dI)
    return fluxes


def upwind_taxis_divergence(S: np.ndarray, I: np.ndarray, K: float, grid: Grid, mode: str = "crowding") -> np.ndarray:
    """Discrete ``div(chi(S) S grad I)``, first-order upwind, no-flux boundary."""
    return divergence_of_face_fluxes(taxis_face_fluxes(S, I, K, grid, mode), grid)


def max_taxis_speed(S: np.ndarray, I: np.ndarray, K: float, grid: Grid, mode: str = "crowding") -> float:
    """``max |chi(S) dI|`` over all interior faces (face-averaged chi)."""
    chi_node = chi(S, K, mode)
    vmax = 0.0
    for ax, dI in enumerate(face_differences(I, grid)):
        lo = _axis_slice(grid.dim, ax, slice(None, -1))
        hi = _axis_slice(grid.dim, ax, slice(1, None))
        chi_face = 0.5 * (chi_node[lo] + chi_node[hi])
        vmax = max(vmax, float(np.max(np.abs(chi_face * dI))))
    return vmax
