"""Pointwise reaction terms, tactic sensitivity and the removed compartment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHI_MODES = ("crowding", "constant")


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients; defaults are the Figure-1 values with K=15.

    ``eps_reg`` is the regularisation added to the infected diffusion
    coefficient; ``eps_reg = 0`` runs the degenerate system.
    ``chi_mode = "constant"`` reads K as a constant sensitivity instead of
    ``K (1 - S)``.
    """

    K: float = 15.0
    lambda_S: float = 0.5
    lambda_I: float = 0.5
    mu_S: float = 0.01
    mu_I: float = 0.05
    eps_reg: float = 0.0
    chi_mode: str = "crowding"

    def __post_init__(self):
        for name in ("K", "lambda_S", "lambda_I", "mu_S", "mu_I", "eps_reg"):
            value = getattr(self, name)
            if not (value >= 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")
        if self.eps_reg > 1:
            raise ValueError(f"eps_reg must be at most 1, got {self.eps_reg}")
        if self.chi_mode not in CHI_MODES:
            raise ValueError(f"chi_mode must be one of {CHI_MODES}, got {self.chi_mode!r}")

    @property
    def reaction_bound(self) -> float:
        """Crude Lipschitz bound of the kinetics, used for step control."""
        return self.lambda_S + self.lambda_I + self.mu_S + self.mu_I


def chi(S, K, mode="crowding"):
    if mode == "constant":
        return K * np.ones_like(np.asarray(S, dtype=float))
    return K * (1.0 - np.asarray(S, dtype=float))


def _contact_ratio(S, I):
    # S I / (S + I), extended by zero whenever S = 0 or I = 0; S + I = 0 can
    # only occur off the admissible quadrant (unclamped undershoot) and is
    # treated the same way
    S = np.asarray(S, dtype=float)
    I = np.asarray(I, dtype=float)
    active = (S != 0) & (I != 0) & (S + I != 0)
    denom = np.where(active, S + I, 1.0)
    return np.where(active, S * I / denom, 0.0)


def reaction_f(S, I, params: ModelParams):
    S = np.asarray(S, dtype=float)
    return -params.lambda_S * _contact_ratio(S, I) + params.mu_S * S * (1.0 - S)


def reaction_g(S, I, params: ModelParams):
    return params.lambda_I * _contact_ratio(S, I) - params.mu_I * np.asarray(I, dtype=float)


def removed_update(R, I, mu_I, dt):
    """One forward-Euler step of dR/dt = mu_I I."""
    return R + dt * mu_I * I
