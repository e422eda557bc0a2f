"""Shared fixed-point machinery for the torus solvers.

All solvers iterate on the conj(z)-derivative candidate r ~ f_zbar:

    psi = c + S0(r - mean(r))          # f_z candidate; S0 = mean-zero beurling
    f   = antiderivative of r (c prescribed, mean(r) -> affine d)
    r'  = rhs(f, psi)                  # the equation's right-hand side

The measured residual ||r' - r||_2 is exactly the equation residual of the
candidate f built from r, because f_zbar = r and f_z = psi by construction.
Since S0 is an l2 isometry on mean-zero fields and the mean projection is a
contraction, a k-Lipschitz rhs makes successive residuals decay by a factor
of at most k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridField, GridSpec, values_l2, z_grid
from .operators import _multipliers

__all__ = ["SolveReport", "picard_solve"]


@dataclass
class SolveReport:
    """Iteration diagnostics of one solve."""

    iterations: int
    residual_history: list[float]
    contraction_ratio: float
    final_residual: float
    converged: bool
    method: str = "fixed-point"
    notes: str = ""

    def __post_init__(self):
        if not self.residual_history:
            raise ValueError("residual history must be non-empty")
        if self.residual_history[-1] != self.final_residual:
            raise ValueError("final_residual must equal the last history entry")


def _contraction_ratio(history: list[float]) -> float:
    """Geometric mean of successive residual ratios (0.0 if under two points)."""
    pairs = [(a, b) for a, b in zip(history, history[1:]) if a > 0.0]
    if not pairs:
        return 0.0
    logs = [np.log(b / a) for a, b in pairs if b > 0.0]
    if len(logs) < len(pairs):  # a residual hit exactly zero: perfect contraction
        return 0.0
    return float(np.exp(np.mean(logs)))


def picard_solve(
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray],
    spec: GridSpec,
    c_mean: complex,
    tol: float,
    max_iter: int,
    damping: float = 1.0,
    residual_scale: float = 1.0,
    method: str = "fixed-point",
) -> tuple[GridField, SolveReport]:
    """Run the damped fixed-point iteration.

    rhs(f_total_values, psi_values) must return the sampled right-hand side
    of the equation f_zbar = rhs(f, f_z).  Stops when the equation residual
    drops to tol * residual_scale; on exhaustion the best iterate is
    returned with converged=False.
    """
    if not (0.0 < damping <= 1.0):
        raise ValueError(f"damping must be in (0, 1], got {damping}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    n = spec.n
    _, _, beur, inv_dzbar = _multipliers(n, spec.L)
    Z = z_grid(spec)
    c_mean = complex(c_mean)
    affine_c = c_mean * Z

    # Start from the affine candidate f = c*z (periodic part zero).
    r_prev = rhs(affine_c.copy(), np.full((n, n), c_mean, dtype=complex))

    history: list[float] = []
    converged = False
    f_vals = None
    f_d = 0.0 + 0.0j
    threshold = tol * residual_scale
    for _ in range(max_iter):
        R = np.fft.fft2(r_prev)
        psi = np.fft.ifft2(R * beur) + c_mean
        P = np.fft.ifft2(R * inv_dzbar)          # periodic part of f, mean zero
        mean_r = complex(R[0, 0]) / (n * n)      # becomes f's affine d
        f_total = affine_c + mean_r * np.conj(Z) + P

        r = rhs(f_total, psi)
        res = values_l2(r - r_prev)
        history.append(res)
        f_vals, f_d = P, mean_r
        if res <= threshold:
            converged = True
            break
        if damping == 1.0:
            r_prev = r
        else:
            r_prev = (1.0 - damping) * r_prev + damping * r

    f = GridField(spec, c_mean, f_d, f_vals)
    report = SolveReport(
        iterations=len(history),
        residual_history=history,
        contraction_ratio=_contraction_ratio(history),
        final_residual=history[-1],
        converged=converged,
        method=method,
    )
    return f, report
