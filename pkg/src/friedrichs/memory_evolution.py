"""Reduced propagator from the memory-kernel master equation.

``dU/dt = -i H0 U(t) - int_0^t alpha(t - s) U(s) ds`` with ``U(0) = I``.

The Volterra solver treats ``-i H0`` exactly through ``E = exp(-i H0 h)``
and the memory term with the trapezoidal rule, both in the outer time
integral and in the convolution. This is second order in the step and exact
at zero coupling.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, linalg

from .errors import IntegrationAborted, NotApplicableError, StabilityWarning
from .kernel import CorrelationKernel
from .model import SpectralDensityModel, omega_at


@dataclass(frozen=True)
class ReducedPropagator:
    """Time-indexed reduced propagator ``U(t_k)`` on a uniform grid.

    Attributes
    ----------
    t_grid : ndarray, shape (n,)
    values : ndarray, shape (n, N, N)
    scheme : dict
        Method name, order, step and any diagnostics.
    exact : callable, optional
        Evaluator ``t -> U(t)`` valid off the grid (closed-form sources).
    valid_until : float
        Largest time the values may be trusted to (recurrence guard for the
        discretized oracle, ``t_max`` otherwise).
    """

    t_grid: np.ndarray
    values: np.ndarray
    scheme: dict = field(default_factory=dict)
    exact: Optional[Callable] = None
    valid_until: float = np.inf

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def step(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0]) if len(self.t_grid) > 1 else 0.0

    def at(self, t) -> np.ndarray:
        """``U(t)``; on-grid values are returned exactly, others interpolated."""
        t = np.asarray(t, dtype=float)
        if self.exact is not None:
            return self.exact(t)
        if np.any(t < self.t_grid[0] - 1e-12) or np.any(t > self.t_grid[-1] + 1e-12):
            raise ValueError(f"t outside the propagator grid [0, {self.t_grid[-1]}]")
        h = self.step
        idx = np.rint(t / h).astype(int) if h > 0 else np.zeros(t.shape, dtype=int)
        on_grid = np.abs(idx * h - t) <= 1e-9 * max(h, 1.0)
        if np.all(on_grid):
            return self.values[np.clip(idx, 0, len(self.t_grid) - 1)]
        spline = self._spline()
        return spline(t)

    def _spline(self):
        cache = self.scheme.setdefault("_spline", [])
        if not cache:
            cache.append(interpolate.CubicSpline(self.t_grid, self.values, axis=0))
        return cache[0]

    def survival(self, state) -> np.ndarray:
        """``|c^dagger U(t) c|^2`` on the grid for initial amplitudes ``c``."""
        c = normalized_state(state, self.n)
        amp = np.einsum("a,tab,b->t", c.conj(), self.values, c)
        return np.abs(amp) ** 2

    def max_singular_value(self) -> float:
        return float(max(np.linalg.norm(u, 2) for u in self.values))


def normalized_state(state, n, tol=1e-10) -> np.ndarray:
    """Validate a length-``n`` amplitude vector of unit norm."""
    c = np.asarray(state, dtype=complex).ravel()
    if c.size != n:
        raise ValueError(f"state has {c.size} amplitudes, model has {n} levels")
    nrm = np.linalg.norm(c)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm {nrm:.12g})")
    return c


def solve_memory_kernel(model: SpectralDensityModel, kernel: CorrelationKernel = None,
                        t_max: float = 10.0, step: float = 0.01,
                        picture: str = "schroedinger") -> ReducedPropagator:
    """Second-order product-integration solve of the memory-kernel equation.

    Parameters
    ----------
    model : SpectralDensityModel
    kernel : CorrelationKernel, optional
    t_max, step : float
        Uniform grid ``0, step, ..., >= t_max``.
    picture : {"schroedinger", "interaction"}
        The interaction-picture path evolves ``exp(i H0 t) U(t)`` with the
        phase-dressed kernel; both paths give the same discrete solution.

    Notes
    -----
    With ``F(t) = int_0^t alpha(t - s) U(s) ds`` the scheme is::

        (I + h^2/4 alpha(0)) U_{k+1} = E U_k - h/2 (E F_k + S_{k+1})

    where ``S_{k+1}`` is the trapezoid sum of ``F_{k+1}`` without its
    ``U_{k+1}`` term.
    """
    if model.is_markovian:
        raise NotApplicableError("the unbounded flat coupling has a delta kernel; "
                                 "use solve_markovian")
    if not step > 0 or not t_max >= step:
        raise ValueError("need step > 0 and t_max >= step")
    if picture not in ("schroedinger", "interaction"):
        raise ValueError(f"unknown picture {picture!r}")
    kernel = kernel or CorrelationKernel(model)
    n_steps = int(np.ceil(t_max / step - 1e-9))
    t = step * np.arange(n_steps + 1)
    a = kernel.alpha_t(t)
    a0 = a[0]
    stab = float(np.linalg.norm(a0, 2)) * step ** 2
    if stab > 0.1:
        warnings.warn(f"|alpha(0)| step^2 = {stab:.3g} > 0.1: step too large for the "
                      "memory kernel", StabilityWarning, stacklevel=2)
    if picture == "schroedinger":
        u = _volterra_schroedinger(model.energies, a, step)
    else:
        u = _volterra_interaction(model.energies, a, t, step)
    scheme = {"method": "volterra_trapezoid", "picture": picture, "order": 2,
              "step": step, "stability_number": stab}
    return ReducedPropagator(t, u, scheme, valid_until=float(t[-1]))


def _volterra_schroedinger(levels, a, h):
    n_t, n = a.shape[0], len(levels)
    e = np.exp(-1j * levels * h)
    u = np.zeros((n_t, n, n), dtype=complex)
    u[0] = np.eye(n)
    lhs = np.eye(n) + 0.25 * h * h * a[0]
    lu = linalg.lu_factor(lhs)
    f_k = np.zeros((n, n), dtype=complex)
    for k in range(n_t - 1):
        # S_{k+1} = h [1/2 a(t_{k+1}) U_0 + sum_{j=1..k} a(t_{k+1} - t_j) U_j]
        s = 0.5 * a[k + 1] @ u[0]
        if k >= 1:
            s = s + np.einsum("jab,jbc->ac", a[k:0:-1], u[1:k + 1])
        s = h * s
        rhs = e[:, None] * u[k] - 0.5 * h * (e[:, None] * f_k + s)
        u[k + 1] = linalg.lu_solve(lu, rhs, check_finite=False)
        if not np.all(np.isfinite(u[k + 1])):
            raise IntegrationAborted(f"non-finite values at step {k + 1}", last_good=k)
        f_k = s + 0.5 * h * a[0] @ u[k + 1]
    return u


def _volterra_interaction(levels, a, t, h):
    # K(t_k, t_j) = exp(i H0 t_k) a(t_k - t_j) exp(-i H0 t_j), V_k = exp(i H0 t_k) U_k
    n_t, n = a.shape[0], len(levels)
    ph = np.exp(1j * np.outer(t, levels))
    v = np.zeros((n_t, n, n), dtype=complex)
    v[0] = np.eye(n)
    g_k = np.zeros((n, n), dtype=complex)
    for k in range(n_t - 1):
        kk = k + 1
        row = ph[kk][None, :, None] * a[kk - np.arange(kk + 1)] * ph[:kk + 1].conj()[:, None, :]
        s = 0.5 * row[0] @ v[0]
        if k >= 1:
            s = s + np.einsum("jab,jbc->ac", row[1:kk], v[1:kk])
        s = h * s
        lhs = np.eye(n) + 0.25 * h * h * row[kk]
        v[kk] = np.linalg.solve(lhs, v[k] - 0.5 * h * (g_k + s))
        if not np.all(np.isfinite(v[kk])):
            raise IntegrationAborted(f"non-finite values at step {kk}", last_good=k)
        g_k = s + 0.5 * h * row[kk] @ v[kk]
    return ph.conj()[:, :, None] * v


def solve_markovian(model: SpectralDensityModel, omega_hat, t_max: float = 10.0,
                    step: float = 0.01) -> ReducedPropagator:
    """``U(t) = expm((-i H0 - pi omega_hat) t)`` on a uniform grid.

    ``omega_hat`` is the constant density of a flat coupling or the resonant
    matrix from :func:`build_resonant_density`. The returned propagator
    carries the exact evaluator, so :meth:`ReducedPropagator.at` is exact
    off the grid too.
    """
    w = np.asarray(omega_hat, dtype=complex)
    n = model.n
    if w.shape != (n, n):
        raise ValueError(f"omega_hat must be {n}x{n}, got shape {w.shape}")
    if not step > 0 or not t_max >= step:
        raise ValueError("need step > 0 and t_max >= step")
    gen = -1j * model.h0 - np.pi * w
    n_steps = int(np.ceil(t_max / step - 1e-9))
    t = step * np.arange(n_steps + 1)
    return ReducedPropagator(t, _expm_eval(gen, t),
                             {"method": "markovian_expm", "order": None, "step": step},
                             exact=lambda s: _expm_eval(gen, s), valid_until=np.inf)


def _expm_eval(gen, t):
    t = np.asarray(t, dtype=float)
    out = np.array([linalg.expm(gen * s) for s in t.ravel()])
    return out.reshape(t.shape + gen.shape)


def build_resonant_density(model: SpectralDensityModel) -> np.ndarray:
    """Column-indexed resonant matrix ``omega_res[a, c] = omega_ac(lambda_c)``.

    Levels outside every channel support contribute zero columns and trigger
    a warning.
    """
    n = model.n
    out = np.zeros((n, n), dtype=complex)
    for c, lam in enumerate(model.energies):
        inside = any(ch.contains(lam) for ch in model.channels if not ch.is_zero)
        if not inside and any(not ch.is_zero for ch in model.channels):
            warnings.warn(f"level {c} at {lam} lies outside every channel support; "
                          "its resonant column is zero", UserWarning, stacklevel=2)
        out[:, c] = omega_at(model, lam)[:, c]
    return out


def sinc_integral(delta, T):
    """``int_{-T/2}^{T/2} exp(-i delta s) ds = 2 sin(delta T/2) / delta``.

    Evaluated as ``T sinc(delta T / 2pi)`` so ``delta = 0`` gives ``T``.
    """
    delta = np.asarray(delta, dtype=float)
    return T * np.sinc(delta * T / (2 * np.pi))
