"""Spectral correlation matrix and its Laplace transform on both sheets.

``alpha(t) = int exp(-i l t) omega(l) dl`` is the memory kernel of the reduced
dynamics. Its Laplace transform ``alpha(z) = int_0^inf alpha(t) exp(izt) dt``
satisfies ``i alpha(z) = int omega(l) / (z - l) dl`` for ``Im z > 0``; the
second-sheet function ``alpha_II`` is its continuation through the continuum
into ``Im z <= 0``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BranchPointError, ContinuationError, DomainError, QuadratureError, \
    QuadratureWarning
from .model import FlatWindow, Lorentzian, Ohmic, OHMIC_U_MAX, SpectralDensityModel


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for the adaptive-quadrature fallback (QUADPACK)."""

    rule: str = "gauss_kronrod"
    limit: int = 400
    tol: float = 1e-10


class CorrelationKernel:
    """Correlation matrix ``alpha`` of a model.

    Parameters
    ----------
    model : SpectralDensityModel
    quadrature : QuadratureSpec, optional
    method : {"auto", "quad"}
        ``"auto"`` uses the closed forms of each channel family; ``"quad"``
        forces adaptive quadrature of the defining integrals.
    """

    def __init__(self, model: SpectralDensityModel, quadrature: QuadratureSpec = None,
                 method: str = "auto"):
        if method not in ("auto", "quad"):
            raise ValueError(f"unknown method {method!r}")
        self.model = model
        self.quadrature = quadrature or QuadratureSpec()
        self.method = method

    @property
    def n(self):
        return self.model.n

    def _zeros(self, shape=()):
        return np.zeros(tuple(shape) + (self.n, self.n), dtype=complex)

    def _combine(self, values):
        out = None
        for ch, val in zip(self.model.channels, values):
            term = np.asarray(val)[..., None, None] * ch.strength
            out = term if out is None else out + term
        return out

    # time domain

    def alpha_t(self, t) -> np.ndarray:
        """Correlation matrix at time(s) ``t``; shape ``np.shape(t) + (N, N)``."""
        t = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(t)):
            raise ValueError("alpha_t requires finite times")
        chans = [ch for ch in self.model.channels if not ch.is_zero]
        if not chans:
            return self._zeros(t.shape)
        if self.method == "quad":
            return self._combine([np.vectorize(lambda s, ch=ch: self._fourier_quad(ch, s),
                                               otypes=[complex])(t)
                                  if not ch.is_zero else np.zeros(t.shape)
                                  for ch in self.model.channels])
        return self._combine([ch.fourier(t) if not ch.is_zero else np.zeros(t.shape)
                              for ch in self.model.channels])

    def _fourier_quad(self, ch, t):
        q = self.quadrature
        lo, hi = ch.support
        if isinstance(ch, FlatWindow) and ch.unbounded:
            raise ContinuationError("unbounded flat window has no pointwise kernel")
        if isinstance(ch, Ohmic):
            hi = OHMIC_U_MAX * ch.cutoff
        if abs(t) * min(hi - lo, 1e300) > 1e4 and np.isfinite(hi - lo):
            warnings.warn(f"oscillatory quadrature at t={t}: |t|*width > 1e4",
                          QuadratureWarning, stacklevel=3)
        f = ch.shape
        if t == 0:
            pieces = _split_quad(f, lo, hi, q)
            return pieces
        # exp(-i l t) = cos(l t) - i sin(l t)
        if np.isinf(lo) and np.isinf(hi):
            mid = ch.center if isinstance(ch, Lorentzian) else 0.0
            c = _fourier_half(lambda x: f(mid + x), t, "cos", q) + \
                _fourier_half(lambda x: f(mid - x), t, "cos", q)
            s = _fourier_half(lambda x: f(mid + x), t, "sin", q) - \
                _fourier_half(lambda x: f(mid - x), t, "sin", q)
            return np.exp(-1j * mid * t) * (c - 1j * s)
        c, ec = integrate.quad(f, lo, hi, weight="cos", wvar=t, limit=q.limit,
                               epsabs=q.tol, full_output=0)[:2]
        s, es = integrate.quad(f, lo, hi, weight="sin", wvar=t, limit=q.limit,
                               epsabs=q.tol, full_output=0)[:2]
        _check_error(max(ec, es), q, "alpha_t")
        return c - 1j * s

    # Laplace domain

    def _check_continuable(self):
        for ch in self.model.channels:
            if not ch.is_zero and not ch.continuable:
                raise ContinuationError(
                    f"{ch.kind} channel with parameters {ch.params()} has no closed-form "
                    "continuation to the second sheet")

    def _check_branch(self, z):
        pts = self.model.branch_points
        if not pts:
            return
        z = np.asarray(z, dtype=complex)
        for b in pts:
            hit = np.abs(z - b) <= 1e-14 * max(1.0, abs(b))
            if np.any(hit):
                raise BranchPointError(f"z = {b} is a branch point of the continuum")

    def cauchy_sum(self, z, sheet="I", continued=None) -> np.ndarray:
        """``i alpha(z) = sum_c g g^dagger int f_c/(z - l) dl`` on the chosen sheet.

        ``continued`` optionally lists, per channel, whether to use its
        second-sheet branch; it overrides ``sheet`` and is used for the mixed
        sheets met between distinct branch points.
        """
        z = np.asarray(z, dtype=complex)
        chans = self.model.channels
        if not chans:
            return self._zeros(z.shape)
        if continued is None:
            continued = [sheet == "II"] * len(chans)
        vals = []
        for ch, cont in zip(chans, continued):
            if ch.is_zero:
                vals.append(np.zeros(z.shape))
            elif self.method == "quad" and not cont:
                vals.append(np.vectorize(lambda w, ch=ch: self._cauchy_quad(ch, w),
                                         otypes=[complex])(z))
            else:
                vals.append(ch.cauchy(z, "II" if cont else "I"))
        return self._combine(vals)

    def cauchy_sum_derivative(self, z, sheet="I", continued=None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        chans = self.model.channels
        if not chans:
            return self._zeros(z.shape)
        if continued is None:
            continued = [sheet == "II"] * len(chans)
        return self._combine([np.zeros(z.shape) if ch.is_zero else
                              ch.cauchy_derivative(z, "II" if cont else "I")
                              for ch, cont in zip(chans, continued)])

    def _cauchy_quad(self, ch, z):
        q = self.quadrature
        lo, hi = ch.support
        if isinstance(ch, FlatWindow) and ch.unbounded:
            return ch.cauchy(z)
        if isinstance(ch, Ohmic):
            hi = OHMIC_U_MAX * ch.cutoff
        f = ch.shape
        re = _split_quad(lambda x: (f(x) / (z - x)).real, lo, hi, q)
        im = _split_quad(lambda x: (f(x) / (z - x)).imag, lo, hi, q,
                         points=(z.real,) if lo < z.real < hi else None)
        return complex(re, im)

    def alpha_z_first_sheet(self, z) -> np.ndarray:
        """``alpha(z)`` for ``Im z > 0``."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag <= 0):
            raise DomainError("first-sheet alpha(z) needs Im z > 0; use "
                              "alpha_z_second_sheet below the real axis")
        return -1j * self.cauchy_sum(z, "I")

    def alpha_z_second_sheet(self, z) -> np.ndarray:
        """Continuation ``alpha_II(z)`` for ``Im z <= 0`` through the continuum."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag > 0):
            raise DomainError("second-sheet alpha(z) is defined for Im z <= 0")
        self._check_continuable()
        self._check_branch(z)
        return -1j * self.cauchy_sum(z, "II")

    def dalpha_dz(self, z, sheet="II") -> np.ndarray:
        """Derivative of ``alpha`` with respect to ``z`` on the given sheet."""
        if sheet == "II":
            self._check_continuable()
        return -1j * self.cauchy_sum_derivative(z, sheet)

    def laplace_numeric(self, z, t_max=None) -> np.ndarray:
        """First-sheet transform by direct time quadrature (independent check).

        Returns ``-int_0^T alpha(t) exp(izt) dt``, the same convention as
        :meth:`alpha_z_first_sheet`, with ``T = 40 / Im z`` by default.
        """
        z = complex(z)
        if z.imag <= 0:
            raise DomainError("the Laplace integral converges only for Im z > 0")
        if t_max is None:
            t_max = 40.0 / z.imag
        q = self.quadrature

        def f(t):
            return (self.alpha_t(t) * np.exp(1j * z * t)).ravel()

        re = integrate.quad_vec(lambda t: f(t).real, 0, t_max, epsabs=q.tol, limit=q.limit)[0]
        im = integrate.quad_vec(lambda t: f(t).imag, 0, t_max, epsabs=q.tol, limit=q.limit)[0]
        return -(re + 1j * im).reshape(self.n, self.n)


def _check_error(err, q, what):
    if not np.isfinite(err) or err > max(q.tol * 1e3, 1e-8):
        raise QuadratureError(f"{what}: quadrature error estimate {err:.3g} above tolerance",
                              estimate=err)


def _split_quad(f, lo, hi, q, points=None):
    kwargs = dict(limit=q.limit, epsabs=q.tol, epsrel=q.tol)
    if np.isfinite(lo) and np.isfinite(hi):
        val, err = integrate.quad(f, lo, hi, points=points, **kwargs)
    else:
        mid = 0.0 if not np.isfinite(lo) else lo
        if points:
            mid = points[0]
        val, err = 0.0, 0.0
        if np.isfinite(lo):
            a, ea = integrate.quad(f, lo, mid, **kwargs) if mid > lo else (0.0, 0.0)
            val, err = val + a, err + ea
        else:
            a, ea = integrate.quad(f, -np.inf, mid, **kwargs)
            val, err = val + a, err + ea
        b, eb = integrate.quad(f, mid, hi, **kwargs)
        val, err = val + b, err + eb
    _check_error(err, q, "integral")
    return val


def _fourier_half(f, t, kind, q):
    """``int_0^inf f(x) cos|sin(x t) dx`` with QUADPACK's QAWF."""
    w = abs(t)
    sign = 1.0 if (kind == "cos" or t > 0) else -1.0
    val, err = integrate.quad(f, 0, np.inf, weight=kind, wvar=w, limlst=200, limit=q.limit,
                              epsabs=q.tol)[:2]
    _check_error(err, q, "Fourier integral")
    return sign * val
