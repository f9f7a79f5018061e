"""Lee-Friedrichs model: discrete levels coupled to continuum channels.

A model is a set of discrete energies ``lambda_alpha`` plus a list of coupling
channels. Every channel ``c`` contributes a rank-one term
``g_c g_c^dagger * f_c(lambda)`` to the spectral density matrix, where ``f_c``
is a non-negative scalar line shape. All quantities are in natural units with
``hbar = 1``.

Each channel family carries the scalar transforms the rest of the package
needs: the line shape on the real axis and continued into the complex plane,
its Fourier transform, and its Cauchy transform ``int f(l)/(z - l) dl`` on the
physical sheet (``"I"``) and on the second sheet reached through the support
(``"II"``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ContinuationError, DomainError, ModelError

SPECTRUM_KINDS = ("full_line", "half_line")
CHANNEL_KINDS = ("flat_window", "lorentzian", "ohmic")

# integration cutoff for ohmic channels in units of the cutoff frequency
OHMIC_U_MAX = 40.0


@dataclass(frozen=True)
class LevelSet:
    """Discrete eigenvalues of the unperturbed Hamiltonian."""

    energies: tuple
    labels: tuple = ()

    def __post_init__(self):
        energies = np.atleast_1d(np.asarray(self.energies, dtype=float))
        if energies.ndim != 1 or energies.size < 1:
            raise ModelError("at least one discrete level is required")
        if not np.all(np.isfinite(energies)):
            raise ModelError("level energies must be finite")
        n = energies.size
        labels = tuple(str(s) for s in self.labels) if self.labels else tuple(
            f"phi{i + 1}" for i in range(n))
        if len(labels) != n:
            raise ModelError(f"{len(labels)} labels given for {n} levels")
        object.__setattr__(self, "energies", tuple(float(e) for e in energies))
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.energies)

    @property
    def degenerate_pairs(self) -> list:
        """Index pairs of (numerically) coincident level energies."""
        e = self.energies
        return [(i, j) for i in range(len(e)) for j in range(i + 1, len(e))
                if math.isclose(e[i], e[j], rel_tol=1e-12, abs_tol=1e-14)]

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_pairs)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(np.asarray(self.energies, dtype=complex))


def _as_coupling(g) -> tuple:
    arr = np.asarray(g, dtype=complex)
    arr = np.atleast_1d(arr)
    if arr.ndim != 1:
        raise ModelError("coupling vector must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ModelError("coupling vector entries must be finite")
    return tuple(complex(x) for x in arr)


def _above(z):
    """Complex array with signed-zero imaginary parts mapped to +0."""
    z = np.asarray(z, dtype=complex)
    return z + 0j


def _below(z):
    """Complex array with zero imaginary parts mapped to -0.

    Second-sheet values on the real axis are limits from below, which keeps
    them continuous with the first sheet approached from above.
    """
    z = np.array(z, dtype=complex, ndmin=0)
    out = np.empty_like(z)
    out.real = z.real
    out.imag = np.where(z.imag == 0, -0.0, z.imag)
    return out


def _side(z, sheet):
    return _below(z) if sheet == "II" else _above(z)


@dataclass(frozen=True)
class CouplingChannel:
    """Base class for a rank-one continuum coupling ``g g^dagger f(lambda)``."""

    g: tuple
    kind: ClassVar[str] = ""

    def __post_init__(self):
        object.__setattr__(self, "g", _as_coupling(self.g))

    @property
    def coupling(self) -> np.ndarray:
        return np.asarray(self.g, dtype=complex)

    @property
    def strength(self) -> np.ndarray:
        """The matrix ``g g^dagger``."""
        g = self.coupling
        return np.outer(g, g.conj())

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coupling)

    # subclasses implement the scalar line-shape transforms below
    @property
    def support(self) -> tuple:
        raise NotImplementedError

    @property
    def branch_points(self) -> tuple:
        return ()

    @property
    def continuable(self) -> bool:
        return True

    def params(self) -> dict:
        raise NotImplementedError

    def shape(self, lam):
        raise NotImplementedError

    def shape_continued(self, z):
        raise NotImplementedError

    def fourier(self, t):
        raise NotImplementedError

    def cauchy(self, z, sheet="I"):
        raise NotImplementedError

    def cauchy_derivative(self, z, sheet="I"):
        raise NotImplementedError

    def contains(self, lam) -> np.ndarray:
        lo, hi = self.support
        lam = np.asarray(lam, dtype=float)
        return (lam >= lo) & (lam <= hi)


@dataclass(frozen=True)
class FlatWindow(CouplingChannel):
    """Constant line shape ``f = 1`` on ``[lam_min, lam_max]``.

    Both bounds infinite gives the exactly Markovian coupling, whose
    correlation kernel is ``2 pi g g^dagger delta(t)``.
    """

    lam_min: float
    lam_max: float
    kind: ClassVar[str] = "flat_window"

    def __post_init__(self):
        super().__post_init__()
        a, b = float(self.lam_min), float(self.lam_max)
        if math.isnan(a) or math.isnan(b) or not a < b:
            raise ModelError(f"flat window needs lam_min < lam_max, got [{a}, {b}]")
        if math.isfinite(a) != math.isfinite(b):
            raise ModelError("flat window must be bounded on both sides or on neither")
        object.__setattr__(self, "lam_min", a)
        object.__setattr__(self, "lam_max", b)

    @property
    def unbounded(self) -> bool:
        return not math.isfinite(self.lam_min)

    @property
    def support(self):
        return (self.lam_min, self.lam_max)

    @property
    def branch_points(self):
        return () if self.unbounded else (self.lam_min, self.lam_max)

    def params(self):
        return {"lam_min": self.lam_min, "lam_max": self.lam_max}

    def shape(self, lam):
        return np.where(self.contains(lam), 1.0, 0.0)

    def shape_continued(self, z):
        return np.ones_like(np.asarray(z, dtype=complex))

    def fourier(self, t):
        if self.unbounded:
            raise ModelError("unbounded flat window has a delta-correlated kernel "
                             "2*pi*g*g^dagger*delta(t) with no pointwise value")
        t = np.asarray(t, dtype=float)
        a, b = self.lam_min, self.lam_max
        centre, half = 0.5 * (a + b), 0.5 * (b - a)
        return (b - a) * np.exp(-1j * centre * t) * np.sinc(half * t / np.pi)

    def cauchy(self, z, sheet="I"):
        z = _side(z, sheet)
        if self.unbounded:
            if sheet == "II":
                return np.full(z.shape, -1j * np.pi)
            return np.where(z.imag >= 0, -1j * np.pi, 1j * np.pi)
        val = np.log(z - self.lam_min) - np.log(z - self.lam_max)
        if sheet == "II":
            val = val - 2j * np.pi
        return val

    def cauchy_derivative(self, z, sheet="I"):
        z = np.asarray(z, dtype=complex)
        if self.unbounded:
            return np.zeros(z.shape, dtype=complex)
        return 1.0 / (z - self.lam_min) - 1.0 / (z - self.lam_max)


@dataclass(frozen=True)
class Lorentzian(CouplingChannel):
    """Unit-normalized Lorentzian ``(width/pi) / ((l - center)^2 + width^2)``."""

    center: float
    width: float
    kind: ClassVar[str] = "lorentzian"

    def __post_init__(self):
        super().__post_init__()
        if not (math.isfinite(self.center) and math.isfinite(self.width)):
            raise ModelError("lorentzian center and width must be finite")
        if not self.width > 0:
            raise ModelError(f"lorentzian width must be positive, got {self.width}")
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "width", float(self.width))

    @property
    def support(self):
        return (-math.inf, math.inf)

    def params(self):
        return {"center": self.center, "width": self.width}

    def shape(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (self.width / np.pi) / ((lam - self.center) ** 2 + self.width ** 2)

    def shape_continued(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.width / np.pi) / ((z - self.center) ** 2 + self.width ** 2)

    def fourier(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.center * t - self.width * np.abs(t))

    def _pole(self, z, sheet):
        z = _above(z)
        if sheet == "II":
            return z - self.center + 1j * self.width
        return np.where(z.imag >= 0, z - self.center + 1j * self.width,
                        z - self.center - 1j * self.width)

    def cauchy(self, z, sheet="I"):
        return 1.0 / self._pole(z, sheet)

    def cauchy_derivative(self, z, sheet="I"):
        return -1.0 / self._pole(z, sheet) ** 2


@dataclass(frozen=True)
class Ohmic(CouplingChannel):
    """Ohmic family ``cutoff^(1-s) l^s exp(-l/cutoff)`` on ``l >= 0``.

    ``s < 1`` is sub-ohmic, ``s > 1`` super-ohmic. Continuation off the real
    axis is provided for integer ``s`` only.
    """

    exponent: float
    cutoff: float
    kind: ClassVar[str] = "ohmic"

    def __post_init__(self):
        super().__post_init__()
        if not (math.isfinite(self.exponent) and self.exponent > 0):
            raise ModelError(f"ohmic exponent must be positive, got {self.exponent}")
        if not (math.isfinite(self.cutoff) and self.cutoff > 0):
            raise ModelError(f"ohmic cutoff must be positive, got {self.cutoff}")
        object.__setattr__(self, "exponent", float(self.exponent))
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @property
    def support(self):
        return (0.0, math.inf)

    @property
    def branch_points(self):
        return (0.0,)

    @property
    def integer_exponent(self) -> bool:
        return abs(self.exponent - round(self.exponent)) < 1e-12

    @property
    def continuable(self):
        return self.integer_exponent

    def params(self):
        return {"exponent": self.exponent, "cutoff": self.cutoff}

    def shape(self, lam):
        lam = np.asarray(lam, dtype=float)
        s, lc = self.exponent, self.cutoff
        pos = np.where(lam > 0, lam, 0.0)
        return np.where(lam >= 0, lc ** (1 - s) * pos ** s * np.exp(-pos / lc), 0.0)

    def _require_integer(self):
        if not self.integer_exponent:
            raise ContinuationError(
                f"ohmic channel with non-integer exponent s={self.exponent} has a "
                "branch cut at 0; continuation is only supported for integer s")

    def shape_continued(self, z):
        self._require_integer()
        z = np.asarray(z, dtype=complex)
        s, lc = int(round(self.exponent)), self.cutoff
        return lc ** (1 - s) * z ** s * np.exp(-z / lc)

    def fourier(self, t):
        t = np.asarray(t, dtype=float)
        s, lc = self.exponent, self.cutoff
        return lc ** 2 * special.gamma(s + 1) / (1 + 1j * lc * t) ** (s + 1)

    @staticmethod
    def _exp_e1(w, below=False):
        """``-exp(-w) E1(-w)``: the Cauchy transform of ``exp(-u)`` on the first sheet.

        On the real axis the boundary value from above is used, or from below
        when ``below`` is set.
        """
        w = np.asarray(w, dtype=complex)
        a = np.empty_like(w)
        a.real = -w.real
        a.imag = np.where(w.imag == 0, 0.0 if below else -0.0, -w.imag)
        return -np.exp(-w) * special.exp1(a)

    def cauchy(self, z, sheet="I"):
        z = _above(z)
        if not self.integer_exponent:
            if sheet == "II":
                self._require_integer()
            return np.vectorize(self._cauchy_quad, otypes=[complex])(z)
        s, lc = int(round(self.exponent)), self.cutoff
        w = z / lc
        poly = np.zeros_like(w)
        for k in range(s):
            poly = poly - math.factorial(k) * w ** (s - 1 - k)
        val = lc * (poly + w ** s * self._exp_e1(w, below=sheet == "II"))
        if sheet == "II":
            val = val - 2j * np.pi * self.shape_continued(z)
        return val

    def _cauchy_quad(self, z):
        s, lc = self.exponent, self.cutoff
        w = z / lc

        def f(u):
            return u ** s * np.exp(-u)

        if w.imag == 0 and 0 < w.real < OHMIC_U_MAX:
            # principal value plus the boundary term from above
            pv, _ = integrate.quad(f, 0, OHMIC_U_MAX, weight="cauchy", wvar=w.real,
                                   limit=400)
            return lc * (-pv - 1j * np.pi * f(w.real))
        if w.imag == 0 and w.real == 0:
            raise DomainError("ohmic Cauchy transform is singular at the threshold")
        re, _ = integrate.quad(lambda u: (f(u) / (w - u)).real, 0, OHMIC_U_MAX, limit=400)
        im, _ = integrate.quad(lambda u: (f(u) / (w - u)).imag, 0, OHMIC_U_MAX, limit=400)
        return lc * complex(re, im)

    def cauchy_derivative(self, z, sheet="I"):
        self._require_integer()
        z = _above(z)
        s, lc = int(round(self.exponent)), self.cutoff
        w = z / lc
        poly = np.zeros_like(w)
        for k in range(s - 1):
            poly = poly - math.factorial(k) * (s - 1 - k) * w ** (s - 2 - k)
        f = self._exp_e1(w, below=sheet == "II")
        df = -f + 1.0 / w
        val = poly + s * w ** (s - 1) * f + w ** s * df
        if sheet == "II":
            val = val - 2j * np.pi * (s * w ** (s - 1) - w ** s) * np.exp(-w)
        return val


_CHANNEL_TYPES = {cls.kind: cls for cls in (FlatWindow, Lorentzian, Ohmic)}


def make_channel(kind: str, g, **params) -> CouplingChannel:
    """Build a channel from its kind name and family parameters."""
    try:
        cls = _CHANNEL_TYPES[kind]
    except KeyError:
        raise ModelError(f"unknown channel kind {kind!r}; expected one of "
                         f"{CHANNEL_KINDS}") from None
    try:
        return cls(g, **params)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {kind} channel: {exc}") from None


@dataclass(frozen=True)
class SpectralDensityModel:
    """Discrete levels plus continuum channels.

    Parameters
    ----------
    levels : LevelSet or sequence of float
        Discrete energies of the unperturbed Hamiltonian.
    channels : sequence of CouplingChannel
        Each channel adds ``g g^dagger f(lambda)`` to the spectral density.
    spectrum_kind : {"full_line", "half_line"}
        Whether the continuum is unbounded or starts at 0. A half-line model
        requires every channel support to lie in ``[0, inf)``.
    """

    levels: LevelSet
    channels: tuple = ()
    spectrum_kind: str = "full_line"

    def __post_init__(self):
        levels = self.levels
        if not isinstance(levels, LevelSet):
            levels = LevelSet(levels)
        channels = tuple(self.channels)
        if self.spectrum_kind not in SPECTRUM_KINDS:
            raise ModelError(f"spectrum_kind must be one of {SPECTRUM_KINDS}")
        n = len(levels)
        for c, ch in enumerate(channels):
            if not isinstance(ch, CouplingChannel):
                raise ModelError(f"channel {c} is not a CouplingChannel")
            if len(ch.g) != n:
                raise ModelError(f"channel {c} coupling has length {len(ch.g)}, "
                                 f"expected {n}")
            if self.spectrum_kind == "half_line" and not ch.support[0] >= 0:
                raise ModelError(f"half_line model: channel {c} ({ch.kind}) has "
                                 f"support starting at {ch.support[0]}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "channels", channels)

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> np.ndarray:
        return np.asarray(self.levels.energies, dtype=float)

    @property
    def h0(self) -> np.ndarray:
        """Discrete part of the unperturbed Hamiltonian."""
        return self.levels.hamiltonian()

    @property
    def degenerate(self) -> bool:
        return self.levels.degenerate

    @property
    def branch_points(self) -> tuple:
        pts = set()
        for ch in self.channels:
            if not ch.is_zero:
                pts.update(ch.branch_points)
        if self.spectrum_kind == "half_line":
            pts.add(0.0)
        return tuple(sorted(pts))

    @property
    def continuable(self) -> bool:
        return all(ch.continuable for ch in self.channels)

    @property
    def is_markovian(self) -> bool:
        """True when every coupled channel is an unbounded flat window."""
        active = [ch for ch in self.channels if not ch.is_zero]
        return bool(active) and all(
            isinstance(ch, FlatWindow) and ch.unbounded for ch in active)

    @property
    def is_rational(self) -> bool:
        """True when the second-sheet kernel is a rational function of z."""
        return all(isinstance(ch, Lorentzian) or (isinstance(ch, FlatWindow) and ch.unbounded)
                   or ch.is_zero for ch in self.channels)

    def omega(self, lam) -> np.ndarray:
        return omega_at(self, lam)

    def omega_continued(self, z) -> np.ndarray:
        return omega_continuation(self, z)

    def replace_channels(self, channels: Sequence[CouplingChannel]) -> "SpectralDensityModel":
        return SpectralDensityModel(self.levels, tuple(channels), self.spectrum_kind)


def _combine(model, scalars) -> np.ndarray:
    """Sum ``scalars[c][..., None, None] * g_c g_c^dagger`` over channels."""
    out = None
    for ch, val in zip(model.channels, scalars):
        val = np.asarray(val)
        if not np.any(ch.strength):
            # uncoupled channels contribute nothing, even at their own singularities
            val = np.zeros_like(val)
        term = val[..., None, None] * ch.strength
        out = term if out is None else out + term
    return out


def omega_at(model: SpectralDensityModel, lam) -> np.ndarray:
    """Spectral density matrix ``sum_c g_c g_c^dagger f_c(lambda)``.

    Returns an array of shape ``np.shape(lam) + (N, N)``; zero outside every
    channel support.
    """
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise ModelError("omega_at requires finite energies")
    if not model.channels:
        return np.zeros(lam.shape + (model.n, model.n), dtype=complex)
    return _combine(model, [ch.shape(lam) for ch in model.channels])


def omega_continuation(model: SpectralDensityModel, z) -> np.ndarray:
    """Analytic continuation of the spectral density into ``Im z <= 0``.

    Flat windows continue as constants, Lorentzians as the same rational
    function; ohmic channels only for integer exponent.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag > 0):
        raise DomainError("omega_continuation is defined for Im z <= 0")
    if not model.channels:
        return np.zeros(z.shape + (model.n, model.n), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = [ch.shape_continued(z) for ch in model.channels]
    return _combine(model, vals)
