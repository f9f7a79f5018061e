"""Discretized-continuum reference: a finite Hermitian Lee-Friedrichs matrix.

Each channel gets its own set of continuum states ``|l_m>`` at quadrature
nodes ``l_m`` with weights ``w_m``. The coupling entries are
``H[a, m] = g_a sqrt(f(l_m) w_m)``, so ``sum_m H[a, m] H[b, m]^* phi(l_m)``
is a quadrature for ``int omega_ab(l) phi(l) dl``. Diagonalizing once gives
``U(t) = P exp(-iHt) P`` exactly for the finite system, which tracks the
continuum dynamics until the grid recurrence time ``2 pi / dl``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ModelError, RecurrenceWarning
from .memory_evolution import ReducedPropagator, normalized_state
from .model import FlatWindow, Lorentzian, Ohmic, OHMIC_U_MAX, SpectralDensityModel

# fraction of the Lorentzian weight left out of the tan-mapped window
LORENTZ_TAIL = 1e-9


def _nodes(rule, n, lo, hi):
    """Nodes and weights of ``n``-point rule on ``[lo, hi]``."""
    if rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w
    if rule == "uniform":
        h = (hi - lo) / n
        return lo + h * (np.arange(n) + 0.5), np.full(n, h)
    raise ValueError(f"unknown grid_rule {rule!r}; expected 'gauss' or 'uniform'")


def _panels(rule, m, lo, hi, focus, focus_fraction):
    """Two-density grid: ``focus_fraction`` of the nodes inside ``focus``."""
    if focus is None:
        return _nodes(rule, m, lo, hi)
    a, b = max(lo, focus[0]), min(hi, focus[1])
    if not a < b:
        return _nodes(rule, m, lo, hi)
    m_in = max(1, int(round(focus_fraction * m)))
    rest = m - m_in
    pieces = [(a, b, m_in)]
    outside = [(lo, a), (b, hi)]
    span = sum(max(0.0, y - x) for x, y in outside)
    for x, y in outside:
        if y > x and span > 0:
            k = max(1, int(round(rest * (y - x) / span)))
            pieces.append((x, y, k))
    xs, ws = zip(*(_nodes(rule, k, x, y) for x, y, k in pieces))
    x, w = np.concatenate(xs), np.concatenate(ws)
    order = np.argsort(x)
    return x[order], w[order]


def _lambda_panels(rule, m, lo, hi, scale, per_panel=16):
    """Composite rule on ``[lo, hi]`` with panels no wider than ~``2 scale``.

    Nodes are spread evenly (equal-width panels); when ``m`` allows, the
    panel width is capped so a feature of width ``scale`` is resolved.
    """
    if rule == "uniform":
        return _nodes(rule, m, lo, hi)
    n_panels = max(1, m // per_panel)
    n_panels = max(n_panels, min(m // 4, int(np.ceil((hi - lo) / (2 * scale)))))
    k = max(1, m // n_panels)
    edges = np.linspace(lo, hi, n_panels + 1)
    xs, ws = zip(*(_nodes("gauss", k, x, y) for x, y in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def _channel_grid(ch, m, rule, focus, focus_fraction):
    """Nodes ``l_m`` and effective weights ``f(l_m) w_m`` for one channel.

    Returns ``(nodes, weights, tail_mass, window)``.
    """
    if isinstance(ch, FlatWindow):
        if ch.unbounded:
            raise ModelError("an unbounded flat window cannot be discretized; "
                             "use a finite window [-L, L] or the Markovian solver")
        x, w = _panels(rule, m, ch.lam_min, ch.lam_max, focus, focus_fraction)
        return x, w, 0.0, (ch.lam_min, ch.lam_max)
    if isinstance(ch, Lorentzian):
        # l = mu + gamma tan(theta) turns f dl into d(theta)/pi on (-pi/2, pi/2)
        th_max = 0.5 * np.pi * (1.0 - LORENTZ_TAIL)
        if focus is None:
            th, wt = _nodes(rule, m, -th_max, th_max)
            x = ch.center + ch.width * np.tan(th)
            return x, wt / np.pi, LORENTZ_TAIL, (float(x[0]), float(x[-1]))
        # focus window: panels in lambda, narrow enough to resolve the peak;
        # tails: tan map on the remaining angles
        a, b = focus
        m_in = max(1, int(round(focus_fraction * m)))
        xs, ws = _lambda_panels(rule, m_in, a, b, ch.width)
        ws = ws * ch.shape(xs)
        ta, tb = np.arctan((a - ch.center) / ch.width), np.arctan((b - ch.center) / ch.width)
        rest = m - m_in
        span = (ta + th_max) + (th_max - tb)
        k_lo = max(1, int(round(rest * (ta + th_max) / span)))
        k_hi = max(1, rest - k_lo)
        t1, w1 = _nodes(rule, k_lo, -th_max, ta)
        t2, w2 = _nodes(rule, k_hi, tb, th_max)
        th = np.concatenate([t1, t2])
        x = np.concatenate([ch.center + ch.width * np.tan(t1), xs,
                            ch.center + ch.width * np.tan(t2)])
        w = np.concatenate([w1 / np.pi, ws, w2 / np.pi])
        return x, w, LORENTZ_TAIL, (float(x[0]), float(x[-1]))
    if isinstance(ch, Ohmic):
        hi = OHMIC_U_MAX * ch.cutoff
        x, w = _panels(rule, m, 0.0, hi, focus, focus_fraction)
        tail = float(_ohmic_tail(ch))
        return x, ch.shape(x) * w, tail, (0.0, hi)
    raise ModelError(f"cannot discretize channel of kind {ch.kind!r}")


def _ohmic_tail(ch):
    from scipy import special
    s = ch.exponent
    return special.gammaincc(s + 1, OHMIC_U_MAX)


@dataclass(frozen=True)
class DiscretizedHamiltonian:
    """Finite ``(N + M)`` Hermitian realization of a model.

    Attributes
    ----------
    model : SpectralDensityModel
    H : ndarray
        Full Hamiltonian, discrete levels first.
    grid : ndarray
        Continuum energies ``l_m`` (length ``M``).
    weights : ndarray
        Effective weights ``f(l_m) w_m``.
    channel_index : ndarray
        Channel owning each continuum state.
    info : dict
        Grid rule, truncation windows, tail masses and recurrence time.
    """

    model: SpectralDensityModel
    H: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    channel_index: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def recurrence_time(self) -> float:
        return self.info["recurrence_time"]

    @cached_property
    def eigensystem(self):
        """Eigenvalues and the discrete rows of the eigenvectors."""
        h = self.H
        if not np.any(h.imag):
            vals, vecs = np.linalg.eigh(h.real)
        else:
            vals, vecs = np.linalg.eigh(h)
        return vals, np.ascontiguousarray(vecs[:self.n, :])

    def reduced(self, t) -> np.ndarray:
        """``P exp(-iHt) P`` at times ``t``; shape ``t.shape + (N, N)``."""
        t = np.asarray(t, dtype=float)
        vals, vp = self.eigensystem
        ph = np.exp(-1j * np.multiply.outer(t.ravel(), vals))
        out = np.einsum("am,tm,bm->tab", vp, ph, vp.conj(), optimize=True)
        return out.reshape(t.shape + (self.n, self.n))

    def full_propagator(self, t) -> np.ndarray:
        """Full unitary ``exp(-iHt)`` (for unitarity checks on small systems)."""
        vals, vecs = np.linalg.eigh(self.H)
        return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def discretize(model: SpectralDensityModel, m: int = 2000, grid_rule: str = "gauss",
               focus=None, focus_fraction: float = 0.5) -> DiscretizedHamiltonian:
    """Build the discretized Hamiltonian.

    Parameters
    ----------
    model : SpectralDensityModel
    m : int
        Total number of continuum states, shared evenly among the channels.
    grid_rule : {"gauss", "uniform"}
        Gauss-Legendre panels, or a uniform midpoint ("box") grid.
    focus : (float, float), optional
        Energy window that receives ``focus_fraction`` of each channel's
        nodes; used to resolve the levels while still covering wide supports.
    """
    chans = [ch for ch in model.channels]
    if not chans:
        raise ModelError("model has no channels to discretize")
    if m < 10 * model.n:
        raise ModelError(f"need M >= 10 N = {10 * model.n}, got {m}")
    n = model.n
    per = [m // len(chans) + (1 if c < m % len(chans) else 0) for c in range(len(chans))]
    nodes, weights, owner, coup, windows, tails = [], [], [], [], [], []
    for c, (ch, mc) in enumerate(zip(chans, per)):
        x, w, tail, window = _channel_grid(ch, mc, grid_rule, focus, focus_fraction)
        nodes.append(x)
        weights.append(w)
        owner.append(np.full(x.size, c))
        coup.append(np.outer(ch.coupling, np.sqrt(np.maximum(w, 0.0))))
        windows.append(window)
        tails.append(tail)
    grid = np.concatenate(nodes)
    wts = np.concatenate(weights)
    big = np.zeros((n + grid.size, n + grid.size), dtype=complex)
    big[:n, :n] = model.h0
    big[n:, n:] = np.diag(grid)
    block = np.concatenate(coup, axis=1)
    big[:n, n:] = block
    big[n:, :n] = block.conj().T
    if not np.any(big.imag):
        big = big.real.astype(complex)
    t_rec = _recurrence_time(nodes, model.energies)
    info = {"grid_rule": grid_rule, "m": int(grid.size), "windows": windows, "tail_mass": tails,
            "focus": None if focus is None else tuple(map(float, focus)),
            "recurrence_time": t_rec}
    return DiscretizedHamiltonian(model, big, grid, wts, np.concatenate(owner), info)


def _recurrence_time(nodes, levels):
    """``2 pi / dl`` for the coarsest node spacing met near any level."""
    worst = 0.0
    for x in nodes:
        if x.size < 2:
            continue
        gaps = np.diff(x)
        for lam in levels:
            i = int(np.clip(np.searchsorted(x, lam), 1, x.size - 1))
            worst = max(worst, gaps[i - 1])
    return 2 * np.pi / worst if worst > 0 else np.inf


def exact_reduced_propagator(dh: DiscretizedHamiltonian, t_grid) -> ReducedPropagator:
    """Reduced propagator of the finite system on ``t_grid``.

    Times beyond half the recurrence time trigger a
    :class:`RecurrenceWarning`; ``valid_until`` is set to that bound.
    """
    t = np.asarray(t_grid, dtype=float)
    limit = 0.5 * dh.recurrence_time
    if np.any(t > limit):
        warnings.warn(f"t up to {t.max():.4g} exceeds {limit:.4g}, half the recurrence time "
                      f"{dh.recurrence_time:.4g}; revivals from the finite grid may appear",
                      RecurrenceWarning, stacklevel=2)
    u = dh.reduced(t)
    scheme = {"method": "oracle_eigh", "m": dh.info["m"], "grid_rule": dh.info["grid_rule"],
              "recurrence_time": dh.recurrence_time}
    return ReducedPropagator(t, u, scheme, exact=dh.reduced, valid_until=limit)


def dispersion(dh: DiscretizedHamiltonian, state) -> float:
    """``<H^2> - <H>^2`` in the embedded discrete state."""
    c = normalized_state(state, dh.n)
    psi = np.zeros(dh.dim, dtype=complex)
    psi[:dh.n] = c
    hpsi = dh.H @ psi
    mean = np.vdot(psi, hpsi).real
    return float(np.vdot(hpsi, hpsi).real - mean ** 2)
