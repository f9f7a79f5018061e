"""Diagnostics: semigroup deviation, cross-pole projector products, decay-rate
fits and kernel Markovianity measures."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import FitRejected
from .kernel import CorrelationKernel
from .memory_evolution import ReducedPropagator, build_resonant_density, normalized_state
from .model import omega_at

EPS_NORM = 1e-300


@dataclass
class SemigroupReport:
    """Normalized deviations ``|U(t1+t2) - U(t2) U(t1)| / |U(t1+t2)|``."""

    pairs: list
    deviation: list
    max_deviation: float
    source: str
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"source": self.source, "pairs": [list(p) for p in self.pairs],
                "deviation": list(self.deviation), "max_deviation": self.max_deviation,
                "skipped": [{"pair": list(p), "reason": r} for p, r in self.skipped]}


def _evaluator(source):
    if isinstance(source, ReducedPropagator):
        return source.at, source.valid_until, source.scheme.get("method", "propagator")
    valid = getattr(source, "valid_until", np.inf)
    name = getattr(source, "name", getattr(source, "__name__", "callable"))
    return source, valid, name


def semigroup_deviation(source, t_pairs, name: str = None) -> SemigroupReport:
    """Deviation from the composition law for each ``(t1, t2)``.

    ``source`` is a :class:`ReducedPropagator` or any callable ``t -> U(t)``
    (optionally with a ``valid_until`` attribute). Pairs with ``t1 + t2``
    beyond the valid window are skipped with a reason.
    """
    at, valid, label = _evaluator(source)
    pairs, devs, skipped = [], [], []
    for t1, t2 in t_pairs:
        t1, t2 = float(t1), float(t2)
        if t1 < 0 or t2 < 0:
            skipped.append(((t1, t2), "negative time"))
            continue
        if t1 + t2 > valid:
            skipped.append(((t1, t2), f"t1 + t2 = {t1 + t2:.6g} beyond valid window "
                                      f"{valid:.6g}"))
            continue
        u12 = np.asarray(at(t1 + t2))
        d = np.linalg.norm(u12 - np.asarray(at(t2)) @ np.asarray(at(t1)))
        devs.append(float(d / max(np.linalg.norm(u12), EPS_NORM)))
        pairs.append((t1, t2))
    return SemigroupReport(pairs, devs, max(devs) if devs else float("nan"),
                           name or label, skipped)


def default_pairs(tau: float) -> list:
    return [(tau, tau), (tau, 2 * tau), (2 * tau, 2 * tau)]


def cross_pole_orthogonality(poles) -> np.ndarray:
    """``|Q_j Q_k|_F`` off the diagonal, idempotence defect ``|Q_j^2 - Q_j|_F`` on it."""
    q = [p.projector for p in poles]
    k = len(q)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                out[i, j] = np.linalg.norm(q[i] @ q[i] - q[i])
            else:
                out[i, j] = np.linalg.norm(q[i] @ q[j])
    return out


def dominant_poles(poles, count: int) -> list:
    """The ``count`` poles with the largest residue norms."""
    return sorted(poles, key=lambda p: -np.linalg.norm(p.residue))[:count]


@dataclass
class DecayFit:
    rate: float
    phase: float
    r_squared: float
    window: tuple

    def to_dict(self) -> dict:
        return {"rate": self.rate, "phase": self.phase, "r_squared": self.r_squared,
                "window": list(self.window)}


def fit_decay_rate(propagator: ReducedPropagator, component=None, state=None,
                   t_start: float = None, t_end: float = None, dispersion: float = None,
                   revival_tol: float = 1e-3, min_points: int = 8) -> DecayFit:
    """Exponential fit of a decaying amplitude after the Zeno window.

    Parameters
    ----------
    propagator : ReducedPropagator
    component : (int, int), optional
        Matrix element ``U_ab``; otherwise the survival amplitude of ``state``
        (default: the first level).
    t_start : float, optional
        Window start; defaults to ``10 / sqrt(dispersion)``.
    t_end : float, optional
        Window end; defaults to the end of the valid grid.

    Returns
    -------
    DecayFit
        ``rate`` is the decay rate of ``|amplitude|^2``; ``phase`` is the
        fitted angular frequency of the amplitude.

    Raises
    ------
    FitRejected
        If ``|amplitude|`` rises above its running minimum by more than
        ``revival_tol`` (relative) inside the window, or the window covers
        fewer than two decades and fewer than three lifetimes of decay.
    """
    t = propagator.t_grid
    if component is not None:
        a, b = component
        amp = propagator.values[:, a, b]
    else:
        c = normalized_state(state if state is not None else np.eye(propagator.n)[0],
                             propagator.n)
        amp = np.einsum("a,tab,b->t", c.conj(), propagator.values, c)
    if t_start is None:
        if dispersion is None or not dispersion > 0:
            raise ValueError("give t_start or a positive dispersion for the Zeno window")
        t_start = 10.0 / np.sqrt(dispersion)
    if t_end is None:
        t_end = min(t[-1], propagator.valid_until)
    sel = (t >= t_start - 1e-12) & (t <= t_end + 1e-12)
    if sel.sum() < min_points:
        raise FitRejected(f"only {sel.sum()} samples in the window [{t_start}, {t_end}]")
    ts, am = t[sel], amp[sel]
    mag = np.abs(am)
    if not np.all(mag > 0):
        raise FitRejected("amplitude vanishes inside the window")
    run_min = np.minimum.accumulate(mag)
    rise = (mag - run_min) / np.maximum(run_min, EPS_NORM)
    bad = np.nonzero(rise > revival_tol)[0]
    if bad.size:
        raise FitRejected(f"amplitude revives at t = {ts[bad[0]]:.6g}",
                          revival_time=float(ts[bad[0]]))
    logp = 2 * np.log(mag)
    reg = stats.linregress(ts, logp)
    rate = -reg.slope
    decades = (logp[0] - logp[-1]) / np.log(10)
    if rate <= 0 or (rate * (ts[-1] - ts[0]) < 3 and decades < 2):
        raise FitRejected(f"insufficient decay in the window: rate {rate:.3g}, "
                          f"{decades:.2f} decades")
    phase = -np.polyfit(ts, np.unwrap(np.angle(am)), 1)[0]
    return DecayFit(float(rate), float(phase), float(reg.rvalue ** 2),
                    (float(ts[0]), float(ts[-1])))


def fit_zeno(propagator: ReducedPropagator, t_max: float, state=None) -> float:
    """Least-squares ``c`` in ``1 - P(t) = c t^2`` over ``[0, t_max]``."""
    t = propagator.t_grid
    sel = t <= t_max + 1e-15
    p = propagator.survival(state if state is not None else np.eye(propagator.n)[0])
    x, y = t[sel] ** 2, 1.0 - p[sel]
    return float(np.dot(x, y) / np.dot(x, x))


@dataclass
class MarkovianityProfile:
    kernel_width: float
    flatness: float
    delta_quality: float

    def to_dict(self) -> dict:
        return {"kernel_width": self.kernel_width, "flatness": self.flatness,
                "delta_quality": self.delta_quality}


def markovianity_profile(kernel: CorrelationKernel, t_probe: float,
                         n_samples: int = 20001) -> MarkovianityProfile:
    """How close the kernel is to ``2 pi omega delta(t)`` on ``[0, t_probe]``.

    Uses the resonant-frame kernel ``K_ac(t) = alpha_ac(t) exp(i lambda_c t)``,
    which removes the free phase of each column.

    - ``kernel_width``: ``|int t K dt| / |int K dt|``, a memory time.
    - ``flatness``: spread (max - min) of ``|omega(l)|`` over the windows
      ``lambda_c +- 2 pi / t_probe``.
    - ``delta_quality``: ``|int_0^T K dt - pi omega_res| / |pi omega_res|``.

    Zero coupling gives all zeros. For the unbounded flat coupling the kernel
    is an exact delta and all metrics are zero.
    """
    model = kernel.model
    if all(ch.is_zero for ch in model.channels) or model.is_markovian:
        return MarkovianityProfile(0.0, 0.0, 0.0)
    t = np.linspace(0.0, t_probe, n_samples)
    lam = model.energies
    k = kernel.alpha_t(t) * np.exp(1j * np.outer(t, lam))[:, None, :]
    int_k = integrate.simpson(k, x=t, axis=0)
    int_tk = integrate.simpson(t[:, None, None] * k, x=t, axis=0)
    width = float(np.linalg.norm(int_tk) / max(np.linalg.norm(int_k), EPS_NORM))
    w_res = np.pi * build_resonant_density(model)
    quality = float(np.linalg.norm(int_k - w_res) / max(np.linalg.norm(w_res), EPS_NORM))
    half = 2 * np.pi / t_probe
    norms = []
    for c in lam:
        grid = np.linspace(c - half, c + half, 201)
        norms.extend(np.linalg.norm(omega_at(model, grid), axis=(1, 2)))
    flat = float(np.max(norms) - np.min(norms))
    return MarkovianityProfile(width, flat, quality)
