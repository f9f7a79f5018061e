"""Acceptance suite: each criterion computed end to end with its threshold.

Every ``criterion_*`` function returns a :class:`CriterionResult`. The suite
is run by ``tests/test_acceptance.py`` and by ``friedrichs check``.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .memory_evolution import build_resonant_density, solve_markovian, solve_memory_kernel
from .model import FlatWindow, LevelSet, Lorentzian, SpectralDensityModel
from .oracle import discretize, dispersion, exact_reduced_propagator
from .resolvent import ReducedGenerator

GOLDEN_OMEGA = 0.02


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.key} {self.title}: {vals}"

    def to_dict(self) -> dict:
        return {"key": self.key, "title": self.title, "passed": bool(self.passed),
                "values": self.values, "seconds": self.seconds}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# reference models

def one_level_lorentzian() -> SpectralDensityModel:
    return SpectralDensityModel(LevelSet([1.0]), (Lorentzian((0.1,), 1.0, 0.05),))


def golden_rule_model(cutoff: float) -> SpectralDensityModel:
    return SpectralDensityModel(LevelSet([0.0]),
                                (FlatWindow((np.sqrt(GOLDEN_OMEGA),), -cutoff, cutoff),))


def two_level_lorentzian(width: float) -> SpectralDensityModel:
    """Levels 0 and 1, one Lorentzian channel centred on each level."""
    return SpectralDensityModel(LevelSet([0.0, 1.0]), (
        Lorentzian((1.0, 0.5), 0.0, width), Lorentzian((0.4, 1.0), 1.0, width)))


def two_level_markov() -> SpectralDensityModel:
    inf = float("inf")
    return SpectralDensityModel(LevelSet([0.0, 1.0]), (
        FlatWindow((0.1, 0.05), -inf, inf), FlatWindow((0.04, 0.1), -inf, inf)))


def half_line_flat() -> SpectralDensityModel:
    return SpectralDensityModel(LevelSet([0.5, 1.5]), (FlatWindow((0.1, 0.08), 0.0, 100.0),),
                                "half_line")


# criteria

@_timed
def criterion_1(step: float = 0.02, m: int = 4000) -> CriterionResult:
    """Volterra, exact two-pole sum and oracle agree within 1e-4 on [0, 3/Gamma] in < 30 s."""
    start = time.perf_counter()
    model = one_level_lorentzian()
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    gamma = -2.0 * max(p.z_pole.imag for p in poles)
    t_max = 3.0 / gamma
    vol = solve_memory_kernel(model, t_max=t_max, step=step)
    t = vol.t_grid
    pole = gen.pole_approx_propagator(poles, t, mode="exact")
    orc = exact_reduced_propagator(discretize(model, m), t).values
    d = {"volterra_vs_poles": np.linalg.norm(vol.values - pole, axis=(1, 2)).max(),
         "volterra_vs_oracle": np.linalg.norm(vol.values - orc, axis=(1, 2)).max(),
         "poles_vs_oracle": np.linalg.norm(pole - orc, axis=(1, 2)).max()}
    res = CriterionResult("C1", "one-level Lorentzian three-way agreement",
                          False, {k: float(v) for k, v in d.items()})
    elapsed = time.perf_counter() - start
    res.values.update({"gamma": gamma, "t_max": t_max, "n_poles": len(poles),
                       "runtime_s": elapsed})
    res.passed = len(poles) == 2 and max(d.values()) < 1e-4 and elapsed < 30.0
    return res


def first_sheet_models():
    return [one_level_lorentzian(), two_level_lorentzian(0.02), two_level_lorentzian(50.0),
            golden_rule_model(80.0), half_line_flat()]


@_timed
def criterion_2(n_vectors: int = 1000, seed: int = 20240501) -> CriterionResult:
    """Im <chi|h(z)|chi> >= Im z |chi|^2 on a 20 x 10 grid in the upper half plane."""
    rng = np.random.default_rng(seed)
    re = np.linspace(-2.0, 3.0, 20)
    im = np.geomspace(0.01, 2.0, 10)
    violations, worst = 0, np.inf
    for model in first_sheet_models():
        gen = ReducedGenerator(model)
        n = model.n
        for x in re:
            for y in im:
                z = complex(x, y)
                h = gen.h_first_sheet(z)
                anti = (h - h.conj().T) / 2j
                chi = rng.normal(size=(n_vectors, n)) + 1j * rng.normal(size=(n_vectors, n))
                chi /= np.linalg.norm(chi, axis=1, keepdims=True)
                vals = np.einsum("ka,ab,kb->k", chi.conj(), anti, chi).real
                margin = vals - y
                worst = min(worst, margin.min())
                violations += int(np.sum(margin < -1e-12 * max(1.0, np.abs(h).max())))
    return CriterionResult("C2", "first-sheet numerical-range bound", violations == 0,
                           {"violations": violations, "min_margin": float(worst),
                            "points": 200 * len(first_sheet_models()), "vectors": n_vectors})


@_timed
def criterion_3(m: int = 3000) -> CriterionResult:
    """Oracle rate and -2 Im z both within 1% of 2 pi omega at cutoff 80."""
    target = 2 * np.pi * GOLDEN_OMEGA
    rates, pole_rates = [], []
    for cutoff in (5.0, 20.0, 80.0):
        model = golden_rule_model(cutoff)
        pole = ReducedGenerator(model).find_poles()[0]
        pole_rates.append(-2 * pole.z_pole.imag)
        dh = discretize(model, m, focus=(-15.0, 15.0), focus_fraction=0.7)
        dh2 = dispersion(dh, [1.0])
        t0 = 10.0 / np.sqrt(dh2)
        # window: golden-rule estimate of four lifetimes past the Zeno time
        t1 = t0 + 4.0 / (2 * np.pi * model.omega(0.0)[0, 0].real)
        prop = exact_reduced_propagator(dh, np.linspace(0.0, t1, 801))
        fit = analysis.fit_decay_rate(prop, t_start=t0, t_end=t1)
        rates.append(fit.rate)
    err_fit = abs(rates[-1] / target - 1)
    err_pole = abs(pole_rates[-1] / target - 1)
    return CriterionResult("C3", "golden-rule rate at cutoff 80", err_fit < 0.01 and
                           err_pole < 0.01,
                           {"fitted_rates": rates, "pole_rates": pole_rates, "target": target,
                            "rel_err_fit": err_fit, "rel_err_pole": err_pole})


def projector_models():
    return [two_level_lorentzian(0.02), two_level_lorentzian(50.0), two_level_markov(),
            half_line_flat(),
            SpectralDensityModel(LevelSet([0.0, 0.7, 1.6]), (
                Lorentzian((0.3, 0.2, 0.1), 0.5, 0.4), Lorentzian((0.1, 0.3j, 0.25), 1.2, 0.8)))]


@_timed
def criterion_4(n_points: int = 50, seed: int = 7) -> CriterionResult:
    """Fixed-z projector algebra of W_II within 1e-10."""
    rng = np.random.default_rng(seed)
    worst_prod, worst_sum = 0.0, 0.0
    for model in projector_models():
        gen = ReducedGenerator(model)
        zs = rng.uniform(-1.0, 3.0, n_points) - 1j * rng.uniform(1e-3, 0.5, n_points)
        for z in zs:
            q, _ = gen.projectors(z)
            eye = np.eye(model.n)
            worst_sum = max(worst_sum, np.linalg.norm(sum(q) - eye))
            for a in range(model.n):
                for b in range(model.n):
                    target = q[a] if a == b else 0.0
                    worst_prod = max(worst_prod, np.linalg.norm(q[a] @ q[b] - target))
    return CriterionResult("C4", "projector algebra", worst_prod < 1e-10 and worst_sum < 1e-10,
                           {"max_QaQb_defect": float(worst_prod),
                            "max_completeness_defect": float(worst_sum),
                            "models": len(projector_models()), "points_per_model": n_points})


def _regime(width, focus, focus_fraction, m):
    model = two_level_lorentzian(width)
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    dom = analysis.dominant_poles(poles, model.n)
    tau = float(np.mean([p.lifetime for p in dom]))
    pairs = analysis.default_pairs(tau)
    dh = discretize(model, m, focus=focus, focus_fraction=focus_fraction)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        oracle = exact_reduced_propagator(dh, [0.0, 4 * tau])
    rep = analysis.semigroup_deviation(oracle, pairs, name="oracle")
    cross = analysis.cross_pole_orthogonality(dom)
    # the rational model's pole sum is exact: it validates the oracle
    ts = np.linspace(0.0, 4 * tau, 200)
    oracle_err = np.linalg.norm(dh.reduced(ts) - gen.pole_approx_propagator(poles, ts),
                                axis=(1, 2)).max()
    return {"tau": tau, "delta_max": rep.max_deviation, "cross": float(cross[0, 1]),
            "oracle_err": float(oracle_err), "n_poles": len(poles)}


@_timed
def criterion_5(m: int = 4000) -> CriterionResult:
    """Semigroup violation for narrow resonances, restoration when flattened."""
    a = _regime(0.02, (-3.0, 4.0), 0.8, m)
    b = _regime(50.0, (-25.0, 26.0), 0.9, m)
    model = two_level_markov()
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    tau = float(np.mean([p.lifetime for p in poles]))
    mark = solve_markovian(model, build_resonant_density(model), t_max=4 * tau, step=tau / 4)
    rep_c = analysis.semigroup_deviation(mark, analysis.default_pairs(tau))
    cross_c = analysis.cross_pole_orthogonality(poles)
    cross_c_off = float(cross_c[~np.eye(len(poles), dtype=bool)].max())
    ok_a = a["delta_max"] > 1e-3 and a["cross"] > 1e-4
    ok_b = b["delta_max"] * 10 <= a["delta_max"] and b["cross"] * 10 <= a["cross"]
    ok_c = rep_c.max_deviation < 1e-12 and cross_c_off < 1e-10
    vals = {f"a_{k}": v for k, v in a.items()}
    vals.update({f"b_{k}": v for k, v in b.items()})
    vals.update({"c_delta_max": rep_c.max_deviation, "c_cross": cross_c_off})
    return CriterionResult("C5", "semigroup restoration", ok_a and ok_b and ok_c, vals)


@_timed
def criterion_6(m: int = 3000) -> CriterionResult:
    """Zeno law 1 - P = dH^2 t^2 within 1%; dH^2 linear in the cutoff, slope 2 omega."""
    cutoffs = (5.0, 20.0, 80.0)
    disp, zeno_err = [], []
    for cutoff in cutoffs:
        dh = discretize(golden_rule_model(cutoff), m, focus=(-15.0, 15.0), focus_fraction=0.7)
        dh2 = dispersion(dh, [1.0])
        t_z = 0.01 / np.sqrt(dh2)
        prop = exact_reduced_propagator(dh, np.linspace(0.0, t_z, 201))
        c = analysis.fit_zeno(prop, t_z)
        disp.append(dh2)
        zeno_err.append(abs(c / dh2 - 1))
    slope = np.polyfit(cutoffs, disp, 1)[0]
    slope_err = abs(slope / (2 * GOLDEN_OMEGA) - 1)
    return CriterionResult("C6", "Zeno quadratic law and dispersion growth",
                           max(zeno_err) < 0.01 and slope_err < 0.02,
                           {"dispersion": disp, "zeno_rel_err": zeno_err, "slope": float(slope),
                            "slope_rel_err": float(slope_err)})


@_timed
def criterion_7(m: int = 3000, n_times: int = 40) -> CriterionResult:
    """Exact-residue pole terms plus background reproduce the oracle within 5e-3."""
    model = half_line_flat()
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    dh = discretize(model, m, focus=(0.0, 4.0), focus_fraction=0.7)
    t_zeno = max(10.0 / np.sqrt(dispersion(dh, e)) for e in np.eye(model.n))
    t_end = 2 * max(p.lifetime for p in poles)
    ts = np.linspace(t_zeno, t_end, n_times)
    orc = exact_reduced_propagator(dh, ts).values
    errs, pole_only = [], []
    for t, u in zip(ts, orc):
        p = gen.pole_approx_propagator(poles, t, mode="exact")
        errs.append(np.linalg.norm(p + gen.background_integral(t) - u))
        pole_only.append(np.linalg.norm(p - u))
    return CriterionResult("C7", "pole + background decomposition", max(errs) < 5e-3,
                           {"max_err": float(max(errs)), "max_err_poles_only": float(max(pole_only)),
                            "window": [float(t_zeno), float(t_end)], "n_poles": len(poles)})


@_timed
def criterion_8(step: float = 0.04) -> CriterionResult:
    """Step halving reduces the Volterra error by at least 3.6."""
    model = one_level_lorentzian()
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    t_max = 3.0 / (-2.0 * max(p.z_pole.imag for p in poles))
    errs = []
    for h in (step, step / 2):
        vol = solve_memory_kernel(model, t_max=t_max, step=h)
        coarse = vol.values[::int(round(step / h))]
        exact = gen.pole_approx_propagator(poles, vol.t_grid[::int(round(step / h))])
        errs.append(np.linalg.norm(coarse - exact, axis=(1, 2)).max())
    ratio = errs[0] / errs[1]
    return CriterionResult("C8", "Volterra second order", ratio >= 3.6,
                           {"err_h": float(errs[0]), "err_h2": float(errs[1]),
                            "ratio": float(ratio)})


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8]


def run_all(echo=print) -> list:
    results = []
    for fn in CRITERIA:
        res = fn()
        if echo:
            echo(res.line())
        results.append(res)
    return results
