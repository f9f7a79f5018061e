import numpy as np
import pytest

from friedrichs.analysis import (cross_pole_orthogonality, default_pairs, dominant_poles,
                                 fit_decay_rate, fit_zeno, markovianity_profile,
                                 semigroup_deviation)
from friedrichs.errors import FitRejected
from friedrichs.kernel import CorrelationKernel
from friedrichs.memory_evolution import ReducedPropagator, solve_markovian
from friedrichs.model import FlatWindow, LevelSet, Lorentzian, SpectralDensityModel
from friedrichs.oracle import discretize, dispersion, exact_reduced_propagator
from friedrichs.resolvent import ReducedGenerator


def markov2():
    return SpectralDensityModel(LevelSet([0.0, 1.0]),
                                (FlatWindow((0.1, 0.05), -np.inf, np.inf),
                                 FlatWindow((-0.03, 0.08), -np.inf, np.inf)))


def pole_source(rg, poles, mode="exact", valid=np.inf):
    def at(t):
        return rg.pole_approx_propagator(poles, t, mode=mode)
    at.valid_until = valid
    at.name = "pole_approx"
    return at


class TestSemigroup:
    def test_markovian_source(self):
        m = markov2()
        w = sum(ch.strength for ch in m.channels)
        prop = solve_markovian(m, w, t_max=1.0, step=0.5)
        rep = semigroup_deviation(prop, default_pairs(3.0))
        assert rep.max_deviation < 1e-12
        assert rep.source == "markovian_expm"

    def test_single_pole_ww(self):
        m = SpectralDensityModel(LevelSet([1.0]), (FlatWindow((0.2,), -5.0, 5.0),))
        rg = ReducedGenerator(m)
        poles = rg.find_poles()
        assert len(poles) == 1
        rep = semigroup_deviation(pole_source(rg, poles, "ww"), default_pairs(2.0))
        assert rep.max_deviation < 1e-12

    def test_non_markovian_oracle(self):
        m = SpectralDensityModel(LevelSet([0.0, 1.0]), (Lorentzian((0.3, 0.1), 0.0, 0.05),
                                                        Lorentzian((0.1, 0.3), 1.0, 0.05)))
        rg = ReducedGenerator(m)
        tau = min(p.lifetime for p in rg.find_poles())
        dh = discretize(m, m=2000, focus=(-1.0, 2.0), focus_fraction=0.9)
        prop = exact_reduced_propagator(dh, np.linspace(0, 2 * tau, 5))
        rep = semigroup_deviation(prop, [(tau, tau)])
        assert rep.max_deviation > 1e-3

    def test_skips(self):
        prop = ReducedPropagator(np.linspace(0, 2, 3), np.array([np.eye(1)] * 3),
                                 valid_until=2.0)
        rep = semigroup_deviation(prop, [(1.0, 1.0), (1.0, 2.0), (-1.0, 1.0)])
        assert rep.pairs == [(1.0, 1.0)]
        assert len(rep.skipped) == 2
        assert rep.deviation == [0.0]
        assert rep.to_dict()["skipped"][0]["pair"] == [1.0, 2.0]

    def test_decayed_normalization(self):
        at = lambda t: np.array([[np.exp(-t) * (1 + 0.1 * t)]])
        rep = semigroup_deviation(at, [(10.0, 10.0)])
        assert rep.max_deviation > 1e-3

    def test_monotone_markovianization(self):
        omega0 = 0.02
        tau = 1 / (2 * np.pi * omega0)
        pairs = default_pairs(tau)
        devs = []
        for cut in (1.0, 3.0, 10.0, 30.0):
            m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((np.sqrt(omega0),), -cut, cut),))
            dh = discretize(m, m=1500)
            prop = exact_reduced_propagator(dh, np.linspace(0, 4 * tau, 5))
            devs.append(semigroup_deviation(prop, pairs).max_deviation)
        assert all(a >= b for a, b in zip(devs, devs[1:]))


class TestOrthogonality:
    def test_markovian(self):
        poles = ReducedGenerator(markov2()).find_poles()
        assert len(poles) == 2
        q = cross_pole_orthogonality(poles)
        assert np.all(q < 1e-10)

    def test_width_sweep_shrinks(self):
        vals = []
        for width in (0.05, 1.0, 20.0):
            m = SpectralDensityModel(LevelSet([0.0, 1.0]), (
                Lorentzian((0.3, 0.1), 0.0, width), Lorentzian((0.1, 0.3), 1.0, width)))
            poles = dominant_poles(ReducedGenerator(m).find_poles(), 2)
            q = cross_pole_orthogonality(poles)
            assert np.all(np.diag(q) < 1e-10)
            vals.append(q[0, 1])
        assert vals[0] > 1e-4
        assert vals[0] > vals[1] > vals[2]


class TestDecayFit:
    def test_markovian_rate(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((0.1,), -np.inf, np.inf),))
        prop = solve_markovian(m, [[0.02]], t_max=60.0, step=0.1)
        fit = fit_decay_rate(prop, t_start=1.0)
        assert fit.rate == pytest.approx(2 * np.pi * 0.02, rel=1e-10)
        assert fit.r_squared == pytest.approx(1.0)

    def test_zero_coupling_rejected(self):
        prop = ReducedPropagator(np.linspace(0, 10, 101),
                                 np.exp(-1j * np.linspace(0, 10, 101))[:, None, None])
        with pytest.raises(FitRejected):
            fit_decay_rate(prop, t_start=0.0)

    def test_revival_rejected(self):
        t = np.linspace(0, 40, 401)
        amp = np.exp(-0.1 * t) + 0.2 * np.exp(-((t - 30) ** 2))
        prop = ReducedPropagator(t, amp[:, None, None].astype(complex))
        with pytest.raises(FitRejected) as info:
            fit_decay_rate(prop, t_start=1.0)
        assert 25 < info.value.revival_time < 31

    def test_needs_window(self):
        prop = ReducedPropagator(np.linspace(0, 1, 11), np.ones((11, 1, 1), dtype=complex))
        with pytest.raises(ValueError):
            fit_decay_rate(prop)

    def test_one_level_lorentzian_rate(self):
        m = SpectralDensityModel(LevelSet([1.0]), (Lorentzian((0.1,), 1.0, 2.0),))
        rg = ReducedGenerator(m)
        poles = rg.find_poles()
        slow = max(poles, key=lambda p: p.z_pole.imag)
        rate = -2 * slow.z_pole.imag
        t = np.linspace(0, 4 / rate, 2001)
        prop = ReducedPropagator(t, rg.pole_approx_propagator(poles, t))
        fit = fit_decay_rate(prop, t_start=5.0)
        assert fit.rate == pytest.approx(rate, rel=5e-3)
        assert fit.phase == pytest.approx(slow.z_pole.real, rel=1e-3)

    def test_zeno_window_from_dispersion(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((0.1,), -20.0, 20.0),))
        dh = discretize(m, m=1500)
        d = dispersion(dh, [1.0])
        prop = exact_reduced_propagator(dh, np.linspace(0, 70, 701))
        fit = fit_decay_rate(prop, dispersion=d)
        assert fit.window[0] == pytest.approx(10 / np.sqrt(d), abs=0.1)
        assert fit.rate == pytest.approx(2 * np.pi * 0.01, rel=0.02)

    def test_zeno_coefficient(self):
        t = np.linspace(0, 0.1, 101)
        u = np.cos(3.0 * t)[:, None, None].astype(complex)
        c = fit_zeno(ReducedPropagator(t, u), 0.01)
        assert c == pytest.approx(9.0, rel=1e-3)


class TestMarkovianity:
    def test_zero_coupling(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((0.0,), -1, 1),))
        prof = markovianity_profile(CorrelationKernel(m), 5.0)
        assert (prof.kernel_width, prof.flatness, prof.delta_quality) == (0.0, 0.0, 0.0)

    def test_flat_wide_is_delta_like(self):
        widths, quality = [], []
        for cut in (10.0, 40.0, 160.0):
            m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((0.1,), -cut, cut),))
            prof = markovianity_profile(CorrelationKernel(m), 20.0, n_samples=200001)
            widths.append(prof.kernel_width)
            quality.append(prof.delta_quality)
        assert widths[0] > widths[1] > widths[2]
        assert quality[-1] < 0.01
        assert widths[-1] < 0.02

    def test_narrow_lorentzian_width(self):
        gamma = 0.05
        m = SpectralDensityModel(LevelSet([1.0]), (Lorentzian((0.1,), 1.0, gamma),))
        prof = markovianity_profile(CorrelationKernel(m), 400.0)
        assert prof.kernel_width == pytest.approx(1 / gamma, rel=1e-3)
        # the peak varies by several percent across the resonance window
        peak = 0.01 / (np.pi * gamma)
        assert 0.05 * peak < prof.flatness < 0.2 * peak

    def test_markov_model(self):
        prof = markovianity_profile(CorrelationKernel(markov2()), 5.0)
        assert prof.to_dict() == {"kernel_width": 0.0, "flatness": 0.0, "delta_quality": 0.0}


def test_pole_approx_fidelity_improves_with_weaker_coupling():
    errs = []
    for g in (0.3, 0.2, 0.14):
        m = SpectralDensityModel(LevelSet([1.0]), (FlatWindow((g,), 0.0, 4.0),), "half_line")
        rg = ReducedGenerator(m)
        poles = rg.find_poles()
        tau = poles[0].lifetime
        dh = discretize(m, m=1500)
        t0 = 10 / np.sqrt(dispersion(dh, [1.0]))
        t = np.linspace(t0, 3 * tau, 60)
        prop = exact_reduced_propagator(dh, t)
        approx = rg.pole_approx_propagator(poles, t)
        errs.append(np.max(np.linalg.norm(approx - prop.values, axis=(1, 2))))
    assert errs[0] > errs[1] > errs[2]
