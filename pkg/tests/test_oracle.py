import numpy as np
import pytest

from friedrichs.errors import ModelError, RecurrenceWarning
from friedrichs.model import FlatWindow, LevelSet, Lorentzian, Ohmic, SpectralDensityModel
from friedrichs.oracle import discretize, dispersion, exact_reduced_propagator
from friedrichs.resolvent import exact_one_level_lorentzian


def flat(g=0.1, cut=5.0, levels=(0.0,)):
    gv = (g,) * len(levels)
    return SpectralDensityModel(LevelSet(levels), (FlatWindow(gv, -cut, cut),))


class TestStructure:
    def test_hermitian_and_block_shape(self):
        m = SpectralDensityModel(LevelSet([0.0, 1.0]), (
            FlatWindow((0.1, 0.2j), -3, 3), Lorentzian((0.05, -0.1), 0.5, 0.3)))
        dh = discretize(m, m=200)
        h = dh.H
        n = m.n
        assert np.max(np.abs(h - h.conj().T)) < 1e-13
        assert np.allclose(h[:n, :n], np.diag(m.energies))
        assert np.allclose(h[n:, n:], np.diag(dh.grid))
        assert dh.dim == n + 200

    def test_zero_coupling_spectrum(self):
        m = flat(g=0.0, levels=(0.3, 1.1))
        dh = discretize(m, m=100)
        vals, _ = dh.eigensystem
        assert np.allclose(np.sort(vals), np.sort(np.concatenate([m.energies, dh.grid])))

    def test_flat_moment(self):
        dh = discretize(flat(g=0.3, cut=4.0), m=300)
        assert np.sum(np.abs(dh.H[0, 1:]) ** 2) == pytest.approx(0.09 * 8.0, rel=1e-13)

    def test_lorentzian_moment(self):
        m = SpectralDensityModel(LevelSet([1.0]), (Lorentzian((0.1,), 1.0, 0.05),))
        dh = discretize(m, m=1000)
        assert np.sum(np.abs(dh.H[0, 1:]) ** 2) == pytest.approx(0.01, rel=1e-7)

    def test_ohmic_moment(self):
        m = SpectralDensityModel(LevelSet([1.0]), (Ohmic((0.2,), 1.0, 2.0),), "half_line")
        dh = discretize(m, m=800)
        # int_0^inf l e^{-l/2} dl = 4 for s = 1, cutoff 2
        assert np.sum(np.abs(dh.H[0, 1:]) ** 2) == pytest.approx(0.04 * 4.0, rel=1e-8)

    def test_uniform_rule(self):
        dh = discretize(flat(g=0.3, cut=4.0), m=400, grid_rule="uniform")
        assert np.allclose(np.diff(dh.grid), 8.0 / 400)
        assert np.sum(np.abs(dh.H[0, 1:]) ** 2) == pytest.approx(0.72)

    def test_errors(self):
        with pytest.raises(ModelError):
            discretize(flat(levels=(0.0, 1.0)), m=15)
        with pytest.raises(ModelError):
            discretize(SpectralDensityModel(LevelSet([0.0]),
                                            (FlatWindow((0.1,), -np.inf, np.inf),)))
        with pytest.raises(ModelError):
            discretize(SpectralDensityModel(LevelSet([0.0]), ()))


class TestPropagator:
    def test_identity_at_zero(self):
        dh = discretize(flat(levels=(0.0, 0.5)), m=200)
        assert np.allclose(exact_reduced_propagator(dh, [0.0]).values[0], np.eye(2))

    def test_zero_coupling_phases(self):
        m = flat(g=0.0, levels=(0.3, 1.1))
        prop = exact_reduced_propagator(discretize(m, m=100), np.linspace(0, 5, 11))
        expected = np.array([np.diag(np.exp(-1j * m.energies * t)) for t in prop.t_grid])
        assert np.allclose(prop.values, expected, atol=1e-13)

    def test_unitarity(self):
        dh = discretize(flat(g=0.2, levels=(0.0, 0.7)), m=120)
        u = dh.full_propagator(3.7)
        assert np.max(np.abs(u.conj().T @ u - np.eye(dh.dim))) < 1e-12
        prop = exact_reduced_propagator(dh, np.linspace(0, 20, 41))
        assert prop.max_singular_value() <= 1 + 1e-12

    def test_recurrence_warning(self):
        dh = discretize(flat(), m=100)
        with pytest.warns(RecurrenceWarning):
            prop = exact_reduced_propagator(dh, [0.0, dh.recurrence_time])
        assert prop.valid_until == pytest.approx(0.5 * dh.recurrence_time)

    def test_refinement_converges(self):
        # doubling M shrinks the change in U on a window inside every recurrence guard
        m = SpectralDensityModel(LevelSet([0.3]), (Lorentzian((0.2,), 0.0, 0.5),))
        t = np.linspace(0, 30, 31)
        u = [exact_reduced_propagator(discretize(m, m=k), t).values for k in (100, 200, 400)]
        d1 = np.max(np.abs(u[1] - u[0]))
        d2 = np.max(np.abs(u[2] - u[1]))
        assert d2 < 0.5 * d1
        assert d2 < 1e-4

    def test_flat_window_exact_before_recurrence(self):
        # Gauss panels integrate the flat coupling exactly, so small grids already agree
        m = flat(g=0.15, cut=6.0)
        t = np.linspace(0, 6, 13)
        u = [exact_reduced_propagator(discretize(m, m=k), t).values for k in (40, 160)]
        assert np.max(np.abs(u[1] - u[0])) < 1e-12

    @pytest.mark.slow
    def test_one_level_lorentzian_closed_form(self):
        (z1, r1), (z2, r2) = exact_one_level_lorentzian(1.0, 0.1, 1.0, 0.05)
        m = SpectralDensityModel(LevelSet([1.0]), (Lorentzian((0.1,), 1.0, 0.05),))
        dh = discretize(m, m=4000, focus=(0.5, 1.5), focus_fraction=0.9)
        gamma = -2 * max(z1.imag, z2.imag)
        t = np.linspace(0, 3 / gamma, 121)
        exact = r1 * np.exp(-1j * z1 * t) + r2 * np.exp(-1j * z2 * t)
        prop = exact_reduced_propagator(dh, t)
        assert np.max(np.abs(prop.values[:, 0, 0] - exact)) < 1e-5


class TestDispersion:
    def test_zero_coupling(self):
        dh = discretize(flat(g=0.0, levels=(0.3, 1.1)), m=100)
        assert dispersion(dh, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
        assert dispersion(dh, [0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("cut", [2.0, 8.0, 32.0])
    def test_flat_linear_in_cutoff(self, cut):
        omega0 = 0.02
        dh = discretize(flat(g=np.sqrt(omega0), cut=cut), m=200)
        assert dispersion(dh, [1.0]) == pytest.approx(2 * cut * omega0, rel=1e-12)

    def test_unnormalized(self):
        with pytest.raises(ValueError):
            dispersion(discretize(flat(), m=100), [2.0])

    def test_short_time_law(self):
        dh = discretize(flat(g=0.1, cut=10.0), m=1000)
        dh2 = dispersion(dh, [1.0])
        t = np.linspace(0, 0.01 / np.sqrt(dh2), 51)
        p = exact_reduced_propagator(dh, t).survival([1.0])
        c = np.dot(t ** 2, 1 - p) / np.dot(t ** 2, t ** 2)
        assert c == pytest.approx(dh2, rel=1e-2)

    def test_zeno_window_shrinks(self):
        # time over which P stays within 1% of 1 - dH^2 t^2 decreases as dH^2 grows
        windows = []
        for cut in (5.0, 20.0, 80.0):
            dh = discretize(flat(g=0.1, cut=cut), m=1200)
            dh2 = dispersion(dh, [1.0])
            t = np.linspace(1e-4, 3 / np.sqrt(dh2), 600)
            p = exact_reduced_propagator(dh, t).survival([1.0])
            quad = 1 - dh2 * t ** 2
            ok = np.abs((1 - p) - (1 - quad)) <= 0.01 * (1 - quad)
            windows.append(t[np.argmin(ok)] if not ok.all() else t[-1])
        assert windows[0] > windows[1] > windows[2]
