import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from friedrichs.errors import ContinuationError, DomainError, ModelError
from friedrichs.model import (FlatWindow, LevelSet, Lorentzian, Ohmic, SpectralDensityModel,
                              make_channel, omega_at, omega_continuation)

finite = st.floats(-5, 5, allow_nan=False)
amp = st.floats(-1, 1, allow_nan=False)


def lorentz_model(g=(1.0, 1.0), mu=0.0, gamma=1.0, levels=(0.0, 1.0)):
    return SpectralDensityModel(LevelSet(levels), (Lorentzian(g, mu, gamma),))


class TestValidation:
    def test_needs_a_level(self):
        with pytest.raises(ModelError):
            LevelSet([])

    def test_non_finite_level(self):
        with pytest.raises(ModelError):
            LevelSet([0.0, np.inf])

    def test_degeneracy_flagged_not_fatal(self):
        m = SpectralDensityModel(LevelSet([1.0, 1.0]), ())
        assert m.degenerate
        assert m.levels.degenerate_pairs == [(0, 1)]

    @pytest.mark.parametrize("kw", [dict(center=0.0, width=0.0), dict(center=0.0, width=-1.0)])
    def test_lorentzian_width_positive(self, kw):
        with pytest.raises(ModelError):
            Lorentzian((1.0,), **kw)

    def test_ohmic_cutoff_positive(self):
        with pytest.raises(ModelError):
            Ohmic((1.0,), 1.0, 0.0)

    def test_flat_window_order(self):
        with pytest.raises(ModelError):
            FlatWindow((1.0,), 2.0, 1.0)

    def test_flat_window_half_infinite_rejected(self):
        with pytest.raises(ModelError):
            FlatWindow((1.0,), 0.0, np.inf)

    def test_coupling_length(self):
        with pytest.raises(ModelError):
            SpectralDensityModel(LevelSet([0.0, 1.0]), (Lorentzian((1.0,), 0.0, 1.0),))

    def test_half_line_support(self):
        with pytest.raises(ModelError):
            SpectralDensityModel(LevelSet([0.5]), (FlatWindow((1.0,), -1.0, 1.0),), "half_line")
        SpectralDensityModel(LevelSet([0.5]), (Ohmic((1.0,), 1.0, 1.0),), "half_line")

    def test_unknown_kind(self):
        with pytest.raises(ModelError):
            make_channel("gaussian", (1.0,), center=0.0)


class TestOmegaAt:
    def test_zero_coupling(self):
        m = SpectralDensityModel(LevelSet([0.0, 1.0]), (FlatWindow((0.0, 0.0), -1, 1),))
        assert np.all(omega_at(m, 0.3) == 0)

    def test_flat_single_level(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((0.3 + 0.4j,), -2, 2),))
        assert omega_at(m, 0.0) == pytest.approx(np.array([[0.25]]))
        assert omega_at(m, 3.0)[0, 0] == 0

    def test_lorentzian_value(self):
        w = omega_at(lorentz_model(), 0.0)
        assert np.allclose(w, np.ones((2, 2)) / np.pi)

    def test_lorentzian_integrates_to_strength(self):
        g = np.array([1.0, 0.5 - 0.2j])
        m = lorentz_model(g=g, mu=0.3, gamma=0.7)
        val = np.array([[integrate.quad(lambda x: omega_at(m, x)[a, b].real, -np.inf, np.inf,
                                        limit=200)[0] for b in range(2)] for a in range(2)])
        assert np.allclose(val, np.outer(g, g.conj()).real, atol=1e-8)

    def test_flat_integral(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((2.0,), -1.5, 2.5),))
        val = integrate.quad(lambda x: omega_at(m, x)[0, 0].real, -3, 3, points=[-1.5, 2.5])[0]
        assert val == pytest.approx(4.0 * 4.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ModelError):
            omega_at(lorentz_model(), np.nan)

    def test_vector_shape(self):
        assert omega_at(lorentz_model(), np.zeros((3, 4))).shape == (3, 4, 2, 2)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(amp, amp), min_size=3, max_size=3), finite,
           st.floats(0.05, 3), finite)
    def test_hermitian_psd(self, g, mu, gamma, lam):
        g = [complex(a, b) for a, b in g]
        m = SpectralDensityModel(LevelSet([0.0, 1.0, 2.0]), (
            Lorentzian(g, mu, gamma), FlatWindow(g[::-1], -1.0, 3.0), Ohmic(g, 1.5, 2.0)))
        w = omega_at(m, lam)
        assert np.allclose(w, w.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(w).min() >= -1e-12 * max(1.0, np.abs(w).max())


class TestContinuation:
    def test_lorentzian_example(self):
        m = SpectralDensityModel(LevelSet([0.0]), (Lorentzian((1.0,), 0.0, 1.0),))
        assert omega_continuation(m, -0.1j)[0, 0] == pytest.approx(1 / (np.pi * 0.99))

    def test_lorentzian_reflection(self):
        # Schwarz reflection: the continuation at conj(z) equals conj of the value at z
        ch = Lorentzian((1.0,), 0.2, 0.5)
        z = 0.3 - 0.2j
        assert ch.shape_continued(z) == pytest.approx(np.conj(ch.shape_continued(np.conj(z))))

    def test_flat_constant(self):
        m = SpectralDensityModel(LevelSet([0.0]), (FlatWindow((2.0,), -1, 1),))
        assert omega_continuation(m, 0.4 - 3j)[0, 0] == pytest.approx(4.0)

    def test_zero_coupling(self):
        m = lorentz_model(g=(0.0, 0.0))
        assert np.all(omega_continuation(m, -1j) == 0)

    def test_upper_half_plane_rejected(self):
        with pytest.raises(DomainError):
            omega_continuation(lorentz_model(), 0.1j)

    def test_non_integer_ohmic(self):
        m = SpectralDensityModel(LevelSet([1.0]), (Ohmic((1.0,), 0.5, 1.0),))
        with pytest.raises(ContinuationError):
            omega_continuation(m, -0.1j)

    def test_integer_ohmic(self):
        ch = Ohmic((1.0,), 2.0, 1.5)
        x = np.linspace(0.1, 5, 7)
        assert np.allclose(ch.shape_continued(x), ch.shape(x), rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(finite, st.floats(0.05, 3), st.floats(-5, 5))
    def test_real_axis_agreement(self, mu, gamma, lam):
        m = SpectralDensityModel(LevelSet([0.0]), (Lorentzian((0.7,), mu, gamma),
                                                   FlatWindow((0.2,), -6, 6)))
        assert np.allclose(omega_continuation(m, complex(lam, 0)), omega_at(m, lam),
                           rtol=1e-12, atol=0)
