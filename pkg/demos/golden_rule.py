"""Golden-rule decay and the short-time quadratic law.

One level sits in a flat band of half-width ``L`` with density 0.02. As ``L``
grows the survival probability approaches ``exp(-2 pi 0.02 t)``, while the
initial curvature ``dH^2 = 2 L 0.02`` grows without bound.
"""
import numpy as np

from friedrichs.analysis import fit_decay_rate, fit_zeno
from friedrichs.model import FlatWindow, LevelSet, SpectralDensityModel
from friedrichs.oracle import discretize, dispersion, exact_reduced_propagator
from friedrichs.resolvent import ReducedGenerator

OMEGA0 = 0.02


def main():
    target = 2 * np.pi * OMEGA0
    print(f"golden-rule rate 2 pi omega = {target:.5f}")
    print("    L     fitted rate   -2 Im z     dH^2     Zeno fit")
    for cut in (5.0, 20.0, 80.0):
        model = SpectralDensityModel(LevelSet([0.0]),
                                     (FlatWindow((np.sqrt(OMEGA0),), -cut, cut),))
        dh = discretize(model, m=3000, focus=(-15.0, 15.0), focus_fraction=0.7)
        d = dispersion(dh, [1.0])
        t0 = 10.0 / np.sqrt(d)
        t1 = t0 + 4.0 / target
        prop = exact_reduced_propagator(dh, np.linspace(0.0, t1, 801))
        fit = fit_decay_rate(prop, t_start=t0, t_end=t1)
        pole = ReducedGenerator(model).find_poles()[0]
        short = exact_reduced_propagator(dh, np.linspace(0, 0.01 / np.sqrt(d), 51))
        print(f"  {cut:5.0f}   {fit.rate:.5f}     {-2 * pole.z_pole.imag:.5f}   "
              f"{d:7.3f}   {fit_zeno(short, short.t_grid[-1]):7.3f}")


if __name__ == "__main__":
    main()
