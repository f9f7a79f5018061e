"""Pole terms plus the threshold contour reproduce the exact evolution.

For a level above the bottom of a half-line continuum the reduced propagator
splits into a sum over second-sheet poles and a slowly decaying background
from the branch point at zero energy. The script compares both pieces, and
their sum, with the discretized reference.
"""
import numpy as np

from friedrichs.model import FlatWindow, LevelSet, SpectralDensityModel
from friedrichs.oracle import discretize, exact_reduced_propagator
from friedrichs.resolvent import ReducedGenerator


def main():
    model = SpectralDensityModel(LevelSet([1.0]), (FlatWindow((0.25,), 0.0, 4.0),),
                                 "half_line")
    gen = ReducedGenerator(model)
    poles = gen.find_poles()
    for p in poles:
        print(f"pole z = {p.z_pole:.6f}, lifetime {p.lifetime:.3f}, "
              f"residue {p.residue[0, 0]:.4f}")
    dh = discretize(model, m=3000)
    times = np.array([1.0, 2.0, 5.0, 10.0, 20.0, 40.0])
    ref = exact_reduced_propagator(dh, times).values[:, 0, 0]
    print("    t      |pole|       |background|   |sum - exact|")
    for t, u in zip(times, ref):
        pole = gen.pole_approx_propagator(poles, t)[0, 0]
        bg = gen.background_integral(t)[0, 0]
        print(f"  {t:5.1f}   {abs(pole):.3e}   {abs(bg):.3e}      {abs(pole + bg - u):.2e}")


if __name__ == "__main__":
    main()
