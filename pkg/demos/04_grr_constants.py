"""
Empirical GRR constants
=======================

The Volterra Garsia-Rodemich-Rumsey inequality bounds the Volterra-Hölder
norm of a field by integral functionals U plus a norm of delta z. The ratio
norm / bound is an empirical constant; it should not drift with the grid.
"""

from volterra_lift import DriverSpec, PathSample, build_level1, grr_check, make_uniform_grid, sample_paths

alpha, kappa, gamma = 0.5, 0.45, 0.2
fine = make_uniform_grid(1.0, 128)
path = sample_paths(DriverSpec("fbm", 0.75, dim=1, seed=2), fine, 1)[0]

# The same path seen on three grids.
for factor in (4, 2, 1):
    grid = make_uniform_grid(1.0, 128 // factor)
    coarse = PathSample(grid, path.values[::factor], path.kind, path.hurst)
    z = build_level1(coarse, gamma)
    rep = grr_check(z, alpha, gamma, kappa, eta=0.6, zeta=0.1)
    print(f"n = {grid.cells:3d}  p = {rep.p}  norm1 {rep.norm1:.3f}  U1 {rep.u1:.3f}  "
          f"ratio1 {rep.grr_ratio1:.3f}  ratio12 {rep.grr_ratio12:.3f}")
