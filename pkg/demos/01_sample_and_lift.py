"""
Sampling a driver and lifting it
================================

Draw one fractional Brownian path, build the two-parameter field
z^tau_{ts} = int_s^t (tau - r)^-gamma dx_r and look at what the extra
upper variable tau does.
"""

import numpy as np

from volterra_lift import DriverSpec, build_level1, build_level2, make_uniform_grid, sample_paths

# A uniform grid on [0, 1] with 128 cells. Every object lives on its points.
grid = make_uniform_grid(1.0, 128)

# Two independent fBm components with H = 0.75, seeded for reproducibility.
spec = DriverSpec("fbm", hurst=0.75, dim=2, seed=1)
path = sample_paths(spec, grid, 1)[0]
print("driver at T:", path.values[-1])

# Level one. With gamma = 0 the field would just be x_t - x_s.
z1 = build_level1(path, gamma=0.2)

# The diagonal process r -> z^r_{r,0} is the classical Volterra process.
diag = z1.diagonal()
print("diagonal process at T/2 and T:", diag[64], diag[128])

# Freezing tau = T and moving t gives a smoother curve: the kernel is
# bounded away from its singularity except at the right end.
z_T = z1.base(128)
print("z^T_{t,0} at t = T/2:", z_T[64])

# Level two: Stratonovich for fBm, since gamma = 0.2 < 2H - 1 = 0.5.
z2 = build_level2(z1)
print("scheme:", z2.scheme)
print("z^{2,T}_{T,0} =\n", np.array2string(z2.base(128)[-1], precision=4))
