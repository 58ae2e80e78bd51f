"""
The Volterra Chen relation
==========================

For classical rough paths, delta_u X2_ts = X1_us (x) X1_tu. With a singular
kernel the tensor product turns into a convolution, and on the grid the
identity holds to rounding error.
"""

import numpy as np

from volterra_lift import DriverSpec, build_level1, build_level2, convolve, make_uniform_grid, sample_paths
from volterra_lift.level2 import chen_residual

grid = make_uniform_grid(1.0, 64)

for kind, gamma in (("bm", 0.25), ("fbm", 0.2)):
    path = sample_paths(DriverSpec(kind, 0.75, dim=2, seed=4), grid, 1)[0]
    z2 = build_level2(build_level1(path, gamma))
    resid, scale = chen_residual(z2)
    print(f"{kind:4s} {z2.scheme:13s} max residual {resid:.2e}  (field scale {scale:.3f})")

# One tuple by hand: s < u < t <= tau.
s, u, t, tau = 5, 30, 50, 60
z = z2.increment_matrix(tau)
delta = z[t, s] - z[t, u] - z[u, s]
conv = convolve(z2.level1, z2.level1, s, u, t, tau).value
print("delta_u z2:\n", np.array2string(delta, precision=6))
print("z1 * z1:\n", np.array2string(conv, precision=6))

# The naive tensor product is not the right object once gamma > 0.
z1 = z2.level1.increment_matrix(tau)
print("tensor product (wrong):\n", np.array2string(np.outer(z1[u, s], z1[t, u]), precision=6))
