"""
Why Brownian level two needs Ito
================================

The Stratonovich correction is a trace term int (tau - r)^-gamma ... of the
quadratic variation. For fBm with gamma < 2H - 1 it is finite. For Brownian
motion it blows up like h^-gamma as the mesh shrinks.
"""

import numpy as np

from volterra_lift.level2 import ito_strat_divergence_probe, strat_correction, strat_correction_diagonal

mesh = [2.0**-k for k in range(4, 11)]
for gamma in (0.0, 0.1, 0.25, 0.4):
    vals = np.array([v for _, v in ito_strat_divergence_probe(gamma, 0.0, 1.0, 1.0, mesh)])
    slope = np.polyfit(np.log(mesh), np.log(vals), 1)[0]
    print(f"gamma {gamma:.2f}: proxy {vals[0]:.3f} -> {vals[-1]:.3f}, log-log slope {slope:+.3f}")

# fBm, H = 0.75: the correction converges, and on the diagonal it has a Beta form.
for gamma in (0.0, 0.2, 0.4):
    print(f"fbm gamma {gamma:.1f}: correction {strat_correction(gamma, 0.75, 0.0, 1.0, 1.0):.6f}, "
          f"Beta form {strat_correction_diagonal(gamma, 0.75, 1.0):.6f}")
