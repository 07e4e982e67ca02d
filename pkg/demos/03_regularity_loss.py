"""Regularity loss, seen three ways.

For a type-(1, 2) system high frequencies decay only like
``exp(-c t / |xi|^2)``.  This is not an artefact of the proof:

1. the propagator norms cannot be fitted with the standard envelope
   ``rho = s^2/(1+s^2)``, and the violations sit at large ``s``;
2. they can be fitted with ``eta = s^2/(1+s^2)^2``;
3. initial data with only finitely many derivatives in L2 decay at the
   slower rate ``(1+t)^(-l/2)`` set by the extra regularity ``l``.

Run:  python demos/03_regularity_loss.py
"""

import numpy as np

from hyperdiss import catalog
from hyperdiss.decay import Profile, l2_decay_fit, pointwise_check
from hyperdiss.spectrum import default_s_grid

entry = catalog.timoshenko(2.0, 1.0)
grid = default_s_grid()
t_grid = np.concatenate([[0.0], np.geomspace(1e-2, 1e6, 41)])

for env in ("rho", "eta"):
    fit = pointwise_check(entry.sys, grid, None, env, t_grid)
    if fit.succeeded:
        print(f"{env}: |exp(tG)| <= {fit.C:.0f} exp(-{fit.c:.3g} {env}(s) t) on the whole grid")
    else:
        s_bad = sorted({v[0] for v in fit.violations})
        print(f"{env}: no fit with C <= 100; {len(fit.violations)} violations for "
              f"s in [{s_bad[0]:.3g}, {s_bad[-1]:.3g}]")

print()
t = np.geomspace(1e2, 1e4, 21)
for ell in (1, 2, 3):
    prof = Profile.powerlaw_for(0, ell, entry.sys.n)
    fit = l2_decay_fit(entry.sys, prof, 0, ell, t)
    print(f"data in H^{ell} only ({prof}): slope {fit.fitted_slope:+.3f}, "
          f"regularity-loss rate {fit.target_slope:+.2f}")
