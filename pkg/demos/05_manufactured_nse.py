"""Navier-Stokes with a known solution.

``u = exp(-2 nu t) y_{1,1}`` solves the forced equations once the forcing
absorbs the Coriolis term. The spatial table shrinks with ``h``; the
temporal tables compare each scheme with a fine IMEX run on the same nodes.
A shorter version of the acceptance study keeps the demo under a minute.
"""

from sphere_nse.studies import manufactured_spatial_study, manufactured_temporal_study

print("spatial, Omega = 1")
print(manufactured_spatial_study(n_list=[100, 200, 400], nu=0.01, omega=1.0,
                                 tau=1e-3, T=0.5).format())
for scheme in ("imex_rk3", "semi_implicit_euler"):
    print(f"\ntemporal, {scheme}")
    print(manufactured_temporal_study(n=200, nu=0.01, T=0.5, scheme=scheme).format())
