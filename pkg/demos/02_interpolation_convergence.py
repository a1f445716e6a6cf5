"""Divergence-free interpolation of a vector spherical harmonic.

The error should fall like a power of the fill distance ``h``. With the
C^4 Wendland kernel the observed order comfortably exceeds the 2.5
required of it.
"""

from sphere_nse.studies import interpolation_study

table = interpolation_study("wendland2:eps=1", "y3,0", [100, 200, 400, 800])
print(table.format())
