"""Splitting a tangent field into divergence-free and curl-free parts.

Interpolating with the full kernel and keeping either half of the
expansion gives approximations of the Leray projection and of its
complement. The two halves add up to the full interpolant exactly.
"""

import numpy as np

from sphere_nse import (
    HarmonicIndex, ZonalKernel, assemble, curl_free_harmonic, div_free_harmonic,
    generate_points, interpolate, leray_project, curl_project,
)
from sphere_nse.geometry import fibonacci_points

y21 = div_free_harmonic(HarmonicIndex.from_order(2, 1))
z21 = curl_free_harmonic(HarmonicIndex.from_order(2, 1))
probes = fibonacci_points(4000)
zk = ZonalKernel.wendland(4, 1.0)

for n in (100, 200, 400, 800):
    ps = generate_points("fibonacci", n)
    full = assemble(ps, zk, "full")
    data = y21(ps.points) + z21(ps.points)
    y, z = leray_project(full, data)(probes), curl_project(full, data)(probes)
    gap = np.abs(y + z - interpolate(full, data)(probes)).max()
    print(f"N={n:4d}: |P u - y21| {np.abs(y - y21(probes)).max():.2e}, "
          f"|Q u - z21| {np.abs(z - z21(probes)).max():.2e}, sum identity {gap:.1e}")
