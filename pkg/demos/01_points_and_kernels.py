"""Node sets and the divergence-free kernel.

Three node families are available. Riesz-minimized points have the most
uniform spacing, which matters because the collocation matrices get worse
as the minimum separation shrinks relative to the fill distance.
"""

import numpy as np

from sphere_nse import ZonalKernel, generate_points, matrix_kernel

for kind in ("fibonacci", "random_uniform", "riesz_minimized"):
    ps = generate_points(kind, 400, seed=0)
    h, q = ps.fill_distance(), ps.min_separation()
    print(f"{kind:>16s}: fill distance {h:.4f}, min separation {q:.4f}, ratio {h / q:.2f}")

# Each kernel entry is a 3x3 matrix that is tangent at both arguments.
zk = ZonalKernel.wendland(4, eps=1.0)
x = np.array([[0.0, 0.0, 1.0]])
y = np.array([[0.3, 0.0, np.sqrt(1 - 0.09)]])
K = matrix_kernel(zk, "div", x, y)[0]
print("\nPhi_div(x, y) =\n", np.array2string(K, precision=5))
print("x^T K =", x[0] @ K, " K y =", K @ y[0])
