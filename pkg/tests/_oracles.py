"""Finite-difference oracles shared by the test modules.

Everything here works from the scalar Wendland profile or from point
evaluations only, never from the analytic derivative tables under test.
"""

import numpy as np

from sphere_nse.geometry import normalize
from sphere_nse.harmonics import fd_gradient, surface_ops_fd


def _skew(v):
    S = np.zeros(v.shape + (3,))
    S[..., 0, 1], S[..., 0, 2] = -v[..., 2], v[..., 1]
    S[..., 1, 0], S[..., 1, 2] = v[..., 2], -v[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -v[..., 1], v[..., 0]
    return S


def richardson(op, h):
    """Combine a second-order difference at h and 2h into a fourth-order one."""
    return (4.0 * op(h) - op(2.0 * h)) / 3.0


def mixed_hessian(wendland, x, y, h):
    """d^2/dx_b dy_j of psi(|x/|x| - y/|y||) by central differences."""
    F = lambda a, b: wendland(np.linalg.norm(normalize(a) - normalize(b), axis=-1))
    H = np.zeros((len(x), 3, 3))
    for b in range(3):
        for j in range(3):
            eb = np.zeros(3)
            ej = np.zeros(3)
            eb[b] = h
            ej[j] = h
            H[:, b, j] = (F(x + eb, y + ej) - F(x + eb, y - ej)
                          - F(x - eb, y + ej) + F(x - eb, y - ej)) / (4 * h * h)
    return H


def fd_curl_kernel(wendland, x, y, h=5e-4):
    """grad*_x grad*_y^T of the scalar kernel; the radial extension makes
    ambient derivatives tangential already."""
    return richardson(lambda s: mixed_hessian(wendland, x, y, s), h)


def fd_div_kernel(wendland, x, y, h=5e-4):
    """L*_x L*_y^T, using L* = x cross grad*."""
    H = fd_curl_kernel(wendland, x, y, h)
    return _skew(x) @ H @ np.swapaxes(_skew(y), -1, -2)


def fd_vector_laplace(field, x, h=5e-4):
    return richardson(lambda s: surface_ops_fd(field, x, s)["laplace"], h)


def fd_jacobian(field, x, h=1e-4):
    """Ambient Jacobian (n, 3, 3) of the radially extended field."""
    return richardson(lambda s: fd_gradient(field, x, s), h)


def fd_divergence(field, x, h=1e-4):
    return np.trace(fd_jacobian(field, x, h), axis1=-2, axis2=-1)


def fd_curl(field, x, h=1e-4):
    J = fd_jacobian(field, x, h)
    return np.einsum("nii->n", np.cross(x[:, None, :], J))


def random_pairs(rng, n, spread=0.6):
    x = normalize(rng.standard_normal((n, 3)))
    y = normalize(x + spread * rng.standard_normal((n, 3)))
    return x, y


def random_tangent(rng, x):
    v = rng.standard_normal(x.shape)
    return v - np.sum(v * x, axis=-1, keepdims=True) * x


def fd_gradient_scalar(fn, x, h=1e-4):
    """Surface gradient of a scalar function; the radial extension makes it tangential."""
    return richardson(lambda s: fd_gradient(fn, x, s), h)
