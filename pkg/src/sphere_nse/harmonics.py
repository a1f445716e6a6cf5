"""Real spherical harmonics and tangential vector spherical harmonics.

Harmonics are stored as homogeneous harmonic polynomials in Cartesian
coordinates (``CartesianPoly``), so derivatives are exact and there are no
pole singularities. Integrals over the sphere use closed-form monomial
moments.

Indexing: ``HarmonicIndex(l, k)`` with ``1 <= k <= 2l+1``. The azimuthal
order is ``m = k - l - 1``: ``m > 0`` members carry ``cos(m phi)``,
``m < 0`` members ``sin(|m| phi)`` and ``k = l + 1`` is the zonal member
(what is usually written ``Y_{l,0}``).
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, lgamma, exp

import numpy as np

from .errors import DomainError, UnsupportedDegreeError

L_MAX = 5


def eigenvalue(l):
    """Eigenvalue l(l+1) of -Laplace-Beltrami on degree-l harmonics."""
    if l < 0:
        raise DomainError("degree must be nonnegative")
    return l * (l + 1)


@lru_cache(maxsize=None)
def monomial_integral(a, b, c):
    """Exact integral of x^a y^b z^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    return 2.0 * exp(
        lgamma((a + 1) / 2) + lgamma((b + 1) / 2) + lgamma((c + 1) / 2)
        - lgamma((a + b + c + 3) / 2)
    )


class CartesianPoly:
    """Polynomial in (x1, x2, x3) stored as exponent rows and coefficients.

    Parameters
    ----------
    terms : dict mapping (i, j, k) -> float, or None for the zero polynomial
    """

    def __init__(self, terms=None):
        clean = {}
        for e, c in (terms or {}).items():
            key = tuple(int(v) for v in e)
            clean[key] = clean.get(key, 0.0) + float(c)
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    @classmethod
    def from_arrays(cls, exponents, coeffs):
        return cls({tuple(e): c for e, c in zip(np.asarray(exponents), coeffs)})

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    @property
    def exponents(self):
        return np.array(list(self.terms) or np.zeros((0, 3), int), dtype=int).reshape(-1, 3)

    @property
    def coeffs(self):
        return np.array(list(self.terms.values()), dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 3)
        if not self.terms:
            return np.zeros(flat.shape[0]).reshape(x.shape[:-1])
        exps = self.exponents
        d = int(exps.max())
        powers = flat[:, None, :] ** np.arange(d + 1)[None, :, None]
        mono = (powers[:, exps[:, 0], 0] * powers[:, exps[:, 1], 1]
                * powers[:, exps[:, 2], 2])
        return (mono @ self.coeffs).reshape(x.shape[:-1])

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return CartesianPoly(out)

    def __neg__(self):
        return CartesianPoly({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CartesianPoly):
            out = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                    out[e] = out.get(e, 0.0) + c1 * c2
            return CartesianPoly(out)
        return CartesianPoly({e: c * float(other) for e, c in self.terms.items()})

    __rmul__ = __mul__

    def diff(self, axis):
        out = {}
        for e, c in self.terms.items():
            if e[axis] > 0:
                ne = list(e)
                ne[axis] -= 1
                out[tuple(ne)] = out.get(tuple(ne), 0.0) + c * e[axis]
        return CartesianPoly(out)

    def gradient(self):
        return [self.diff(i) for i in range(3)]

    def integrate_sphere(self):
        """Exact integral over the unit sphere."""
        return sum(c * monomial_integral(*e) for e, c in self.terms.items())


def _coordinate(i):
    e = [0, 0, 0]
    e[i] = 1
    return CartesianPoly({tuple(e): 1.0})


X1, X2, X3 = (_coordinate(i) for i in range(3))
R2 = X1 * X1 + X2 * X2 + X3 * X3
ONE = CartesianPoly({(0, 0, 0): 1.0})


def _pow(p, n):
    out = ONE
    for _ in range(n):
        out = out * p
    return out


def _azimuthal_parts(m):
    """Real and imaginary parts of (x + i y)^m as polynomials."""
    re, im = {}, {}
    for p in range(m + 1):
        c = comb(m, p)
        # term x^(m-p) (i y)^p
        sign = (1, 1j, -1, -1j)[p % 4]
        if sign in (1, -1):
            re[(m - p, p, 0)] = sign * c
        else:
            im[(m - p, p, 0)] = (sign / 1j).real * c
    return CartesianPoly(re), CartesianPoly(im)


def _legendre_part(l, m):
    """Polynomial in z and r^2 accompanying the azimuthal factor."""
    out = CartesianPoly()
    for k in range((l - m) // 2 + 1):
        c = ((-1) ** k * comb(l, k) * comb(2 * l - 2 * k, l)
             * factorial(l - 2 * k) / factorial(l - 2 * k - m) / 2.0 ** l)
        out = out + c * (_pow(R2, k) * _pow(X3, l - 2 * k - m))
    return out


@dataclass(frozen=True)
class HarmonicIndex:
    """Degree ``l`` and member index ``k`` in ``[1, 2l+1]``."""

    l: int
    k: int

    def __post_init__(self):
        if self.l < 0 or not 1 <= self.k <= 2 * self.l + 1:
            raise DomainError(f"invalid harmonic index ({self.l}, {self.k})")

    @classmethod
    def from_order(cls, l, m):
        """Index from the azimuthal order ``m`` in ``[-l, l]``."""
        return cls(l, l + 1 + m)

    @property
    def m(self):
        return self.k - self.l - 1

    @property
    def eigenvalue(self):
        return eigenvalue(self.l)


def _check_degree(l):
    if l > L_MAX:
        raise UnsupportedDegreeError(f"degree {l} exceeds L_MAX={L_MAX}")


@lru_cache(maxsize=None)
def harmonic_poly(idx):
    """L2-normalized real harmonic ``Y_{l,k}`` as a homogeneous polynomial."""
    _check_degree(idx.l)
    m = abs(idx.m)
    base = _legendre_part(idx.l, m)
    if idx.m != 0:
        re, im = _azimuthal_parts(m)
        base = base * (re if idx.m > 0 else im)
    norm2 = (base * base).integrate_sphere()
    return base * (1.0 / np.sqrt(norm2))


def all_indices(l_max=L_MAX, l_min=0):
    return [HarmonicIndex(l, k) for l in range(l_min, l_max + 1)
            for k in range(1, 2 * l + 2)]


def scalar_harmonic(idx, x):
    """Evaluate ``Y_{l,k}`` at unit vectors ``x`` (shape (..., 3))."""
    return harmonic_poly(idx)(x)


class VectorField:
    """Ambient polynomial vector field given by three ``CartesianPoly``."""

    def __init__(self, components):
        self.components = list(components)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([c(x) for c in self.components], axis=-1)

    def jacobian(self, x):
        """Ambient Jacobian d v_a / d x_b of the polynomial, shape (..., 3, 3)."""
        x = np.asarray(x, dtype=float)
        return np.stack([np.stack([c.diff(b)(x) for b in range(3)], axis=-1)
                         for c in self.components], axis=-2)

    def surface_jacobian(self, x):
        """Surface gradient: rows a, columns ``d*_b v_a`` at unit ``x``."""
        x = np.asarray(x, dtype=float)
        J = self.jacobian(x)
        P = np.eye(3) - x[..., :, None] * x[..., None, :]
        return J @ P


def _cross_with_x(vec):
    """Components of x cross v for a polynomial vector v."""
    v1, v2, v3 = vec
    return [X2 * v3 - X3 * v2, X3 * v1 - X1 * v3, X1 * v2 - X2 * v1]


@lru_cache(maxsize=None)
def div_free_harmonic(idx):
    """``y_{l,k} = L* Y_{l,k} / sqrt(l(l+1))`` as a polynomial vector field."""
    if idx.l == 0:
        raise DomainError("no tangential harmonics of degree 0")
    _check_degree(idx.l)
    Y = harmonic_poly(idx)
    s = 1.0 / np.sqrt(eigenvalue(idx.l))
    return VectorField([c * s for c in _cross_with_x(Y.gradient())])


@lru_cache(maxsize=None)
def curl_free_harmonic(idx):
    """Curl-free partner ``z_{l,k} = x cross y_{l,k}``, valid on the unit sphere.

    This equals ``-grad* Y_{l,k} / sqrt(l(l+1))``; the sign is chosen so
    that ``x cross y = z`` and ``x cross z = -y``. Uses
    ``grad* Y = grad Y - l Y x`` for the homogeneous polynomial Y.
    """
    if idx.l == 0:
        raise DomainError("no tangential harmonics of degree 0")
    _check_degree(idx.l)
    Y = harmonic_poly(idx)
    s = -1.0 / np.sqrt(eigenvalue(idx.l))
    g = Y.gradient()
    xs = (X1, X2, X3)
    return VectorField([(g[i] - idx.l * (Y * xs[i])) * s for i in range(3)])


def vector_harmonic_div(idx, x):
    return div_free_harmonic(idx)(x)


def vector_harmonic_curl(idx, x):
    return curl_free_harmonic(idx)(x)


def random_streamfunction(max_degree=19, seed=0):
    """Random polynomial with coefficients ``g_n / |n|_1``, ``g_n ~ U[-1, 1]``.

    Every multi-index with ``1 <= |n|_1 <= max_degree`` gets one coefficient;
    indices are enumerated by total degree, then lexicographically. The
    constant term is zero.
    """
    rng = np.random.default_rng(seed)
    exps = [(a, b, d - a - b) for d in range(1, max_degree + 1)
            for a in range(d, -1, -1) for b in range(d - a, -1, -1)]
    g = rng.uniform(-1.0, 1.0, size=len(exps))
    deg = np.array([sum(e) for e in exps], dtype=float)
    return CartesianPoly(dict(zip(exps, g / deg)))


def surface_curl_field(p):
    """``L* p = x cross grad p`` for a scalar polynomial, as a VectorField."""
    return VectorField(_cross_with_x(p.gradient()))


# --- finite-difference oracles -------------------------------------------

def _radial(field):
    def g(y):
        y = np.asarray(y, dtype=float)
        return field(y / np.linalg.norm(y, axis=-1, keepdims=True))
    return g


def fd_gradient(field, x, step=1e-4):
    """Central-difference gradient of the radially extended field.

    For a scalar field returns shape (n, 3); for a vector field (n, 3, 3)
    with rows indexing components and columns derivative directions.
    """
    g = _radial(field)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for b in range(3):
        e = np.zeros(3)
        e[b] = step
        cols.append((g(x + e) - g(x - e)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def fd_laplacian(field, x, step=1e-4):
    """Central-difference Laplacian of the radially extended field.

    On the unit sphere this equals the Laplace-Beltrami operator, applied
    componentwise for vector fields.
    """
    g = _radial(field)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g0 = g(x)
    acc = np.zeros_like(g0)
    for b in range(3):
        e = np.zeros(3)
        e[b] = step
        acc = acc + (g(x + e) - 2.0 * g0 + g(x - e))
    return acc / step ** 2


def surface_ops_fd(field, x, step=1e-4):
    """Finite-difference surface operators at unit vectors ``x``.

    Parameters
    ----------
    field : callable
        Maps (n, 3) points to (n,) scalars or (n, 3) tangent vectors.
    x : (n, 3) array
    step : float
        Difference step for the radial extension ``f(y / |y|)``.

    Returns
    -------
    dict
        Scalar fields: ``grad`` (n, 3), ``curl`` = x cross grad (n, 3) and
        ``laplace`` (n,). Vector fields: ``grad`` (n, 3, 3), ``div`` (n,),
        ``curl`` (n,) and ``laplace`` (n, 3), the vector Laplace-Beltrami
        (tangential part of the componentwise operator).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    grad = fd_gradient(field, x, step)
    lap = fd_laplacian(field, x, step)
    if grad.ndim == 2:
        return {"grad": grad, "curl": np.cross(x, grad), "laplace": lap}
    div = np.trace(grad, axis1=-2, axis2=-1)
    # sum_i (x cross grad u_i)_i
    curl = np.einsum("nii->n", np.cross(x[:, None, :], grad))
    lap_t = lap - np.sum(lap * x, axis=1, keepdims=True) * x
    return {"grad": grad, "div": div, "curl": curl, "laplace": lap_t}
