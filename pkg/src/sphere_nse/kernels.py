"""Wendland zonal kernels and the matrix-valued kernels built from them.

A zonal kernel is ``phi(x, y) = F(x . y)`` with ``F(t) = psi(|x - y| / eps)``
and ``|x - y| = sqrt(2 - 2t)`` on the unit sphere. With ``rho = |x - y|/eps``
and the operator ``D = (1/rho) d/drho`` one has

    F^(k)(t) = (-1)^k eps^(-2k) (D^k psi)(rho),

and for Wendland functions ``D^k psi`` is again a polynomial as long as ``k``
stays within the family's smoothness. Derivatives are therefore kept as
Laurent polynomials in ``rho`` and evaluated exactly.

Matrix kernels (``w = x cross y``, ``t = x . y``, ``P_x = I - x x^T``)::

    div   = -F'' w w^T + F' (t I - y x^T)             = L*_x (L*_y)^T phi
    curl  =  F'' (P_x y)(P_y x)^T + F' P_x P_y        = grad*_x (grad*_y)^T phi
    full  =  div + curl
    laplace_div   = div built from the zonal Laplace-Beltrami image
                    G(t) = (1 - t^2) F''(t) - 2 t F'(t) of F
    helmholtz_div = div - laplace_div
"""

import re
from functools import cached_property

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, UnsupportedDerivativeError

# (1 - r)^e * q(r), q coefficients in increasing powers
_WENDLAND_TABLE = {
    1: (4, [1.0, 4.0], 2.5),
    2: (6, [3.0, 18.0, 35.0], 3.5),
    3: (8, [1.0, 8.0, 25.0, 32.0], 4.5),
    4: (10, [5.0, 50.0, 210.0, 450.0, 429.0], 5.5),
}

KERNEL_KINDS = ("div", "curl", "full", "laplace_div", "helmholtz_div")


class Laurent:
    """``r^(-shift) * sum_i coef[i] r^i`` with ``shift >= 0``."""

    def __init__(self, coef, shift=0):
        coef = np.trim_zeros(np.asarray(coef, dtype=float), "b")
        if coef.size == 0:
            coef = np.zeros(1)
        scale = np.max(np.abs(coef))
        # drop numerically vanishing low-order terms while a negative power remains
        while shift > 0 and coef.size > 1 and abs(coef[0]) <= 1e-12 * scale:
            coef = coef[1:]
            shift -= 1
        self.coef = coef
        self.shift = shift
        # split off the (1 - r)^m factor for evaluation without cancellation
        quot, m = coef, 0
        while quot.size > 1:
            q, rem = P.polydiv(quot, [1.0, -1.0])
            if np.max(np.abs(rem)) > 1e-10 * np.max(np.abs(quot)):
                break
            quot, m = q, m + 1
        self._eval = (quot, m)

    @property
    def singular(self):
        return self.shift > 0 and self.coef[0] != 0.0

    def d_over_r(self):
        """Apply ``(1/r) d/dr``."""
        p = self.coef
        rp = np.concatenate([[0.0], P.polyder(p)]) if p.size > 1 else np.zeros(1)
        rp = P.polysub(rp, self.shift * p)
        return Laurent(rp, self.shift + 2)

    def times_poly(self, q):
        return Laurent(P.polymul(self.coef, q), self.shift)

    def __add__(self, other):
        s = max(self.shift, other.shift)
        a = np.concatenate([np.zeros(s - self.shift), self.coef])
        b = np.concatenate([np.zeros(s - other.shift), other.coef])
        return Laurent(P.polyadd(a, b), s)

    def __mul__(self, c):
        return Laurent(self.coef * float(c), self.shift)

    __rmul__ = __mul__

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        quot, m = self._eval
        val = P.polyval(r, quot)
        if m:
            val = val * (1.0 - r) ** m
        if self.shift:
            with np.errstate(divide="ignore", invalid="ignore"):
                val = val / r ** self.shift
        return val


class WendlandFunction:
    """Compactly supported Wendland function from the standard table.

    Parameters
    ----------
    family : int
        1..4, with smoothness exponents 5/2, 7/2, 9/2, 11/2.
    eps : float
        Support scale; the scaled function is ``psi(r / eps)``.
    """

    def __init__(self, family, eps=1.0):
        if family not in _WENDLAND_TABLE:
            raise DomainError(f"unknown Wendland family {family}")
        if not eps > 0:
            raise DomainError("eps must be positive")
        self.family = int(family)
        self.eps = float(eps)
        e, q, self.sigma = _WENDLAND_TABLE[family]
        self._factored = (e, np.asarray(q))
        self.poly = P.polymul(P.polypow([1.0, -1.0], e), q)

    def __repr__(self):
        return f"WendlandFunction(family={self.family}, eps={self.eps})"

    @property
    def max_derivative(self):
        """Highest radial derivative order available (C^{2m} in 3D, capped at 4)."""
        return min(4, 2 * self.family)

    def __call__(self, r, k=0):
        """``psi^(k)(r / eps) / eps^k``, zero outside the support."""
        if k > self.max_derivative or k < 0:
            raise UnsupportedDerivativeError(
                f"wendland{self.family} supports radial derivatives up to order "
                f"{self.max_derivative}, got {k}")
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("r must be nonnegative")
        s = r / self.eps
        inside = s < 1.0
        if k == 0:
            # factored form avoids cancellation in the expanded coefficients
            e, q = self._factored
            val = (1.0 - s) ** e * P.polyval(s, q)
        else:
            val = P.polyval(s, P.polyder(self.poly, k))
        return np.where(inside, val, 0.0) / self.eps ** k


def eval_wendland(w, r, k=0):
    return w(r, k)


class ZonalKernel:
    """Zonal function ``F(t)`` on ``[-1, 1]`` given by a radial profile.

    Parameters
    ----------
    profile : Laurent
        Radial profile ``g(rho)`` on ``[0, 1)``; zero for ``rho >= 1``.
    eps : float
        Support scale, ``rho = sqrt(2 - 2t) / eps``.
    name : str
    """

    MAX_ORDER = 4

    def __init__(self, profile, eps=1.0, name="zonal", family=None):
        self.profile = profile
        self.eps = float(eps)
        self.name = name
        self.family = family
        self._derivs = [profile]

    @classmethod
    def wendland(cls, family, eps=1.0):
        w = WendlandFunction(family, eps)
        zk = cls(Laurent(w.poly), eps, name=f"wendland{family}:eps={eps:g}", family=family)
        zk.wendland_function = w
        return zk

    def __repr__(self):
        return f"ZonalKernel({self.name!r})"

    def profile_derivative(self, k):
        while len(self._derivs) <= k:
            self._derivs.append(self._derivs[-1].d_over_r())
        return self._derivs[k]

    @cached_property
    def smoothness(self):
        """Largest k <= MAX_ORDER with ``F^(k)`` bounded up to ``t = 1``."""
        k = 0
        while k < self.MAX_ORDER and not self.profile_derivative(k + 1).singular:
            k += 1
        return k

    @property
    def support_chord(self):
        """Chordal support radius ``eps``; equals or exceeds 2 for global support."""
        return self.eps

    def require(self, k, what="operation"):
        if self.smoothness < k:
            raise UnsupportedDerivativeError(
                f"{what} needs {k} bounded derivatives of the zonal kernel; "
                f"{self.name} provides {self.smoothness}")

    def from_chord(self, r, k=0):
        """``F^(k)`` as a function of the chord length ``r = |x - y|``.

        Singular derivatives evaluate to ``inf`` at ``r = 0``.
        """
        rho = np.asarray(r, dtype=float) / self.eps
        d = self.profile_derivative(k)
        inside = rho < 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = d(np.where(inside, rho, 0.5))
        if d.singular:
            val = np.where(rho == 0.0, np.inf, val)
        return np.where(inside, val, 0.0) * (-1) ** k * self.eps ** (-2 * k)

    def __call__(self, t, k=0):
        """``F^(k)(t)``; see :meth:`from_chord`."""
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > 1.0 + 1e-12):
            raise DomainError("t must lie in [-1, 1]")
        if not 0 <= k <= self.MAX_ORDER:
            raise UnsupportedDerivativeError(f"derivative order {k} not available")
        r = np.sqrt(np.clip(2.0 - 2.0 * t, 0.0, None))
        return self.from_chord(r, k)

    @cached_property
    def laplacian(self):
        """Zonal kernel of ``Delta*_x phi``: ``G = (1 - t^2) F'' - 2 t F'``."""
        e2 = self.eps ** 2
        d1 = self.profile_derivative(1)
        d2 = self.profile_derivative(2)
        g = d2.times_poly([0.0, 0.0, 1.0, 0.0, -e2 / 4.0]) + d1.times_poly([2.0, 0.0, -e2])
        return ZonalKernel(g * (1.0 / e2), self.eps, name=f"laplace[{self.name}]",
                           family=self.family)


def eval_zonal(zk, t, k=0):
    return zk(t, k)


_SPEC_RE = re.compile(r"^\s*wendland([1-4])\s*(?::\s*eps\s*=\s*([0-9.eE+-]+))?\s*$")


def parse_kernel_spec(spec):
    """Build a zonal kernel from ``"wendland<k>:eps=<float>"``."""
    m = _SPEC_RE.match(spec)
    if not m:
        raise DomainError(f"bad kernel spec {spec!r}; expected 'wendland{{1..4}}:eps=<float>'")
    eps = float(m.group(2)) if m.group(2) else 1.0
    return ZonalKernel.wendland(int(m.group(1)), eps)


# --- matrix-valued kernels -------------------------------------------------

def _pair_scalars(zk, X, Y, orders):
    t = np.sum(X * Y, axis=-1)
    r = np.linalg.norm(X - Y, axis=-1)
    vals = []
    for k in orders:
        v = zk.from_chord(r, k)
        if not np.all(np.isfinite(v)):
            # singular terms multiply geometric factors that vanish at x = y
            v = np.where(np.isfinite(v), v, 0.0)
        vals.append(v)
    return t, vals


def _div_block(zk, X, Y):
    t, (f1, f2) = _pair_scalars(zk, X, Y, (1, 2))
    w = np.cross(X, Y)
    K = -f2[:, None, None] * w[:, :, None] * w[:, None, :]
    K -= f1[:, None, None] * Y[:, :, None] * X[:, None, :]
    K += (f1 * t)[:, None, None] * np.eye(3)
    return K


def _curl_block(zk, X, Y):
    t, (f1, f2) = _pair_scalars(zk, X, Y, (1, 2))
    p = Y - t[:, None] * X
    q = X - t[:, None] * Y
    K = f2[:, None, None] * p[:, :, None] * q[:, None, :]
    PP = (np.eye(3) - X[:, :, None] * X[:, None, :] - Y[:, :, None] * Y[:, None, :]
          + t[:, None, None] * X[:, :, None] * Y[:, None, :])
    K += f1[:, None, None] * PP
    return K


def matrix_kernel(zk, kind, X, Y):
    """Evaluate a matrix kernel on paired rows of ``X`` and ``Y``.

    Parameters
    ----------
    zk : ZonalKernel
    kind : {'div', 'curl', 'full', 'laplace_div', 'helmholtz_div'}
    X, Y : (p, 3) arrays of unit vectors, or single 3-vectors

    Returns
    -------
    (p, 3, 3) array, or (3, 3) for single vectors.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    single = X.ndim == 1 and Y.ndim == 1
    X, Y = np.broadcast_arrays(np.atleast_2d(X), np.atleast_2d(Y))
    if kind == "div":
        K = _div_block(zk, X, Y)
    elif kind == "curl":
        K = _curl_block(zk, X, Y)
    elif kind == "full":
        K = _div_block(zk, X, Y) + _curl_block(zk, X, Y)
    elif kind == "laplace_div":
        zk.require(2, "laplace_div kernel")
        K = _div_block(zk.laplacian, X, Y)
    elif kind == "helmholtz_div":
        zk.require(2, "helmholtz_div kernel")
        K = _div_block(zk, X, Y) - _div_block(zk.laplacian, X, Y)
    else:
        raise DomainError(f"unknown kernel kind {kind!r}")
    return K[0] if single else K


def eval_div_kernel(zk, x, y):
    return matrix_kernel(zk, "div", x, y)


def eval_curl_kernel(zk, x, y):
    return matrix_kernel(zk, "curl", x, y)


def eval_full_kernel(zk, x, y):
    return matrix_kernel(zk, "full", x, y)


def eval_laplace_div_kernel(zk, x, y):
    return matrix_kernel(zk, "laplace_div", x, y)


def eval_helmholtz_div_kernel(zk, x, y):
    return matrix_kernel(zk, "helmholtz_div", x, y)


class MatrixKernel:
    """A matrix kernel kind bound to a zonal kernel."""

    def __init__(self, zk, kind):
        if kind not in KERNEL_KINDS:
            raise DomainError(f"unknown kernel kind {kind!r}")
        self.zonal = zk
        self.kind = kind

    def __call__(self, x, y):
        return matrix_kernel(self.zonal, self.kind, x, y)

    def __repr__(self):
        return f"MatrixKernel({self.zonal.name!r}, {self.kind!r})"


# --- first derivatives in the first argument -------------------------------

def _skew(v):
    """Matrices [v]_x with [v]_x u = v cross u, for rows of v."""
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1], S[..., 0, 2] = -v[..., 2], v[..., 1]
    S[..., 1, 0], S[..., 1, 2] = v[..., 2], -v[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -v[..., 1], v[..., 0]
    return S


def _div_block_grad(zk, X, Y):
    t, (f1, f2, f3) = _pair_scalars(zk, X, Y, (1, 2, 3))
    w = np.cross(X, Y)
    M = -_skew(Y)  # d w_a / d x_b
    I = np.eye(3)
    # T[p, a, c, b] = d K_ac / d x_b
    T = -f3[:, None, None, None] * np.einsum("pa,pc,pb->pacb", w, w, Y)
    T -= f2[:, None, None, None] * (np.einsum("pab,pc->pacb", M, w)
                                     + np.einsum("pa,pcb->pacb", w, M))
    T += f2[:, None, None, None] * np.einsum(
        "pac,pb->pacb", t[:, None, None] * I - Y[:, :, None] * X[:, None, :], Y)
    T += f1[:, None, None, None] * (np.einsum("ac,pb->pacb", I, Y)
                                    - np.einsum("pa,cb->pacb", Y, I))
    return T


def _curl_block_grad(zk, X, Y):
    t, (f1, f2, f3) = _pair_scalars(zk, X, Y, (1, 2, 3))
    I = np.eye(3)
    p = Y - t[:, None] * X
    q = X - t[:, None] * Y
    dp = -np.einsum("pb,pa->pab", Y, X) - t[:, None, None] * I      # d p_a / d x_b
    dq = I - Y[:, :, None] * Y[:, None, :]                            # d q_c / d x_b
    PP = (I - X[:, :, None] * X[:, None, :] - Y[:, :, None] * Y[:, None, :]
          + t[:, None, None] * X[:, :, None] * Y[:, None, :])
    T = f3[:, None, None, None] * np.einsum("pa,pc,pb->pacb", p, q, Y)
    T += f2[:, None, None, None] * (np.einsum("pab,pc->pacb", dp, q)
                                    + np.einsum("pa,pcb->pacb", p, dq)
                                    + np.einsum("pac,pb->pacb", PP, Y))
    dPP = (-np.einsum("ab,pc->pacb", I, X) - np.einsum("pa,cb->pacb", X, I)
           + np.einsum("pb,pa,pc->pacb", Y, X, Y)
           + t[:, None, None, None] * np.einsum("ab,pc->pacb", I, Y))
    T += f1[:, None, None, None] * dPP
    return T


def matrix_kernel_gradient(zk, kind, X, Y):
    """Surface derivative of ``K(x, y)`` in ``x``.

    Returns ``T`` of shape (p, 3, 3, 3) with ``T[p, a, c, b] = d*_b K_ac``
    (tangential derivative direction ``b`` at ``x``).
    """
    zk.require(3, "kernel gradient")
    X, Y = np.broadcast_arrays(np.atleast_2d(np.asarray(X, float)),
                               np.atleast_2d(np.asarray(Y, float)))
    if kind == "div":
        T = _div_block_grad(zk, X, Y)
    elif kind == "curl":
        T = _curl_block_grad(zk, X, Y)
    elif kind == "full":
        T = _div_block_grad(zk, X, Y) + _curl_block_grad(zk, X, Y)
    else:
        raise DomainError(f"gradient not available for kernel kind {kind!r}")
    Px = np.eye(3) - X[:, :, None] * X[:, None, :]
    return np.einsum("pacd,pdb->pacb", T, Px)
