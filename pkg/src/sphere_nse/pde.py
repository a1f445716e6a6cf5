"""Right-hand side of the projected Navier-Stokes equations on the sphere.

The semi-discrete system for the reduced coefficients ``alpha`` of the
divergence-free expansion ``u_h`` is

    A_div alpha' = nu A_lap alpha + g(alpha),

where ``g`` collects the Leray-projected forcing, convection and Coriolis
terms at the nodes:

1. residual ``r_j = f(t, x_j) - B(u_h, u_h)(x_j) - C(u_h)(x_j)``,
2. ``beta`` interpolates ``r`` with the full kernel,
3. ``g`` is the nodal trace of the divergence-free expansion with ``beta``.

The pressure follows from the same ``beta`` (kernel exchange):
``p_h(x) = sum_j F'(x . x_j) (x . beta_j)``.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError, DomainError, FormatError, StateError
from .fields import (
    KernelExpansion, NodalField, gradient_operator, project_tangent, support_pairs,
)
from .harmonics import (
    HarmonicIndex, curl_free_harmonic, div_free_harmonic, eigenvalue,
)
from .interpolation import Collocation, ReducedSystem, assemble

BENCHMARK_HARMONIC = HarmonicIndex.from_order(3, 0)


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity ``nu`` and angular velocity ``omega``.

    ``nu = 0`` is accepted for inviscid experiments; run configurations
    require ``nu > 0``.
    """

    nu: float
    omega: float = 0.0

    def __post_init__(self):
        if not self.nu >= 0.0:
            raise ConfigError("viscosity must be nonnegative")
        if not self.omega >= 0.0:
            raise ConfigError("angular velocity must be nonnegative")


def coriolis(x, u, omega):
    """``C(u) = 2 omega x_3 (x cross u)`` at points ``x``."""
    x = np.asarray(x, dtype=float)
    return 2.0 * omega * x[..., 2:3] * np.cross(x, u)


def benchmark_gamma(t):
    """Forcing amplitude: 1 on [0, 10], then ``cos(pi t / 5) exp((10 - t) / 5)``.

    Times after 60 follow the second branch.
    """
    t = np.asarray(t, dtype=float)
    late = np.cos(np.pi * t / 5.0) * np.exp((10.0 - t) / 5.0)
    out = np.where(t <= 10.0, 1.0, late)
    return float(out) if out.ndim == 0 else out


def convection(expansion, x=None):
    """``(u . grad*) u`` for a divergence-free expansion, projected tangentially.

    Parameters
    ----------
    expansion : KernelExpansion
        Kind ``div`` (or ``full``); needs three kernel derivatives.
    x : (m, 3) array, optional
        Evaluation points, the expansion's nodes by default.

    Returns
    -------
    NodalField when evaluated at the nodes, else an (m, 3) array.
    """
    at_nodes = x is None
    pts = expansion.ps.points if at_nodes else np.atleast_2d(x)
    u = expansion.evaluate(pts)
    J = expansion.evaluate_gradient(pts)
    b = project_tangent(pts, np.einsum("nab,nb->na", J, u))
    return NodalField(expansion.ps, b) if at_nodes else b


# --- forcing ---------------------------------------------------------------

class Forcing:
    """Tangential forcing sampled at nodes: ``forcing(t, x) -> (n, 3)``."""

    kind = "none"

    def __call__(self, t, x):
        raise NotImplementedError

    def describe(self):
        return {"kind": self.kind}


class ZeroForcing(Forcing):
    kind = "zero"

    def __call__(self, t, x):
        return np.zeros(np.shape(x))


class BenchmarkForcing(Forcing):
    """``f(t, x) = amplitude * gamma(t) * y_{3,0}(x)``."""

    kind = "benchmark_gamma_y30"

    def __init__(self, amplitude=1.0, index=BENCHMARK_HARMONIC):
        self.amplitude = float(amplitude)
        self.index = index
        self._field = div_free_harmonic(index)

    def __call__(self, t, x):
        return self.amplitude * benchmark_gamma(t) * self._field(x)

    def describe(self):
        return {"kind": self.kind, "amplitude": self.amplitude,
                "harmonic": [self.index.l, self.index.k]}


class HarmonicForcing(Forcing):
    """Constant-in-time forcing by one vector harmonic (``div`` or ``curl`` type)."""

    kind = "harmonic"

    def __init__(self, index, family="div", amplitude=1.0):
        self.index = index
        self.family = family
        self.amplitude = float(amplitude)
        self._field = (div_free_harmonic if family == "div" else curl_free_harmonic)(index)

    def __call__(self, t, x):
        return self.amplitude * self._field(x)

    def describe(self):
        return {"kind": self.kind, "harmonic": [self.index.l, self.index.k],
                "family": self.family, "amplitude": self.amplitude}


class NodalCsvForcing(Forcing):
    """Time-stamped nodal samples, linearly interpolated in time.

    The CSV has header ``t,node,fx,fy,fz``; every time stamp must list
    every node. Outside the covered time range the nearest stamp is used.
    """

    kind = "custom"

    def __init__(self, path, n_nodes):
        self.path = str(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["t", "node", "fx", "fy", "fz"]:
            raise FormatError(f"{path}: expected header t,node,fx,fy,fz")
        try:
            data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        if data.size == 0:
            raise FormatError(f"{path}: no samples")
        times = np.unique(data[:, 0])
        values = np.full((len(times), n_nodes, 3), np.nan)
        ti = np.searchsorted(times, data[:, 0])
        node = data[:, 1].astype(int)
        if np.any(node < 0) or np.any(node >= n_nodes):
            raise FormatError(f"{path}: node index out of range")
        values[ti, node] = data[:, 2:5]
        if np.isnan(values).any():
            raise FormatError(f"{path}: every time stamp must list every node")
        self.times = times
        self.values = values

    def __call__(self, t, x):
        if len(x) != self.values.shape[1]:
            raise DomainError("custom forcing is only defined at its nodes")
        k = np.searchsorted(self.times, t)
        if k == 0:
            f = self.values[0]
        elif k >= len(self.times):
            f = self.values[-1]
        else:
            t0, t1 = self.times[k - 1], self.times[k]
            w = (t - t0) / (t1 - t0)
            f = (1 - w) * self.values[k - 1] + w * self.values[k]
        return project_tangent(x, f)

    def describe(self):
        return {"kind": self.kind, "path": self.path}


class ManufacturedProblem:
    """Exact solution ``u(t) = a(t) y_{l,k}`` with ``a(t) = amplitude * exp(rate t)``.

    The forcing ``f = a' y + nu l(l+1) a y + a^2 B(y, y) + a C(y)`` makes
    ``u`` solve the projected equations: the non-solenoidal part of
    ``B + C`` is removed by the projection. ``B(y, y)`` is computed from the
    exact polynomial Jacobian of ``y``.

    Parameters
    ----------
    params : PhysicalParams
    index : HarmonicIndex
    amplitude : float
    rate : float or None
        Defaults to ``-nu l(l+1)``, the free viscous decay.
    """

    kind = "manufactured"

    def __init__(self, params, index=HarmonicIndex.from_order(1, 1), amplitude=1.0, rate=None):
        self.params = params
        self.index = index
        self.amplitude = float(amplitude)
        self.lam = eigenvalue(index.l)
        self.rate = -params.nu * self.lam if rate is None else float(rate)
        self._y = div_free_harmonic(index)
        self._cache = None

    def a(self, t):
        return self.amplitude * np.exp(self.rate * t)

    def velocity(self, t, x):
        return self.a(t) * self._y(x)

    def _spatial(self, x):
        # the node set rarely changes between calls; reuse y, B(y, y) and C(y)
        cached = self._cache
        if cached is not None and cached[0].shape == x.shape and np.array_equal(cached[0], x):
            return cached[1:]
        y = self._y(x)
        b = project_tangent(x, np.einsum("nab,nb->na", self._y.surface_jacobian(x), y))
        self._cache = (x.copy(), y, b, coriolis(x, y, self.params.omega))
        return self._cache[1:]

    def forcing(self, t, x):
        x = np.asarray(x, dtype=float)
        y, b, c = self._spatial(x)
        a = self.a(t)
        return (self.rate + self.params.nu * self.lam) * a * y + a * a * b + a * c

    def as_forcing(self):
        return _ManufacturedForcing(self)


class _ManufacturedForcing(Forcing):
    kind = "manufactured"

    def __init__(self, problem):
        self.problem = problem

    def __call__(self, t, x):
        return self.problem.forcing(t, x)

    def describe(self):
        p = self.problem
        return {"kind": self.kind, "harmonic": [p.index.l, p.index.k],
                "amplitude": p.amplitude, "rate": p.rate}


def manufactured_problem(params, index=HarmonicIndex.from_order(1, 1), amplitude=1.0, rate=None):
    """Return ``(u_exact, forcing)`` callables, see :class:`ManufacturedProblem`."""
    mp = ManufacturedProblem(params, index, amplitude, rate)
    return mp.velocity, mp.as_forcing()


# --- pressure --------------------------------------------------------------

def pressure_operator(x, ps, zk):
    """Sparse map from reduced full-kernel coefficients to ``p_h(x_i)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    i, j = support_pairs(x, ps, zk.support_chord)
    f1 = zk.from_chord(np.linalg.norm(x[i] - ps.points[j], axis=1), 1)
    # x . (E_j c_j) with frame columns
    w = f1[:, None] * np.einsum("pa,pak->pk", x[i], ps.frames[j])
    rows = np.repeat(i, 2)
    cols = (2 * j[:, None] + np.arange(2)).ravel()
    return sparse.csr_matrix((w.ravel(), (rows, cols)), shape=(len(x), 2 * len(ps)))


def pressure_recover(beta, ps, zk, x):
    """``p_h(x) = sum_j F'(x . x_j) (x - (x . x_j) x_j) . beta_j``.

    Parameters
    ----------
    beta : (n, 3) array or KernelExpansion
        Full-kernel coefficients from the latest right-hand side.
    """
    if isinstance(beta, KernelExpansion):
        beta = beta.coeffs
    beta = np.asarray(beta, dtype=float)
    return pressure_operator(x, ps, zk) @ ps.to_reduced(beta)


# --- discrete operators ----------------------------------------------------

def _compact(A, max_density=0.35):
    """CSR copy of a dense matrix when that makes products cheaper."""
    A = A.toarray() if sparse.issparse(A) else A
    if np.count_nonzero(A) <= max_density * A.size:
        return sparse.csr_matrix(A)
    return A


def _frame_jacobian_operator(ps, grad):
    """Compose a nodal Jacobian operator (9n rows) with the tangent frames.

    Row ``(n, a, k)`` of the result is ``sum_b J[n, a, b] E[n, b, k]``, so
    the operator yields ``J E`` with 6n rows.
    """
    n = len(ps)
    node, a, k, b = np.meshgrid(np.arange(n), np.arange(3), np.arange(2), np.arange(3),
                                indexing="ij")
    rows = (6 * node + 2 * a + k).ravel()
    cols = (9 * node + 3 * a + b).ravel()
    vals = ps.frames[node, b, k].ravel()
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(6 * n, 9 * n))
    return (P @ grad).tocsr()


class ImplicitOperator:
    """Inverse of ``A_div - c A_lap`` applied as a dense product.

    The inverse is formed once from a Cholesky factorization; each stage
    solve is then a single matrix-vector product.
    """

    def __init__(self, system):
        self.system = system
        n = system.matrix.shape[0]
        self.inverse = system.solve(np.eye(n))
        self.solves = 0

    @property
    def factorizations(self):
        return self.system.factorizations

    def solve(self, rhs):
        self.solves += 1
        return self.inverse @ rhs


class NSEOperators:
    """Reduced matrices and node operators for one point set and kernel.

    Holds the factorized ``A_div`` and ``A_full``, the matrix ``A_lap`` of
    the Laplace-Beltrami kernel, sparse gradient and pressure operators,
    the dense projection ``A_div A_full^{-1}`` that maps nodal residuals to
    ``g``, and a cache of implicit operators ``(A_div - c A_lap)^{-1}``.
    """

    def __init__(self, ps, zk, sparse_storage=None):
        zk.require(3, "the Navier-Stokes right-hand side")
        self.ps = ps
        self.zonal = zk
        self.colloc = Collocation(ps, zk, sparse_storage)
        self.div = self.colloc.system("div")
        self.full = self.colloc.system("full")
        self.lap = assemble(ps, zk, "laplace_div", sparse_storage, factorize=False)
        self._div_mv = _compact(self.div.matrix)
        self._lap_mv = _compact(self.lap.matrix)
        # A_div A_full^{-1} = (A_full^{-1} A_div)^T by symmetry
        self.projection = np.ascontiguousarray(self.full.solve(self.div.dense()).T)
        self.grad_frame = _frame_jacobian_operator(ps, gradient_operator(ps, ps, zk, "div"))
        self.press = pressure_operator(ps.points, ps, zk)
        self._implicit = {}
        self._residual = None
        self.rhs_evaluations = 0

    def __len__(self):
        return len(self.ps)

    @property
    def size(self):
        return 2 * len(self.ps)

    def implicit_system(self, c):
        """Operator applying ``(A_div - c A_lap)^{-1}``, cached by ``c``."""
        c = float(c)
        if c not in self._implicit:
            M = self.div.dense() - c * self.lap.dense()
            system = ReducedSystem(self.ps, self.zonal, f"div-{c:g}*lap", M).factorize()
            self._implicit[c] = ImplicitOperator(system)
        return self._implicit[c]

    @property
    def factorization_count(self):
        return (self.div.factorizations + self.full.factorizations
                + sum(s.factorizations for s in self._implicit.values()))

    def mass(self, alpha):
        """``A_div alpha``: reduced nodal velocities."""
        return self._div_mv @ alpha

    def laplace(self, alpha):
        return self._lap_mv @ alpha

    def velocity_nodes(self, alpha):
        """Ambient nodal velocities ``u_h(x_j)``, shape (N, 3)."""
        return self.ps.from_reduced(self.mass(alpha))

    def velocity_expansion(self, alpha):
        return KernelExpansion.from_reduced(self.ps, self.zonal, "div", alpha)

    def convection_nodes(self, alpha, u=None):
        u = self.velocity_nodes(alpha) if u is None else u
        # u is tangent, so J u = (J E)(E^T u)
        JE = (self.grad_frame @ alpha).reshape(-1, 3, 2)
        uc = self.ps.to_reduced(u).reshape(-1, 2)
        return project_tangent(self.ps.points, np.einsum("nak,nk->na", JE, uc))

    def laplace_term(self, alpha, nu):
        return nu * self.laplace(alpha)

    def residual(self, alpha, t, params, forcing, mass=None):
        """Nodal ``f - B(u_h, u_h) - C(u_h)`` in reduced coordinates."""
        x = self.ps.points
        r = np.asarray(forcing(t, x), dtype=float)
        if np.any(alpha):
            u = self.ps.from_reduced(self.mass(alpha) if mass is None else mass)
            r = r - self.convection_nodes(alpha, u) - coriolis(x, u, params.omega)
        return self.ps.to_reduced(project_tangent(x, r))

    def rhs(self, alpha, t, params, forcing, mass=None):
        """``g(alpha)`` in reduced coordinates.

        The residual is kept so that :meth:`beta` can recover the
        full-kernel coefficients at the same time. ``mass`` may pass a
        precomputed ``A_div alpha``.
        """
        r = self.residual(alpha, t, params, forcing, mass)
        self._residual = (float(t), r)
        self.rhs_evaluations += 1
        return self.projection @ r

    def beta(self, t):
        """Full-kernel coefficients of the last :meth:`rhs` call at time ``t``."""
        if self._residual is None or self._residual[0] != float(t):
            have = None if self._residual is None else self._residual[0]
            raise StateError(f"no right-hand side cached for t={t} (cached: {have})")
        return self.full.solve(self._residual[1])

    def pressure_nodes(self, t):
        """Nodal pressure ``p_h(x_j, t)`` from the cached residual."""
        return self.press @ self.beta(t)

    def pressure_at(self, t, x):
        return pressure_operator(x, self.ps, self.zonal) @ self.beta(t)


def discrete_rhs(alpha, t, ops, params, forcing):
    """``g(alpha)`` as a NodalField (nodal trace of a divergence-free expansion)."""
    return NodalField.from_reduced(ops.ps, ops.rhs(alpha, t, params, forcing))
