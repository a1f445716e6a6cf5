"""Kernel collocation systems in tangent-frame coordinates.

Each node contributes two unknowns (its tangent frame coordinates), so a
3N x 3N kernel matrix reduces to the symmetric 2N x 2N matrix with blocks
``E_j^T K(x_j, x_k) E_k``. Factorizations are cached on the system object.
"""

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import DomainError, IllConditionedError, StateError
from .fields import KernelExpansion, NodalField, support_pairs
from .kernels import KERNEL_KINDS, matrix_kernel

MIN_SEPARATION = 1e-8
# switch to sparse storage when the kernel support covers less of the sphere
SPARSE_FILL_THRESHOLD = 0.1


def reduced_blocks(ps, zk, kind):
    """Upper-triangle support pairs ``(i, j)`` with their 2x2 reduced blocks."""
    i, j = support_pairs(ps.points, ps, zk.support_chord)
    keep = i <= j
    i, j = i[keep], j[keep]
    K = matrix_kernel(zk, kind, ps.points[i], ps.points[j])
    B = np.swapaxes(ps.frames[i], 1, 2) @ K @ ps.frames[j]
    return i, j, B


def _scatter(i, j, B, n, dense):
    rows = np.concatenate([2 * i[:, None] + [0, 0, 1, 1], 2 * j[:, None] + [0, 1, 0, 1]])
    cols = np.concatenate([2 * j[:, None] + [0, 1, 0, 1], 2 * i[:, None] + [0, 0, 1, 1]])
    vals = np.concatenate([B.reshape(-1, 4), B.reshape(-1, 4)])
    off = np.concatenate([np.ones(len(i), bool), i != j])
    rows, cols, vals = rows[off].ravel(), cols[off].ravel(), vals[off].ravel()
    if dense:
        A = np.zeros((2 * n, 2 * n))
        A[rows, cols] = vals
        return A
    return sparse.csc_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))


class ReducedSystem:
    """Symmetric 2N x 2N collocation matrix with a cached factorization.

    Attributes
    ----------
    matrix : ndarray or scipy.sparse.csc_matrix
    factorizations, solves : int
        Instrumentation counters.
    """

    def __init__(self, ps, zk, kind, matrix):
        self.ps = ps
        self.zonal = zk
        self.kind = kind
        self.matrix = matrix
        self.factorizations = 0
        self.solves = 0
        self._factor = None

    @property
    def is_sparse(self):
        return sparse.issparse(self.matrix)

    @property
    def factorized(self):
        return self._factor is not None

    def __repr__(self):
        fmt = "sparse" if self.is_sparse else "dense"
        return f"ReducedSystem(n={len(self.ps)}, kind={self.kind!r}, {fmt})"

    def factorize(self):
        """Cholesky factorization (dense) or sparse LU with COLAMD ordering."""
        if self.is_sparse:
            try:
                self._factor = ("lu", splinalg.splu(self.matrix, permc_spec="COLAMD"))
            except RuntimeError as exc:
                raise IllConditionedError(f"sparse factorization failed: {exc}") from None
        else:
            c, info = linalg.lapack.dpotrf(self.matrix, lower=True, clean=True)
            if info > 0:
                raise IllConditionedError(
                    f"Cholesky factorization failed at pivot {info - 1} "
                    f"of the {self.kind} system", pivot=info - 1)
            if info < 0:
                raise ValueError(f"dpotrf: illegal argument {-info}")
            self._factor = ("chol", c)
        self.factorizations += 1
        return self

    def solve(self, rhs):
        """Solve ``A c = rhs`` for reduced right-hand side(s)."""
        if self._factor is None:
            raise StateError("system has not been factorized")
        self.solves += 1
        how, f = self._factor
        if how == "lu":
            return f.solve(np.asarray(rhs, dtype=float))
        return linalg.cho_solve((f, True), rhs, check_finite=False)

    def matvec(self, coords):
        return self.matrix @ coords

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else self.matrix


def assemble(ps, zk, kind, sparse_storage=None, factorize=True):
    """Assemble the reduced system for a kernel kind on a point set.

    Parameters
    ----------
    ps : PointSet
    zk : ZonalKernel
    kind : str
        One of :data:`sphere_nse.kernels.KERNEL_KINDS`.
    sparse_storage : bool or None
        Force sparse or dense storage. ``None`` picks sparse when the
        kernel support covers less than 10% of the sphere and N >= 1000.
    factorize : bool
        Factorize immediately.
    """
    if kind not in KERNEL_KINDS:
        raise DomainError(f"unknown kernel kind {kind!r}")
    if len(ps) > 1 and ps.min_separation() < MIN_SEPARATION:
        raise IllConditionedError(
            f"nodes closer than {MIN_SEPARATION:g} rad make the system singular")
    if sparse_storage is None:
        cap = min(1.0, zk.support_chord ** 2 / 4.0)  # area fraction of a support cap
        sparse_storage = cap < SPARSE_FILL_THRESHOLD and len(ps) >= 1000
    i, j, B = reduced_blocks(ps, zk, kind)
    system = ReducedSystem(ps, zk, kind, _scatter(i, j, B, len(ps), dense=not sparse_storage))
    if factorize:
        system.factorize()
    return system


class Collocation:
    """Lazily assembled systems for one point set and zonal kernel."""

    def __init__(self, ps, zk, sparse_storage=None):
        self.ps = ps
        self.zonal = zk
        self.sparse_storage = sparse_storage
        self._systems = {}

    def system(self, kind):
        if kind not in self._systems:
            self._systems[kind] = assemble(self.ps, self.zonal, kind, self.sparse_storage)
        return self._systems[kind]

    def __getitem__(self, kind):
        return self.system(kind)


def _data_reduced(system, data):
    if isinstance(data, NodalField):
        if data.ps is not system.ps and not np.array_equal(data.ps.points, system.ps.points):
            raise DomainError("data lives on a different point set")
        return data.reduced()
    return system.ps.to_reduced(NodalField(system.ps, data).values)


def interpolate(system, data):
    """Kernel interpolant of nodal data with the system's kernel kind.

    Parameters
    ----------
    system : ReducedSystem
        Factorized system; raises :class:`StateError` otherwise.
    data : NodalField or (n, 3) array
    """
    coords = system.solve(_data_reduced(system, data))
    return KernelExpansion.from_reduced(system.ps, system.zonal, system.kind, coords)


def _require_kind(system, kind, op):
    if system.kind != kind:
        raise DomainError(f"{op} needs a {kind!r} system, got {system.kind!r}")


def leray_project(full_system, data):
    """Divergence-free part of the full-kernel interpolant.

    Solves with the full kernel and returns the coefficients under the
    divergence-free kernel.
    """
    _require_kind(full_system, "full", "leray_project")
    return interpolate(full_system, data).with_kind("div")


def curl_project(full_system, data):
    """Curl-free part of the full-kernel interpolant."""
    _require_kind(full_system, "full", "curl_project")
    return interpolate(full_system, data).with_kind("curl")


def ritz_project(helmholtz_system, rhs):
    """Collocation solution ``s`` of ``(-Delta* + id) s(x_j) = rhs_j``.

    Returns a divergence-free expansion; its ``helmholtz_div`` re-keying
    reproduces ``rhs`` at the nodes.
    """
    _require_kind(helmholtz_system, "helmholtz_div", "ritz_project")
    helmholtz_system.zonal.require(4, "Ritz projection")
    return interpolate(helmholtz_system, rhs).with_kind("div")
