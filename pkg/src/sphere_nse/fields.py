"""Discrete tangential vector fields: nodal samples and kernel expansions."""

import csv
import json

import numpy as np
from scipy import sparse

from .errors import DomainError, FormatError
from .geometry import PointSet, normalize
from .kernels import KERNEL_KINDS, matrix_kernel, matrix_kernel_gradient

# normal components up to this size (relative to the sample) are projected away
INGEST_PROJECT_TOL = 1e-6


def support_pairs(x, ps, eps, brute_force=False):
    """Index pairs ``(i, j)`` with ``|x_i - x_j| < eps`` (chord length).

    Parameters
    ----------
    x : (m, 3) array
    ps : PointSet
    eps : float
        Chordal support radius; values of 2 or more give all pairs.
    brute_force : bool
        Return every pair regardless of support.
    """
    m, n = len(x), len(ps)
    if brute_force or eps >= 2.0:
        return np.repeat(np.arange(m), n), np.tile(np.arange(n), m)
    lists = ps.tree.query_ball_point(x, r=eps)
    counts = np.fromiter((len(l) for l in lists), dtype=np.intp, count=m)
    i = np.repeat(np.arange(m), counts)
    j = np.fromiter((k for l in lists for k in l), dtype=np.intp, count=int(counts.sum()))
    return i, j


def project_tangent(x, v):
    return v - np.sum(v * x, axis=-1, keepdims=True) * x


def discrete_l2_norm(values):
    """Quadrature-weighted norm ``sqrt(4 pi / N * sum_j |v_j|^2)``.

    Accepts (N,) scalars, (N, 3) vectors, or a :class:`NodalField`.
    """
    if isinstance(values, NodalField):
        values = values.values
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.sqrt(4.0 * np.pi / len(v) * np.sum(v * v)))


class NodalField:
    """One tangent vector per node of a point set.

    Parameters
    ----------
    ps : PointSet
    values : (n, 3) array_like
        Samples. Normal components up to ``INGEST_PROJECT_TOL`` (relative
        to ``max(1, |v_j|)``) are projected away silently; larger ones raise
        unless ``project=True``.
    project : bool
        Project arbitrary ambient vectors onto the tangent planes.
    """

    def __init__(self, ps, values, project=False):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != (len(ps), 3):
            raise DomainError(f"expected values of shape {(len(ps), 3)}, got {values.shape}")
        if not project:
            normal = np.abs(np.sum(values * ps.points, axis=1))
            limit = INGEST_PROJECT_TOL * np.maximum(1.0, np.linalg.norm(values, axis=1))
            if np.any(normal > limit):
                j = int(np.argmax(normal - limit))
                raise DomainError(f"sample {j} is not tangent (normal component {normal[j]:.3g})")
        self.ps = ps
        self.values = project_tangent(ps.points, values)
        self.values.setflags(write=False)

    @classmethod
    def from_function(cls, ps, fn, project=False):
        return cls(ps, fn(ps.points), project=project)

    @classmethod
    def from_reduced(cls, ps, coords):
        return cls(ps, ps.from_reduced(coords))

    @classmethod
    def zeros(cls, ps):
        return cls(ps, np.zeros((len(ps), 3)))

    def reduced(self):
        return self.ps.to_reduced(self.values)

    def norm(self):
        return discrete_l2_norm(self.values)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"NodalField(n={len(self)})"


class KernelExpansion:
    """Tangential field ``x -> sum_j K(x, x_j) alpha_j``.

    Parameters
    ----------
    ps : PointSet
        Centers ``x_j``.
    zk : ZonalKernel
    kind : str
        Matrix kernel kind, see :data:`sphere_nse.kernels.KERNEL_KINDS`.
    coeffs : (n, 3) array
        Tangent coefficients; projected onto the tangent planes at the centers.
    """

    def __init__(self, ps, zk, kind, coeffs):
        if kind not in KERNEL_KINDS:
            raise DomainError(f"unknown kernel kind {kind!r}")
        coeffs = np.array(coeffs, dtype=float, copy=True).reshape(len(ps), 3)
        self.ps = ps
        self.zonal = zk
        self.kind = kind
        self.coeffs = project_tangent(ps.points, coeffs)
        self.coeffs.setflags(write=False)

    @classmethod
    def from_reduced(cls, ps, zk, kind, coords):
        return cls(ps, zk, kind, ps.from_reduced(coords))

    def __repr__(self):
        return f"KernelExpansion(n={len(self.ps)}, kind={self.kind!r}, kernel={self.zonal.name!r})"

    def with_kind(self, kind):
        """Same coefficients under another kernel kind."""
        return KernelExpansion(self.ps, self.zonal, kind, self.coeffs)

    def with_coeffs(self, coeffs):
        return KernelExpansion(self.ps, self.zonal, self.kind, coeffs)

    def reduced(self):
        return self.ps.to_reduced(self.coeffs)

    def evaluate(self, x, brute_force=False, chunk=200000):
        """Evaluate at points ``x`` of shape (m, 3) or (3,).

        Centers outside the kernel support are skipped unless
        ``brute_force`` is set.
        """
        x, single = _as_points(x)
        i, j = support_pairs(x, self.ps, self.zonal.support_chord, brute_force)
        out = np.zeros((len(x), 3))
        for lo in range(0, len(i), chunk):
            ii, jj = i[lo:lo + chunk], j[lo:lo + chunk]
            K = matrix_kernel(self.zonal, self.kind, x[ii], self.ps.points[jj])
            contrib = np.einsum("pac,pc->pa", K, self.coeffs[jj])
            for a in range(3):
                out[:, a] += np.bincount(ii, contrib[:, a], minlength=len(x))
        return out[0] if single else out

    __call__ = evaluate

    def evaluate_gradient(self, x, brute_force=False, chunk=100000):
        """Surface Jacobian ``J[a, b] = d*_b u_a`` at ``x``, shape (m, 3, 3)."""
        x, single = _as_points(x)
        i, j = support_pairs(x, self.ps, self.zonal.support_chord, brute_force)
        out = np.zeros((len(x), 9))
        for lo in range(0, len(i), chunk):
            ii, jj = i[lo:lo + chunk], j[lo:lo + chunk]
            T = matrix_kernel_gradient(self.zonal, self.kind, x[ii], self.ps.points[jj])
            contrib = np.einsum("pacb,pc->pab", T, self.coeffs[jj]).reshape(-1, 9)
            for a in range(9):
                out[:, a] += np.bincount(ii, contrib[:, a], minlength=len(x))
        out = out.reshape(-1, 3, 3)
        return out[0] if single else out

    def at_nodes(self):
        return NodalField(self.ps, self.evaluate(self.ps.points), project=True)


def _as_points(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return normalize(np.atleast_2d(x)), single


# --- sparse node operators ---------------------------------------------------

def evaluation_operator(ps_eval, ps_centers, zk, kind):
    """Sparse map from reduced coefficients (2n,) to ambient values (3m,)."""
    x = ps_eval.points if isinstance(ps_eval, PointSet) else np.atleast_2d(ps_eval)
    i, j = support_pairs(x, ps_centers, zk.support_chord)
    K = matrix_kernel(zk, kind, x[i], ps_centers.points[j]) @ ps_centers.frames[j]
    rows = (3 * i[:, None, None] + np.arange(3)[None, :, None]).repeat(2, axis=2)
    cols = (2 * j[:, None, None] + np.arange(2)[None, None, :]).repeat(3, axis=1)
    return sparse.csr_matrix((K.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(3 * len(x), 2 * len(ps_centers)))


def gradient_operator(ps_eval, ps_centers, zk, kind):
    """Sparse map from reduced coefficients to flattened surface Jacobians (9m,)."""
    x = ps_eval.points if isinstance(ps_eval, PointSet) else np.atleast_2d(ps_eval)
    i, j = support_pairs(x, ps_centers, zk.support_chord)
    T = matrix_kernel_gradient(zk, kind, x[i], ps_centers.points[j])  # p, a, c, b
    T = np.einsum("pacb,pck->pabk", T, ps_centers.frames[j]).reshape(len(i), 9, 2)
    rows = (9 * i[:, None, None] + np.arange(9)[None, :, None]).repeat(2, axis=2)
    cols = (2 * j[:, None, None] + np.arange(2)[None, None, :]).repeat(9, axis=1)
    return sparse.csr_matrix((T.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(9 * len(x), 2 * len(ps_centers)))


# --- snapshot export -------------------------------------------------------

SNAPSHOT_COLUMNS = ("x", "y", "z", "ux", "uy", "uz")


def write_snapshot_csv(path, ps, velocity, pressure=None):
    """Write per-node rows ``x,y,z,ux,uy,uz[,p]``."""
    u = velocity.values if isinstance(velocity, NodalField) else np.asarray(velocity)
    cols = list(SNAPSHOT_COLUMNS) + (["p"] if pressure is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for j in range(len(ps)):
            row = list(ps.points[j]) + list(u[j])
            if pressure is not None:
                row.append(pressure[j])
            w.writerow([repr(float(v)) for v in row])


def read_snapshot_csv(path):
    """Inverse of :func:`write_snapshot_csv`; returns (points, u, p or None)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = rows[0]
    if tuple(header[:6]) != SNAPSHOT_COLUMNS or header[6:] not in ([], ["p"]):
        raise FormatError(f"{path}: unexpected header {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    p = data[:, 6] if len(header) == 7 else None
    return data[:, :3], data[:, 3:6], p


def write_snapshot_json(path, ps, velocity, pressure=None, meta=None):
    """JSON snapshot with a ``meta`` block (time, kernel id, eps, nu, omega)."""
    u = velocity.values if isinstance(velocity, NodalField) else np.asarray(velocity)
    doc = {
        "meta": dict(meta or {}),
        "points": ps.points.tolist(),
        "velocity": np.asarray(u).tolist(),
    }
    if pressure is not None:
        doc["pressure"] = np.asarray(pressure).tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh)
