"""Point sets on the unit sphere.

Node generation (Fibonacci lattice, uniform random, Riesz-energy descent),
tangent frames used to reduce 3N collocation systems to 2N, geodesic
distances, fill-distance estimation and the plain-text point file format.

All point arrays have shape ``(n, 3)`` and hold unit vectors.
"""

from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import DomainError, FormatError

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))

POINT_KINDS = ("fibonacci", "random_uniform", "riesz_minimized")


def normalize(x):
    """Scale vectors along the last axis to unit length."""
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def geodesic_distance(a, b):
    """Great-circle distance between points on the unit sphere.

    Broadcasts over leading axes. Returns values in ``[0, pi]``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def chord_to_geodesic(d):
    return 2.0 * np.arcsin(np.clip(np.asarray(d) / 2.0, 0.0, 1.0))


class TangentFrame(NamedTuple):
    e1: np.ndarray
    e2: np.ndarray


def tangent_frames(x):
    """Orthonormal tangent bases for an array of unit vectors.

    The first axis vector is obtained by Gram-Schmidt from the coordinate
    axis least aligned with ``x`` (ties go to the lower index); the second
    is ``x x e1`` so that ``(e1, e2, x)`` is right-handed.

    Parameters
    ----------
    x : (n, 3) array

    Returns
    -------
    frames : (n, 3, 2) array
        ``frames[j, :, 0]`` is e1 and ``frames[j, :, 1]`` is e2 at node j.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pivot = np.argmin(np.abs(x), axis=1)
    a = np.zeros_like(x)
    a[np.arange(len(x)), pivot] = 1.0
    e1 = a - np.sum(a * x, axis=1, keepdims=True) * x
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(x, e1)
    return np.stack([e1, e2], axis=2)


def tangent_frame(x):
    """Tangent frame at a single point, see :func:`tangent_frames`."""
    f = tangent_frames(np.reshape(x, (1, 3)))[0]
    return TangentFrame(f[:, 0].copy(), f[:, 1].copy())


class PointSet:
    """Ordered, pairwise distinct nodes on the unit sphere with frames.

    Parameters
    ----------
    points : (n, 3) array_like
        Node coordinates; rows are renormalized to unit length.
    """

    def __init__(self, points):
        pts = normalize(np.atleast_2d(np.asarray(points, dtype=float)))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise DomainError(f"expected an (n, 3) array, got shape {pts.shape}")
        if len(pts) == 0:
            raise DomainError("point set is empty")
        self._fill = {}
        self._tree = None
        self.points = pts
        self.points.setflags(write=False)
        self.frames = tangent_frames(pts)
        self.frames.setflags(write=False)
        if len(pts) > 1 and self.min_separation() <= 0.0:
            raise DomainError("point set contains duplicate nodes")

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointSet(n={len(self)})"

    @property
    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def min_separation(self):
        """Smallest geodesic distance between two distinct nodes."""
        if len(self) < 2:
            return np.pi
        d, _ = self.tree.query(self.points, k=2)
        return float(chord_to_geodesic(d[:, 1].min()))

    def fill_distance(self, probe_resolution=None):
        """Cached :func:`estimate_fill_distance` (default probe: max(20000, 20 n))."""
        m = probe_resolution or max(20000, 20 * len(self))
        if m not in self._fill:
            self._fill[m] = estimate_fill_distance(self, m)
        return self._fill[m]

    @property
    def fill_distance_estimate(self):
        return self.fill_distance()

    def to_reduced(self, vectors):
        """Ambient tangent vectors (n, 3) -> frame coordinates, flat (2n,)."""
        return np.einsum("nik,ni->nk", self.frames, vectors).reshape(-1)

    def from_reduced(self, coords):
        """Frame coordinates (2n,) -> ambient tangent vectors (n, 3)."""
        c = np.asarray(coords).reshape(len(self), 2)
        return np.einsum("nik,nk->ni", self.frames, c)


def fibonacci_points(n):
    """Fibonacci (golden spiral) lattice with ``n`` nodes."""
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    phi = GOLDEN_ANGLE * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def estimate_fill_distance(ps, probe_resolution, return_argmax=False):
    """Estimate the fill distance of ``ps`` by dense probing.

    The estimate is the largest distance from a Fibonacci-lattice probe
    point to its nearest node.

    Parameters
    ----------
    ps : PointSet or (n, 3) array
    probe_resolution : int
        Number of probe points; must be at least the number of nodes.
    return_argmax : bool
        Also return the probe point that attains the maximum.
    """
    pts = ps.points if isinstance(ps, PointSet) else np.atleast_2d(ps)
    if len(pts) == 0:
        raise DomainError("empty point set")
    if probe_resolution < len(pts):
        raise DomainError("probe_resolution must be at least the number of nodes")
    tree = ps.tree if isinstance(ps, PointSet) else cKDTree(pts)
    probes = fibonacci_points(int(probe_resolution))
    d, _ = tree.query(probes)
    k = int(np.argmax(d))
    h = float(chord_to_geodesic(d[k]))
    if return_argmax:
        return h, probes[k]
    return h


def riesz_energy(points, s=1.0):
    """Riesz s-energy sum_{i<j} |x_i - x_j|^-s."""
    return float(np.sum(pdist(points) ** -s))


def _riesz_gradient(points, s=1.0, chunk=512):
    n = len(points)
    grad = np.zeros_like(points)
    for lo in range(0, n, chunk):
        diff = points[lo:lo + chunk, None, :] - points[None, :, :]
        r2 = np.sum(diff * diff, axis=-1)
        idx = np.arange(lo, min(lo + chunk, n))
        r2[idx - lo, idx] = np.inf
        w = r2 ** (-(s + 2.0) / 2.0)
        grad[lo:lo + chunk] = -s * np.einsum("ij,ijk->ik", w, diff)
    return grad


def riesz_points(n, seed=0, max_iters=300, tol=1e-10, s=1.0):
    """Nodes from projected gradient descent on the Riesz s-energy.

    Starts from a randomly rotated Fibonacci lattice (rotation drawn from
    ``seed``). Steps that would raise the energy are halved until they do
    not, so the energy is nonincreasing. Stops when the relative energy
    decrease of an accepted step drops below ``tol``.
    """
    from scipy.spatial.transform import Rotation

    rot = Rotation.random(random_state=np.random.default_rng(seed))
    x = rot.apply(fibonacci_points(n))
    energy = riesz_energy(x, s)
    step = 0.5 / np.sqrt(n) ** (s + 1.0)
    for _ in range(max_iters):
        g = _riesz_gradient(x, s)
        g -= np.sum(g * x, axis=1, keepdims=True) * x
        gnorm = np.max(np.linalg.norm(g, axis=1))
        if gnorm == 0.0:
            break
        # Cap the largest node displacement to a fraction of the spacing.
        h = min(step, 0.1 / np.sqrt(n) / gnorm)
        while True:
            trial = normalize(x - h * g)
            e_trial = riesz_energy(trial, s)
            if e_trial <= energy or h < 1e-16:
                break
            h *= 0.5
        if e_trial > energy:
            break
        decrease = energy - e_trial
        x, energy = trial, e_trial
        step = 1.5 * h
        if decrease < tol * energy:
            break
    return x


def generate_points(kind, n, seed=0, **kwargs):
    """Generate a :class:`PointSet`.

    Parameters
    ----------
    kind : {'fibonacci', 'random_uniform', 'riesz_minimized'}
    n : int
        Number of nodes, at least 4.
    seed : int
        Seed for the random families; the Fibonacci lattice ignores it.
    """
    if n < 4:
        raise DomainError("need at least 4 points")
    if kind == "fibonacci":
        pts = fibonacci_points(n)
    elif kind == "random_uniform":
        rng = np.random.default_rng(seed)
        pts = normalize(rng.standard_normal((n, 3)))
    elif kind == "riesz_minimized":
        pts = riesz_points(n, seed=seed, **kwargs)
    else:
        raise DomainError(f"unknown point kind {kind!r}; expected one of {POINT_KINDS}")
    return PointSet(pts)


def load_points(path):
    """Read a point file: one ``x y z`` row per line, ``#`` starts a comment.

    Rows whose norm deviates from 1 by more than 1e-6 are rejected; the
    remaining rows are renormalized.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                row = [float(p) for p in parts]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if abs(np.linalg.norm(row) - 1.0) > 1e-6:
                raise FormatError(f"{path}:{lineno}: row is not a unit vector")
            rows.append(row)
    if not rows:
        raise FormatError(f"{path}: no points found")
    return PointSet(np.array(rows))


def save_points(ps, path, comment=None):
    pts = ps.points if isinstance(ps, PointSet) else np.asarray(ps)
    with open(path, "w") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        for p in pts:
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")
