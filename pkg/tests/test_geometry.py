import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from sphere_nse.errors import DomainError, FormatError
from sphere_nse.geometry import (
    PointSet, estimate_fill_distance, generate_points, geodesic_distance,
    load_points, normalize, riesz_energy, save_points, tangent_frame,
    tangent_frames, fibonacci_points,
)

unit_vectors = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(
    lambda v: np.linalg.norm(v) > 1e-3).map(normalize)


def brute_force_fill_distance(pts, starts=400, seed=0):
    """Maximize the distance to the nearest node by local optimization."""
    rng = np.random.default_rng(seed)

    def neg_min(p):
        q = normalize(p)
        return -np.min(np.arccos(np.clip(pts @ q, -1, 1)))

    best = 0.0
    for p0 in normalize(rng.standard_normal((starts, 3))):
        res = minimize(neg_min, p0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12})
        best = max(best, -res.fun)
    return best


class TestGeodesic:
    @pytest.mark.parametrize("a, b, expected", [
        ((1, 0, 0), (0, 1, 0), np.pi / 2),
        ((0, 0, 1), (0, 0, 1), 0.0),
        ((0, 0, 1), (0, 0, -1), np.pi),
    ])
    def test_examples(self, a, b, expected):
        assert_allclose(geodesic_distance(a, b), expected, atol=1e-15)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(3)
        a, b, c = (normalize(rng.standard_normal((2000, 3))) for _ in range(3))
        lhs = geodesic_distance(a, c)
        rhs = geodesic_distance(a, b) + geodesic_distance(b, c)
        assert np.all(lhs <= rhs + 1e-12)

    @given(unit_vectors, unit_vectors)
    def test_symmetric_and_bounded(self, a, b):
        d = geodesic_distance(a, b)
        assert d == geodesic_distance(b, a)
        assert 0.0 <= d <= np.pi


class TestTangentFrames:
    @staticmethod
    def check(x, f):
        e1, e2 = f[..., 0], f[..., 1]
        dot = lambda u, v: np.sum(u * v, axis=-1)
        assert_allclose(dot(e1, x), 0, atol=1e-12)
        assert_allclose(dot(e2, x), 0, atol=1e-12)
        assert_allclose(dot(e1, e2), 0, atol=1e-12)
        assert_allclose(np.linalg.norm(e1, axis=-1), 1, atol=1e-12)
        assert_allclose(np.linalg.norm(e2, axis=-1), 1, atol=1e-12)
        assert_allclose(np.cross(e1, e2), x, atol=1e-12)

    def test_north_pole(self):
        x = np.array([0.0, 0.0, 1.0])
        f = tangent_frame(x)
        assert abs(f.e1 @ x) < 1e-15
        assert_allclose(f.e2, np.cross(x, f.e1))

    @pytest.mark.parametrize("kind", ["fibonacci", "random_uniform", "riesz_minimized"])
    def test_invariants_on_generated_sets(self, kind):
        ps = generate_points(kind, 200, seed=1)
        self.check(ps.points, ps.frames)

    @given(unit_vectors)
    def test_invariants_any_point(self, x):
        self.check(x, tangent_frames(x)[0])

    def test_local_continuity(self):
        x = np.array([1.0, 0.0, 0.0])
        xp = normalize(x + np.array([0.0, 1e-9, 2e-9]))
        assert np.max(np.abs(tangent_frames(x) - tangent_frames(xp))) < 1e-6


class TestPointSet:
    def test_duplicates_rejected(self):
        with pytest.raises(DomainError):
            PointSet([[0, 0, 1], [0, 0, 1], [1, 0, 0]])

    def test_renormalized(self):
        ps = PointSet([[0, 0, 2.0], [3.0, 0, 0]])
        assert_allclose(np.linalg.norm(ps.points, axis=1), 1, atol=1e-15)

    def test_reduced_round_trip(self):
        ps = generate_points("fibonacci", 30)
        rng = np.random.default_rng(0)
        v = rng.standard_normal((30, 3))
        v -= np.sum(v * ps.points, axis=1, keepdims=True) * ps.points
        assert_allclose(ps.from_reduced(ps.to_reduced(v)), v, atol=1e-14)


class TestFillDistance:
    def test_single_point(self):
        h = estimate_fill_distance(PointSet([[0, 0, 1]]), 20000)
        assert_allclose(h, np.pi, atol=0.03)

    def test_octahedron(self):
        pts = np.vstack([np.eye(3), -np.eye(3)])
        oracle = brute_force_fill_distance(pts, starts=50)
        assert_allclose(oracle, np.arccos(1 / np.sqrt(3)), atol=1e-6)
        h = estimate_fill_distance(PointSet(pts), 100000)
        assert_allclose(h, np.arccos(1 / np.sqrt(3)), atol=2e-2)

    def test_tetrahedron(self):
        pts = normalize(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float))
        oracle = brute_force_fill_distance(pts, starts=50)
        h = estimate_fill_distance(PointSet(pts), 100000)
        # dense probing underestimates the sup by at most the probe spacing
        assert oracle - 2e-2 <= h <= oracle + 1e-12
        assert_allclose(oracle, 1.2309594173407747, atol=1e-6)

    def test_errors(self):
        with pytest.raises(DomainError):
            estimate_fill_distance(np.zeros((0, 3)), 100)
        with pytest.raises(DomainError):
            estimate_fill_distance(generate_points("fibonacci", 50), 10)

    def test_monotone_in_probe_density_toward_sup(self):
        ps = generate_points("random_uniform", 40, seed=2)
        oracle = brute_force_fill_distance(ps.points, starts=200)
        coarse = estimate_fill_distance(ps, 1000)
        fine = estimate_fill_distance(ps, 200000)
        assert coarse <= oracle + 1e-12 and fine <= oracle + 1e-12
        assert oracle - fine <= oracle - coarse + 1e-3
        assert oracle - fine < 5e-3

    def test_nonincreasing_when_adding_argmax(self):
        ps = generate_points("random_uniform", 30, seed=5)
        h0, p = estimate_fill_distance(ps, 20000, return_argmax=True)
        h1 = estimate_fill_distance(PointSet(np.vstack([ps.points, p])), 20000)
        assert h1 <= h0


class TestGeneratePoints:
    def test_fibonacci_separation(self):
        pts = generate_points("fibonacci", 100).points
        d = np.arccos(np.clip(1 - pdist(pts) ** 2 / 2, -1, 1))
        assert d.min() > 0.15
        assert_allclose(generate_points("fibonacci", 100).min_separation(), d.min(), rtol=1e-10)

    def test_random_deterministic(self):
        a = generate_points("random_uniform", 50, seed=7).points
        b = generate_points("random_uniform", 50, seed=7).points
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_riesz_descends(self, seed):
        from scipy.spatial.transform import Rotation
        ps = generate_points("riesz_minimized", 6, seed=seed)
        start = Rotation.random(random_state=np.random.default_rng(seed)).apply(fibonacci_points(6))
        assert riesz_energy(ps.points) <= riesz_energy(start)
        assert riesz_energy(ps.points) <= riesz_energy(fibonacci_points(6)) + 1e-12

    def test_riesz_octahedron(self):
        # the Riesz s=1 minimizer for six points is the octahedron
        ps = generate_points("riesz_minimized", 6, seed=0, max_iters=2000)
        oct_energy = riesz_energy(np.vstack([np.eye(3), -np.eye(3)]))
        assert_allclose(riesz_energy(ps.points), oct_energy, rtol=1e-6)

    def test_riesz_deterministic(self):
        a = generate_points("riesz_minimized", 80, seed=3).points
        b = generate_points("riesz_minimized", 80, seed=3).points
        assert np.array_equal(a, b)

    def test_errors(self):
        with pytest.raises(DomainError):
            generate_points("fibonacci", 3)
        with pytest.raises(DomainError):
            generate_points("hexagonal", 10)


class TestPointFiles:
    def test_single_row(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("# north pole\n0 0 1\n")
        ps = load_points(f)
        assert len(ps) == 1
        assert_allclose(ps.points[0], [0, 0, 1])

    def test_round_trip(self, tmp_path):
        ps = generate_points("random_uniform", 64, seed=11)
        f = tmp_path / "a.txt"
        save_points(ps, f, comment="random\nseed 11")
        back = load_points(f)
        assert_allclose(back.points, ps.points, atol=1e-15, rtol=0)
        save_points(back, tmp_path / "b.txt")
        assert_allclose(load_points(tmp_path / "b.txt").points, back.points, atol=1e-15, rtol=0)

    @pytest.mark.parametrize("text", ["1 1 1\n", "0 0\n", "a b c\n", "# empty\n"])
    def test_bad_files(self, tmp_path, text):
        f = tmp_path / "bad.txt"
        f.write_text(text)
        with pytest.raises(FormatError):
            load_points(f)

    def test_slightly_off_unit_renormalized(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("0 0 1.0000005\n1 0 0\n")
        assert_allclose(np.linalg.norm(load_points(f).points, axis=1), 1, atol=1e-15)
