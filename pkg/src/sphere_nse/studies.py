"""Convergence studies: interpolation, Ritz projection and manufactured NSE.

Each study returns a :class:`ConvergenceTable`: rows of numbers plus the
slope of a least-squares line through ``log(error)`` against
``log(h)`` (or ``log(tau)`` for temporal studies).
"""

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .fields import discrete_l2_norm
from .geometry import fibonacci_points, generate_points
from .harmonics import HarmonicIndex, curl_free_harmonic, div_free_harmonic, eigenvalue
from .interpolation import assemble, curl_project, interpolate, leray_project, ritz_project
from .kernels import parse_kernel_spec
from .pde import ManufacturedProblem, NSEOperators, PhysicalParams
from .timestepping import SchemeConfig, init_state, run

DEFAULT_N_LADDER = (100, 200, 400, 800)
PROBE_POINTS = 4000

_TERM_RE = re.compile(r"^\s*([yz])\s*(\d+)\s*,\s*(-?\d+)\s*$")


def fitted_order(x, err):
    """Slope of the least-squares line through ``(log x, log err)``.

    Returns ``None`` for fewer than two usable rows.
    """
    x, err = np.asarray(x, dtype=float), np.asarray(err, dtype=float)
    ok = (x > 0) & (err > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(err[ok]), 1)[0])


def is_monotone_decreasing(values):
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


@dataclass
class ConvergenceTable:
    """Rows of a convergence study with the fitted order.

    ``order`` is ``None`` when there are fewer than two rows; ``flag``
    then explains why.
    """

    columns: tuple
    rows: list = field(default_factory=list)
    x_column: str = "h"
    error_column: str = "max_error"
    meta: dict = field(default_factory=dict)

    def column(self, name):
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    @property
    def order(self):
        if len(self.rows) < 2:
            return None
        return fitted_order(self.column(self.x_column), self.column(self.error_column))

    @property
    def flag(self):
        return "single row: no fitted order" if len(self.rows) < 2 else ""

    @property
    def monotone(self):
        return is_monotone_decreasing(self.column(self.error_column))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in r])

    def summary(self):
        order = self.order
        text = "order: n/a (" + self.flag + ")" if order is None else f"order: {order:.3f}"
        return f"{text}; monotone: {self.monotone}"

    def format(self):
        lines = ["  ".join(f"{c:>14s}" for c in self.columns)]
        for r in self.rows:
            lines.append("  ".join(f"{v:>14d}" if isinstance(v, (int, np.integer))
                                   else f"{v:>14.6e}" for v in r))
        lines.append(self.summary())
        return "\n".join(lines)


# --- targets -----------------------------------------------------------------

def parse_target(spec):
    """Parse ``"y3,0"``, ``"z2,1"`` or sums like ``"y2,1+z2,1"``.

    Each term names a divergence-free (``y``) or curl-free (``z``) vector
    harmonic by degree ``l`` and azimuthal order ``m``.

    Returns
    -------
    list of (family, HarmonicIndex)
    """
    terms = []
    for part in str(spec).split("+"):
        m = _TERM_RE.match(part)
        if not m:
            raise ConfigError(f"bad target term {part!r}; expected e.g. 'y3,0'")
        if int(m.group(2)) < 1:
            raise ConfigError(f"bad target term {part!r}; degree must be at least 1")
        try:
            terms.append((m.group(1), HarmonicIndex.from_order(int(m.group(2)), int(m.group(3)))))
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    return terms


def target_field(terms, family=None):
    """Sum of the target terms, optionally only those of one family."""
    fields = [(div_free_harmonic if f == "y" else curl_free_harmonic)(idx)
              for f, idx in terms if family is None or f == family]

    def u(x):
        out = np.zeros(np.shape(x))
        for fld in fields:
            out = out + fld(x)
        return out
    return u


def _kernel(kernel):
    return parse_kernel_spec(kernel) if isinstance(kernel, str) else kernel


def _points(kind, n, seed):
    return generate_points(kind, n, seed=seed)


def _probe(m=PROBE_POINTS):
    return fibonacci_points(m)


def _errors(approx, exact):
    diff = approx - exact
    return float(np.max(np.linalg.norm(diff, axis=1))), discrete_l2_norm(diff)


# --- studies -------------------------------------------------------------------

INTERP_METHODS = ("div", "curl", "leray", "curl_project")


def interpolation_study(kernel, target="y3,0", n_list=DEFAULT_N_LADDER, method=None,
                        point_kind="fibonacci", seed=0, probe=PROBE_POINTS):
    """Interpolation error against ``h`` for an analytic target field.

    Parameters
    ----------
    kernel : str or ZonalKernel
    target : str
        See :func:`parse_target`.
    method : {'div', 'curl', 'leray', 'curl_project'}, optional
        ``div``/``curl`` interpolate with that kernel and compare with the
        whole target. ``leray``/``curl_project`` interpolate with the full
        kernel and compare the divergence-free (curl-free) part with the
        ``y`` (``z``) terms. The default is ``div`` for pure ``y``
        targets, ``curl_project`` for pure ``z`` targets and ``leray``
        otherwise.
    """
    zk = _kernel(kernel)
    terms = parse_target(target)
    families = {f for f, _ in terms}
    if method is None:
        method = {frozenset("y"): "div", frozenset("z"): "curl_project"}.get(
            frozenset(families), "leray")
    if method not in INTERP_METHODS:
        raise ConfigError(f"method must be one of {INTERP_METHODS}")
    data_fn = target_field(terms)
    exact_fn = target_field(terms, {"leray": "y", "curl_project": "z"}.get(method))
    x = _probe(probe)
    exact = exact_fn(x)
    table = ConvergenceTable(("N", "h", "max_error", "l2_error"),
                             meta={"kernel": zk.name, "target": target, "method": method})
    for n in n_list:
        ps = _points(point_kind, int(n), seed)
        if method in ("div", "curl"):
            u = interpolate(assemble(ps, zk, method), data_fn(ps.points))
        else:
            full = assemble(ps, zk, "full")
            u = (leray_project if method == "leray" else curl_project)(full, data_fn(ps.points))
        table.rows.append((int(n), ps.fill_distance(), *_errors(u(x), exact)))
    return table


def helmholtz_study(kernel, target="y3,0", n_list=DEFAULT_N_LADDER, point_kind="fibonacci",
                    seed=0, probe=PROBE_POINTS):
    """Ritz projection of a divergence-free harmonic target.

    The right-hand side is ``(-Delta* + id) y = (l(l+1) + 1) y`` at the
    nodes; the table also reports the largest nodal residual.
    """
    zk = _kernel(kernel)
    terms = parse_target(target)
    if any(f != "y" for f, _ in terms):
        raise ConfigError("Helmholtz targets must be divergence-free (y terms)")
    fields = [(eigenvalue(idx.l) + 1.0, div_free_harmonic(idx)) for _, idx in terms]
    exact_fn = target_field(terms)

    def rhs_fn(pts):
        return sum(c * f(pts) for c, f in fields)

    x = _probe(probe)
    exact = exact_fn(x)
    table = ConvergenceTable(("N", "h", "max_error", "l2_error", "nodal_residual"),
                             meta={"kernel": zk.name, "target": target})
    for n in n_list:
        ps = _points(point_kind, int(n), seed)
        system = assemble(ps, zk, "helmholtz_div")
        rhs = rhs_fn(ps.points)
        s = ritz_project(system, rhs)
        resid = np.max(np.abs(s.with_kind("helmholtz_div")(ps.points) - rhs))
        table.rows.append((int(n), ps.fill_distance(), *_errors(s(x), exact), float(resid)))
    return table


def manufactured_run(ops, params, tau, T, scheme="imex_rk3", index=None):
    """Run the manufactured problem on an operator bundle; return ``(state, problem)``."""
    problem = ManufacturedProblem(params, index or HarmonicIndex.from_order(1, 1))
    state = init_state(ops, lambda p: problem.velocity(0.0, p))
    state, _ = run(state, SchemeConfig(scheme, tau, T), params, problem.as_forcing(),
                   sample_interval=T)
    return state, problem


def manufactured_spatial_study(kernel="wendland4:eps=1", n_list=DEFAULT_N_LADDER, nu=0.01,
                               omega=0.0, tau=1e-4, T=0.5, scheme="imex_rk3",
                               point_kind="fibonacci", seed=0, probe=PROBE_POINTS):
    """Velocity error at ``T`` against ``h`` for ``u = exp(-2 nu t) y_{1,1}``."""
    zk = _kernel(kernel)
    params = PhysicalParams(nu, omega)
    x = _probe(probe)
    table = ConvergenceTable(("N", "h", "max_error", "l2_error"),
                             meta={"kernel": zk.name, "nu": nu, "omega": omega, "tau": tau,
                                   "T": T, "scheme": scheme})
    for n in n_list:
        ps = _points(point_kind, int(n), seed)
        state, problem = manufactured_run(NSEOperators(ps, zk), params, tau, T, scheme)
        errs = _errors(state.velocity()(x), problem.velocity(T, x))
        table.rows.append((int(n), ps.fill_distance(), *errs))
    return table


def manufactured_temporal_study(kernel="wendland4:eps=1", n=400, taus=(1e-2, 5e-3, 2.5e-3),
                                nu=0.01, omega=0.0, T=0.5, scheme="imex_rk3",
                                reference_tau=None, point_kind="fibonacci", seed=0):
    """Time-discretization error against ``tau`` at fixed ``N``.

    Errors are measured against an IMEX run with ``reference_tau``
    (default ``min(taus) / 8``) on the same nodes, which removes the
    spatial error from the comparison.
    """
    zk = _kernel(kernel)
    params = PhysicalParams(nu, omega)
    ps = _points(point_kind, int(n), seed)
    ref_tau = reference_tau or min(taus) / 8.0
    ops = NSEOperators(ps, zk)
    ref, _ = manufactured_run(ops, params, ref_tau, T, "imex_rk3")
    u_ref = ref.velocity_nodes()
    table = ConvergenceTable(("tau", "max_error", "l2_error"), x_column="tau",
                             meta={"kernel": zk.name, "N": int(n), "nu": nu, "omega": omega,
                                   "T": T, "scheme": scheme, "reference_tau": ref_tau})
    for tau in taus:
        state, _ = manufactured_run(ops, params, tau, T, scheme)
        table.rows.append((float(tau), *_errors(state.velocity_nodes(), u_ref)))
    return table
