"""Run configuration: YAML files with full defaulting.

A configuration is a mapping; omitted keys take the defaults below, which
describe the reduced-scale benchmark (N=400). The resolved mapping, with
every default filled in, is what gets written to ``metadata.json``.

Example::

    points: {kind: riesz_minimized, n: 400}
    kernel: wendland4:eps=1
    nu: 1.0e-4
    omega: 1.0
    scheme: imex_rk3
    tau: 0.01
    T: 60
    forcing: {kind: benchmark_gamma_y30}
    initial: {kind: random_streamfunction, max_degree: 19, norm: 1.0}
    snapshot_times: [10, 20, 30, 40, 50, 60]
"""

import copy
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, DomainError, FormatError
from .fields import NodalField, discrete_l2_norm
from .geometry import POINT_KINDS, generate_points, load_points
from .harmonics import (
    HarmonicIndex, curl_free_harmonic, div_free_harmonic, random_streamfunction,
    surface_curl_field,
)
from .kernels import parse_kernel_spec
from .pde import (
    BenchmarkForcing, HarmonicForcing, ManufacturedProblem, NodalCsvForcing,
    PhysicalParams, ZeroForcing,
)
from .timestepping import SCHEMES, SchemeConfig

FULL_SCALE_N = 2500

DEFAULTS = {
    "points": {"kind": "riesz_minimized", "n": 400, "seed": None, "file": None},
    "kernel": "wendland4:eps=1",
    "nu": 1e-4,
    "omega": 1.0,
    "scheme": "imex_rk3",
    "tau": 1e-2,
    "T": 60.0,
    "forcing": {"kind": "benchmark_gamma_y30", "amplitude": 1.0},
    "initial": {"kind": "random_streamfunction", "max_degree": 19, "norm": 1.0},
    "seed": 0,
    "output": "runs/nse",
    "snapshot_times": [10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
    "snapshot_format": "csv",
    "sample_interval": 0.1,
    "checkpoint_interval": 10.0,
}

FORCING_KINDS = ("benchmark_gamma_y30", "manufactured", "custom", "zero", "harmonic")
INITIAL_KINDS = ("random_streamfunction", "zero", "harmonic", "manufactured")


def _merge(base, over, where=""):
    out = copy.deepcopy(base)
    for key, value in over.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and key not in ("forcing", "initial"):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}{key} must be a mapping")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _float(d, key, positive=False, nonnegative=False):
    try:
        v = float(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {d[key]!r}") from None
    if not np.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    if positive and not v > 0:
        raise ConfigError(f"{key} must be positive")
    if nonnegative and v < 0:
        raise ConfigError(f"{key} must be nonnegative")
    return v


def _harmonic(spec, where):
    try:
        if int(spec["l"]) < 1:
            raise DomainError("degree must be at least 1")
        return HarmonicIndex.from_order(int(spec["l"]), int(spec.get("m", 0)))
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"{where}: bad harmonic ({exc})") from None


@dataclass
class RunConfig:
    """Validated, fully resolved run configuration.

    Build with :meth:`from_dict` or :func:`load_config`; ``data`` holds the
    resolved mapping and the remaining attributes are typed views of it.
    """

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    base_dir: str = "."

    @classmethod
    def from_dict(cls, mapping=None, base_dir=".", full_scale=False):
        data = _merge(DEFAULTS, dict(mapping or {}))
        if full_scale:
            data["points"]["n"] = FULL_SCALE_N
        cfg = cls(data, str(base_dir))
        cfg.validate()
        return cfg

    # typed views
    nu = property(lambda self: float(self.data["nu"]))
    omega = property(lambda self: float(self.data["omega"]))
    tau = property(lambda self: float(self.data["tau"]))
    T = property(lambda self: float(self.data["T"]))
    seed = property(lambda self: int(self.data["seed"]))
    output = property(lambda self: self.data["output"])
    sample_interval = property(lambda self: float(self.data["sample_interval"]))
    checkpoint_interval = property(lambda self: float(self.data["checkpoint_interval"]))
    snapshot_times = property(lambda self: [float(s) for s in self.data["snapshot_times"]])

    def resolve_path(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def validate(self):
        d = self.data
        for key in ("nu", "tau", "T"):
            _float(d, key, positive=True)
        _float(d, "omega", nonnegative=True)
        _float(d, "sample_interval", positive=True)
        _float(d, "checkpoint_interval", positive=True)
        try:
            d["seed"] = int(d["seed"])
        except (TypeError, ValueError):
            raise ConfigError("seed must be an integer") from None
        if d["scheme"] not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        SchemeConfig(d["scheme"], self.tau, self.T)
        try:
            parse_kernel_spec(d["kernel"])
        except (DomainError, ValueError) as exc:
            raise ConfigError(f"kernel: {exc}") from None
        pts = d["points"]
        if pts["file"] is not None:
            if not os.path.isfile(self.resolve_path(pts["file"])):
                raise ConfigError(f"points file {pts['file']!r} does not exist")
            pts["file"] = os.path.abspath(self.resolve_path(pts["file"]))
        else:
            if pts["kind"] not in POINT_KINDS:
                raise ConfigError(f"points.kind must be one of {POINT_KINDS}")
            if int(pts["n"]) < 4:
                raise ConfigError("points.n must be at least 4")
        snaps = d["snapshot_times"]
        if not isinstance(snaps, (list, tuple)):
            raise ConfigError("snapshot_times must be a list")
        d["snapshot_times"] = [float(s) for s in snaps]
        if d["snapshot_format"] not in ("csv", "json"):
            raise ConfigError("snapshot_format must be csv or json")
        self._validate_forcing(d["forcing"])
        self._validate_initial(d["initial"])
        return self

    def _validate_forcing(self, f):
        if not isinstance(f, dict) or f.get("kind") not in FORCING_KINDS:
            raise ConfigError(f"forcing.kind must be one of {FORCING_KINDS}")
        if f["kind"] == "custom":
            path = f.get("path")
            if not path or not os.path.isfile(self.resolve_path(path)):
                raise ConfigError(f"custom forcing file {path!r} does not exist")
            f["path"] = os.path.abspath(self.resolve_path(path))
        if f["kind"] == "harmonic":
            _harmonic(f, "forcing")
            if f.get("family", "div") not in ("div", "curl"):
                raise ConfigError("forcing.family must be div or curl")
        if f["kind"] == "manufactured":
            _harmonic({"l": 1, "m": 1, **f}, "forcing")

    def _validate_initial(self, u):
        if not isinstance(u, dict) or u.get("kind") not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
        if u["kind"] == "harmonic":
            _harmonic(u, "initial")
        if u["kind"] == "manufactured" and self.data["forcing"]["kind"] != "manufactured":
            raise ConfigError("manufactured initial data needs manufactured forcing")

    def to_dict(self):
        return copy.deepcopy(self.data)

    # --- builders --------------------------------------------------------

    def kernel(self):
        return parse_kernel_spec(self.data["kernel"])

    def params(self):
        return PhysicalParams(self.nu, self.omega)

    def scheme_config(self):
        return SchemeConfig(self.data["scheme"], self.tau, self.T)

    def point_set(self):
        pts = self.data["points"]
        if pts["file"] is not None:
            return load_points(self.resolve_path(pts["file"]))
        seed = self.seed if pts["seed"] is None else int(pts["seed"])
        return generate_points(pts["kind"], int(pts["n"]), seed=seed)

    def manufactured(self):
        f = {"l": 1, "m": 1, "amplitude": 1.0, "rate": None, **self.data["forcing"]}
        return ManufacturedProblem(self.params(), _harmonic(f, "forcing"),
                                   float(f["amplitude"]), f["rate"])

    def forcing(self, ps):
        f = self.data["forcing"]
        kind = f["kind"]
        if kind == "benchmark_gamma_y30":
            return BenchmarkForcing(float(f.get("amplitude", 1.0)))
        if kind == "zero":
            return ZeroForcing()
        if kind == "harmonic":
            return HarmonicForcing(_harmonic(f, "forcing"), f.get("family", "div"),
                                   float(f.get("amplitude", 1.0)))
        if kind == "manufactured":
            return self.manufactured().as_forcing()
        try:
            return NodalCsvForcing(self.resolve_path(f["path"]), len(ps))
        except OSError as exc:
            raise ConfigError(f"custom forcing: {exc}") from None

    def initial_velocity(self, ps):
        """Nodal initial velocity as a :class:`NodalField`."""
        u = self.data["initial"]
        kind = u["kind"]
        if kind == "zero":
            return NodalField.zeros(ps)
        if kind == "manufactured":
            return NodalField(ps, self.manufactured().velocity(0.0, ps.points))
        if kind == "harmonic":
            family = div_free_harmonic if u.get("family", "div") == "div" else curl_free_harmonic
            values = float(u.get("amplitude", 1.0)) * family(_harmonic(u, "initial"))(ps.points)
            return NodalField(ps, values)
        p = random_streamfunction(int(u.get("max_degree", 19)), seed=self.seed)
        values = surface_curl_field(p)(ps.points)
        norm = u.get("norm", 1.0)
        if norm is not None:
            values *= float(norm) / discrete_l2_norm(values)
        return NodalField(ps, values, project=True)


def load_config(path, full_scale=False, overrides=None):
    """Read a YAML config file; relative paths resolve against its directory.

    A ``metadata.json`` written by a run is accepted as well (JSON is YAML).
    """
    try:
        with open(path) as fh:
            mapping = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if "command" in mapping and isinstance(mapping.get("config"), dict):
        mapping = mapping["config"]  # metadata.json of an earlier run
    mapping.update(overrides or {})
    return RunConfig.from_dict(mapping, os.path.dirname(os.path.abspath(path)), full_scale)
