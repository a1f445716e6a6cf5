import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sphere_nse.checkpoint import HEADER_KEYS, read_checkpoint, write_checkpoint
from sphere_nse.config import RunConfig
from sphere_nse.errors import FormatError
from sphere_nse.pde import NSEOperators
from sphere_nse.timestepping import SolverState


@pytest.fixture(scope="module")
def state_and_config():
    cfg = RunConfig.from_dict({"points": {"kind": "fibonacci", "n": 50}, "seed": 7})
    ps = cfg.point_set()
    alpha = np.random.default_rng(0).standard_normal(2 * len(ps))
    state = SolverState(NSEOperators(ps, cfg.kernel()), alpha, t=1.25, step=125, t0=0.5)
    return state, cfg


def test_round_trip_is_bitwise(tmp_path, state_and_config):
    state, cfg = state_and_config
    path = write_checkpoint(tmp_path / "c.json", state, cfg)
    header, mapping, alpha, points = read_checkpoint(path)
    assert set(HEADER_KEYS) <= header.keys()
    assert (header["t"], header["t0"], header["step"], header["N"]) == (1.25, 0.5, 125, 50)
    assert header["seed"] == 7 and header["kernel"] == "wendland4:eps=1" and header["eps"] == 1.0
    assert mapping == cfg.to_dict()
    assert_allclose(alpha, state.alpha, rtol=0, atol=0)
    assert_allclose(points, state.ops.ps.points, rtol=0, atol=0)
    assert not (tmp_path / "c.json.tmp").exists()


def _rewrite(path, edit):
    doc = json.loads(path.read_text())
    edit(doc)
    path.write_text(json.dumps(doc))


@pytest.mark.parametrize("edit", [
    lambda d: d.pop("alpha"),
    lambda d: d["header"].pop("step"),
    lambda d: d["header"].update(version=99),
    lambda d: d.update(alpha="!!not base64!!"),
    lambda d: d["header"].update(N=51),
])
def test_corrupt_files_rejected(tmp_path, state_and_config, edit):
    state, cfg = state_and_config
    path = write_checkpoint(tmp_path / "c.json", state, cfg)
    _rewrite(path, edit)
    with pytest.raises(FormatError):
        read_checkpoint(path)


def test_not_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("hello")
    with pytest.raises(FormatError):
        read_checkpoint(path)
