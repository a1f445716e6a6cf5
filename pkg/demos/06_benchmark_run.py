"""A short stretch of the rotating, forced benchmark.

The full run is ``sphere-nse nse-run --config demos/benchmark.yaml``; it
integrates to t=60 and writes diagnostics, snapshots and checkpoints.
Here we integrate to t=5 on 400 Fibonacci nodes and print the
kinetic-energy and pressure norms. Energy grows while the forcing spins
up the y_{3,0} jet.
"""

from sphere_nse.config import RunConfig
from sphere_nse.pde import NSEOperators
from sphere_nse.timestepping import init_state, run

cfg = RunConfig.from_dict({"points": {"kind": "fibonacci", "n": 400}, "T": 5.0})
ps = cfg.point_set()
state = init_state(NSEOperators(ps, cfg.kernel()), cfg.initial_velocity(ps))
_, diags = run(state, cfg.scheme_config(), cfg.params(), cfg.forcing(ps), sample_interval=0.5)
for d in diags:
    print(f"t={d.t:5.2f}  e_u={d.e_u:.5f}  e_p={d.e_p:.5f}")
