"""Command-line driver: ``sphere-nse <subcommand>``.

Subcommands
-----------
pointgen          generate a node set and write it as ``x y z`` rows
interp-conv       interpolation convergence table
helmholtz-conv    Ritz projection convergence table
nse-run           Navier-Stokes run from a YAML config
nse-manufactured  spatial and temporal tables for the manufactured problem
resume            continue an ``nse-run`` from a checkpoint

Exit codes: 0 success, 2 invalid configuration or arguments, 3 blow-up
(a checkpoint of the last finite state is written), 4 I/O error.
The ``SPHERE_NSE_THREADS`` environment variable caps BLAS threads.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .checkpoint import read_checkpoint, write_checkpoint
from .config import RunConfig, load_config
from .errors import BlowUpError, ConfigError, DomainError, FormatError
from .fields import write_snapshot_csv, write_snapshot_json
from .geometry import POINT_KINDS, PointSet, generate_points, save_points
from .pde import NSEOperators
from .studies import (
    DEFAULT_N_LADDER, INTERP_METHODS, helmholtz_study, interpolation_study,
    manufactured_spatial_study, manufactured_temporal_study,
)
from .timestepping import SCHEMES, SolverState, init_state, run

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "SPHERE_NSE_THREADS"
DIAGNOSTICS_COLUMNS = ("t", "e_u", "e_p", "wall_ms")

log = logging.getLogger("sphere_nse")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- gnuplot scripts -----------------------------------------------------------

def _gnuplot_table(path, csv_name, x_col, y_cols, x_label, title):
    plots = ", ".join(f"'{csv_name}' using '{x_col}':'{c}' with linespoints title '{c}'"
                      for c in y_cols)
    with open(path, "w") as fh:
        fh.write(f"set datafile separator ','\nset logscale xy\nset key autotitle columnhead\n"
                 f"set xlabel '{x_label}'\nset ylabel 'error'\nset title '{title}'\n"
                 f"set terminal pngcairo size 800,600\n"
                 f"set output '{os.path.splitext(csv_name)[0]}.png'\nplot {plots}\n")


def _gnuplot_run(out_dir, snapshot_names):
    with open(os.path.join(out_dir, "plot_diagnostics.gp"), "w") as fh:
        fh.write("set datafile separator ','\nset xlabel 't'\n"
                 "set terminal pngcairo size 900,600\nset output 'diagnostics.png'\n"
                 "plot 'diagnostics.csv' using 't':'e_u' with lines title 'e_u', "
                 "'' using 't':'e_p' with lines title 'e_p'\n")
    # orthographic view of the northern hemisphere, presentation only
    with open(os.path.join(out_dir, "plot_snapshots.gp"), "w") as fh:
        fh.write("set datafile separator ','\nset size ratio -1\nunset key\n"
                 "set terminal pngcairo size 700,700\n")
        for name in snapshot_names:
            stem = os.path.splitext(name)[0]
            fh.write(f"set output '{stem}.png'\nset title '{stem}'\n"
                     f"plot 'snapshots/{name}' every ::1 using ($3>0?$1:1/0):2:($4*0.05):($5*0.05) "
                     f"with vectors head size 0.01,20\n")


# --- subcommands -----------------------------------------------------------------

def cmd_pointgen(args):
    ps = generate_points(args.kind, args.n, seed=args.seed)
    h = ps.fill_distance()
    q = ps.min_separation()
    comment = f"kind={args.kind} n={args.n} seed={args.seed}\nfill_distance={h!r} min_separation={q!r}"
    save_points(ps, args.out, comment=comment)
    print(f"wrote {args.n} {args.kind} points to {args.out}: fill distance {h:.6g}, "
          f"min separation {q:.6g}")
    return EXIT_OK


def _emit_table(table, args, name, x_label, title):
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{name}.csv")
    table.write_csv(path)
    _write_json(os.path.join(args.out, f"{name}.json"),
                {"meta": table.meta, "columns": list(table.columns), "rows": table.rows,
                 "order": table.order, "flag": table.flag, "monotone": table.monotone})
    if args.gnuplot:
        err_cols = [c for c in table.columns if c.endswith("error")]
        _gnuplot_table(os.path.join(args.out, f"plot_{name}.gp"), f"{name}.csv",
                       table.x_column, err_cols, x_label, title)
    print(table.format())
    print(f"table written to {path}")


def cmd_interp_conv(args):
    table = interpolation_study(args.kernel, args.target, args.n_list, args.method,
                                args.point_kind, args.seed)
    _emit_table(table, args, "interp_convergence", "h", f"interpolation {args.target}")
    return EXIT_OK


def cmd_helmholtz_conv(args):
    table = helmholtz_study(args.kernel, args.target, args.n_list, args.point_kind, args.seed)
    _emit_table(table, args, "helmholtz_convergence", "h", f"Ritz projection {args.target}")
    return EXIT_OK


def cmd_nse_manufactured(args):
    for omega in args.omegas:
        table = manufactured_spatial_study(args.kernel, args.n_list, args.nu, omega,
                                           args.tau, args.T, "imex_rk3", args.point_kind)
        _emit_table(table, args, f"spatial_omega{omega:g}", "h", f"spatial error, omega={omega:g}")
    for scheme in args.schemes:
        table = manufactured_temporal_study(args.kernel, args.n_temporal, args.taus, args.nu,
                                            args.omegas[0], args.T, scheme,
                                            point_kind=args.point_kind)
        _emit_table(table, args, f"temporal_{scheme}", "tau", f"temporal error, {scheme}")
    return EXIT_OK


class RunWriter:
    """Streams diagnostics, snapshots and checkpoints of one run to disk."""

    def __init__(self, cfg, out_dir, resume_from=None):
        self.cfg = cfg
        self.out = out_dir
        os.makedirs(os.path.join(out_dir, "snapshots"), exist_ok=True)
        os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)
        self.diag_path = os.path.join(out_dir, "diagnostics.csv")
        rows = []
        if resume_from is not None and os.path.exists(self.diag_path):
            with open(self.diag_path, newline="") as fh:
                rows = [r for r in list(csv.reader(fh))[1:] if float(r[0]) < resume_from - 1e-12]
        self._fh = open(self.diag_path, "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow(DIAGNOSTICS_COLUMNS)
        self._csv.writerows(rows)
        self._fh.flush()
        self.snapshot_names = []
        self.next_checkpoint = None

    def close(self):
        self._fh.close()

    def on_sample(self, d, state):
        self._csv.writerow([repr(float(d.t)), repr(float(d.e_u)), repr(float(d.e_p)),
                            f"{d.wall_ms:.3f}"])
        self._fh.flush()
        log.info("t=%.4f e_u=%.6g e_p=%.6g", d.t, d.e_u, d.e_p)

    def on_snapshot(self, state, params, forcing):
        ops = state.ops
        ops.rhs(state.alpha, state.t, params, forcing)
        p = ops.pressure_nodes(state.t)
        u = state.velocity_nodes()
        stem = f"snapshot_t{state.t:08.3f}"
        meta = {"t": state.t, "kernel": self.cfg.data["kernel"], "eps": ops.zonal.eps,
                "nu": self.cfg.nu, "omega": self.cfg.omega}
        if self.cfg.data["snapshot_format"] == "json":
            name = stem + ".json"
            write_snapshot_json(os.path.join(self.out, "snapshots", name), ops.ps, u, p, meta)
        else:
            name = stem + ".csv"
            write_snapshot_csv(os.path.join(self.out, "snapshots", name), ops.ps, u, p)
        self.snapshot_names.append(name)

    def checkpoint(self, state, name):
        path = os.path.join(self.out, "checkpoints", name)
        write_checkpoint(path, state, self.cfg)
        return path

    def on_step(self, state):
        interval = self.cfg.checkpoint_interval
        if self.next_checkpoint is None:
            self.next_checkpoint = (np.floor(state.t0 / interval + 1e-9) + 1) * interval
        if state.t >= self.next_checkpoint - 1e-9 * max(1.0, self.next_checkpoint):
            self.checkpoint(state, f"checkpoint_t{state.t:08.3f}.json")
            self.next_checkpoint += interval


def _metadata(cfg, ps, command, status, extra=None):
    doc = {
        "command": command,
        "version": __version__,
        "status": status,
        "config": cfg.to_dict(),
        "n_points": len(ps),
        "min_separation": ps.min_separation(),
    }
    doc.update(extra or {})
    return doc


def _execute(cfg, state, out_dir, command, resume_from=None, gnuplot=False):
    params, forcing = cfg.params(), cfg.forcing(state.ops.ps)
    writer = RunWriter(cfg, out_dir, resume_from)
    meta_path = os.path.join(out_dir, "metadata.json")
    _write_json(meta_path, _metadata(cfg, state.ops.ps, command, "running"))
    every = max(1, int(round(cfg.sample_interval / cfg.tau)))
    snaps = [s for s in cfg.snapshot_times
             if resume_from is None or s > resume_from + 1e-9 * max(1.0, s)]
    start = time.perf_counter()
    try:
        final, _ = run(state, cfg.scheme_config(), params, forcing, cfg.T,
                       sample_interval=cfg.sample_interval, snapshot_times=snaps,
                       on_snapshot=lambda s: writer.on_snapshot(s, params, forcing),
                       on_sample=writer.on_sample, on_step=writer.on_step,
                       sample_start=resume_from is None or state.step % every == 0)
    except BlowUpError as exc:
        ckpt = writer.checkpoint(exc.last_state, "checkpoint_blowup.json")
        writer.close()
        _write_json(meta_path, _metadata(cfg, state.ops.ps, command, "blowup",
                                         {"message": str(exc), "checkpoint": ckpt}))
        print(f"blow-up: {exc}; last finite state written to {ckpt}", file=sys.stderr)
        return EXIT_BLOWUP
    ckpt = writer.checkpoint(final, "checkpoint_final.json")
    writer.close()
    if gnuplot:
        _gnuplot_run(out_dir, writer.snapshot_names)
    _write_json(meta_path, _metadata(cfg, state.ops.ps, command, "completed", {
        "final_time": final.t, "steps": final.step, "checkpoint": ckpt,
        "wall_seconds": time.perf_counter() - start,
        "factorizations": final.ops.factorization_count}))
    print(f"run completed at t={final.t:g} after {final.step} steps; outputs in {out_dir}")
    return EXIT_OK


def _load_run_config(args):
    overrides = {}
    if args.output:
        overrides["output"] = args.output
    if args.T is not None:
        overrides["T"] = args.T
    if args.config is None:
        return RunConfig.from_dict(overrides, full_scale=args.full_scale)
    cfg = load_config(args.config, full_scale=args.full_scale)
    mapping = cfg.to_dict()
    mapping.update(overrides)
    return RunConfig.from_dict(mapping, cfg.base_dir, full_scale=args.full_scale)


def cmd_nse_run(args):
    cfg = _load_run_config(args)
    ps = cfg.point_set()
    ops = NSEOperators(ps, cfg.kernel())
    state = init_state(ops, cfg.initial_velocity(ps))
    out_dir = cfg.output
    os.makedirs(out_dir, exist_ok=True)
    return _execute(cfg, state, out_dir, "nse-run", gnuplot=args.gnuplot)


def cmd_resume(args):
    header, mapping, alpha, points = read_checkpoint(args.checkpoint)
    if args.output:
        mapping["output"] = args.output
    if args.T is not None:
        mapping["T"] = args.T
    cfg = RunConfig.from_dict(mapping)
    if float(header["t"]) > cfg.T + 1e-12 * max(1.0, cfg.T):
        raise ConfigError(f"checkpoint time {header['t']} lies beyond T={cfg.T}")
    ps = PointSet(points)
    ops = NSEOperators(ps, cfg.kernel())
    state = SolverState(ops, alpha, t=float(header["t"]), step=int(header["step"]),
                        t0=float(header["t0"]))
    os.makedirs(cfg.output, exist_ok=True)
    return _execute(cfg, state, cfg.output, "resume", resume_from=state.t,
                    gnuplot=args.gnuplot)


# --- parser --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="sphere-nse", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("pointgen", help="generate a node set")
    g.add_argument("--kind", choices=POINT_KINDS, default="riesz_minimized")
    g.add_argument("-n", "--n", type=int, default=400)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", required=True, help="output point file")
    g.set_defaults(func=cmd_pointgen)

    def study(name, func, help_text, default_kernel):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--kernel", default=default_kernel, help="e.g. wendland2:eps=1")
        s.add_argument("--target", default="y3,0", help="e.g. y3,0 or y2,1+z2,1")
        s.add_argument("--n-list", type=_int_list, default=list(DEFAULT_N_LADDER))
        s.add_argument("--point-kind", choices=POINT_KINDS, default="fibonacci")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("-o", "--out", default=f"runs/{name}")
        s.add_argument("--gnuplot", action="store_true", help="also write gnuplot scripts")
        s.set_defaults(func=func)
        return s

    s = study("interp-conv", cmd_interp_conv, "interpolation convergence", "wendland2:eps=1")
    s.add_argument("--method", choices=INTERP_METHODS, default=None)
    study("helmholtz-conv", cmd_helmholtz_conv, "Ritz projection convergence", "wendland4:eps=1")

    m = sub.add_parser("nse-manufactured", help="manufactured-solution convergence tables")
    m.add_argument("--kernel", default="wendland4:eps=1")
    m.add_argument("--n-list", type=_int_list, default=list(DEFAULT_N_LADDER))
    m.add_argument("--nu", type=float, default=0.01)
    m.add_argument("--omegas", type=_float_list, default=[0.0, 1.0])
    m.add_argument("--tau", type=float, default=1e-4, help="time step of the spatial study")
    m.add_argument("--T", type=float, default=0.5)
    m.add_argument("--n-temporal", type=int, default=400)
    m.add_argument("--taus", type=_float_list, default=[1e-2, 5e-3, 2.5e-3])
    m.add_argument("--schemes", nargs="+", choices=SCHEMES,
                   default=["imex_rk3", "semi_implicit_euler"])
    m.add_argument("--point-kind", choices=POINT_KINDS, default="fibonacci")
    m.add_argument("-o", "--out", default="runs/nse-manufactured")
    m.add_argument("--gnuplot", action="store_true")
    m.set_defaults(func=cmd_nse_manufactured)

    r = sub.add_parser("nse-run", help="Navier-Stokes run (benchmark defaults)")
    r.add_argument("--config", help="YAML config; metadata.json of a previous run also works")
    r.add_argument("--full-scale", action="store_true", help="use N=2500 nodes")
    r.add_argument("-o", "--output", help="output directory (overrides the config)")
    r.add_argument("--T", type=float, default=None, help="final time (overrides the config)")
    r.add_argument("--gnuplot", action="store_true")
    r.set_defaults(func=cmd_nse_run)

    c = sub.add_parser("resume", help="continue a run from a checkpoint")
    c.add_argument("checkpoint")
    c.add_argument("-o", "--output", help="output directory (default: the original one)")
    c.add_argument("--T", type=float, default=None, help="new final time")
    c.add_argument("--gnuplot", action="store_true")
    c.set_defaults(func=cmd_resume)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    threads = os.environ.get(THREADS_ENV)
    try:
        limit = int(threads) if threads else None
        if limit is not None and limit < 1:
            raise ValueError
    except ValueError:
        print(f"error: {THREADS_ENV} must be a positive integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=limit):
            return args.func(args)
    except (ConfigError, DomainError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
