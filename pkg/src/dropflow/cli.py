"""Command-line driver: run scenes, evaluate field grids, run benchmarks.

Subcommands:
  run <scene.json>          march a scene to steady state (or t_max), writing
                            snapshots, a diagnostics log, optional velocity
                            field grids, and a benchmark record
  field <snapshot> <grid>   velocity field on a rectangular grid around a
                            saved snapshot; grid spec "NXxNY:x0:x1:y0:y1"
  bench <preset>            build a preset scene, run it, print the record

Exit codes: 0 success, 1 scene/input validation failure, 2 numerical failure
(step-size underflow or solver non-convergence).
"""

from __future__ import annotations

import argparse
import os
import sys


def _parse_gridspec(spec: str):
    try:
        shape, *bounds = spec.split(":")
        nx, ny = shape.lower().split("x")
        b = [float(v) for v in bounds]
        if len(b) != 4:
            raise ValueError
        return int(nx), int(ny), b
    except ValueError:
        raise ValueError(
            f"bad grid spec {spec!r}; expected NXxNY:xmin:xmax:ymin:ymax")


def _apply_threads(n: int | None):
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dropflow",
                                description="2D viscous drop simulator")
    p.add_argument("--threads", type=int, default=None,
                   help="thread count hint for numerical backends "
                        "(set before heavy imports)")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a scene file")
    pr.add_argument("scene", help="scene JSON file")
    pr.add_argument("--rk-tol", type=float, default=None)
    pr.add_argument("--gmres-tol", type=float, default=None)
    pr.add_argument("--out-dir", default=None)
    pr.add_argument("--t-max", type=float, default=None)
    pr.add_argument("--resume", default=None, metavar="SNAPSHOT",
                    help="continue from a snapshot instead of the initial curves")
    pr.add_argument("--no-special-quad", action="store_true",
                    help="disable near-singular corrections (diagnostics only)")

    pf = sub.add_parser("field", help="velocity field on a grid")
    pf.add_argument("snapshot")
    pf.add_argument("gridspec", help="NXxNY:xmin:xmax:ymin:ymax")
    pf.add_argument("--out", default=None)
    pf.add_argument("--gmres-tol", type=float, default=1e-10)
    pf.add_argument("--no-special-quad", action="store_true")

    pb = sub.add_parser("bench", help="run a preset benchmark")
    pb.add_argument("preset", help="flower | cshape | swissroll | circle | ellipse")
    pb.add_argument("--lambda", dest="lambdas", default=None,
                    help="viscosity ratio(s), comma separated per drop")
    pb.add_argument("--n", type=int, default=None, help="points on the main drop")
    pb.add_argument("--rk-tol", type=float, default=None)
    pb.add_argument("--gmres-tol", type=float, default=None)
    pb.add_argument("--t-max", type=float, default=None)
    pb.add_argument("--out-dir", default=None)
    pb.add_argument("--no-special-quad", action="store_true")
    return p


def cmd_run(args) -> int:
    from . import scenes, snapshots
    from .bie_core import GMRESError
    from .dynamics import TimeStepError, run_to_steady

    config = scenes.load_scene(args.scene)
    if args.rk_tol is not None:
        config.opts.rk_tol = args.rk_tol
    if args.gmres_tol is not None:
        config.opts.gmres_tol = args.gmres_tol
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.t_max is not None:
        config.t_max = args.t_max
    if args.no_special_quad:
        config.opts.use_special_quad = False
    if args.resume:
        state = snapshots.read_snapshot(args.resume)
    else:
        state = scenes.build_state(config)
    os.makedirs(config.out_dir, exist_ok=True)
    return _drive(state, config)


def _emit_field_file(state, config, path, opts):
    import numpy as np

    from . import bie_core as bie, grids, geometry as geo, snapshots, spectral as sp
    from . import special_quad as sq, velocity_eval as vel

    doubled = [geo.DropBoundary(sp.resample_periodic(b.markers, 2 * b.n),
                                lam=b.lam, initial_spacing=1.0)
               for b in state.boundaries]
    grid = grids.build_panel_grid(doubled)
    coeffs = bie.MaterialCoefficients.from_grid(grid)
    plan = (sq.build_plan(grid, grid.tau, target_nodes=True, tol=opts.sq_tol)
            if opts.use_special_quad else sq.SpecialQuadPlan())
    dens, _, _ = bie.solve_density(grid, coeffs, plan, tol=opts.gmres_tol)
    pts = config.field_grid.points()
    dist = np.min(np.abs(pts[:, None] - grid.tau[None, :]), axis=1) \
        if grid.n_nodes * pts.size <= 5_000_000 else _min_dist_chunked(pts, grid.tau)
    ok = dist > 1e-12
    if opts.use_special_quad:
        # A grid point can land on the interface between nodes; flag and
        # drop such points, then rebuild the plan for the survivors.
        probe = sq.build_plan(grid, pts[ok], target_nodes=False,
                              tol=opts.sq_tol, on_panel="skip")
        if probe.on_panel_targets.size:
            bad = np.zeros(int(np.sum(ok)), dtype=bool)
            bad[probe.on_panel_targets] = True
            ok[np.nonzero(ok)[0][bad]] = False
            fplan = sq.build_plan(grid, pts[ok], target_nodes=False,
                                  tol=opts.sq_tol)
        else:
            fplan = probe
    else:
        fplan = sq.SpecialQuadPlan()
    field = vel.field_velocity(dens.omega, grid, pts[ok], plan=fplan)
    g = config.field_grid
    snapshots.write_field(
        path, field.points, field.u, state.t,
        grid_meta=dict(nx=g.nx, ny=g.ny, xmin=g.xmin, xmax=g.xmax,
                       ymin=g.ymin, ymax=g.ymax),
        skipped=pts[~ok])
    return path


def _min_dist_chunked(pts, tau):
    import numpy as np
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], 2048):
        out[lo:lo + 2048] = np.min(
            np.abs(pts[lo:lo + 2048, None] - tau[None, :]), axis=1)
    return out


def _drive(state, config) -> int:
    import numpy as np

    from . import snapshots
    from .bie_core import GMRESError
    from .dynamics import TimeStepError, run_to_steady
    from .scenes import SceneError

    out = config.out_dir
    diag = snapshots.DiagnosticsLog(os.path.join(out, "diag.txt"),
                                    len(state.boundaries))
    snap_idx = [0]
    next_snap = [state.t]
    field_times = sorted(config.field_grid.times) if config.field_grid else []
    field_left = [t for t in field_times if t >= state.t]
    field_idx = [0]

    def emit_snapshot():
        path = snapshots.snapshot_path(out, snap_idx[0])
        snapshots.write_snapshot(path, state)
        snap_idx[0] += 1
        # Drop solver caches and the regrid reference so a run resumed from
        # this file and the uninterrupted run continue from identical
        # information.
        state._fsal = None
        state._omega_cache.clear()
        state._chord_ref.clear()
        return path

    def maybe_field():
        while field_left and state.t >= field_left[0] - 1e-12:
            field_left.pop(0)
            path = os.path.join(out, f"field_{field_idx[0]:03d}.txt")
            _emit_field_file(state, config, path, config.opts)
            field_idx[0] += 1

    def next_threshold(t):
        # Absolute cadence (multiples of the interval): a resumed run and the
        # uninterrupted one write snapshots, and flush solver caches, at the
        # same thresholds, which keeps their trajectories bit-identical.
        k = int(np.floor(t / config.snapshot_interval + 1e-9)) + 1
        return k * config.snapshot_interval

    emit_snapshot()
    next_snap[0] = next_threshold(state.t)
    maybe_field()

    def on_step(st, used):
        diag.append(st, used)
        if st.t >= next_snap[0] - 1e-12:
            emit_snapshot()
            next_snap[0] = next_threshold(st.t)
        maybe_field()

    try:
        result = run_to_steady(state, opts=config.opts, t_max=config.t_max,
                               on_step=on_step)
    except (TimeStepError, GMRESError) as e:
        diag.close()
        emit_snapshot()
        print(f"dropflow: numerical failure: {e}", file=sys.stderr)
        return 2
    diag.close()
    emit_snapshot()
    lambdas = [b.lam for b in state.boundaries]
    snapshots.write_benchmark(os.path.join(out, "benchmark.txt"), result,
                              lambdas, name=config.name,
                              time_scale=config.time_scale)
    if result.steady:
        print(f"steady at t={result.t_steady:.6g} "
              f"area_err={result.area_error:.3e}")
        for i, c in enumerate(result.centers):
            print(f"  drop {i}: center=({c.real:.7f}, {c.imag:.7f}) "
                  f"r_dev={result.r_devs[i]:.3e}")
    else:
        print(f"stopped at t={state.t:.6g} without reaching steady state "
              f"(area_err={result.area_error:.3e})")
    return 0


def cmd_field(args) -> int:
    from . import snapshots
    from .dynamics import SolverOptions
    from .scenes import FieldGridSpec

    nx, ny, b = _parse_gridspec(args.gridspec)
    state = snapshots.read_snapshot(args.snapshot)
    opts = SolverOptions(gmres_tol=args.gmres_tol,
                         use_special_quad=not args.no_special_quad)

    class _Cfg:
        field_grid = FieldGridSpec(nx=nx, ny=ny, xmin=b[0], xmax=b[1],
                                   ymin=b[2], ymax=b[3])

    out = args.out or (os.path.splitext(args.snapshot)[0] + "_field.txt")
    _emit_field_file(state, _Cfg, out, opts)
    print(out)
    return 0


def cmd_bench(args) -> int:
    import numpy as np

    from . import scenes
    from .dynamics import SolverOptions

    lam = None
    if args.lambdas:
        vals = [float(v) for v in args.lambdas.split(",")]
        lam = vals[0] if len(vals) == 1 else vals
    drops = scenes.preset_drops(args.preset, n=args.n, lam=lam)
    opts = SolverOptions()
    if args.rk_tol is not None:
        opts.rk_tol = args.rk_tol
    if args.gmres_tol is not None:
        opts.gmres_tol = args.gmres_tol
    if args.no_special_quad:
        opts.use_special_quad = False
    config = scenes.SceneConfig(
        drops=drops, opts=opts,
        out_dir=args.out_dir or f"bench_{args.preset}",
        t_max=args.t_max if args.t_max is not None else np.inf,
        name=args.preset)
    os.makedirs(config.out_dir, exist_ok=True)
    state = scenes.build_state(config)
    return _drive(state, config)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "field":
            return cmd_field(args)
        if args.command == "bench":
            return cmd_bench(args)
    except ValueError as e:
        print(f"dropflow: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"dropflow: {e}", file=sys.stderr)
        return 1
    parser.error("unknown command")
    return 1


if __name__ == "__main__":
    sys.exit(main())
