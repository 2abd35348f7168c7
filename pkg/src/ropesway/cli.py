"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 integration failure,
4 I/O failure, 5 failed verification checks.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import RunConfig, load_emitted, parse_assignments, parse_config
from .control import MODES
from .errors import ConfigurationError, IntegrationError
from .sim import SimResult, run_scenario
from .svg import line_chart
from .verify import run_checks

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4, 5
DEFAULT_OUT = "ropesway-out"
OUT_ENV = "ROPESWAY_OUT"

log = logging.getLogger("ropesway")


def write_atomic(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file to a temporary name first, then rename them all."""
    out_dir.mkdir(parents=True, exist_ok=True)
    umask = os.umask(0)
    os.umask(umask)
    staged: list[tuple[str, Path]] = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            staged.append((tmp, out_dir / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o666 & ~umask)
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def format_summary(cfg: RunConfig, summary: dict[str, float]) -> str:
    head = {
        "scenario": cfg.scenario.name,
        "controller": cfg.controller.mode,
        "modes": cfg.sim.modes,
        "seed": cfg.run.seed,
        "probe_y": cfg.sim.probe_y,
    }
    lines = [f"{k} = {v}" for k, v in head.items()]
    lines += [f"{k} = {v:.10g}" for k, v in summary.items()]
    return "\n".join(lines) + "\n"


def render_outputs(cfg: RunConfig, res: SimResult) -> dict[str, str]:
    return {
        "result.csv": res.to_csv(),
        "summary.txt": format_summary(cfg, res.summary()),
        "config.txt": cfg.emit(),
        "sway.svg": line_chart(res.t, {f"sway y={res.probe_y:g} m": res.sway},
                               "Rope sway", "t [s]", "sway [m]"),
        "U.svg": line_chart(res.t, {"U applied": res.U_app, "U commanded": res.U_cmd},
                            "Damper coefficient", "t [s]", "U [N s/m]"),
    }


def resolve_out(args, cfg: RunConfig) -> Path:
    return Path(args.out or cfg.run.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def build_config(args) -> RunConfig:
    overrides: dict[str, object] = parse_assignments(args.set or [])
    if args.controller:
        overrides["controller.mode"] = args.controller
    if args.modes is not None:
        overrides["sim.modes"] = args.modes
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.dt is not None:
        overrides["sim.dt"] = args.dt
        # a coarse step also coarsens the control period unless it is set explicitly
        if "sim.control_period" not in overrides:
            cfg = parse_config(args.config, args.scenario, {k: v for k, v in overrides.items()
                                                           if k != "sim.dt"})
            if cfg.sim.control_period < args.dt:
                overrides["sim.control_period"] = args.dt
    return parse_config(args.config, args.scenario, overrides)


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    res = run_scenario(cfg.to_sim_config())
    files = render_outputs(cfg, res)
    out = resolve_out(args, cfg)
    write_atomic(out, files)
    sys.stdout.write(files["summary.txt"])
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = build_config(args)
    results = run_checks(cfg.to_sim_config())
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


def _sweep_worker(job: tuple[str, str]) -> tuple[int, dict[str, float] | str]:
    text, out_dir = job
    try:
        cfg = load_emitted(text)
        res = run_scenario(cfg.to_sim_config())
        write_atomic(Path(out_dir), render_outputs(cfg, res))
        return EXIT_OK, res.summary()
    except ConfigurationError as exc:
        return EXIT_CONFIG, str(exc)
    except IntegrationError as exc:
        return EXIT_INTEGRATION, str(exc)
    except OSError as exc:
        return EXIT_IO, str(exc)


def parse_grid(items: Sequence[str]) -> dict[str, list[str]]:
    grid: dict[str, list[str]] = {}
    for key, value in parse_assignments(items).items():
        if key in ("sensor.positions", "scenario.q0", "scenario.qd0"):
            raise ConfigurationError("list-valued keys cannot be swept", key=key)
        grid[key] = [v.strip() for v in value.split(",") if v.strip()]
        if not grid[key]:
            raise ConfigurationError("no values given", key=key)
    return grid


def cmd_sweep(args) -> int:
    base = build_config(args)
    grid = parse_grid(args.grid or [])
    keys = list(grid)
    combos = list(itertools.product(*grid.values())) if keys else [()]
    configs = [base.with_overrides(dict(zip(keys, combo))).validate() for combo in combos]
    out = resolve_out(args, base)
    jobs = [(c.emit(), str(out / f"run_{i:03d}")) for i, c in enumerate(configs)]
    if args.jobs == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs))

    metric_names = ["peak_sway", "steady_max", "peak_U_cmd", "peak_U", "V_decay_ratio"]
    rows = [",".join(["run"] + keys + ["status"] + metric_names)]
    worst = EXIT_OK
    for i, (combo, (code, payload)) in enumerate(zip(combos, results)):
        metrics = ([f"{payload[m]:.10g}" for m in metric_names] if code == EXIT_OK
                   else [""] * len(metric_names))
        rows.append(",".join([f"run_{i:03d}", *combo, str(code), *metrics]))
        if code != EXIT_OK:
            print(f"run_{i:03d}: exit {code}: {payload}", file=sys.stderr)
            worst = max(worst, code)
    write_atomic(out, {"sweep.csv": "\n".join(rows) + "\n"})
    print("\n".join(rows))
    return worst


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="key=value configuration file")
    common.add_argument("--scenario", choices=("impulse", "sustained", "zero", "custom"),
                        help="preset applied before the config file (default impulse)")
    common.add_argument("--controller", choices=MODES)
    common.add_argument("--modes", type=int, metavar="N", help="plant mode count")
    common.add_argument("--dt", type=float, help="integration step [s]")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR",
                        help=f"output directory (fallback ${OUT_ENV}, then ./{DEFAULT_OUT})")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key, e.g. rope.l_dp=3 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ropesway", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one scenario and write results")
    sub.add_parser("verify", parents=[common], help="run the self-check table")
    sw = sub.add_parser("sweep", parents=[common], help="run a parameter grid in parallel")
    sw.add_argument("--grid", action="append", metavar="KEY=V1,V2,...",
                    help="swept key and its values (repeatable; cartesian product)")
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    return parser


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
