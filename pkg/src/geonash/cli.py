"""Command-line entry point.

Every option can come from the command line or from an INI config file
(``--config``); command-line values win. The config sections are::

    [run]        seed
    [env]        env, r_step, r_goal, relative_reward, max_steps
    [train]      episodes, gamma, explore_rate, alpha, adaptive, alpha_0,
                 alpha_min, alpha_max, window, env_alpha
    [tune]       grid_step, grid
    [simulate]   n_min, n_max, n_samples, t_max, reward, band, compare, workers
    [stability]  x_min, x_max, x_points, x

Each invocation writes ``<command>.manifest.json`` with the fully resolved
settings; ``geonash replay train.manifest.json --out DIR`` reruns it.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as dt
import json
import logging
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from . import __version__
from .env import EnvSpec, chain, geometric_chain, gridworld, run_training
from .errors import GeoNashError
from .geometry import alpha_to_theta
from .harness import (
    RewardModel,
    SweepConfig,
    convergence_report,
    export_csv,
    export_plot_data,
    generate_sweep,
    summarize,
)
from .metrics import episode_mean_rt, metric_report, n1_metric, n2_lenient
from .output import write_json, write_rows
from .stability import stability_report
from .tuner import AlphaSchedule, alpha_grid, epsilon_nash_search

log = logging.getLogger("geonash")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class UsageError(GeoNashError):
    pass


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _floats(text) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


@dataclass(frozen=True)
class Option:
    dest: str
    section: str
    type: Callable = str
    default: Any = None
    help: str = ""
    kind: str = "value"  # value | flag | append

    @property
    def flag(self) -> str:
        return "--" + self.dest.replace("_", "-")


ENV_OPTIONS = [
    Option("env", "env", str, "chain5", "environment preset: chain<N> or grid<W>x<H>"),
    Option("r_step", "env", float, 1.0, "reward for entering a non-terminal state"),
    Option("r_goal", "env", float, 10.0, "reward for entering a terminal state"),
    Option("relative_reward", "env", float, None,
           "chain only: grow rewards so every forward step has this relative reward"),
    Option("max_steps", "env", int, 1000, "step cap per episode"),
    Option("episodes", "train", int, 100, "episodes per training run"),
    Option("gamma", "train", float, 0.9, "discount factor in [0, 1)"),
    Option("explore_rate", "train", float, 0.1, "epsilon of the epsilon-greedy policy"),
]

COMMAND_OPTIONS = {
    "train": ENV_OPTIONS + [
        Option("alpha", "train", float, 0.1, "fixed learning rate in [0, 1]"),
        Option("adaptive", "train", _bool, False, "recompute alpha each episode", "flag"),
        Option("alpha_0", "train", float, 0.5, "adaptive: first-episode alpha"),
        Option("alpha_min", "train", float, 0.0, "adaptive: lower clamp"),
        Option("alpha_max", "train", float, 1.0, "adaptive: upper clamp"),
        Option("window", "train", int, None, "adaptive: trailing episodes (default all)"),
    ],
    "tune": ENV_OPTIONS + [
        Option("grid_step", "tune", float, 0.005, "spacing of the alpha grid"),
        Option("grid", "tune", str, None, "explicit comma-separated alpha grid"),
    ],
    "simulate": ENV_OPTIONS + [
        Option("n_min", "simulate", int, 1, "smallest episode count"),
        Option("n_max", "simulate", int, 10, "largest episode count"),
        Option("n_samples", "simulate", int, 10, "log-spaced episode counts"),
        Option("t_max", "simulate", int, 5, "episode lengths are drawn from 1..t_max"),
        Option("reward", "simulate", str, "uniform01", "uniform01 | constant:<c> | env"),
        Option("band", "simulate", float, 0.005, "tolerance around sqrt(1/2)"),
        Option("compare", "simulate", str, None, "extra ranges for the convergence report, e.g. 1:10,10000:100000"),
        Option("env_alpha", "train", float, 0.5, "env reward model: learning rate"),
        Option("workers", "simulate", int, 1, "threads evaluating sweep cells"),
    ],
    "stability": [
        Option("x_min", "stability", float, -1.0, "lower end of the x range"),
        Option("x_max", "stability", float, 8.0, "upper end of the x range"),
        Option("x_points", "stability", int, 901, "evenly spaced samples"),
        Option("x", "stability", float, None, "extra x value to sample (repeatable)", "append"),
    ],
    "report": [],
}

COMMON = [Option("seed", "run", int, 0, "master RNG seed")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geonash", description="Equilibrium learning-rate laboratory for tabular Q-learning."
    )
    parser.add_argument("--version", action="version", version=f"geonash {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in COMMAND_OPTIONS.items():
        p = sub.add_parser(name)
        for opt in COMMON + options:
            if opt.kind == "flag":
                p.add_argument(opt.flag, action="store_const", const=True, default=None, help=opt.help)
            elif opt.kind == "append":
                p.add_argument(opt.flag, action="append", type=opt.type, default=None, help=opt.help)
            else:
                p.add_argument(opt.flag, type=opt.type, default=None, help=opt.help)
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--quiet", action="store_true", help="only print warnings and errors")
    rp = sub.add_parser("replay", help="rerun an invocation from its manifest")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--out", type=Path, required=True)
    rp.add_argument("--quiet", action="store_true")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = configparser.ConfigParser()
    if args.config is not None:
        if not args.config.is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg.read(args.config)
    settings = {}
    for opt in COMMON + COMMAND_OPTIONS[args.command]:
        value = getattr(args, opt.dest)
        if value is None and cfg.has_option(opt.section, opt.dest):
            raw = cfg.get(opt.section, opt.dest)
            try:
                if opt.kind == "append":
                    value = _floats(raw)
                elif opt.kind == "flag":
                    value = _bool(raw)
                else:
                    value = opt.type(raw)
            except ValueError:
                raise UsageError(f"[{opt.section}] {opt.dest}: cannot parse {raw!r}") from None
        settings[opt.dest] = opt.default if value is None else value
    return settings


def _check(cond: bool, flag: str, message: str) -> None:
    if not cond:
        raise UsageError(f"{flag} {message}")


def env_from_settings(s: dict) -> EnvSpec:
    name = s["env"]
    common = {"max_steps": s["max_steps"], "r_step": s["r_step"]}
    _check(s["max_steps"] >= 1, "--max-steps", "must be a positive integer")
    if m := re.fullmatch(r"chain(\d+)", name):
        length = int(m.group(1))
        if s["relative_reward"] is not None:
            _check(0.0 <= s["relative_reward"] < 1.0, "--relative-reward", "must be in [0, 1)")
            return geometric_chain(length, s["relative_reward"], **common)
        return chain(length, r_goal=s["r_goal"], **common)
    if m := re.fullmatch(r"grid(\d+)x(\d+)", name):
        _check(s["relative_reward"] is None, "--relative-reward", "only applies to chain environments")
        return gridworld(int(m.group(1)), int(m.group(2)), r_goal=s["r_goal"], **common)
    raise UsageError(f"--env: unknown preset {name!r} (expected chain<N> or grid<W>x<H>)")


def _check_training(s: dict) -> None:
    _check(s["episodes"] >= 1, "--episodes", "must be >= 1")
    _check(0.0 <= s["gamma"] < 1.0, "--gamma", f"must be in [0, 1), got {s['gamma']}")
    _check(0.0 <= s["explore_rate"] <= 1.0, "--explore-rate", f"must be in [0, 1], got {s['explore_rate']}")


def cmd_train(s: dict, out: Path) -> list[Path]:
    spec = env_from_settings(s)
    _check_training(s)
    if s["adaptive"]:
        _check(0.0 <= s["alpha_0"] <= 1.0, "--alpha-0", f"must be in [0, 1], got {s['alpha_0']}")
        _check(0.0 <= s["alpha_min"] <= s["alpha_max"] <= 1.0, "--alpha-min/--alpha-max",
               "must satisfy 0 <= min <= max <= 1")
        _check(s["window"] is None or s["window"] >= 1, "--window", "must be >= 1")
        alpha = AlphaSchedule(s["alpha_0"], s["alpha_min"], s["alpha_max"], s["window"])
    else:
        _check(0.0 <= s["alpha"] <= 1.0, "--alpha", f"must be in [0, 1], got {s['alpha']}")
        alpha = s["alpha"]
    run = run_training(spec, s["episodes"], alpha, s["gamma"], s["explore_rate"], s["seed"])
    report = metric_report(run)
    log.info("n1 = %.6g, n2 = %s over %d episodes", report.n1, report.n2, run.n_episodes)

    episodes = [
        (i, len(ep), episode_mean_rt(ep.rewards), a)
        for i, (ep, a) in enumerate(zip(run.episodes, run.alphas))
    ]
    steps = [
        (i, t, st.state, st.action, st.reward, st.next_state, st.q_before, st.q_after, st.max_next_q)
        for i, ep in enumerate(run.episodes)
        for t, st in enumerate(ep.steps)
    ]
    return [
        write_json(out / "metrics.json", report.to_dict()),
        write_rows(out / "episodes.csv", ["episode", "T_i", "mean_Rt", "alpha_used"], episodes),
        write_rows(
            out / "steps.csv",
            ["episode", "t", "state", "action", "reward", "next_state", "q_before", "q_after", "max_next_q"],
            steps,
        ),
    ]


def cmd_tune(s: dict, out: Path) -> list[Path]:
    spec = env_from_settings(s)
    _check_training(s)
    if s["grid"] is not None:
        try:
            grid = _floats(s["grid"])
        except ValueError:
            raise UsageError(f"--grid: cannot parse {s['grid']!r}") from None
        step = None
    else:
        _check(0.0 < s["grid_step"] <= 1.0, "--grid-step", "must be in (0, 1]")
        grid, step = alpha_grid(s["grid_step"]), s["grid_step"]

    cache = {}

    def trained(a):
        if a not in cache:
            cache[a] = run_training(spec, s["episodes"], a, s["gamma"], s["explore_rate"], s["seed"])
        return cache[a]

    def n2_of(a):
        n2, _ = n2_lenient(trained(a).rewards)
        if n2 is None:
            raise UsageError(f"alpha={a}: no episode long enough for a relative reward")
        return n2

    est = epsilon_nash_search(lambda a: n1_metric(trained(a)), n2_of, grid, step)
    log.info("alpha* = %.6g (epsilon %.3g)", est.alpha_star, est.epsilon)
    summary = est.to_dict()
    summary["theta_star_deg"] = math.degrees(alpha_to_theta(est.alpha_star))
    return [
        write_json(out / "nash.json", summary),
        write_rows(out / "gaps.csv", ["alpha", "n1", "n2", "gap"], est.evaluations),
    ]


def _parse_ranges(text: str) -> list[tuple[int, int]]:
    ranges = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            lo, hi = part.split(":")
            ranges.append((int(lo), int(hi)))
        except ValueError:
            raise UsageError(f"--compare: bad range {part!r} (expected lo:hi)") from None
    return ranges


def cmd_simulate(s: dict, out: Path) -> list[Path]:
    model = RewardModel.parse(s["reward"])
    _check(0 <= s["seed"] < 2**64, "--seed", "must be a 64-bit unsigned integer")
    env, extra = None, {}
    if model.kind == "env":
        env = env_from_settings(s)
        _check_training(s)
        extra = dict(env=env, env_alpha=s["env_alpha"], env_gamma=s["gamma"], env_explore=s["explore_rate"])

    def config(lo, hi):
        return SweepConfig(lo, hi, s["n_samples"], s["t_max"], model, s["seed"], **extra)

    main = config(s["n_min"], s["n_max"])
    cells = generate_sweep(main, workers=s["workers"])
    summary = summarize(cells)
    configs = [config(lo, hi) for lo, hi in _parse_ranges(s["compare"] or "")] + [main]
    configs.sort(key=lambda c: (c.n_min, c.n_max))
    sweeps = [cells if c is main else generate_sweep(c, workers=s["workers"]) for c in configs]
    conv = convergence_report(configs, s["band"], sweeps)
    log.info(
        "median cell: N=%d T_i=%d alpha=%.6f mean_rt=%.6f",
        summary.median_cell.n, summary.median_cell.t_i, summary.median_cell.alpha, summary.median_cell.mean_rt,
    )
    doc = {"reward_model": str(model), **summary.to_dict(), "convergence_flags": {
        "spread": conv["ranges"][configs.index(main)]["spread"],
        "alpha_within_band": conv["ranges"][configs.index(main)]["alpha_within_band"],
        "band": s["band"],
    }}
    return [
        export_csv(cells, out / "sweep.csv"),
        write_json(out / "summary.json", doc),
        write_json(out / "convergence.json", conv),
        *export_plot_data(cells, out),
    ]


def cmd_stability(s: dict, out: Path) -> list[Path]:
    _check(s["x_points"] >= 2, "--x-points", "must be >= 2")
    _check(s["x_min"] < s["x_max"], "--x-min/--x-max", "need x_min < x_max")
    step = (s["x_max"] - s["x_min"]) / (s["x_points"] - 1)
    xs = [s["x_min"] + k * step for k in range(s["x_points"])] + list(s["x"] or [])
    rep = stability_report(xs)
    return [
        write_rows(out / "stability.csv", ["x", "ratio"], rep.samples),
        write_json(out / "stability.json", rep.to_dict()),
    ]


REPORT_SOURCES = ("metrics.json", "nash.json", "summary.json", "convergence.json", "stability.json")


def cmd_report(s: dict, out: Path) -> list[Path]:
    """Collect the JSON results already present in ``out`` into one text report."""
    found = {name: json.loads((out / name).read_text()) for name in REPORT_SOURCES if (out / name).is_file()}
    if not found:
        raise FileNotFoundError(f"no result files in {out}")
    lines = []
    if "metrics.json" in found:
        m = found["metrics.json"]
        lines.append(f"training: n1={m['n1']} n2={m['n2']} skipped_steps={m['skipped_steps']} "
                     f"clamped_rewards={m['clamped_rewards']}")
    if "nash.json" in found:
        n = found["nash.json"]
        lines.append(f"tuning: alpha*={n['alpha_star']} epsilon={n['epsilon']} "
                     f"theta*={n['theta_star_deg']:.4f} deg")
    if "summary.json" in found:
        sm = found["summary.json"]
        for key in ("max", "min", "median"):
            c = sm[key]
            lines.append(f"sweep {key}: N={c['n']} T_i={c['t_i']} alpha={c['alpha']} mean_Rt={c['mean_rt']}")
    if "convergence.json" in found:
        for r in found["convergence.json"]["ranges"]:
            lines.append(f"range N={r['n_min']}..{r['n_max']}: spread={r['spread']} "
                         f"alpha in [{r['alpha_min']}, {r['alpha_max']}] within_band={r['alpha_within_band']}")
    if "stability.json" in found:
        st = found["stability.json"]
        for iv in st["stable_intervals"]:
            lines.append(f"stable interval: ({iv['lo']}, {iv['hi']}) within_premise={iv['within_premise']}")
        tb = st["theta_bounds_deg"]
        lines.append(f"alpha bounds: ({st['alpha_bounds']['lower']}, {st['alpha_bounds']['upper']}) "
                     f"theta in ({tb['lower']:.4f}, {tb['upper']:.4f}) deg")
    text = "\n".join(lines) + "\n"
    if log.isEnabledFor(logging.INFO):
        sys.stdout.write(text)
    path = out / "report.txt"
    path.write_text(text)
    return [path]


COMMANDS = {
    "train": cmd_train,
    "tune": cmd_tune,
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "report": cmd_report,
}


def settings_to_argv(command: str, settings: dict) -> list[str]:
    """Flags that reproduce ``settings`` without any config file."""
    argv = [command]
    for opt in COMMON + COMMAND_OPTIONS[command]:
        value = settings.get(opt.dest)
        if value is None:
            continue
        if opt.kind == "flag":
            if value:
                argv.append(opt.flag)
        elif opt.kind == "append":
            for v in value:
                argv += [opt.flag, repr(float(v))]
        else:
            argv += [opt.flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


def manifest_name(command: str) -> str:
    return f"{command}.manifest.json"


def write_manifest(out: Path, command: str, args: argparse.Namespace, settings: dict, files) -> Path:
    manifest = {
        "command": command,
        "config_path": str(args.config) if args.config else None,
        "seed": settings["seed"],
        "output_dir": str(out),
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "artifact_version": __version__,
        "settings": settings,
        "argv": settings_to_argv(command, settings),
        "files": sorted(p.name for p in files),
    }
    path = out / manifest_name(command)
    # written raw: seeds and floats must survive unrounded for replay
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def replay_argv(manifest_path: Path, out: Path) -> list[str]:
    manifest = json.loads(Path(manifest_path).read_text())
    return manifest["argv"] + ["--out", str(out)]


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    if args.command == "replay":
        try:
            new_argv = replay_argv(args.manifest, args.out)
        except (OSError, ValueError, KeyError) as exc:
            log.error("cannot read manifest: %s", exc)
            return EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG
        return main(new_argv + (["--quiet"] if args.quiet else []))

    try:
        settings = resolve(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](settings, out)
        write_manifest(out, args.command, args, settings, files)
    except (GeoNashError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
