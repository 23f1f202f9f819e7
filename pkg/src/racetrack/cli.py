"""Command-line interface for the storage-loop source toolkit.

Subcommands
-----------
``analytic``   closed-form delivery probability and budgets for one design
``simulate``   Monte Carlo for one design, optional event logs + validation
``sweep``      evaluate a parameter grid (JSON document or bundled preset)
``switches``   switch-count budget for a herald-count quantile
``figures``    write the bundled preset sweeps as CSV/JSONL files

Configuration can come from a JSON document (``--config``); flags override
document keys. Exit codes: 0 success, 1 usage error, 2 invalid
configuration, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import IO, Iterator

from .analytics import (
    build_output_model,
    pump_cycles_for_target,
    required_switches,
)
from .errors import ConfigurationError, ParameterError, UsageError
from .simulator import RacetrackConfig, simulate, validate_schedules
from .sweep import (
    FIGURE_PRESETS,
    SETTING_KEYS,
    SweepGrid,
    figure_preset,
    materialize_settings,
    run_sweep,
    write_csv,
    write_jsonl,
)
from .timing import repetition_time

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage problems as exceptions."""

    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(message)


#: flag destination -> external settings key
_FLAG_TO_SETTING = {
    "gen_prob_p": "gen_prob_p",
    "sources": "sources_S",
    "cycles": "cycles_N",
    "eta": "detector_eta",
    "policy": "storage_policy",
    "eta_application": "eta_application",
    "loop_delay_ns": "inner_loop_delay_ns",
    "waveguide_loss_db_ns": "waveguide_loss_db_ns",
    "switch_pass_loss_db": "switch_pass_loss_db",
    "output_coupling": "output_coupling",
    "target": "target_success",
    "quantile": "switch_budget_quantile",
    "switches_per_source": "switches_per_source",
    "dead_time_cycles": "dead_time_cycles",
}


def _design_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("design")
    g.add_argument("--config", metavar="FILE", help="JSON settings document")
    g.add_argument("--gen-prob-p", type=float, dest="gen_prob_p",
                   help="per-cycle heralding probability per source")
    g.add_argument("--sources", type=int, help="number of heralded sources")
    g.add_argument("--cycles", type=int, help="pump cycles per episode")
    g.add_argument("--eta", type=float, help="detector efficiency")
    g.add_argument("--policy", choices=["replace-with-latest", "keep-first"],
                   help="storage policy")
    g.add_argument("--eta-application", choices=["output", "per-herald"],
                   dest="eta_application",
                   help="where detector efficiency is applied")
    g.add_argument("--loop-delay-ns", type=float, dest="loop_delay_ns",
                   help="storage-loop round-trip delay in ns")
    g.add_argument("--waveguide-loss-db-ns", type=float,
                   dest="waveguide_loss_db_ns",
                   help="propagation loss in dB per ns of delay")
    g.add_argument("--switch-pass-loss-db", type=float,
                   dest="switch_pass_loss_db",
                   help="insertion loss per switch pass in dB")
    g.add_argument("--output-coupling", type=float, dest="output_coupling",
                   help="output coupling efficiency")
    g.add_argument("--target", type=float,
                   help="generation target for derived budgets")
    g.add_argument("--quantile", type=float,
                   help="herald-count quantile for the switch budget")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="racetrack",
        description="storage-loop multiplexed photon source toolkit",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_an = sub.add_parser("analytic", help="closed-form design quantities")
    _design_flags(p_an)
    p_an.add_argument("--out", default="-", help="output file (default stdout)")
    p_an.set_defaults(func=_cmd_analytic)

    p_sim = sub.add_parser("simulate", help="Monte Carlo for one design")
    _design_flags(p_sim)
    p_sim.add_argument("--trials", type=int, default=10_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--switches-per-source", type=int,
                       dest="switches_per_source",
                       help="one-shot switch budget per source "
                            "(default: cycle count, non-binding)")
    p_sim.add_argument("--dead-time-cycles", type=int, dest="dead_time_cycles",
                       help="herald dead time in cycles")
    p_sim.add_argument("--logs-out", metavar="FILE",
                       help="write per-cycle event logs as JSONL")
    p_sim.add_argument("--validate", action="store_true",
                       help="check event logs against the switch contract")
    p_sim.add_argument("--out", default="-", help="output file (default stdout)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sw = sub.add_parser("switches", help="switch budget for a quantile")
    p_sw.add_argument("--gen-prob-p", type=float, dest="gen_prob_p",
                      required=True)
    p_sw.add_argument("--cycles", type=int,
                      help="pump cycles (omit to derive from --target)")
    p_sw.add_argument("--target", type=float,
                      help="generation target used to derive cycles")
    p_sw.add_argument("--quantile", type=float, default=0.999)
    p_sw.add_argument("--out", default="-", help="output file (default stdout)")
    p_sw.set_defaults(func=_cmd_switches)

    p_sweep = sub.add_parser("sweep", help="evaluate a parameter grid")
    src = p_sweep.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="FILE", help="JSON sweep document")
    src.add_argument("--preset", choices=sorted(FIGURE_PRESETS),
                     help="bundled figure preset")
    p_sweep.add_argument("--mode", choices=["analytic", "montecarlo"],
                         help="override evaluation mode")
    p_sweep.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="master seed (default: document value or 0)")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p_sweep.add_argument("--out", default="-", help="output file (default stdout)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fig = sub.add_parser("figures", help="write the bundled preset sweeps")
    p_fig.add_argument("--figure", choices=sorted(FIGURE_PRESETS) + ["all"],
                       default="all")
    p_fig.add_argument("--mode", choices=["analytic", "montecarlo"],
                       default="analytic")
    p_fig.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.add_argument("--workers", type=int, default=1)
    p_fig.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p_fig.add_argument("--out-dir", default=".", dest="out_dir")
    p_fig.set_defaults(func=_cmd_figures)

    return parser


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return doc


def _collect_settings(args: argparse.Namespace) -> dict:
    settings: dict[str, object] = {}
    config = getattr(args, "config", None)
    if config:
        doc = _load_json(config)
        unknown = sorted(set(doc) - SETTING_KEYS)
        if unknown:
            raise ConfigurationError(
                f"{config}: unknown settings: {', '.join(unknown)}"
            )
        settings.update(doc)
    for dest, key in _FLAG_TO_SETTING.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[key] = value
    return settings


@contextmanager
def _open_out(spec: str) -> Iterator[IO[str]]:
    if spec == "-":
        yield sys.stdout
    else:
        with open(spec, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _emit_json(payload: dict, out: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    with _open_out(out) as fh:
        fh.write(text)


def _cmd_analytic(args: argparse.Namespace) -> int:
    settings = _collect_settings(args)
    plan, timing, loss, _ = materialize_settings(settings)
    model = build_output_model(plan, timing, loss)
    payload = {
        "plan": {
            "sources_S": plan.sources_s,
            "cycles_N": plan.cycles_n,
            "gen_prob_p": plan.gen_prob_p,
            "detector_eta": plan.detector_eta,
            "storage_policy": plan.storage_policy,
            "eta_application": plan.eta_application,
        },
        "output_probability": model.delivery_probability(
            plan.cycles_n, plan.storage_policy
        ),
        "p_cycle": model.p_cycle,
        "loop_survival": model.loop_survival,
        "pump_cycles_for_target": pump_cycles_for_target(
            plan.gen_prob_p, plan.target_success
        ),
        "required_switches": required_switches(
            plan.switch_budget_quantile, plan.cycles_n, plan.gen_prob_p
        ),
        "t_mux_ns": repetition_time(
            plan.cycles_n, timing.effective_pump_period, timing.switch_off
        ),
        "assumptions": model.assumptions,
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise ParameterError(f"trials must be >= 1, got {args.trials}")
    settings = _collect_settings(args)
    plan, timing, loss, extras = materialize_settings(settings)
    budget = extras["switches_per_source"]
    config = RacetrackConfig(
        plan=plan,
        timing=timing,
        loss=loss,
        switches_per_source=(
            int(budget) if budget is not None else max(1, plan.cycles_n)
        ),
        dead_time_cycles=extras["dead_time_cycles"],
        rng_seed=args.seed,
    )
    keep_logs = bool(args.logs_out) or args.validate
    result = simulate(config, args.trials, workers=args.workers,
                      keep_logs=keep_logs)
    payload = {
        "estimate": result.estimate,
        "ci99": result.ci99,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "trials": result.trials,
        "successes": result.successes,
        "heralds_mean": result.heralds_mean,
        "discarded_mean": result.discarded_mean,
        "lost_mean": result.lost_mean,
        "exhausted_runs": result.exhausted_runs,
        "switch_usage_totals": result.switch_usage.sum(axis=(0, 1)).tolist(),
        "output_switch_usage": result.output_switch_usage.tolist(),
        "t_mux_effective_ns": result.t_mux_effective,
        "assumptions": result.assumptions,
        "seed": args.seed,
    }
    if args.validate:
        violations = validate_schedules(result.event_logs or [])
        payload["schedule_violations"] = len(violations)
        payload["schedule_violation_samples"] = violations[:10]
    if args.logs_out:
        with open(args.logs_out, "w", encoding="utf-8", newline="") as fh:
            for log in result.event_logs or []:
                fh.write(log.to_jsonl())
    _emit_json(payload, args.out)
    return 0


def _cmd_switches(args: argparse.Namespace) -> int:
    payload: dict[str, object] = {"gen_prob_p": args.gen_prob_p,
                                  "quantile": args.quantile}
    if args.cycles is not None:
        cycles = args.cycles
    elif args.target is not None:
        cycles = pump_cycles_for_target(args.gen_prob_p, args.target)
        payload["target_success"] = args.target
    else:
        raise UsageError("switches requires --cycles or --target")
    payload["cycles_N"] = cycles
    payload["required_switches"] = required_switches(
        args.quantile, cycles, args.gen_prob_p
    )
    _emit_json(payload, args.out)
    return 0


def _grid_from_document(doc: dict) -> SweepGrid:
    known = {"axes", "mode", "trials", "seed", "cycles_from_target",
             "base_overrides"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigurationError(f"unknown sweep keys: {', '.join(unknown)}")
    if "axes" not in doc or not isinstance(doc["axes"], dict):
        raise ConfigurationError("sweep document needs an 'axes' object")
    axes = {name: tuple(values) for name, values in doc["axes"].items()}
    return SweepGrid(
        axes=axes,
        mode=doc.get("mode", "analytic"),
        trials=int(doc.get("trials", 100_000)),
        seed=int(doc.get("seed", 0)),
        cycles_from_target=doc.get("cycles_from_target"),
        base_overrides=doc.get("base_overrides", {}),
    )


def _write_rows(rows, fmt: str, fh: IO[str]) -> None:
    if fmt == "csv":
        write_csv(rows, fh)
    else:
        write_jsonl(rows, fh)


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.preset:
        grid = figure_preset(args.preset, mode=args.mode, trials=args.trials,
                             seed=args.seed if args.seed is not None else 0)
    else:
        grid = _grid_from_document(_load_json(args.config))
        updates: dict[str, object] = {}
        if args.mode is not None:
            updates["mode"] = args.mode
        if args.trials is not None:
            updates["trials"] = args.trials
        if args.seed is not None:
            updates["seed"] = args.seed
        if updates:
            grid = replace(grid, **updates)
    rows = run_sweep(grid, workers=args.workers)
    with _open_out(args.out) as fh:
        _write_rows(rows, args.format, fh)
    return 0


def _cmd_figures(args: argparse.Namespace) -> int:
    names = sorted(FIGURE_PRESETS) if args.figure == "all" else [args.figure]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if args.format == "csv" else "jsonl"
    for name in names:
        grid = figure_preset(name, mode=args.mode, trials=args.trials,
                             seed=args.seed)
        rows = run_sweep(grid, workers=args.workers)
        path = out_dir / f"{name}.{ext}"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            _write_rows(rows, args.format, fh)
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 1
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
