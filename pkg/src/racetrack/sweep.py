"""Parameter-grid sweeps over the storage-loop design space.

A :class:`SweepGrid` names axes drawn from the external vocabulary
(``inner_loop_delay_ns``, ``waveguide_loss_db_ns``, ``gen_prob_p``,
``sources_S``, ``cycles_N``, ``detector_eta``) and is evaluated point by
point either through the closed-form model (``mode="analytic"``) or the
Monte Carlo engine (``mode="montecarlo"``). Rows are produced in the
product order of the axes as given (rightmost axis fastest); a point whose
parameters are rejected becomes an error row instead of aborting the sweep.

Monte Carlo points are seeded independently of evaluation order: point
``i`` uses the first state word of ``SeedSequence((grid.seed, i))``, so a
sweep is reproducible row by row no matter how it is chunked.

Writers emit CSV (sorted axis columns first, then outputs, then ``error``;
floats formatted with ``%.12g``; LF line endings) and flat-object JSONL.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Literal, Mapping, Sequence

import numpy as np

from .analytics import ExperimentPlan, build_output_model, pump_cycles_for_target
from .errors import ConfigurationError, ParameterError
from .simulator import RacetrackConfig, simulate
from .timing import LossParams, TimingParams, repetition_time

__all__ = [
    "KNOWN_AXES",
    "SweepGrid",
    "SweepRow",
    "run_sweep",
    "figure_preset",
    "materialize_settings",
    "write_csv",
    "write_jsonl",
    "FIGURE_PRESETS",
]

#: axis names accepted by :class:`SweepGrid` (external interface).
KNOWN_AXES = (
    "inner_loop_delay_ns",
    "waveguide_loss_db_ns",
    "gen_prob_p",
    "sources_S",
    "cycles_N",
    "detector_eta",
)

_INT_AXES = {"sources_S", "cycles_N"}

#: non-axis settings accepted in ``base_overrides`` and config documents.
SETTING_KEYS = set(KNOWN_AXES) | {
    "storage_policy",
    "eta_application",
    "target_success",
    "switch_budget_quantile",
    "switch_pass_loss_db",
    "output_coupling",
    "switches_per_source",
    "dead_time_cycles",
}
_OVERRIDE_KEYS = SETTING_KEYS


@dataclass(frozen=True)
class SweepGrid:
    """A cartesian sweep definition.

    ``axes`` maps axis names to value sequences; order matters (rightmost
    fastest). ``cycles_from_target`` derives ``cycles_N`` per point from
    that point's ``gen_prob_p`` (the smallest pump count whose miss
    probability stays below the complement of the target), and is mutually
    exclusive with a ``cycles_N`` axis. ``base_overrides`` pins non-swept
    settings such as ``storage_policy`` or ``waveguide_loss_db_ns``.
    """

    axes: Mapping[str, Sequence[float]]
    mode: Literal["analytic", "montecarlo"] = "analytic"
    trials: int = 100_000
    seed: int = 0
    cycles_from_target: float | None = None
    base_overrides: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.axes:
            raise ParameterError("sweep needs at least one axis")
        for name, values in self.axes.items():
            if name not in KNOWN_AXES:
                raise ParameterError(
                    f"unknown sweep axis {name!r}; known: {', '.join(KNOWN_AXES)}"
                )
            if len(values) == 0:
                raise ParameterError(f"axis {name!r} has no values")
        if self.mode not in ("analytic", "montecarlo"):
            raise ParameterError(f"unknown sweep mode {self.mode!r}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ParameterError(f"seed must be nonnegative, got {self.seed}")
        if self.cycles_from_target is not None:
            if not 0.0 < self.cycles_from_target < 1.0:
                raise ParameterError(
                    f"cycles_from_target must lie in (0, 1), "
                    f"got {self.cycles_from_target}"
                )
            if "cycles_N" in self.axes:
                raise ConfigurationError(
                    "cycles_from_target conflicts with a cycles_N axis"
                )
        for key in self.base_overrides:
            if key not in _OVERRIDE_KEYS:
                raise ParameterError(
                    f"unknown base override {key!r}; "
                    f"known: {', '.join(sorted(_OVERRIDE_KEYS))}"
                )

    @property
    def n_points(self) -> int:
        return math.prod(len(v) for v in self.axes.values())

    def points(self) -> Iterable[dict[str, float]]:
        names = list(self.axes)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, combo))


@dataclass(frozen=True)
class SweepRow:
    """One evaluated grid point."""

    index: int
    params: dict[str, float]
    outputs: dict[str, float]
    error: str | None = None


def _point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence((master, index)).generate_state(1)[0])


def materialize_settings(
    settings: Mapping[str, object], cycles_from_target: float | None = None
) -> tuple[ExperimentPlan, TimingParams, LossParams, dict]:
    """Turn an external-vocabulary settings mapping into model inputs.

    Recognized keys are the sweep axes plus ``storage_policy``,
    ``eta_application``, ``target_success``, ``switch_budget_quantile``,
    ``switch_pass_loss_db``, ``output_coupling``, ``switches_per_source``
    and ``dead_time_cycles``. With ``cycles_from_target`` set, ``cycles_N``
    is derived from ``gen_prob_p`` instead of being taken from settings.
    """
    plan_kwargs: dict[str, object] = {}
    if "gen_prob_p" in settings:
        plan_kwargs["gen_prob_p"] = float(settings["gen_prob_p"])
    if "sources_S" in settings:
        plan_kwargs["sources_s"] = int(round(float(settings["sources_S"])))
    if "cycles_N" in settings:
        plan_kwargs["cycles_n"] = int(round(float(settings["cycles_N"])))
    if "detector_eta" in settings:
        plan_kwargs["detector_eta"] = float(settings["detector_eta"])
    if "storage_policy" in settings:
        plan_kwargs["storage_policy"] = settings["storage_policy"]
    if "eta_application" in settings:
        plan_kwargs["eta_application"] = settings["eta_application"]
    if "target_success" in settings:
        plan_kwargs["target_success"] = float(settings["target_success"])
    if "switch_budget_quantile" in settings:
        plan_kwargs["switch_budget_quantile"] = float(settings["switch_budget_quantile"])
    if cycles_from_target is not None:
        p = plan_kwargs.get("gen_prob_p", ExperimentPlan().gen_prob_p)
        plan_kwargs["cycles_n"] = pump_cycles_for_target(float(p), cycles_from_target)
        plan_kwargs["target_success"] = cycles_from_target
    plan = ExperimentPlan(**plan_kwargs)

    loss_kwargs: dict[str, float] = {}
    if "waveguide_loss_db_ns" in settings:
        loss_kwargs["waveguide_loss_db_ns"] = float(settings["waveguide_loss_db_ns"])
    if "switch_pass_loss_db" in settings:
        loss_kwargs["switch_pass_loss_db"] = float(settings["switch_pass_loss_db"])
    if "output_coupling" in settings:
        loss_kwargs["output_coupling"] = float(settings["output_coupling"])
    loss = LossParams(**loss_kwargs)

    timing = TimingParams()
    if "inner_loop_delay_ns" in settings:
        timing = TimingParams.for_loop_delay(float(settings["inner_loop_delay_ns"]))

    extras = {
        "switches_per_source": settings.get("switches_per_source"),
        "dead_time_cycles": int(settings.get("dead_time_cycles", 0)),
    }
    return plan, timing, loss, extras


def _materialize(
    grid: SweepGrid, point: Mapping[str, float]
) -> tuple[ExperimentPlan, TimingParams, LossParams, dict]:
    settings: dict[str, object] = dict(grid.base_overrides)
    settings.update(point)
    return materialize_settings(settings, grid.cycles_from_target)


def _evaluate_point(
    grid: SweepGrid,
    index: int,
    point: Mapping[str, float],
    workers: int,
) -> SweepRow:
    params = {k: float(v) for k, v in point.items()}
    try:
        plan, timing, loss, extras = _materialize(grid, point)
        t_mux = repetition_time(
            plan.cycles_n, timing.effective_pump_period, timing.switch_off
        )
        model = build_output_model(plan, timing, loss)
        analytic = model.delivery_probability(plan.cycles_n, plan.storage_policy)
        if grid.mode == "analytic":
            outputs: dict[str, float] = {
                "output_probability": analytic,
                "p_cycle": model.p_cycle,
                "loop_survival": model.loop_survival,
                "cycles_n_effective": plan.cycles_n,
                "t_mux_ns": t_mux,
            }
        else:
            budget = extras["switches_per_source"]
            config = RacetrackConfig(
                plan=plan,
                timing=timing,
                loss=loss,
                switches_per_source=(
                    int(budget) if budget is not None else max(1, plan.cycles_n)
                ),
                dead_time_cycles=extras["dead_time_cycles"],
                rng_seed=_point_seed(grid.seed, index),
            )
            result = simulate(config, grid.trials, workers=workers)
            outputs = {
                "estimate": result.estimate,
                "ci99": result.ci99,
                "trials": result.trials,
                "successes": result.successes,
                "heralds_mean": result.heralds_mean,
                "discarded_mean": result.discarded_mean,
                "lost_mean": result.lost_mean,
                "exhausted_runs": result.exhausted_runs,
                "analytic_output_probability": analytic,
                "cycles_n_effective": plan.cycles_n,
                "t_mux_ns": t_mux,
            }
        return SweepRow(index=index, params=params, outputs=outputs)
    except (ParameterError, ConfigurationError) as exc:
        return SweepRow(index=index, params=params, outputs={}, error=str(exc))


def run_sweep(grid: SweepGrid, *, workers: int = 1) -> list[SweepRow]:
    """Evaluate every grid point; never aborts on per-point config errors."""
    return [
        _evaluate_point(grid, i, point, workers)
        for i, point in enumerate(grid.points())
    ]


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def _columns(rows: Sequence[SweepRow]) -> tuple[list[str], list[str]]:
    axis_cols: list[str] = sorted({k for row in rows for k in row.params})
    out_cols: list[str] = []
    for row in rows:
        for key in row.outputs:
            if key not in out_cols:
                out_cols.append(key)
    return axis_cols, out_cols


def write_csv(rows: Sequence[SweepRow], stream: IO[str]) -> None:
    """CSV with sorted axis columns, then outputs, then ``error``; LF only."""
    axis_cols, out_cols = _columns(rows)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(axis_cols + out_cols + ["error"])
    for row in rows:
        record = [_format_value(row.params[c]) if c in row.params else "" for c in axis_cols]
        record += [
            _format_value(row.outputs[c]) if c in row.outputs else "" for c in out_cols
        ]
        record.append(row.error or "")
        writer.writerow(record)


def write_jsonl(rows: Sequence[SweepRow], stream: IO[str]) -> None:
    """One flat JSON object per row; error rows carry an ``error`` key."""
    import json

    for row in rows:
        payload: dict[str, object] = {"index": row.index}
        payload.update(row.params)
        payload.update(
            {
                k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
                for k, v in row.outputs.items()
            }
        )
        if row.error is not None:
            payload["error"] = row.error
        stream.write(json.dumps(payload) + "\n")


def _geomspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(float(x) for x in np.geomspace(lo, hi, n))


def figure_preset(name: str, *, mode: str | None = None, trials: int | None = None,
                  seed: int = 0) -> SweepGrid:
    """Bundled sweep grids behind the standard design plots.

    ``fig1`` — delivery probability versus heralding probability for a
    single source, one curve per storage-loop delay, with the pump-cycle
    count chosen per point for a 99.9% generation target.
    ``fig3`` — delivery probability versus cycle count for several source
    counts, one curve per storage-loop delay.
    ``fig7`` — delivery probability over the (delay, waveguide-loss)
    plane sampled across heralding probabilities, for 150 sources and 150
    cycles under the keep-first policy.
    """
    try:
        factory = FIGURE_PRESETS[name]
    except KeyError:
        raise ParameterError(
            f"unknown figure preset {name!r}; known: {', '.join(sorted(FIGURE_PRESETS))}"
        ) from None
    grid = factory()
    updates: dict[str, object] = {"seed": seed}
    if mode is not None:
        updates["mode"] = mode
    if trials is not None:
        updates["trials"] = trials
    return replace(grid, **updates)


def _preset_fig1() -> SweepGrid:
    return SweepGrid(
        axes={
            "gen_prob_p": _geomspace(1e-4, 0.05, 8),
            "inner_loop_delay_ns": (1.0, 3.0, 9.0, 30.0, 100.0),
            "detector_eta": (0.9,),
        },
        cycles_from_target=0.999,
        base_overrides={"waveguide_loss_db_ns": 0.0055},
    )


def _preset_fig3() -> SweepGrid:
    return SweepGrid(
        axes={
            "sources_S": (1, 5, 20, 50),
            "inner_loop_delay_ns": (1.0, 5.0, 20.0, 50.0, 100.0),
            "cycles_N": tuple(range(1, 401)),
            "detector_eta": (1.0,),
        },
        base_overrides={"gen_prob_p": 0.025, "waveguide_loss_db_ns": 0.0055},
    )


def _preset_fig7() -> SweepGrid:
    return SweepGrid(
        axes={
            "inner_loop_delay_ns": _geomspace(1.0, 100.0, 12),
            "waveguide_loss_db_ns": _geomspace(0.001, 24.0, 12),
            "gen_prob_p": _geomspace(1e-4, 0.03, 7),
            "sources_S": (150,),
            "cycles_N": (150,),
        },
        base_overrides={"storage_policy": "keep-first", "detector_eta": 0.9},
    )


FIGURE_PRESETS = {
    "fig1": _preset_fig1,
    "fig3": _preset_fig3,
    "fig7": _preset_fig7,
}
