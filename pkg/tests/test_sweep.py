"""Grid sweeps: ordering, seeding, error rows, writers, presets."""

import io
import json

import pytest

from racetrack import (
    ConfigurationError,
    ParameterError,
    SweepGrid,
    figure_preset,
    pump_cycles_for_target,
    run_sweep,
    write_csv,
    write_jsonl,
)
from racetrack.sweep import materialize_settings


def small_grid(**kwargs):
    defaults = dict(
        axes={
            "gen_prob_p": (0.05, 0.2),
            "inner_loop_delay_ns": (1.0, 9.0, 30.0),
        },
        mode="analytic",
    )
    defaults.update(kwargs)
    return SweepGrid(**defaults)


class TestGridDefinition:
    def test_point_order_rightmost_fastest(self):
        rows = run_sweep(small_grid())
        combos = [
            (r.params["gen_prob_p"], r.params["inner_loop_delay_ns"])
            for r in rows
        ]
        assert combos == [
            (0.05, 1.0), (0.05, 9.0), (0.05, 30.0),
            (0.2, 1.0), (0.2, 9.0), (0.2, 30.0),
        ]
        assert [r.index for r in rows] == list(range(6))

    def test_unknown_axis_rejected(self):
        with pytest.raises(ParameterError):
            SweepGrid(axes={"temperature_K": (1.0,)})

    def test_empty_axis_rejected(self):
        with pytest.raises(ParameterError):
            SweepGrid(axes={"gen_prob_p": ()})

    def test_cycles_axis_conflicts_with_derivation(self):
        with pytest.raises(ConfigurationError):
            SweepGrid(
                axes={"gen_prob_p": (0.05,), "cycles_N": (10,)},
                cycles_from_target=0.999,
            )

    def test_unknown_override_rejected(self):
        with pytest.raises(ParameterError):
            small_grid(base_overrides={"color": "blue"})

    def test_n_points(self):
        assert small_grid().n_points == 6


class TestEvaluation:
    def test_cycles_derived_from_target(self):
        grid = SweepGrid(
            axes={"gen_prob_p": (0.05, 0.01)},
            cycles_from_target=0.999,
        )
        rows = run_sweep(grid)
        assert rows[0].outputs["cycles_n_effective"] == pump_cycles_for_target(
            0.05, 0.999
        )
        assert rows[1].outputs["cycles_n_effective"] == pump_cycles_for_target(
            0.01, 0.999
        )

    def test_error_rows_do_not_abort(self):
        grid = SweepGrid(axes={"detector_eta": (0.9, 1.5, 0.5)})
        rows = run_sweep(grid)
        assert rows[0].error is None and rows[2].error is None
        assert rows[1].error is not None and rows[1].outputs == {}
        assert "detector efficiency" in rows[1].error

    def test_base_overrides_change_policy(self):
        base = run_sweep(small_grid())
        kept = run_sweep(
            small_grid(base_overrides={"storage_policy": "keep-first"})
        )
        for a, b in zip(base, kept):
            assert (
                a.outputs["output_probability"]
                >= b.outputs["output_probability"] - 1e-12
            )

    def test_montecarlo_outputs_and_reproducibility(self):
        grid = small_grid(
            axes={"gen_prob_p": (0.1, 0.3)},
            mode="montecarlo",
            trials=2000,
            seed=5,
            base_overrides={"cycles_N": 10},
        )
        rows_a = run_sweep(grid)
        rows_b = run_sweep(grid)
        assert rows_a == rows_b
        for row in rows_a:
            assert set(row.outputs) >= {
                "estimate", "ci99", "trials", "successes",
                "analytic_output_probability",
            }
            assert abs(
                row.outputs["estimate"] - row.outputs["analytic_output_probability"]
            ) <= max(4 * row.outputs["ci99"], 5e-3)

    def test_montecarlo_seed_changes_estimates(self):
        base = dict(
            axes={"gen_prob_p": (0.1,)},
            mode="montecarlo",
            trials=4000,
            base_overrides={"cycles_N": 10},
        )
        rows_a = run_sweep(SweepGrid(seed=1, **base))
        rows_b = run_sweep(SweepGrid(seed=2, **base))
        assert rows_a[0].outputs["successes"] != rows_b[0].outputs["successes"]

    def test_montecarlo_worker_invariance(self):
        grid = small_grid(
            axes={"gen_prob_p": (0.1, 0.2)},
            mode="montecarlo",
            trials=3000,
            base_overrides={"cycles_N": 15},
        )
        assert run_sweep(grid, workers=1) == run_sweep(grid, workers=3)


class TestWriters:
    def test_csv_layout(self):
        rows = run_sweep(small_grid())
        buf = io.StringIO()
        write_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        header = lines[0].split(",")
        # sorted axis names first, then outputs, then error
        assert header[:2] == ["gen_prob_p", "inner_loop_delay_ns"]
        assert header[-1] == "error"
        assert "output_probability" in header
        assert len(lines) == 1 + len(rows)
        assert "\r" not in buf.getvalue()

    def test_csv_float_format(self):
        rows = run_sweep(
            SweepGrid(axes={"gen_prob_p": (1.0 / 3.0,)},
                      base_overrides={"cycles_N": 5})
        )
        buf = io.StringIO()
        write_csv(rows, buf)
        assert "0.333333333333" in buf.getvalue()  # %.12g

    def test_csv_error_rows_leave_outputs_blank(self):
        rows = run_sweep(SweepGrid(axes={"detector_eta": (0.9, 1.5)}))
        buf = io.StringIO()
        write_csv(rows, buf)
        good, bad = buf.getvalue().splitlines()[1:]
        assert bad.split(",")[0] == "1.5"
        assert "must lie in" in bad
        assert good.endswith(",")  # empty error field

    def test_jsonl_round_trip(self):
        rows = run_sweep(small_grid())
        buf = io.StringIO()
        write_jsonl(rows, buf)
        parsed = [json.loads(line) for line in buf.getvalue().splitlines()]
        assert len(parsed) == len(rows)
        assert parsed[0]["gen_prob_p"] == 0.05
        assert "output_probability" in parsed[0]
        assert all(obj["index"] == i for i, obj in enumerate(parsed))

    def test_csv_bytes_stable_across_runs(self):
        grid = small_grid(
            axes={"gen_prob_p": (0.1,)},
            mode="montecarlo",
            trials=1500,
            base_overrides={"cycles_N": 8},
        )
        outputs = []
        for workers in (1, 2):
            buf = io.StringIO()
            write_csv(run_sweep(grid, workers=workers), buf)
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]


class TestPresets:
    def test_preset_shapes(self):
        assert figure_preset("fig1").n_points == 40
        assert figure_preset("fig3").n_points == 8000
        assert figure_preset("fig7").n_points == 1008

    def test_fig1_derives_cycles(self):
        grid = figure_preset("fig1")
        assert grid.cycles_from_target == 0.999
        assert grid.base_overrides["waveguide_loss_db_ns"] == 0.0055

    def test_fig7_uses_keep_first(self):
        grid = figure_preset("fig7")
        assert grid.base_overrides["storage_policy"] == "keep-first"
        assert grid.base_overrides["detector_eta"] == 0.9

    def test_preset_overrides(self):
        grid = figure_preset("fig1", mode="montecarlo", trials=123, seed=9)
        assert grid.mode == "montecarlo"
        assert grid.trials == 123 and grid.seed == 9

    def test_unknown_preset(self):
        with pytest.raises(ParameterError):
            figure_preset("fig99")


class TestMaterializeSettings:
    def test_full_vocabulary(self):
        plan, timing, loss, extras = materialize_settings(
            {
                "gen_prob_p": 0.07,
                "sources_S": 4,
                "cycles_N": 22,
                "detector_eta": 0.8,
                "storage_policy": "keep-first",
                "eta_application": "per-herald",
                "inner_loop_delay_ns": 15.0,
                "waveguide_loss_db_ns": 0.1,
                "switch_pass_loss_db": 0.02,
                "output_coupling": 0.95,
                "switches_per_source": 6,
                "dead_time_cycles": 2,
            }
        )
        assert plan.gen_prob_p == 0.07 and plan.sources_s == 4
        assert plan.cycles_n == 22 and plan.storage_policy == "keep-first"
        assert loss.switch_pass_loss_db == 0.02
        assert extras == {"switches_per_source": 6, "dead_time_cycles": 2}
        from racetrack import inner_loop_delay

        assert inner_loop_delay(timing) == pytest.approx(15.0)

    def test_cycles_from_target_wins(self):
        plan, _, _, _ = materialize_settings(
            {"gen_prob_p": 0.05}, cycles_from_target=0.999
        )
        assert plan.cycles_n == 134
        assert plan.target_success == 0.999
