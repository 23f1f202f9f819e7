"""Monte Carlo engine: determinism, path equivalence, state machine."""

import dataclasses
import math

import numpy as np
import pytest

import racetrack.simulator as sim
from racetrack import (
    ConfigurationError,
    ExperimentPlan,
    HeraldModel,
    LossParams,
    ParameterError,
    RacetrackConfig,
    SpdcParams,
    SwitchBank,
    SwitchMode,
    SwitchState,
    TimingParams,
    herald_click_probability,
    output_probability,
    repetition_time,
    reset_source,
    simulate,
    validate_schedule,
)
from racetrack.simulator import CycleEventLog, Z99, validate_schedules


def make_config(
    *,
    sources=3,
    cycles=12,
    p=0.2,
    eta=0.9,
    policy="replace-with-latest",
    loss_db=0.3,
    delay=9.0,
    budget=None,
    seed=7,
    dead=0,
):
    plan = ExperimentPlan(
        sources_s=sources, cycles_n=cycles, gen_prob_p=p, detector_eta=eta,
        storage_policy=policy,
    )
    return RacetrackConfig(
        plan=plan,
        timing=TimingParams.for_loop_delay(delay),
        loss=LossParams(waveguide_loss_db_ns=loss_db),
        switches_per_source=budget if budget is not None else cycles,
        dead_time_cycles=dead,
        rng_seed=seed,
    )


def counters_equal(a, b):
    return (
        a.successes == b.successes
        and a.trials == b.trials
        and a.heralds_mean == b.heralds_mean
        and a.discarded_mean == b.discarded_mean
        and a.lost_mean == b.lost_mean
        and a.exhausted_runs == b.exhausted_runs
        and np.array_equal(a.switch_usage, b.switch_usage)
        and np.array_equal(a.output_switch_usage, b.output_switch_usage)
    )


class TestRngBlocks:
    def test_blocks_are_slices_of_one_stream(self):
        seed, block = 123, 37
        full = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed))
        ).random(10 * block)
        for start, count in [(0, 3), (3, 2), (5, 5)]:
            got = sim._draw_block(seed, start, count, block)
            expected = full[start * block : (start + count) * block].reshape(
                count, block
            )
            assert np.array_equal(got, expected)

    def test_z99_quantile(self):
        assert Z99 == pytest.approx(2.5758293035489004, abs=1e-15)


class TestDeterminism:
    def test_repeat_runs_identical(self):
        cfg = make_config()
        a = simulate(cfg, 2000)
        b = simulate(cfg, 2000)
        assert counters_equal(a, b)
        assert a.estimate == b.estimate and a.ci99 == b.ci99

    def test_worker_count_invariant(self):
        cfg = make_config(sources=4, cycles=20, p=0.1)
        a = simulate(cfg, 6000, workers=1)
        b = simulate(cfg, 6000, workers=3)
        assert counters_equal(a, b)

    def test_chunk_size_invariant(self, monkeypatch):
        cfg = make_config()
        baseline = simulate(cfg, 3000)
        monkeypatch.setattr(sim, "_CHUNK_BYTES", 64 * cfg.plan.cycles_n * 8)
        chunked = simulate(cfg, 3000)
        assert counters_equal(baseline, chunked)

    def test_different_seeds_differ(self):
        a = simulate(make_config(seed=1), 4000)
        b = simulate(make_config(seed=2), 4000)
        assert a.successes != b.successes

    def test_trial_prefix_stability(self):
        # trial i consumes a fixed stream block, so prefixes agree
        cfg = make_config()
        small = simulate(cfg, 500, keep_logs=True)
        large = simulate(cfg, 800, keep_logs=True)
        for log_a, log_b in zip(small.event_logs, large.event_logs):
            assert log_a == log_b


class TestPathEquivalence:
    @pytest.mark.parametrize("policy", ["replace-with-latest", "keep-first"])
    @pytest.mark.parametrize("budget", [2, None])
    @pytest.mark.parametrize("loss_db", [0.0, 0.3, 3.0])
    def test_logged_path_matches_vectorized(self, policy, budget, loss_db):
        cfg = make_config(policy=policy, budget=budget, loss_db=loss_db)
        fast = simulate(cfg, 2500)
        logged = simulate(cfg, 2500, keep_logs=True)
        assert counters_equal(fast, logged)

    def test_single_cycle_edge(self):
        cfg = make_config(cycles=1, p=0.5)
        fast = simulate(cfg, 4000)
        logged = simulate(cfg, 4000, keep_logs=True)
        assert counters_equal(fast, logged)
        expected = output_probability(cfg.plan, cfg.timing, cfg.loss)
        assert abs(fast.estimate - expected) <= max(3 * fast.ci99, 1e-3)

    def test_no_heralds_possible(self):
        cfg = make_config(p=0.0)
        res = simulate(cfg, 500)
        assert res.successes == 0
        assert res.heralds_mean == 0.0
        assert res.output_switch_usage.tolist() == [500, 0]
        logged = simulate(cfg, 500, keep_logs=True)
        assert counters_equal(res, logged)


class TestAgainstAnalytic:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(sources=1, cycles=30, p=0.05, policy="replace-with-latest"),
            dict(sources=5, cycles=25, p=0.03, policy="replace-with-latest"),
            dict(sources=2, cycles=40, p=0.1, policy="keep-first"),
        ],
    )
    def test_estimate_within_interval(self, kwargs):
        cfg = make_config(loss_db=0.05, **kwargs)
        res = simulate(cfg, 60_000)
        expected = output_probability(cfg.plan, cfg.timing, cfg.loss)
        assert res.ci_low <= expected <= res.ci_high

    def test_more_loss_means_fewer_deliveries(self):
        low = make_config(sources=1, cycles=20, p=0.3, loss_db=0.024, seed=11)
        high = make_config(sources=1, cycles=20, p=0.3, loss_db=16.0, seed=11)
        res_low = simulate(low, 40_000)
        res_high = simulate(high, 40_000)
        for cfg, res in [(low, res_low), (high, res_high)]:
            expected = output_probability(cfg.plan, cfg.timing, cfg.loss)
            assert res.ci_low <= expected <= res.ci_high
        assert res_low.estimate > res_high.estimate

    def test_ci_formula(self):
        res = simulate(make_config(), 2000)
        expected = Z99 * math.sqrt(res.estimate * (1 - res.estimate) / res.trials)
        assert res.ci99 == pytest.approx(expected, rel=1e-12)
        assert 0.0 <= res.ci_low <= res.estimate <= res.ci_high <= 1.0


class TestBudgetAndExhaustion:
    def test_exhausted_fraction_matches_binomial_tail(self):
        from racetrack import binomial_cdf, required_switches

        n_cycles, p, q = 100, 0.3, 0.9
        budget = required_switches(q, n_cycles, p)
        cfg = make_config(sources=1, cycles=n_cycles, p=p, budget=budget,
                          loss_db=0.024, seed=3)
        res = simulate(cfg, 10_000)
        exact_tail = 1.0 - binomial_cdf(budget, n_cycles, p)
        assert exact_tail <= 1.0 - q
        frac = res.exhausted_runs / res.trials
        sigma = math.sqrt(exact_tail * (1 - exact_tail) / res.trials)
        assert abs(frac - exact_tail) <= 4 * sigma

    def test_generous_budget_never_exhausts(self):
        cfg = make_config(budget=None)  # budget == cycles
        res = simulate(cfg, 3000)
        assert res.exhausted_runs == 0

    def test_switch_usage_shape_and_totals(self):
        cfg = make_config(sources=3, cycles=12, budget=5)
        res = simulate(cfg, 2000, keep_logs=True)
        assert res.switch_usage.shape == (3, 5, 3)
        # every slot of every source accounts for every trial
        assert (res.switch_usage.sum(axis=2) == res.trials).all()
        assert res.output_switch_usage.sum() == res.trials
        # one-config switches only arise from final-cycle insertions
        final_inserts = sum(
            1
            for log in res.event_logs
            for rec in log.records
            if rec.selected is not None and rec.cycle == cfg.plan.cycles_n - 1
        )
        assert res.switch_usage[:, :, 1].sum() == final_inserts


class TestDeadTime:
    def test_dead_time_reduces_heralds(self):
        active = simulate(make_config(p=0.4), 1500)
        dead = simulate(make_config(p=0.4, dead=2), 1500)
        assert dead.heralds_mean < active.heralds_mean

    def test_dead_time_blocks_consecutive_clicks(self):
        cfg = make_config(sources=1, cycles=20, p=0.9, dead=3)
        res = simulate(cfg, 300, keep_logs=True)
        for log in res.event_logs:
            clicks = [rec.cycle for rec in log.records if rec.heralds]
            gaps = np.diff(clicks)
            assert (gaps > 3).all() if len(clicks) > 1 else True


class TestSpdcMode:
    def test_click_probability_drives_generation(self):
        spdc = SpdcParams(zeta=0.35, n_max=12)
        herald = HeraldModel(efficiency_eta=0.8, dark_count_prob=0.0)
        cfg = dataclasses.replace(
            make_config(sources=2, cycles=15, loss_db=0.05),
            spdc=spdc,
            herald=herald,
            generation_mode="spdc-derived",
        )
        res = simulate(cfg, 40_000)
        from racetrack import pair_distribution

        click = herald_click_probability(pair_distribution(spdc), herald)
        assert res.assumptions["per_cycle_gen_prob"] == pytest.approx(click)
        assert 0.0 < res.assumptions["heralded_single_purity"] <= 1.0
        equivalent = dataclasses.replace(
            cfg.plan, gen_prob_p=click
        )
        expected = output_probability(equivalent, cfg.timing, cfg.loss)
        assert res.ci_low <= expected <= res.ci_high

    def test_spdc_mode_requires_params(self):
        with pytest.raises(ConfigurationError):
            dataclasses.replace(make_config(), generation_mode="spdc-derived")

    def test_spdc_mode_rejects_per_herald_eta(self):
        plan = ExperimentPlan(eta_application="per-herald")
        with pytest.raises(ConfigurationError):
            RacetrackConfig(
                plan=plan,
                spdc=SpdcParams(zeta=0.3),
                generation_mode="spdc-derived",
            )


class TestResultMetadata:
    def test_t_mux_uses_reset_time(self):
        cfg = make_config(cycles=134)
        res = simulate(cfg, 10)
        assert res.t_mux_effective == repetition_time(134, 60.0, 950.0)

    def test_assumptions_describe_model(self):
        cfg = make_config(policy="keep-first")
        res = simulate(cfg, 10)
        assert res.assumptions["storage_policy"] == "keep-first"
        assert res.assumptions["generation_mode"] == "direct-p"
        assert res.assumptions["per_loop_survival"] == pytest.approx(
            10 ** (-0.3 * 9.0 / 10.0)
        )

    def test_invalid_arguments(self):
        with pytest.raises(ParameterError):
            simulate(make_config(), 0)
        with pytest.raises(ParameterError):
            simulate(make_config(), 10, workers=0)
        with pytest.raises(ParameterError):
            dataclasses.replace(make_config(), switches_per_source=0)
        with pytest.raises(ParameterError):
            dataclasses.replace(make_config(), dead_time_cycles=-1)


class TestSwitchStateMachine:
    def test_mode_progression(self):
        bank = SwitchBank(sources=1, per_source=2)
        slot = bank.insert(0, cycle=0)
        sw = bank.slots[0][slot]
        assert sw.mode is SwitchMode.INSERT_PHOTON and sw.config_count == 1
        bank.bypass(0, slot, cycle=1)
        assert sw.mode is SwitchMode.BYPASS and sw.config_count == 2
        bank.tick(2)
        assert sw.mode is SwitchMode.EXHAUSTED

    def test_pad_budget_enforced(self):
        sw = SwitchState(switch_id=0)
        sw.configure("insert")
        sw.configure("bypass", cycle=1)
        with pytest.raises(ConfigurationError):
            sw.configure("bypass", cycle=2)

    def test_bypass_requires_prior_insert(self):
        sw = SwitchState(switch_id=0)
        with pytest.raises(ConfigurationError):
            sw.configure("bypass", cycle=0)

    def test_output_switch_single_pad(self):
        sw = SwitchState(switch_id=-1, pad_type="single")
        sw.configure("deliver")
        with pytest.raises(ConfigurationError):
            sw.configure("deliver")
        with pytest.raises(ConfigurationError):
            SwitchState(switch_id=0).configure("deliver")

    def test_reset_source_restores_ready(self):
        bank = SwitchBank(sources=2, per_source=2)
        bank.insert(0, cycle=0)
        bank.insert(1, cycle=0)
        bank.output_switch.configure("deliver")
        returned = reset_source(bank)
        assert returned is bank
        assert all(
            sw.mode is SwitchMode.READY and sw.config_count == 0
            for row in bank.slots
            for sw in row
        )
        assert bank.output_switch.mode is SwitchMode.READY
        assert bank.has_ready(0) and bank.has_ready(1)

    def test_budget_exhaustion_reported(self):
        bank = SwitchBank(sources=1, per_source=1)
        bank.insert(0, cycle=0)
        assert not bank.has_ready(0)
        with pytest.raises(ConfigurationError):
            bank.insert(0, cycle=1)


class TestScheduleValidation:
    def _logs(self, **kwargs):
        cfg = make_config(**kwargs)
        return simulate(cfg, 400, keep_logs=True).event_logs

    def test_clean_schedules_have_no_violations(self):
        for policy in ("replace-with-latest", "keep-first"):
            logs = self._logs(policy=policy, budget=3)
            assert validate_schedules(logs) == []

    def _first_log_with_midrun_insert(self, logs):
        for log in logs:
            for rec in log.records:
                if rec.selected is not None and rec.cycle < log.n_cycles - 1:
                    return log
        raise AssertionError("no usable episode found")

    def test_detects_missing_bypass(self):
        logs = self._logs()
        log = self._first_log_with_midrun_insert(logs)
        insert_cycle = next(
            rec.cycle
            for rec in log.records
            if rec.selected is not None and rec.cycle < log.n_cycles - 1
        )
        records = [
            dataclasses.replace(
                rec,
                actions=tuple(
                    a for a in rec.actions if a.action != "bypass"
                ),
            )
            if rec.cycle == insert_cycle + 1
            else rec
            for rec in log.records
        ]
        tampered = dataclasses.replace(log, records=records)
        assert any("never followed by bypass" in v
                   for v in validate_schedule(tampered))

    def test_detects_insert_without_herald(self):
        logs = self._logs()
        log = self._first_log_with_midrun_insert(logs)
        records = [
            dataclasses.replace(rec, heralds=tuple())
            if rec.selected is not None
            else rec
            for rec in log.records
        ]
        tampered = dataclasses.replace(log, records=records)
        assert any("without herald" in v for v in validate_schedule(tampered))

    def test_detects_over_configured_pad(self):
        logs = self._logs()
        log = self._first_log_with_midrun_insert(logs)
        target = next(
            rec for rec in log.records
            if rec.selected is not None and rec.cycle < log.n_cycles - 1
        )
        extra = sim.SwitchAction(
            "source", target.selected, 0, "bypass", 3
        )
        records = [
            dataclasses.replace(rec, actions=rec.actions + (extra,))
            if rec.cycle == target.cycle
            else rec
            for rec in log.records
        ]
        tampered = dataclasses.replace(log, records=records)
        violations = validate_schedule(tampered)
        assert violations  # extra configuration breaks several rules

    def test_detects_out_of_order_records(self):
        logs = self._logs()
        log = logs[0]
        tampered = dataclasses.replace(
            log, records=list(reversed(log.records))
        )
        assert any("out of order" in v for v in validate_schedule(tampered))

    def test_detects_output_configured_mid_episode(self):
        logs = self._logs()
        log = self._first_log_with_midrun_insert(logs)
        extra = sim.SwitchAction("output", None, None, "deliver", 1)
        records = [
            dataclasses.replace(rec, actions=rec.actions + (extra,))
            if rec.cycle == 0
            else rec
            for rec in log.records
        ]
        tampered = dataclasses.replace(log, records=records)
        assert any("mid-episode" in v for v in validate_schedule(tampered))


class TestEventLogSerialization:
    def test_jsonl_round_trip(self):
        cfg = make_config(budget=3)
        logs = simulate(cfg, 50, keep_logs=True).event_logs
        for log in logs:
            text = log.to_jsonl()
            back = CycleEventLog.from_jsonl(text)
            assert back == log

    def test_missing_header_rejected(self):
        with pytest.raises(ParameterError):
            CycleEventLog.from_jsonl('{"type": "output", "configured": false, '
                                     '"success": false}\n')
