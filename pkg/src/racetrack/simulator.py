"""Discrete-event Monte Carlo of the storage-loop source.

One episode runs ``N`` pump cycles. Every cycle each of the ``S`` sources
may herald a photon; the lowest-indexed heralding source with switch budget
left inserts its photon into the storage loop through its next one-shot
switch (configured once to insert, reconfigured once the next cycle to let
the stored photon pass). Under the ``replace-with-latest`` policy a fresh
photon displaces the stored one; under ``keep-first`` only the episode's
first photon is ever inserted. The stored photon survives each loop round
trip with probability given by :func:`racetrack.timing.loop_survival`; after
the last cycle a single-use output switch delivers the survivor with
probability ``eta * output_coupling``.

Determinism contract
--------------------
All randomness of trial ``i`` comes from a fixed-size block of a single
PCG64 stream seeded by ``SeedSequence(rng_seed)``: doubles
``[i*B, (i+1)*B)`` with ``B = N*S + N`` laid out as the ``N x S``
generation draws (cycle-major), ``N-1`` per-traversal survival draws, and
one delivery draw. Blocks are located with ``PCG64.advance``, so results
are bit-identical for any chunking or worker count, and the event-logging
path replays the very same draws.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Literal

import numpy as np

from .analytics import ExperimentPlan
from .errors import ConfigurationError, ParameterError
from .optics import (
    HeraldModel,
    SpdcParams,
    herald_click_probability,
    heralded_single_purity,
    pair_distribution,
)
from .timing import LossParams, TimingParams, inner_loop_delay, loop_survival, repetition_time

__all__ = [
    "SwitchMode",
    "SwitchState",
    "SwitchBank",
    "RacetrackConfig",
    "SimulationResult",
    "SwitchAction",
    "CycleRecord",
    "CycleEventLog",
    "simulate",
    "validate_schedule",
    "reset_source",
    "Z99",
]

#: two-sided 99% normal quantile used for confidence intervals.
Z99 = 2.5758293035489004

GenerationMode = Literal["direct-p", "spdc-derived"]


class SwitchMode(str, Enum):
    READY = "ready"
    INSERT_PHOTON = "insert-photon"
    BYPASS = "bypass"
    EXHAUSTED = "exhausted"


@dataclass
class SwitchState:
    """A one-shot thermo-optic switch pad.

    Double-padded switches afford two configurations (insert, then bypass);
    the single-padded output switch affords one. Modes advance only along
    ``READY -> INSERT_PHOTON -> BYPASS -> EXHAUSTED`` and return to READY
    on reset.
    """

    switch_id: int
    pad_type: Literal["double", "single"] = "double"
    config_count: int = 0
    mode: SwitchMode = SwitchMode.READY
    bypass_cycle: int | None = None

    @property
    def max_configs(self) -> int:
        return 2 if self.pad_type == "double" else 1

    @property
    def spent(self) -> bool:
        return self.config_count >= self.max_configs

    def configure(self, action: str, cycle: int | None = None) -> None:
        if self.config_count >= self.max_configs:
            raise ConfigurationError(
                f"switch {self.switch_id}: pad budget exhausted "
                f"({self.config_count}/{self.max_configs} configurations)"
            )
        if action == "insert":
            if self.mode is not SwitchMode.READY:
                raise ConfigurationError(
                    f"switch {self.switch_id}: insert requires READY, is {self.mode}"
                )
            self.mode = SwitchMode.INSERT_PHOTON
        elif action == "bypass":
            if self.mode is not SwitchMode.INSERT_PHOTON:
                raise ConfigurationError(
                    f"switch {self.switch_id}: bypass requires INSERT_PHOTON, is {self.mode}"
                )
            self.mode = SwitchMode.BYPASS
            self.bypass_cycle = cycle
        elif action == "deliver":
            if self.pad_type != "single":
                raise ConfigurationError("deliver is reserved for the output switch")
            self.mode = SwitchMode.INSERT_PHOTON
        else:
            raise ParameterError(f"unknown switch action {action!r}")
        self.config_count += 1

    def reset(self) -> None:
        self.config_count = 0
        self.mode = SwitchMode.READY
        self.bypass_cycle = None


class SwitchBank:
    """Per-episode switch state: ``m`` insertion pads per source + output."""

    def __init__(self, sources: int, per_source: int) -> None:
        self.sources = sources
        self.per_source = per_source
        self.slots: list[list[SwitchState]] = [
            [SwitchState(switch_id=s * per_source + k) for k in range(per_source)]
            for s in range(sources)
        ]
        self.next_slot = [0] * sources
        self.output_switch = SwitchState(switch_id=-1, pad_type="single")

    def has_ready(self, source: int) -> bool:
        return self.next_slot[source] < self.per_source

    def insert(self, source: int, cycle: int) -> int:
        slot = self.next_slot[source]
        if slot >= self.per_source:
            raise ConfigurationError(f"source {source}: switch budget exhausted")
        self.slots[source][slot].configure("insert", cycle)
        self.next_slot[source] = slot + 1
        return slot

    def bypass(self, source: int, slot: int, cycle: int) -> None:
        self.slots[source][slot].configure("bypass", cycle)

    def tick(self, cycle: int) -> None:
        """Retire switches whose bypass duty completed before ``cycle``."""
        for row in self.slots:
            for sw in row:
                if sw.mode is SwitchMode.BYPASS and sw.bypass_cycle is not None:
                    if sw.bypass_cycle < cycle:
                        sw.mode = SwitchMode.EXHAUSTED

    def reset(self) -> None:
        for row in self.slots:
            for sw in row:
                sw.reset()
        self.next_slot = [0] * self.sources
        self.output_switch.reset()


def reset_source(bank: SwitchBank) -> SwitchBank:
    """Return every switch of ``bank`` to READY with zero configurations.

    Physically this is the switch fall time; episode repetition accounts
    for it through :func:`racetrack.timing.repetition_time`'s reset term.
    """
    bank.reset()
    return bank


@dataclass(frozen=True)
class RacetrackConfig:
    """Full simulation configuration."""

    plan: ExperimentPlan = field(default_factory=ExperimentPlan)
    timing: TimingParams = field(default_factory=TimingParams)
    loss: LossParams = field(default_factory=LossParams)
    herald: HeraldModel = field(default_factory=HeraldModel)
    spdc: SpdcParams | None = None
    switches_per_source: int = 16
    generation_mode: GenerationMode = "direct-p"
    dead_time_cycles: int = 0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.switches_per_source < 1:
            raise ParameterError(
                f"switch budget must be >= 1, got {self.switches_per_source}"
            )
        if self.dead_time_cycles < 0:
            raise ParameterError(
                f"dead time must be nonnegative, got {self.dead_time_cycles}"
            )
        if self.generation_mode not in ("direct-p", "spdc-derived"):
            raise ParameterError(f"unknown generation mode {self.generation_mode!r}")
        if self.generation_mode == "spdc-derived":
            if self.spdc is None:
                raise ConfigurationError("spdc-derived mode requires SpdcParams")
            if self.plan.eta_application != "output":
                raise ConfigurationError(
                    "spdc-derived mode folds the herald into the click "
                    "probability; eta_application must be 'output'"
                )
        if self.rng_seed < 0:
            raise ParameterError(f"rng seed must be nonnegative, got {self.rng_seed}")


@dataclass(frozen=True)
class SwitchAction:
    target: Literal["source", "output"]
    source: int | None
    slot: int | None
    action: str
    config_count: int


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    heralds: tuple[int, ...]
    selected: int | None
    actions: tuple[SwitchAction, ...]
    stored_source: int | None
    stored_since: int | None
    photon_lost: bool
    replaced_alive: bool


@dataclass
class CycleEventLog:
    """Per-episode schedule: one record per cycle plus delivery outcome."""

    trial: int
    n_cycles: int
    sources: int
    switches_per_source: int
    records: list[CycleRecord]
    output_configured: bool
    output_success: bool

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "type": "episode",
                    "trial": self.trial,
                    "n_cycles": self.n_cycles,
                    "sources": self.sources,
                    "switches_per_source": self.switches_per_source,
                }
            )
        ]
        for rec in self.records:
            payload = asdict(rec)
            payload["type"] = "cycle"
            payload["heralds"] = list(rec.heralds)
            payload["actions"] = [asdict(a) for a in rec.actions]
            lines.append(json.dumps(payload))
        lines.append(
            json.dumps(
                {
                    "type": "output",
                    "configured": self.output_configured,
                    "success": self.output_success,
                }
            )
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "CycleEventLog":
        header: dict | None = None
        records: list[CycleRecord] = []
        configured = False
        success = False
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            kind = obj.pop("type")
            if kind == "episode":
                header = obj
            elif kind == "cycle":
                obj["heralds"] = tuple(obj["heralds"])
                obj["actions"] = tuple(SwitchAction(**a) for a in obj["actions"])
                records.append(CycleRecord(**obj))
            elif kind == "output":
                configured = obj["configured"]
                success = obj["success"]
            else:
                raise ParameterError(f"unknown event record type {kind!r}")
        if header is None:
            raise ParameterError("event log missing episode header")
        return cls(
            trial=header["trial"],
            n_cycles=header["n_cycles"],
            sources=header["sources"],
            switches_per_source=header["switches_per_source"],
            records=records,
            output_configured=configured,
            output_success=success,
        )


@dataclass
class SimulationResult:
    """Aggregates over all trials of one configuration."""

    estimate: float
    ci99: float
    trials: int
    successes: int
    heralds_mean: float
    discarded_mean: float
    lost_mean: float
    exhausted_runs: int
    switch_usage: np.ndarray  # (S, min(m, N), 3): trials ending at 0/1/2 configs
    output_switch_usage: np.ndarray  # (2,): trials ending at 0/1 configs
    t_mux_effective: float
    assumptions: dict
    event_logs: list[CycleEventLog] | None = None

    @property
    def ci_low(self) -> float:
        return max(0.0, self.estimate - self.ci99)

    @property
    def ci_high(self) -> float:
        return min(1.0, self.estimate + self.ci99)


@dataclass(frozen=True)
class _Derived:
    """Scalars shared by the vectorized and the event-logging paths."""

    n_cycles: int
    sources: int
    budget: int
    p_gen: float
    p_out: float
    s_loop: float
    dead: int
    policy: str
    block: int  # doubles consumed per trial
    purity: float | None


def _derive(config: RacetrackConfig) -> _Derived:
    plan = config.plan
    n, s_count = plan.cycles_n, plan.sources_s
    purity = None
    if config.generation_mode == "spdc-derived":
        dist = pair_distribution(config.spdc)
        p_gen = herald_click_probability(dist, config.herald)
        purity = heralded_single_purity(dist, config.herald) if p_gen > 0 else None
        p_out = plan.detector_eta * config.loss.output_coupling
    elif plan.eta_application == "per-herald":
        p_gen = plan.gen_prob_p * plan.detector_eta
        p_out = config.loss.output_coupling
    else:
        p_gen = plan.gen_prob_p
        p_out = plan.detector_eta * config.loss.output_coupling
    s_loop = loop_survival(inner_loop_delay(config.timing), 1, config.loss)
    return _Derived(
        n_cycles=n,
        sources=s_count,
        budget=config.switches_per_source,
        p_gen=p_gen,
        p_out=p_out,
        s_loop=s_loop,
        dead=config.dead_time_cycles,
        policy=plan.storage_policy,
        block=n * s_count + n,
        purity=purity,
    )


def _draw_block(seed: int, start_trial: int, n_trials: int, block: int) -> np.ndarray:
    """Doubles for trials ``[start, start+n)`` as an ``(n, block)`` matrix."""
    bg = np.random.PCG64(np.random.SeedSequence(seed))
    if start_trial:
        bg.advance(start_trial * block)
    return np.random.Generator(bg).random(n_trials * block).reshape(n_trials, block)


class _Counters:
    """Order-independent aggregation: plain sums over trials."""

    def __init__(self, d: _Derived) -> None:
        m_eff = min(d.budget, d.n_cycles)
        self.successes = 0
        self.heralds = 0
        self.discarded = 0
        self.lost = 0
        self.exhausted = 0
        self.trials = 0
        self.k_hist = np.zeros((d.sources, d.n_cycles + 1), dtype=np.int64)
        self.one_config = np.zeros((d.sources, m_eff), dtype=np.int64)
        self.output_used = 0

    def merge(self, other: "_Counters") -> None:
        self.successes += other.successes
        self.heralds += other.heralds
        self.discarded += other.discarded
        self.lost += other.lost
        self.exhausted += other.exhausted
        self.trials += other.trials
        self.k_hist += other.k_hist
        self.one_config += other.one_config
        self.output_used += other.output_used


def _run_chunk(config: RacetrackConfig, d: _Derived, start: int, stop: int) -> _Counters:
    """Vectorized trials ``[start, stop)``; requires ``dead == 0``."""
    n = stop - start
    N, S, m = d.n_cycles, d.sources, d.budget
    out = _Counters(d)
    out.trials = n
    U = _draw_block(config.rng_seed, start, n, d.block)
    gen = U[:, : N * S].reshape(n, N, S) < d.p_gen
    u_loss = U[:, N * S : N * S + N - 1]
    u_out = U[:, -1]
    del U

    any_gen = gen.any(axis=2)
    heralds_t = gen.sum(axis=(1, 2))
    rows = np.arange(n)

    if d.policy == "keep-first":
        # only the first heralding cycle inserts; budget (>= 1) never binds
        first_only = np.cumsum(any_gen, axis=1) == 1
        insert_mask = any_gen & first_only
    elif m >= N:
        insert_mask = any_gen  # budget cannot bind: at most N inserts per source
    else:
        insert_mask = np.zeros((n, N), dtype=bool)
        sel_store = np.zeros((n, N), dtype=np.int64)
        used = np.zeros((n, S), dtype=np.int64)
        exhausted = np.zeros(n, dtype=bool)
        for c in range(N):
            g = gen[:, c, :]
            cand = g & (used < m)
            has_c = cand.any(axis=1)
            sel = cand.argmax(axis=1)
            exhausted |= g.any(axis=1) & ~has_c
            insert_mask[:, c] = has_c
            sel_store[:, c] = sel
            used[rows[has_c], sel[has_c]] += 1
        out.exhausted = int(exhausted.sum())

    has = insert_mask.any(axis=1)
    k_t = insert_mask.sum(axis=1)
    c_last = np.where(has, N - 1 - np.argmax(insert_mask[:, ::-1], axis=1), 0)

    # prefix fail counts: F[:, c] = failed survival draws among traversals [0, c)
    fail = u_loss >= d.s_loop
    F = np.zeros((n, N), dtype=np.int64)
    if N > 1:
        np.cumsum(fail, axis=1, out=F[:, 1:])
    total_fails = F[:, N - 1]
    final_alive = has & (total_fails - F[rows, c_last] == 0)
    success = final_alive & (u_out < d.p_out)

    # consecutive insertions within a trial bound the lifetime of each
    # replaced photon: it is discarded alive iff no traversal in between failed
    tt, cc = np.nonzero(insert_mask)
    repl_alive = np.zeros(n, dtype=np.int64)
    if tt.size > 1:
        same = tt[1:] == tt[:-1]
        pair_alive = same & (F[tt[1:], cc[1:]] == F[tt[:-1], cc[:-1]])
        np.add.at(repl_alive, tt[1:][pair_alive], 1)

    out.successes = int(success.sum())
    out.heralds = int(heralds_t.sum())
    out.discarded = int((heralds_t - k_t).sum() + repl_alive.sum())
    out.lost = int(np.where(has, k_t - repl_alive - final_alive, 0).sum())
    out.output_used = int(has.sum())

    if tt.size:
        if d.policy == "keep-first" or m >= N:
            sel_ins = gen[tt, cc, :].argmax(axis=1)
        else:
            sel_ins = sel_store[tt, cc]
        k_ts = np.zeros((n, S), dtype=np.int64)
        np.add.at(k_ts, (tt, sel_ins), 1)
        for s in range(S):
            out.k_hist[s] += np.bincount(k_ts[:, s], minlength=N + 1)
        end = cc == N - 1
        if end.any():
            s_end = sel_ins[end]
            slot_end = k_ts[tt[end], s_end] - 1
            np.add.at(out.one_config, (s_end, slot_end), 1)
    else:
        out.k_hist[:, 0] += n
    return out


def _run_logged(
    config: RacetrackConfig, d: _Derived, start: int, stop: int, keep_logs: bool
) -> tuple[_Counters, list[CycleEventLog]]:
    """Reference per-trial path with switch state machine and event logs.

    Consumes the same draw blocks as :func:`_run_chunk`, so aggregates are
    identical; additionally supports herald dead time.
    """
    N, S, m = d.n_cycles, d.sources, d.budget
    out = _Counters(d)
    logs: list[CycleEventLog] = []
    bank = SwitchBank(S, m)
    for trial in range(start, stop):
        reset_source(bank)
        block = _draw_block(config.rng_seed, trial, 1, d.block)[0]
        u_gen = block[: N * S].reshape(N, S)
        u_loss = block[N * S : N * S + N - 1]
        u_out = block[-1]

        stored_since: int | None = None
        stored_source: int | None = None
        stored_alive = False
        any_insert = False
        pending: tuple[int, int] | None = None
        last_click = [-(d.dead + 1)] * S
        exhausted = False
        records: list[CycleRecord] = []

        for c in range(N):
            bank.tick(c)
            actions: list[SwitchAction] = []
            photon_lost = False
            if stored_since is not None and c > 0 and stored_alive:
                if u_loss[c - 1] >= d.s_loop:
                    stored_alive = False
                    photon_lost = True
                    out.lost += 1
            if pending is not None:
                src, slot = pending
                bank.bypass(src, slot, cycle=c)
                actions.append(
                    SwitchAction("source", src, slot, "bypass",
                                 bank.slots[src][slot].config_count)
                )
                pending = None
            heralds = tuple(
                s
                for s in range(S)
                if c - last_click[s] > d.dead and u_gen[c, s] < d.p_gen
            )
            for s in heralds:
                last_click[s] = c
            out.heralds += len(heralds)
            selected: int | None = None
            replaced_alive = False
            if heralds and not (d.policy == "keep-first" and any_insert):
                ready = [s for s in heralds if bank.has_ready(s)]
                if ready:
                    selected = ready[0]
                    slot = bank.insert(selected, cycle=c)
                    actions.append(
                        SwitchAction("source", selected, slot, "insert",
                                     bank.slots[selected][slot].config_count)
                    )
                    if c < N - 1:
                        pending = (selected, slot)
                    if stored_since is not None and stored_alive:
                        replaced_alive = True
                        out.discarded += 1
                    stored_source, stored_since, stored_alive = selected, c, True
                    any_insert = True
                else:
                    exhausted = True
            out.discarded += len(heralds) - (1 if selected is not None else 0)
            records.append(
                CycleRecord(
                    cycle=c,
                    heralds=heralds,
                    selected=selected,
                    actions=tuple(actions),
                    stored_source=stored_source,
                    stored_since=stored_since,
                    photon_lost=photon_lost,
                    replaced_alive=replaced_alive,
                )
            )

        success = False
        if any_insert:
            bank.output_switch.configure("deliver")
            out.output_used += 1
            if stored_alive and u_out < d.p_out:
                success = True
        out.successes += int(success)
        out.exhausted += int(exhausted)
        out.trials += 1
        for s in range(S):
            k = bank.next_slot[s]
            out.k_hist[s, k] += 1
            for slot in range(k):
                if bank.slots[s][slot].config_count == 1:
                    out.one_config[s, slot] += 1
        if keep_logs:
            logs.append(
                CycleEventLog(
                    trial=trial,
                    n_cycles=N,
                    sources=S,
                    switches_per_source=m,
                    records=records,
                    output_configured=any_insert,
                    output_success=success,
                )
            )
    return out, logs


def _fast_worker(config: RacetrackConfig, start: int, stop: int) -> _Counters:
    return _run_chunk(config, _derive(config), start, stop)


def _finalize(
    config: RacetrackConfig,
    d: _Derived,
    agg: _Counters,
    logs: list[CycleEventLog] | None,
) -> SimulationResult:
    trials = agg.trials
    est = agg.successes / trials
    ci = Z99 * math.sqrt(est * (1.0 - est) / trials)
    m_eff = min(d.budget, d.n_cycles)
    # switches ending with >= 1 config: trials whose source used > slot switches
    used = np.cumsum(agg.k_hist[:, ::-1], axis=1)[:, ::-1]  # used[s, j] = #k >= j
    used_slots = used[:, 1 : m_eff + 1]
    u1 = agg.one_config
    u2 = used_slots - u1
    u0 = trials - used_slots
    switch_usage = np.stack([u0, u1, u2], axis=-1)
    output_usage = np.array([trials - agg.output_used, agg.output_used])
    assumptions = {
        "generation_mode": config.generation_mode,
        "storage_policy": d.policy,
        "eta_application": config.plan.eta_application,
        "per_cycle_gen_prob": d.p_gen,
        "per_loop_survival": d.s_loop,
        "delivery_prob_factor": d.p_out,
        "dead_time_cycles": d.dead,
    }
    if d.purity is not None:
        assumptions["heralded_single_purity"] = d.purity
    return SimulationResult(
        estimate=est,
        ci99=ci,
        trials=trials,
        successes=agg.successes,
        heralds_mean=agg.heralds / trials,
        discarded_mean=agg.discarded / trials,
        lost_mean=agg.lost / trials,
        exhausted_runs=agg.exhausted,
        switch_usage=switch_usage,
        output_switch_usage=output_usage,
        t_mux_effective=repetition_time(
            d.n_cycles, config.timing.effective_pump_period, config.timing.switch_off
        ),
        assumptions=assumptions,
        event_logs=logs,
    )


#: chunk budget for the vectorized path, in bytes of drawn doubles.
_CHUNK_BYTES = 64 << 20


def simulate(
    config: RacetrackConfig,
    trials: int,
    *,
    workers: int = 1,
    keep_logs: bool = False,
) -> SimulationResult:
    """Run ``trials`` independent episodes of ``config``.

    ``workers`` only partitions the trial range (optionally across
    processes); results are bit-identical for any value. ``keep_logs``
    switches to the event-logging path (same draws, same aggregates) and
    attaches one :class:`CycleEventLog` per trial. Herald dead time also
    routes through that path.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    d = _derive(config)

    if keep_logs or d.dead > 0:
        agg, logs = _run_logged(config, d, 0, trials, keep_logs)
        return _finalize(config, d, agg, logs if keep_logs else None)

    chunk = max(1, min(trials, _CHUNK_BYTES // (d.block * 8)))
    bounds = list(range(0, trials, chunk)) + [trials]
    ranges = list(zip(bounds[:-1], bounds[1:]))
    agg = _Counters(d)
    if workers == 1 or len(ranges) == 1:
        for a, b in ranges:
            agg.merge(_run_chunk(config, d, a, b))
    else:
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_fast_worker, config, a, b) for a, b in ranges]
                for fut in futures:  # merge in submission order: deterministic
                    agg.merge(fut.result())
        except OSError:
            for a, b in ranges:  # no process support: same arithmetic, same result
                agg.merge(_run_chunk(config, d, a, b))
    return _finalize(config, d, agg, None)


def validate_schedule(log: CycleEventLog) -> list[str]:
    """Check a schedule against the one-shot switch contract.

    Rules: records chronological and complete; per-pad configuration caps
    (two for insertion switches, one for the output switch); first
    configuration of a pad is the insert, the second the bypass exactly one
    cycle later (an insertion in the final cycle needs no bypass — the
    photon leaves through the output switch instead); pads of a source are
    consumed in slot order within budget; an insertion's source must have
    heralded in that cycle. Returns human-readable violations, empty when
    the schedule conforms.
    """
    violations: list[str] = []
    N = log.n_cycles
    m = log.switches_per_source

    for idx, rec in enumerate(log.records):
        if rec.cycle != idx:
            violations.append(
                f"record {idx}: cycle {rec.cycle} out of order (expected {idx})"
            )
    if len(log.records) != N:
        violations.append(
            f"episode has {len(log.records)} records for {N} cycles"
        )

    configs: dict[tuple[int, int], list[tuple[int, str, int]]] = {}
    next_slot: dict[int, int] = {}
    for rec in log.records:
        inserted = [a for a in rec.actions if a.action == "insert"]
        if len(inserted) > 1:
            violations.append(f"cycle {rec.cycle}: multiple insertions")
        for act in rec.actions:
            if act.target == "output":
                violations.append(
                    f"cycle {rec.cycle}: output switch configured mid-episode"
                )
                continue
            key = (act.source, act.slot)
            configs.setdefault(key, []).append((rec.cycle, act.action, act.config_count))
            if act.action == "insert":
                if rec.selected != act.source:
                    violations.append(
                        f"cycle {rec.cycle}: insert by source {act.source} "
                        f"but selected is {rec.selected}"
                    )
                if act.source not in rec.heralds:
                    violations.append(
                        f"cycle {rec.cycle}: source {act.source} inserted without herald"
                    )
                expected = next_slot.get(act.source, 0)
                if act.slot != expected:
                    violations.append(
                        f"cycle {rec.cycle}: source {act.source} used slot "
                        f"{act.slot}, expected {expected}"
                    )
                next_slot[act.source] = max(expected, (act.slot or 0) + 1)
                if act.slot is not None and act.slot >= m:
                    violations.append(
                        f"cycle {rec.cycle}: source {act.source} exceeded "
                        f"switch budget ({act.slot} >= {m})"
                    )

    for (source, slot), events in sorted(configs.items()):
        if len(events) > 2:
            violations.append(
                f"switch ({source},{slot}): {len(events)} configurations (max 2)"
            )
        kinds = [e[1] for e in events]
        if kinds and kinds[0] != "insert":
            violations.append(
                f"switch ({source},{slot}): first configuration is {kinds[0]!r}"
            )
        if len(events) >= 2:
            if kinds[1] != "bypass":
                violations.append(
                    f"switch ({source},{slot}): second configuration is {kinds[1]!r}"
                )
            elif events[1][0] != events[0][0] + 1:
                violations.append(
                    f"switch ({source},{slot}): bypass at cycle {events[1][0]}, "
                    f"expected {events[0][0] + 1}"
                )
        elif kinds == ["insert"] and events[0][0] < N - 1:
            violations.append(
                f"switch ({source},{slot}): insert at cycle {events[0][0]} "
                "never followed by bypass"
            )
        for i, (_, _, count) in enumerate(events, start=1):
            if count != i:
                violations.append(
                    f"switch ({source},{slot}): configuration count {count} "
                    f"recorded for configuration #{i}"
                )
    return violations


def validate_schedules(logs: Iterable[CycleEventLog]) -> list[str]:
    """Validate many episodes; violations are prefixed with the trial id."""
    out: list[str] = []
    for log in logs:
        for v in validate_schedule(log):
            out.append(f"trial {log.trial}: {v}")
    return out
