#!/usr/bin/env python3
"""Cross-check the Monte Carlo engine against the closed-form model.

Runs a small set of designs through both paths and prints, per design,
the analytic delivery probability, the Monte Carlo estimate with its 99%
confidence interval, and whether the analytic value falls inside it.

Usage:
    python scripts/check_model.py [--trials 100000] [--seed 0]
"""

import argparse
import sys
import time

from racetrack import (
    ExperimentPlan,
    LossParams,
    RacetrackConfig,
    TimingParams,
    output_probability,
    simulate,
)

DESIGNS = [
    dict(sources_s=1, cycles_n=134, gen_prob_p=0.05, delay=9.0, loss=0.0055,
         storage_policy="replace-with-latest"),
    dict(sources_s=5, cycles_n=60, gen_prob_p=0.02, delay=20.0, loss=0.0055,
         storage_policy="replace-with-latest"),
    dict(sources_s=3, cycles_n=40, gen_prob_p=0.1, delay=9.0, loss=0.024,
         storage_policy="keep-first"),
    dict(sources_s=8, cycles_n=50, gen_prob_p=0.01, delay=5.0, loss=0.1,
         storage_policy="replace-with-latest"),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    misses = 0
    for i, d in enumerate(DESIGNS):
        plan = ExperimentPlan(
            sources_s=d["sources_s"], cycles_n=d["cycles_n"],
            gen_prob_p=d["gen_prob_p"], storage_policy=d["storage_policy"],
        )
        timing = TimingParams.for_loop_delay(d["delay"])
        loss = LossParams(waveguide_loss_db_ns=d["loss"])
        analytic = output_probability(plan, timing, loss)
        config = RacetrackConfig(
            plan=plan, timing=timing, loss=loss,
            switches_per_source=plan.cycles_n, rng_seed=args.seed + i,
        )
        t0 = time.perf_counter()
        result = simulate(config, args.trials)
        dt = time.perf_counter() - t0
        inside = result.ci_low <= analytic <= result.ci_high
        misses += not inside
        print(
            f"S={plan.sources_s:<2} N={plan.cycles_n:<3} p={plan.gen_prob_p:<5g} "
            f"delay={d['delay']:<5g} loss={d['loss']:<6g} {plan.storage_policy:<19} "
            f"analytic={analytic:.5f} mc={result.estimate:.5f}"
            f"±{result.ci99:.5f} inside={inside} ({dt:.2f}s)"
        )
    print(f"{len(DESIGNS) - misses}/{len(DESIGNS)} inside the 99% interval")
    return 0 if misses <= 1 else 1


if __name__ == "__main__":
    sys.exit(main())
