#!/usr/bin/env python3
"""Run all three continuation flows on the Hammerstein benchmark at one
noise level and compare stop times, step counts, and errors.

    python scripts/flow_comparison.py [--delta-rel 0.01] [--seed 0]
"""
import argparse
import sys
import time

from monoreg import (
    FlowConfig,
    NoiseSpec,
    flow_gradient,
    flow_newton,
    flow_simple,
    gen_noise,
    hammerstein_operator,
    init_u0,
    make_continuous,
    make_hammerstein,
)
from monoreg.schedules import GRADIENT_FLOW, NEWTON_FLOW, SIMPLE_FLOW


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--delta-rel", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    prob = make_hammerstein(50)
    F = hammerstein_operator(prob)
    one = prob.exact_solution
    f_delta, delta = gen_noise(F(one), NoiseSpec(args.delta_rel, args.seed))

    runs = (
        ("newton", flow_newton,
         make_continuous(NEWTON_FLOW, b=1.0, c=7.0, d=32.0)),
        ("gradient", flow_gradient,
         make_continuous(GRADIENT_FLOW, b=0.25, c=576.0, d=0.25)),
        ("simple", flow_simple,
         make_continuous(SIMPLE_FLOW, b=0.5, c=9.0, d=1.0)),
    )
    print(f"{'flow':>10} {'status':>24} {'t_stop':>10} {'steps':>8} "
          f"{'rel_error':>10} {'wall':>7}")
    for name, runner, schedule in runs:
        cfg = FlowConfig(schedule=schedule, C1=1.5, zeta=0.9, step_init=0.1,
                         t_max=1e6)
        u0 = init_u0(F, f_delta, float(schedule.a(0.0)))
        tic = time.time()
        report = runner(F, f_delta, delta, cfg, u0)
        err = (report.u_final - one).norm() / one.norm()
        print(f"{name:>10} {report.status:>24} {report.t_stop:>10.1f} "
              f"{report.steps_taken:>8d} {err:>10.4f} "
              f"{time.time() - tic:>6.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
