"""How fast does Metric 2 fall as noise drowns the gap signal?

Generates one task population, adds Gaussian noise of increasing size to the
true gap and scores each noisy measure.  Prints a small table; ``--csv`` writes
it to a file as well.

    python3 scripts/noise_sweep.py --task task1 --replicas 10
"""

import argparse
import csv

from gengap.baselines import measure_noisy_oracle
from gengap.metrics import score_task
from gengap.synth import PlantSpec, gap_range, generate_population, preset_space


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--task", default="task1")
    parser.add_argument("--replicas", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--kmax", type=int, default=2)
    parser.add_argument("--ratios", type=float, nargs="+", default=[0, 0.01, 0.03, 0.1, 0.3, 1, 3, 10])
    parser.add_argument("--csv")
    args = parser.parse_args()

    pop, _ = generate_population(preset_space(args.task), PlantSpec(seed=args.seed), args.replicas, args.task)
    spread = gap_range(pop)
    rows = []
    for ratio in args.ratios:
        sigma = ratio * spread
        noisy = pop.with_measure("noisy", measure_noisy_oracle(pop, sigma, args.seed).values)
        s = score_task(noisy, "noisy", k_max=args.kmax)
        rows.append((ratio, sigma, s.psi, s.metric2, "+".join(s.argmin_cond_set)))

    print(f"{args.task}: {len(pop)} models, gap range {spread:.4g}")
    print(f"{'sigma/range':>11} {'sigma':>9} {'psi':>8} {'J':>8}  argmin")
    for ratio, sigma, psi, j, argmin in rows:
        print(f"{ratio:>11g} {sigma:>9.4g} {psi:>8.4f} {j:>8.4f}  {argmin or '-'}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma_over_range", "sigma", "psi", "metric2", "argmin_cond_set"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
