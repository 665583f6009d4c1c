"""Toy adversarial runs with and without the consistency term, over a sweep of lambda_c.

Prints CSV: lambda_c,seed,rho_baseline,rho_consistency,delta
and a per-lambda summary on stderr.
"""
import argparse
import sys
from dataclasses import replace

from tfcons import toy_adversarial as ta


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[3e-4, 1e-2, 1e-1, 1.0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--steps", type=int, default=ta.ExperimentConfig.steps)
    args = ap.parse_args()
    print("lambda_c,seed,rho_baseline,rho_consistency,delta")
    for lam in args.lambdas:
        wins = 0
        for seed in range(args.seeds):
            base, constrained = ta.paired_configs(seed, steps=args.steps)
            constrained = replace(constrained, weights=replace(constrained.weights, lambda_c=lam))
            rows = ta.run_experiment(base, constrained)
            delta = rows[1].mean_rho - rows[0].mean_rho
            wins += delta >= 0
            print(f"{lam:g},{seed},{rows[0].mean_rho:.6f},{rows[1].mean_rho:.6f},{delta:+.6f}", flush=True)
        print(f"lambda_c={lam:g}: consistency >= baseline in {wins}/{args.seeds} seeds", file=sys.stderr)


if __name__ == "__main__":
    main()
