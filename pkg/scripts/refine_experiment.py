"""Noise-corruption trials: does rho refinement make Griffin-Lim reach a threshold sooner?

Prints the trial CSV followed by a one-line summary on stderr.
"""
import argparse
import sys

from tfcons import synth
from tfcons.phase_recon import GlaConfig
from tfcons.refine import TRIAL_CSV_HEADER, RefineConfig, corruption_trial
from tfcons.spec_pipeline import magnitude, to_log
from tfcons.tf_transform import StftConfig, stft


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seconds", type=float, default=1.0)
    ap.add_argument("--noise", type=float, default=0.01, help="std as a fraction of the log dynamic range")
    ap.add_argument("--momentum", type=float, default=0.99)
    ap.add_argument("--iters", type=int, default=100)
    ap.add_argument("--threshold", type=float, default=0.1)
    ap.add_argument("--step-size", type=float, default=RefineConfig.step_size)
    ap.add_argument("--target-rho", type=float, default=RefineConfig.target_rho)
    args = ap.parse_args()

    cfg = StftConfig()
    gla = GlaConfig(max_iterations=args.iters, tolerance=0.0, momentum=args.momentum)
    rc = RefineConfig(step_size=args.step_size, target_rho=args.target_rho)
    print(TRIAL_CSV_HEADER)
    faster = 0
    for trial in range(args.trials):
        w = synth.speech_like(trial, args.seconds)
        L = to_log(magnitude(stft(w, cfg))).values
        row = corruption_trial(trial, 5000 + trial, L, cfg, gla, args.noise, rc, args.threshold, len(w))
        print(row.csv_row(), flush=True)
        never = args.iters + 1
        faster += (row.iters_refined or never) < (row.iters_raw or never)
    print(f"refined faster in {faster}/{args.trials} trials", file=sys.stderr)


if __name__ == "__main__":
    main()
