"""Survey rho for clean clips and i.i.d. noise across several STFT grids.

Prints CSV: config,kind,n,mean_rho,min_rho,max_rho
"""
import argparse

import numpy as np

from tfcons import synth
from tfcons.consistency import ConsistencyConfig, rho_value
from tfcons.spec_pipeline import magnitude, to_log
from tfcons.tf_transform import StftConfig, stft

GRIDS = {
    "hann-512-128": StftConfig(),
    "hann-512-64": StftConfig(hop=64),
    "hann-256-64": StftConfig(256, 64),
    "gauss-512-128": StftConfig(window="gaussian", gaussian_lambda=128.0 * 512),
    "gauss-512-16-fft1024": StftConfig(512, 16, "gaussian", fft_size=1024, gaussian_lambda=16.0 * 1024),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clips", type=int, default=20)
    ap.add_argument("--seconds", type=float, default=1.0)
    args = ap.parse_args()
    print("config,kind,n,mean_rho,min_rho,max_rho")
    for name, cfg in GRIDS.items():
        cc = ConsistencyConfig.for_stft(cfg)
        groups = {"speech": [], "chirp": [], "noise": []}
        for i in range(args.clips):
            for kind, maker in (("speech", synth.speech_like), ("chirp", synth.chirp_mix)):
                L = to_log(magnitude(stft(maker(i, args.seconds), cfg))).values
                groups[kind].append(rho_value(L, cc))
            groups["noise"].append(rho_value(np.random.default_rng(i).standard_normal(L.shape), cc))
        for kind, vals in groups.items():
            v = np.array(vals)
            print(f"{name},{kind},{len(v)},{v.mean():.4f},{v.min():.4f},{v.max():.4f}", flush=True)


if __name__ == "__main__":
    main()
