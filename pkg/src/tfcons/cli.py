"""Command-line entry point: ``tfcons <subcommand> ...``.

Exit status is 0 on success, 2 on usage errors and 1 on processing errors.
Data goes to files or stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import fields, replace

import numpy as np

from . import consistency as cons
from . import fid_metric, phase_recon, refine, signal_io, spec_pipeline, synth, toy_adversarial
from .errors import TfconsError
from .tf_transform import ComplexSpectrogram, StftConfig, istft, stft

log = logging.getLogger("tfcons")

CONFIG_ENV = "TFCONS_CONFIG"


def atomic_write(path, data: bytes | str) -> None:
    mode = "w" if isinstance(data, str) else "wb"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".part", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, path: str | None) -> None:
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _default_stft_kwargs() -> dict:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    allowed = {f.name for f in fields(StftConfig)}
    return {k: v for k, v in cfg.get("stft", cfg).items() if k in allowed}


def stft_config(args) -> StftConfig:
    kw = _default_stft_kwargs()
    for name in ("frame_size", "hop", "window", "fft_size", "gaussian_lambda", "sample_rate"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = value
    if getattr(args, "uncentered", False):
        kw["centered"] = False
    return StftConfig(**kw)


def consistency_config(args, cfg: StftConfig) -> cons.ConsistencyConfig:
    return cons.ConsistencyConfig.for_stft(cfg, lam=getattr(args, "lam", None))


def _add_stft_args(p):
    g = p.add_argument_group("STFT")
    g.add_argument("--frame-size", dest="frame_size", type=int)
    g.add_argument("--hop", type=int)
    g.add_argument("--window", choices=("hann", "gaussian", "rectangular"))
    g.add_argument("--fft-size", dest="fft_size", type=int)
    g.add_argument("--gaussian-lambda", dest="gaussian_lambda", type=float)
    g.add_argument("--sample-rate", dest="sample_rate", type=int)
    g.add_argument("--uncentered", action="store_true")


def _add_gla_args(p):
    g = p.add_argument_group("Griffin-Lim")
    g.add_argument("--iters", type=int, default=100)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--momentum", type=float, default=0.0)
    g.add_argument("--init", choices=("zero", "random"), default="zero")
    g.add_argument("--seed", type=int, default=0)


def _gla_config(args) -> phase_recon.GlaConfig:
    return phase_recon.GlaConfig(args.iters, args.tol, args.momentum, args.init, args.seed)


def _load_magnitude(path, cfg: StftConfig, floor_db: float):
    """Log-scale magnitude from a WAV (via STFT) or a SPEC1 file."""
    if path.lower().endswith(".wav"):
        w = signal_io.read_wav(path, expected_rate=cfg.sample_rate)
        return spec_pipeline.to_log(spec_pipeline.magnitude(stft(w, cfg)), floor_db)
    m = spec_pipeline.read_spec(path)
    if m.scale == "linear":
        m = spec_pipeline.to_log(m, floor_db)
    return m


# --- subcommands -----------------------------------------------------------

def cmd_stft(args):
    cfg = stft_config(args)
    w = signal_io.read_wav(args.input, expected_rate=cfg.sample_rate)
    s = stft(w, cfg)
    buf_path = args.output
    with tempfile.NamedTemporaryFile(dir=os.path.dirname(os.path.abspath(buf_path)), suffix=".npz", delete=False) as fh:
        np.savez(fh, values=s.values, original_length=s.original_length, sample_rate=s.sample_rate,
                 config=json.dumps(cfg.__dict__))
        tmp = fh.name
    os.replace(tmp, buf_path)


def cmd_istft(args):
    with np.load(args.input) as z:
        cfg = StftConfig(**json.loads(str(z["config"])))
        s = ComplexSpectrogram(z["values"], cfg, int(z["original_length"]), int(z["sample_rate"]))
    signal_io.write_wav(istft(s), args.output)


def cmd_preprocess(args):
    cfg = stft_config(args)
    w = signal_io.read_wav(args.input, expected_rate=cfg.sample_rate)
    clips = signal_io.segment(w, args.segment) if args.segment else [w]
    if not clips:
        raise TfconsError(f"{args.input} is shorter than one {args.segment}s segment")
    base, ext = os.path.splitext(args.output)
    for i, clip in enumerate(clips):
        out = args.output if len(clips) == 1 else f"{base}_{i:03d}{ext}"
        m = spec_pipeline.preprocess(clip, cfg, args.floor_db)
        spec_pipeline.write_spec(m, out)
        log.info("%s: %d bins x %d frames", out, *m.values.shape)


def cmd_postprocess(args):
    m = spec_pipeline.read_spec(args.input)
    spec_pipeline.write_spec(spec_pipeline.postprocess(m, args.policy), args.output)


def cmd_rho(args):
    cfg = stft_config(args)
    cc = consistency_config(args, cfg)
    report = cons.rho(_load_magnitude(args.input, cfg, args.floor_db), cc)
    emit(json.dumps(report.to_json()) + "\n", args.output)


def cmd_gamma(args):
    cfg = stft_config(args)
    cc = consistency_config(args, cfg)
    real = [_load_magnitude(p, cfg, args.floor_db) for p in args.real]
    fake = [_load_magnitude(p, cfg, args.floor_db) for p in args.fake]
    rep = cons.gamma_report(real, fake, cc)
    emit(json.dumps(rep.__dict__) + "\n", args.output)


def cmd_glim(args):
    cfg = stft_config(args)
    m = spec_pipeline.read_spec(args.input)
    if m.scale != "linear" or m.values.shape[0] != cfg.n_bins:
        m = spec_pipeline.postprocess(m)
    result = phase_recon.griffin_lim(m, cfg, _gla_config(args))
    signal_io.write_wav(result.waveform, args.output)
    trace_path = args.trace or os.path.splitext(args.output)[0] + "_trace.csv"
    lines = ["iteration,spectral_convergence"]
    lines += [f"{i},{v:.12g}" for i, v in enumerate(result.convergence_trace, 1)]
    atomic_write(trace_path, "\n".join(lines) + "\n")
    if args.plot:
        _plot_trace(result.convergence_trace, args.plot)
    log.info("GLA: %d iterations, final spectral convergence %.4g", result.iterations_run,
             result.convergence_trace[-1])


def _plot_trace(trace, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3))
    ax.semilogy(np.arange(1, len(trace) + 1), trace)
    ax.set_xlabel("iteration")
    ax.set_ylabel("spectral convergence")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_refine(args):
    cfg = stft_config(args)
    cc = consistency_config(args, cfg)
    m = _load_magnitude(args.input, cfg, args.floor_db)
    rc = refine.RefineConfig(args.step_size, args.max_steps, args.target_rho, args.max_deviation)
    refined, trace = refine.refine_spectrogram(m, cc, rc)
    spec_pipeline.write_spec(refined, args.output)
    sys.stdout.write(json.dumps({"rho_trace": trace}) + "\n")


def cmd_compare_gla(args):
    cfg = stft_config(args)
    gla = _gla_config(args)
    rc = refine.RefineConfig(args.step_size, args.max_steps, args.target_rho, args.max_deviation)
    rows = [refine.TRIAL_CSV_HEADER]
    inputs = args.inputs or [None] * args.trials
    for trial, path in enumerate(inputs):
        seed = args.seed + trial
        w = signal_io.read_wav(path, expected_rate=cfg.sample_rate) if path else synth.speech_like(seed, args.seconds)
        clean = spec_pipeline.to_log(spec_pipeline.magnitude(stft(w, cfg)), args.floor_db).values
        row = refine.corruption_trial(trial, seed, clean, cfg, gla, args.noise, rc, args.threshold, len(w))
        rows.append(row.csv_row())
    emit("\n".join(rows) + "\n", args.output)


def cmd_fid(args):
    real = fid_metric.fit_gaussian(fid_metric.read_features_csv(args.real))
    fake = fid_metric.fit_gaussian(fid_metric.read_features_csv(args.fake))
    emit(json.dumps({"fid": fid_metric.frechet_distance(real, fake)}) + "\n", args.output)


def cmd_toy_train(args):
    rows = [toy_adversarial.CSV_HEADER]
    for seed in range(args.seed, args.seed + args.seeds):
        base, constrained = toy_adversarial.paired_configs(seed, steps=args.steps, learning_rate=args.lr)
        if args.lambda_c is not None:
            constrained = replace(constrained, weights=replace(constrained.weights, lambda_c=args.lambda_c))
        rows += [r.csv_row() for r in toy_adversarial.run_experiment(base, constrained)]
    emit("\n".join(rows) + "\n", args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfcons", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stft", help="WAV -> complex spectrogram (.npz)")
    p.add_argument("input"); p.add_argument("output"); _add_stft_args(p)
    p.set_defaults(func=cmd_stft)

    p = sub.add_parser("istft", help="complex spectrogram (.npz) -> WAV")
    p.add_argument("input"); p.add_argument("output")
    p.set_defaults(func=cmd_istft)

    p = sub.add_parser("preprocess", help="WAV -> normalized, trimmed log magnitude (SPEC1)")
    p.add_argument("input"); p.add_argument("output"); _add_stft_args(p)
    p.add_argument("--floor-db", dest="floor_db", type=float, default=spec_pipeline.DEFAULT_FLOOR_DB)
    p.add_argument("--segment", type=float, help="split into clips of this many seconds first")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("postprocess", help="SPEC1 -> linear full-height SPEC1")
    p.add_argument("input"); p.add_argument("output")
    p.add_argument("--policy", choices=("copy", "floor"), default="copy")
    p.set_defaults(func=cmd_postprocess)

    for name, func, helptext in (("rho", cmd_rho, "consistency measure of a WAV or SPEC1 file"),):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input"); p.add_argument("-o", "--output"); _add_stft_args(p)
        p.add_argument("--floor-db", dest="floor_db", type=float, default=spec_pipeline.DEFAULT_FLOOR_DB)
        p.add_argument("--lam", type=float, help="Gaussian lambda (default: fitted to the window)")
        p.set_defaults(func=func)

    p = sub.add_parser("gamma", help="consistency critic between two sets")
    p.add_argument("--real", nargs="+", required=True); p.add_argument("--fake", nargs="+", required=True)
    p.add_argument("-o", "--output"); _add_stft_args(p)
    p.add_argument("--floor-db", dest="floor_db", type=float, default=spec_pipeline.DEFAULT_FLOOR_DB)
    p.add_argument("--lam", type=float)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("glim", help="Griffin-Lim reconstruction from a SPEC1 magnitude")
    p.add_argument("input"); p.add_argument("output"); _add_stft_args(p); _add_gla_args(p)
    p.add_argument("--trace", help="convergence CSV path (default: <output>_trace.csv)")
    p.add_argument("--plot", help="optional PNG of the convergence trace")
    p.set_defaults(func=cmd_glim)

    def add_refine_args(p):
        p.add_argument("--step-size", dest="step_size", type=float, default=refine.RefineConfig.step_size)
        p.add_argument("--max-steps", dest="max_steps", type=int, default=refine.RefineConfig.max_steps)
        p.add_argument("--target-rho", dest="target_rho", type=float, default=refine.RefineConfig.target_rho)
        p.add_argument("--max-deviation", dest="max_deviation", type=float)
        p.add_argument("--floor-db", dest="floor_db", type=float, default=spec_pipeline.DEFAULT_FLOOR_DB)
        p.add_argument("--lam", type=float)

    p = sub.add_parser("refine", help="gradient ascent on rho within a trust region")
    p.add_argument("input"); p.add_argument("output"); _add_stft_args(p); add_refine_args(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("compare-gla", help="refinement vs Griffin-Lim convergence experiment (CSV)")
    p.add_argument("inputs", nargs="*", help="WAV clips (default: synthetic speech-like clips)")
    p.add_argument("-o", "--output"); _add_stft_args(p); _add_gla_args(p); add_refine_args(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seconds", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.01, help="noise std as a fraction of the log dynamic range")
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_compare_gla, momentum=0.99, tol=0.0)

    p = sub.add_parser("fid", help="Frechet distance between two feature CSVs")
    p.add_argument("--real", required=True); p.add_argument("--fake", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fid)

    p = sub.add_parser("toy-train", help="toy adversarial experiment with/without the consistency term (CSV)")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=toy_adversarial.ExperimentConfig.steps)
    p.add_argument("--lr", type=float, default=toy_adversarial.ExperimentConfig.learning_rate)
    p.add_argument("--lambda-c", dest="lambda_c", type=float, help="override the initial lambda_c")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_toy_train)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (TfconsError, ValueError, OSError) as exc:
        print(f"tfcons {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
