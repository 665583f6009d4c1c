"""A miniature LS-GAN on 16x16 log-magnitude patches, with and without the
consistency critic in the generator objective.

Backpropagation is written out by hand for the fixed MLP shapes; the
consistency path reuses :func:`tfcons.consistency.rho_and_gradient`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import consistency as cons
from .errors import NumericError
from .spec_pipeline import MagnitudeSpectrogram, magnitude, normalize, to_log, trim_nyquist
from .tf_transform import StftConfig, stft
from .synth import chirp_mix, speech_like
from .unit_objective import LossWeights, lambda_c_at, lsgan_generator_loss, lsgan_loss

LEAK = 0.2
TOY_STFT = StftConfig(frame_size=32, hop=8)


def leaky(x):
    return np.where(x > 0, x, LEAK * x)


def leaky_grad(x):
    return np.where(x > 0, 1.0, LEAK)


@dataclass(eq=False)
class MLP:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    out_tanh: bool

    @classmethod
    def init(cls, sizes, rng, out_tanh):
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            ws.append(rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs, out_tanh)

    def params(self):
        return self.weights + self.biases

    def copy(self):
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.out_tanh)

    def forward(self, x):
        """Returns the output and the cache needed by :meth:`backward`."""
        acts, pre = [x], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            if i < last:
                h = leaky(z)
            else:
                h = np.tanh(z) if self.out_tanh else z
            acts.append(h)
        return h, (acts, pre)

    def backward(self, grad_out, cache):
        """Gradients w.r.t. (weights, biases, input) given dLoss/dOutput."""
        acts, pre = cache
        n = len(self.weights)
        gw, gb = [None] * n, [None] * n
        g = grad_out * (1.0 - acts[-1] ** 2) if self.out_tanh else grad_out
        for i in range(n - 1, -1, -1):
            gw[i] = acts[i].T @ g
            gb[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * leaky_grad(pre[i - 1])
        return gw, gb, g


@dataclass(eq=False)
class ToyNet:
    generator: MLP
    discriminator: MLP
    noise_dim: int
    side: int

    @classmethod
    def init(cls, rng, noise_dim=16, hidden_g=(64, 128), hidden_d=(128, 64), side=16):
        patch = side * side
        g = MLP.init((noise_dim, *hidden_g, patch), rng, out_tanh=True)
        d = MLP.init((patch, *hidden_d, 1), rng, out_tanh=False)
        return cls(g, d, noise_dim, side)

    def copy(self):
        return ToyNet(self.generator.copy(), self.discriminator.copy(), self.noise_dim, self.side)

    def generate(self, z):
        out, _ = self.generator.forward(z)
        return out.reshape(-1, self.side, self.side)


@dataclass(frozen=True)
class DatasetConfig:
    n_clips: int = 24
    clip_seconds: float = 0.5
    noise_db: float = -40.0
    patches_per_clip: int = 8
    floor_db: float = -100.0


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    steps: int = 400
    batch_size: int = 32
    learning_rate: float = 0.01
    weights: LossWeights = field(default_factory=LossWeights)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    convention: str = "standard"
    n_eval: int = 256

    def __post_init__(self):
        # zero steps is allowed: it yields the untrained reference nets
        if self.steps < 0 or self.batch_size < 1 or self.n_eval < 1:
            raise ValueError("steps must be >= 0, batch_size and n_eval >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.convention not in ("verbatim", "standard"):
            raise ValueError(f"unknown LS-GAN convention {self.convention!r}")


@dataclass(eq=False)
class ToyDataset:
    patches: np.ndarray           # (n, side, side) normalized log magnitude
    norm_params: tuple[float, float]
    consistency: cons.ConsistencyConfig
    rhos: np.ndarray              # rho of every patch (NaN where degenerate)

    def spectrograms(self, patches=None):
        patches = self.patches if patches is None else patches
        return [MagnitudeSpectrogram(p, "normalized", self.norm_params) for p in patches]


def make_synthetic_dataset(cfg: DatasetConfig = DatasetConfig(), seed: int = 0, side: int = 16) -> ToyDataset:
    """Patches cut from reduced-size STFTs (N=32, hop 8) of speech-like and chirp clips.

    All clips share one (min, max) normalization so generated patches can be
    scored on the same scale.
    """
    rng = np.random.default_rng(seed)
    logs = []
    for i in range(cfg.n_clips):
        clip_seed = int(rng.integers(2**31))
        maker = speech_like if i % 2 == 0 else chirp_mix
        w = maker(clip_seed, cfg.clip_seconds, noise_db=cfg.noise_db)
        m = trim_nyquist(to_log(magnitude(stft(w, TOY_STFT)), cfg.floor_db), TOY_STFT.fft_size)
        n_frames = m.values.shape[1]
        for _ in range(cfg.patches_per_clip):
            start = int(rng.integers(0, n_frames - side + 1))
            logs.append(m.values[:side, start:start + side])
    logs = np.stack(logs)
    params = (float(logs.min()), float(logs.max()))
    patches = np.stack([normalize(MagnitudeSpectrogram(p, "log", floor_db=cfg.floor_db), params).values for p in logs])
    cc = cons.ConsistencyConfig.for_stft(TOY_STFT)
    ds = ToyDataset(patches, params, cc, np.empty(len(patches)))
    ds.rhos = np.array([_rho_or_nan(ds, p) for p in patches])
    return ds


def _rho_or_nan(ds, patch):
    rep = cons.rho(MagnitudeSpectrogram(patch, "normalized", ds.norm_params), ds.consistency)
    return math.nan if rep.degenerate else rep.rho


def discriminator_loss_and_grads(net: ToyNet, real, z, convention="standard"):
    """LS-GAN discriminator loss and its gradients w.r.t. discriminator parameters."""
    d = net.discriminator
    fake = net.generate(z).reshape(len(z), -1)
    s_real, c_real = d.forward(real.reshape(len(real), -1))
    s_fake, c_fake = d.forward(fake)
    loss = lsgan_loss(s_real, s_fake, convention)
    if convention == "standard":
        g_real = (s_real - 1.0) / len(s_real)
        g_fake = s_fake / len(s_fake)
    else:
        g_real = s_real / len(s_real)
        g_fake = -(1.0 - s_fake) / len(s_fake)
    gw1, gb1, _ = d.backward(g_real, c_real)
    gw2, gb2, _ = d.backward(g_fake, c_fake)
    grads = [a + b for a, b in zip(gw1, gw2)] + [a + b for a, b in zip(gb1, gb2)]
    return loss, grads


def generator_loss_and_grads(net: ToyNet, z, real_rho_mean: float, ds: ToyDataset, lam_c: float,
                             convention="standard"):
    """Generator loss ``adv + lam_c * gamma`` and gradients w.r.t. generator parameters.

    ``gamma = |real_rho_mean - mean rho(fake)|`` over non-degenerate fakes.
    Returns ``(total, adv, gamma, grads)``.
    """
    g, d = net.generator, net.discriminator
    out, c_gen = g.forward(z)
    scores, c_disc = d.forward(out)
    adv = lsgan_generator_loss(scores, convention)
    _, _, grad_out = d.backward(-2.0 * (1.0 - scores) / len(scores), c_disc)

    side = net.side
    patches = out.reshape(-1, side, side)
    reports = [cons.rho_and_gradient(MagnitudeSpectrogram(p, "normalized", ds.norm_params), ds.consistency)
               for p in patches]
    live = [i for i, (rep, _) in enumerate(reports) if not rep.degenerate]
    gam = 0.0
    if live:
        diff = real_rho_mean - math.fsum(reports[i][0].rho for i in live) / len(live)
        gam = abs(diff)
        if lam_c > 0:
            d_gamma = np.zeros_like(patches)
            for i in live:
                d_gamma[i] = -np.sign(diff) / len(live) * reports[i][1]
            grad_out = grad_out + lam_c * d_gamma.reshape(out.shape)
    gw, gb, _ = g.backward(grad_out, c_gen)
    return adv + lam_c * gam, adv, gam, gw + gb


def _check_finite(grads, block):
    for i, gr in enumerate(grads):
        if not np.all(np.isfinite(gr)):
            raise NumericError(f"non-finite gradient in {block} parameter block {i}")


@dataclass(frozen=True)
class StepLosses:
    iteration: int
    disc_loss: float
    gen_adv_loss: float
    gamma: float
    lambda_c: float
    gen_total_loss: float


def train_step(net: ToyNet, ds: ToyDataset, cfg: ExperimentConfig, iteration: int, rng) -> StepLosses:
    """One alternating SGD update (discriminator, then generator); updates ``net`` in place."""
    lr = cfg.learning_rate
    idx = rng.integers(0, len(ds.patches), cfg.batch_size)
    real = ds.patches[idx]
    z = rng.standard_normal((cfg.batch_size, net.noise_dim))
    d_loss, d_grads = discriminator_loss_and_grads(net, real, z, cfg.convention)
    _check_finite(d_grads, "discriminator")
    for p, gr in zip(net.discriminator.params(), d_grads):
        p -= lr * gr

    real_rhos = ds.rhos[idx]
    real_rhos = real_rhos[~np.isnan(real_rhos)]
    real_mean = math.fsum(real_rhos) / len(real_rhos) if len(real_rhos) else float(np.nanmean(ds.rhos))
    lam_c = lambda_c_at(iteration, cfg.weights)
    z = rng.standard_normal((cfg.batch_size, net.noise_dim))
    total, adv, gam, g_grads = generator_loss_and_grads(net, z, real_mean, ds, lam_c, cfg.convention)
    _check_finite(g_grads, "generator")
    for p, gr in zip(net.generator.params(), g_grads):
        p -= lr * gr
    return StepLosses(iteration, d_loss, adv, gam, lam_c, total)


def train(cfg: ExperimentConfig, ds: ToyDataset | None = None):
    """Train one configuration; returns ``(net, dataset, per-step losses)``."""
    ds = ds if ds is not None else make_synthetic_dataset(cfg.dataset, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    net = ToyNet.init(rng)
    history = [train_step(net, ds, cfg, it, rng) for it in range(cfg.steps)]
    return net, ds, history


@dataclass(frozen=True)
class ExperimentRow:
    seed: int
    config: str
    mean_rho: float
    gamma: float
    final_gen_loss: float
    final_disc_loss: float

    def csv_row(self) -> str:
        return f"{self.seed},{self.config},{self.mean_rho:.10g},{self.gamma:.10g},{self.final_gen_loss:.10g},{self.final_disc_loss:.10g}"


CSV_HEADER = "seed,config,mean_rho,gamma,final_gen_loss,final_disc_loss"


def evaluate(net: ToyNet, ds: ToyDataset, n_eval: int, seed: int):
    """Mean rho of ``n_eval`` generated patches and gamma against the dataset."""
    z = np.random.default_rng([seed, 7919]).standard_normal((n_eval, net.noise_dim))
    fakes = ds.spectrograms(net.generate(z))
    rep = cons.gamma_report(ds.spectrograms(), fakes, ds.consistency)
    return rep.mean_rho_fake, rep.gamma


def run_experiment(baseline: ExperimentConfig, constrained: ExperimentConfig) -> list[ExperimentRow]:
    """Train both configurations from identical seeds and compare generated-sample rho.

    Also returns a ``dataset`` sanity row: gamma between the dataset and a
    resample of itself, which should be ~0.
    """
    if baseline.seed != constrained.seed:
        raise ValueError("both configurations must share a seed")
    ds = make_synthetic_dataset(baseline.dataset, baseline.seed)
    rows = []
    for label, cfg in (("baseline", baseline), ("consistency", constrained)):
        net, _, hist = train(cfg, ds)
        mean_rho, gam = evaluate(net, ds, cfg.n_eval, cfg.seed)
        gen = hist[-1].gen_total_loss if hist else math.nan
        disc = hist[-1].disc_loss if hist else math.nan
        rows.append(ExperimentRow(cfg.seed, label, mean_rho, gam, gen, disc))
    pick = np.random.default_rng(baseline.seed).integers(0, len(ds.patches), baseline.n_eval)
    rep = cons.gamma_report(ds.spectrograms(), ds.spectrograms(ds.patches[pick]), ds.consistency)
    rows.append(ExperimentRow(baseline.seed, "dataset", rep.mean_rho_fake, rep.gamma, math.nan, math.nan))
    return rows


def paired_configs(seed: int, **kw):
    """(lambda_c = 0, lambda_c = 3e-4 scheduled) configurations sharing everything else."""
    base = ExperimentConfig(seed=seed, **kw)
    return replace(base, weights=replace(base.weights, lambda_c=0.0)), base
