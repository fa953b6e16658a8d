"""Three-score hinge objective and the alternating D/G training loop.

The discriminator emits a spatial score s_x, a frequency score s_f and a
joint score s_xf. With y = +1 for real and -1 for fake, the per-sample
discriminator loss is ℓ(y·s_x) + ℓ(y·s_f) + ℓ(y·s_xf) with ℓ(t) = max(0, 1-t),
averaged over each half of the batch. The generator loss is
E_real[s_x+s_f+s_xf] − E_fake[s_x+s_f+s_xf]; the real half is reported but
carries no generator gradient. Baseline mode keeps only s_x, which reduces
both objectives to the standard hinge-loss SNGAN.
"""
from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from freqgan.data import Dataset, image_grid, load_dataset, to_uint8, write_pgm
from freqgan.errors import ConfigError, NumericsError
from freqgan.nn.arch import Discriminator, Generator, build_discriminator, build_generator
from freqgan.nn.layers import frozen, set_power_iteration
from freqgan.tensor import Adam, Tensor, backward, no_grad, ops
from freqgan.tensor.checkpoint import save_checkpoint

HEADS = ("s_x", "s_f", "s_xf")
LOG_COLUMNS = (
    "iter", "lr", "d_loss", "d_loss_x", "d_loss_f", "d_loss_xf",
    "g_loss", "g_loss_real", "g_loss_fake",
    "real_s_x", "fake_s_x", "real_s_f", "fake_s_f", "real_s_xf", "fake_s_xf",
    "imag_residual",
)


@dataclass
class ScoreTriple:
    """Per-sample scores; s_f and s_xf are None for the spatial-only baseline."""

    s_x: Tensor
    s_f: Tensor | None = None
    s_xf: Tensor | None = None

    def heads(self) -> dict[str, Tensor]:
        return {k: v for k, v in zip(HEADS, (self.s_x, self.s_f, self.s_xf)) if v is not None}

    def split(self, n: int) -> tuple["ScoreTriple", "ScoreTriple"]:
        """First n rows and the rest (for a D pass over concatenated batches)."""
        a = {k: ops.getitem(v, slice(0, n)) for k, v in self.heads().items()}
        b = {k: ops.getitem(v, slice(n, None)) for k, v in self.heads().items()}
        return ScoreTriple(**a), ScoreTriple(**b)

    def numpy(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.heads().items()}


def discriminator_scores(D: Discriminator, x: Tensor, iteration: int | None = None) -> ScoreTriple:
    sx, sf, sxf = D(x)
    triple = ScoreTriple(sx, sf, sxf)
    for name, s in triple.heads().items():
        if not s.is_finite():
            where = f" at iteration {iteration}" if iteration is not None else ""
            raise NumericsError(f"non-finite {name} score{where}")
    return triple


def hinge(t):
    """max(0, 1 - t) for numbers, arrays or tensors."""
    if isinstance(t, Tensor):
        return ops.relu(ops.scale(ops.add(t, -1.0), -1.0))
    return np.maximum(0.0, 1.0 - np.asarray(t, dtype=np.float64))


def loss_discriminator(real: ScoreTriple, fake: ScoreTriple) -> tuple[Tensor, dict[str, Tensor]]:
    """Total hinge loss and its per-head parts (which sum to the total)."""
    parts = {}
    fake_heads = fake.heads()
    for name, s_real in real.heads().items():
        s_fake = fake_heads[name]
        parts[name] = ops.add(ops.mean(hinge(s_real)), ops.mean(hinge(ops.neg(s_fake))))
    total = None
    for p in parts.values():
        total = p if total is None else ops.add(total, p)
    return total, parts


def loss_generator(fake: ScoreTriple, real: ScoreTriple | None = None) -> tuple[Tensor, dict[str, float]]:
    """E_real[Σ s] − E_fake[Σ s]; the returned tensor carries only the fake term's graph."""
    fake_sum = None
    for s in fake.heads().values():
        m = ops.mean(s)
        fake_sum = m if fake_sum is None else ops.add(fake_sum, m)
    real_term = 0.0
    if real is not None:
        real_term = float(np.sum([np.mean(s.data) for s in real.heads().values()]))
    loss = ops.add(ops.neg(fake_sum), real_term)
    return loss, {"real": real_term, "fake": -fake_sum.item(), "total": loss.item()}


# ---------------------------------------------------------------- config / state

@dataclass
class TrainConfig:
    arch: str = "toy"
    width_div: int = 8
    image_size: int = 16
    latent_dim: int = 32
    batch: int = 32
    iters: int = 2000
    lr: float = 2e-4
    n_dis: int = 5
    seed: int = 0
    dataset: dict = field(default_factory=lambda: {"kind": "synthetic"})
    freq_path: dict = field(default_factory=lambda: {"enabled": True, "pooling": True})
    out_dir: str = "runs/default"
    checkpoint_every: int = 500
    sample_every: int = 500
    history: int = 1000

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None

    def validate(self) -> None:
        for name in ("width_div", "image_size", "latent_dim", "batch", "n_dis"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.iters < 0 or self.lr < 0:
            raise ConfigError("iters and lr must be non-negative")
        if self.batch < 2:
            raise ConfigError("batch must be >= 2 for generator batch norm")
        unknown = set(self.freq_path) - {"enabled", "pooling", "final_relu"}
        if unknown:
            raise ConfigError(f"unknown freq_path keys: {sorted(unknown)}")

    @property
    def freq_enabled(self) -> bool:
        return bool(self.freq_path.get("enabled", True))

    def to_dict(self) -> dict:
        return asdict(self)


def learning_rate(base: float, t: int, total: int) -> float:
    """Linear decay base·(1 − t/T); exactly 0 at t = T."""
    if total <= 0:
        return 0.0
    return base * (1.0 - min(t, total) / total)


@dataclass
class TrainState:
    config: TrainConfig
    G: Generator
    D: Discriminator
    opt_g: Adam
    opt_d: Adam
    rng: np.random.Generator
    data: Dataset
    batches: object
    t: int = 0
    history: deque = field(default_factory=deque)

    @property
    def total(self) -> int:
        return self.config.iters

    @property
    def base_lr(self) -> float:
        return self.config.lr


def init_state(config: TrainConfig, data: Dataset | None = None) -> TrainState:
    """Seeded networks, optimizers, noise stream and data stream."""
    seeds = np.random.SeedSequence(config.seed).spawn(4)
    g_rng, d_rng, z_rng = (np.random.default_rng(s) for s in seeds[:3])
    G = build_generator(config.arch, g_rng, config.width_div, config.latent_dim)
    fp = config.freq_path
    D = build_discriminator(config.arch, d_rng, config.width_div, config.freq_enabled,
                            fp.get("pooling"), fp.get("final_relu", True))
    data = data if data is not None else load_dataset(config.dataset, config.image_size)
    batches = data.batches(config.batch, int(seeds[3].generate_state(1)[0]))
    return TrainState(config, G, D, Adam(G.parameters()), Adam(D.parameters()), z_rng, data,
                      batches, history=deque(maxlen=config.history))


def _noise(state: TrainState) -> Tensor:
    return Tensor(state.rng.standard_normal((state.config.batch, state.config.latent_dim)))


def train_step(state: TrainState, real_batches=None) -> dict:
    """n_dis discriminator updates, then one generator update.

    ``real_batches`` (optional) supplies the n_dis + 1 real batches; by
    default they are drawn from the state's data stream. Returns the log row.
    """
    cfg = state.config
    lr = learning_rate(cfg.lr, state.t, cfg.iters)
    supplied = iter(real_batches) if real_batches is not None else None

    def next_real():
        return Tensor(next(supplied) if supplied is not None else next(state.batches))

    G, D = state.G, state.D
    for _ in range(cfg.n_dis):
        real = next_real()
        with no_grad():
            fake = G(_noise(state))
        set_power_iteration(D, True)
        scores = discriminator_scores(D, ops.concat([real, fake], axis=0), state.t)
        s_real, s_fake = scores.split(real.shape[0])
        d_total, d_parts = loss_discriminator(s_real, s_fake)
        state.opt_d.zero_grad()
        backward(d_total)
        state.opt_d.step(lr)

    # generator step; D is frozen (no parameter grads, no power-iteration update)
    real = next_real()
    set_power_iteration(D, False)
    with frozen(D):
        fake = G(_noise(state))
        scores = discriminator_scores(D, ops.concat([real, fake], axis=0), state.t)
        g_real, g_fake = scores.split(real.shape[0])
        g_total, g_terms = loss_generator(g_fake, g_real)
        state.opt_g.zero_grad()
        backward(g_total)
        state.opt_g.step(lr)
    set_power_iteration(D, True)

    row = {"iter": state.t, "lr": lr, "d_loss": d_total.item(),
           "g_loss": g_terms["total"], "g_loss_real": g_terms["real"], "g_loss_fake": g_terms["fake"]}
    for head, suffix in zip(HEADS, ("x", "f", "xf")):
        row[f"d_loss_{suffix}"] = d_parts[head].item() if head in d_parts else None
        have = head in s_real.heads()
        row[f"real_{head}"] = float(np.mean(s_real.heads()[head].data)) if have else None
        row[f"fake_{head}"] = float(np.mean(s_fake.heads()[head].data)) if have else None
    row["imag_residual"] = D.frequency.imag_residual if D.freq_enabled else None
    for k, v in row.items():
        if v is not None and not np.isfinite(v):
            raise NumericsError(f"non-finite {k} at iteration {state.t}")
    state.history.append(row)
    state.t += 1
    return row


# ---------------------------------------------------------------- driver

def format_row(row: dict) -> list[str]:
    out = []
    for col in LOG_COLUMNS:
        v = row.get(col)
        out.append("" if v is None else (str(v) if isinstance(v, int) else repr(float(v))))
    return out


def state_arrays(state: TrainState) -> dict[str, np.ndarray]:
    arrays = state.G.state_arrays("G.")
    arrays.update(state.D.state_arrays("D."))
    return arrays


def save_state(state: TrainState, stem) -> None:
    meta = {"iteration": state.t, "config": state.config.to_dict()}
    save_checkpoint(stem, state_arrays(state), meta)


def sample(G: Generator, n: int, latent_dim: int, seed: int) -> np.ndarray:
    """Eval-mode generator samples from a fixed noise seed."""
    z = np.random.default_rng(seed).standard_normal((n, latent_dim))
    was_training = G.training
    G.eval()
    try:
        with no_grad():
            x = G(Tensor(z)).data
    finally:
        G.train(was_training)
    return x


def train(config: TrainConfig | dict, data: Dataset | None = None):
    """Run ``config.iters`` iterations; returns (final state, output directory).

    Writes config.json, log.csv, checkpoints/iterNNNN.{json,bin} and
    samples/iterNNNN.pgm under ``out_dir``.
    """
    if isinstance(config, dict):
        config = TrainConfig.from_dict(config)
    out = Path(config.out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=1, sort_keys=True))
    state = init_state(config, data)

    def snapshot():
        save_state(state, out / "checkpoints" / f"iter{state.t:04d}")
        grid = image_grid(sample(state.G, 16, config.latent_dim, seed=config.seed + 7919))
        write_pgm(out / "samples" / f"iter{state.t:04d}.pgm", to_uint8(grid))

    with open(out / "log.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        snapshot()
        while state.t < config.iters:
            try:
                row = train_step(state)
            except NumericsError:
                save_state(state, out / "checkpoints" / f"abort{state.t:04d}")
                raise
            writer.writerow(format_row(row))
            done = state.t
            if done % config.checkpoint_every == 0 or done % config.sample_every == 0 \
                    or done == config.iters:
                snapshot()
    return state, out
