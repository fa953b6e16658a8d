"""Desk-scale baseline-vs-FreqGAN comparison on synthetic textures.

Each (mode, seed) pair is an independent training run, so the runs are
spread over a process pool; on a single core they simply run in sequence.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from freqgan.data import load_dataset
from freqgan.evaluate import spectral_comparison
from freqgan.gan import TrainConfig, sample, train

MODES = ("baseline", "freqgan")


@dataclass
class RunResult:
    mode: str
    seed: int
    iters: int
    finite: bool
    psd_high_quartile: float
    seconds: float
    out_dir: str


def toy_config(mode: str, seed: int, iters: int, out_dir, **overrides) -> TrainConfig:
    cfg = {"arch": "toy", "width_div": 8, "image_size": 16, "latent_dim": 32, "batch": 32,
           "iters": iters, "lr": 2e-4, "n_dis": 5, "seed": seed,
           "dataset": {"kind": "synthetic", "n": 2048, "seed": 1234},
           "freq_path": {"enabled": mode == "freqgan", "pooling": True},
           "out_dir": str(out_dir), "checkpoint_every": max(iters, 1),
           "sample_every": max(iters // 4, 1)}
    cfg.update(overrides)
    return TrainConfig.from_dict(cfg)


def log_is_finite(path) -> bool:
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    return bool(rows) and all(math.isfinite(float(v)) for row in rows for v in row if v != "")


def run_one(mode: str, seed: int, iters: int, root, n_eval: int = 1024) -> RunResult:
    out = Path(root) / f"{mode}_seed{seed}"
    t0 = time.perf_counter()
    cfg = toy_config(mode, seed, iters, out)
    data = load_dataset(cfg.dataset, cfg.image_size)
    state, _ = train(cfg, data)
    fake = sample(state.G, n_eval, cfg.latent_dim, seed=10_000 + seed)
    real = data.images[np.random.default_rng(seed).permutation(len(data))[:n_eval]]
    hq = spectral_comparison(real, fake)["psd_high_quartile"]
    seconds = time.perf_counter() - t0
    finite = log_is_finite(out / "log.csv") and bool(np.isfinite(fake).all())
    return RunResult(mode, seed, iters, finite, float(hq), seconds, str(out))


def _run_args(args):
    return run_one(*args)


def compare(seeds=(0, 1, 2), iters: int = 2000, root="runs/desk_scale", workers: int | None = None):
    """Train baseline and FreqGAN for every seed; returns (results, summary)."""
    jobs = [(mode, s, iters, root) for s in seeds for mode in MODES]
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_args, jobs))
    else:
        results = [run_one(*j) for j in jobs]
    wall = time.perf_counter() - t0
    by = {(r.mode, r.seed): r for r in results}
    wins = [by["freqgan", s].psd_high_quartile <= by["baseline", s].psd_high_quartile for s in seeds]
    summary = {"seeds": list(seeds), "iters": iters, "workers": workers, "wall_seconds": wall,
               "all_finite": all(r.finite for r in results), "freqgan_wins": wins,
               "n_wins": int(sum(wins)), "results": [asdict(r) for r in results]}
    Path(root).mkdir(parents=True, exist_ok=True)
    Path(root, "summary.json").write_text(json.dumps(summary, indent=1))
    return results, summary
