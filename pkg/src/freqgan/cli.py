"""``freqgan`` command line: spectrum, psd, verify, demo-upsample, train, eval, equivariance.

Exit status: 0 on success, 1 when a verification fails, 2 on usage,
configuration or input errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from freqgan.data import from_uint8, load_pgm_dir, read_pgm, write_pgm
from freqgan.errors import FreqGANError
from freqgan.spectral import (
    dft2, fftshift, grayscale, log_amplitude_image, power_spectrum, psd_distance,
    write_profile_csv, zero_insert_upsample,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_plane_csv(path: Path, plane: np.ndarray, column: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", column])
        for (i, j), v in np.ndenumerate(plane):
            w.writerow([i, j, repr(float(v))])


def cmd_spectrum(args) -> int:
    img = from_uint8(read_pgm(args.image))
    s = dft2(img)
    out = _out_dir(args, "spectrum_out")
    write_pgm(out / "log_amplitude.pgm", log_amplitude_image(s))
    _write_plane_csv(out / "phase.csv", fftshift(s).phase, "phase")
    write_profile_csv(out / "power_spectrum.csv", power_spectrum(s))
    print(f"wrote {out}/log_amplitude.pgm, phase.csv, power_spectrum.csv")
    return EXIT_OK


def cmd_psd(args) -> int:
    a, b = load_pgm_dir(args.real_dir), load_pgm_dir(args.fake_dir)
    pa = power_spectrum(dft2(grayscale(a.images)[:, 0])).values
    pb = power_spectrum(dft2(grayscale(b.images)[:, 0])).values
    profile = psd_distance(pa, pb)
    out = Path(args.out or "psd.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_profile_csv(out, profile)
    print(f"wrote {out} ({len(profile)} bins, max {float(profile.values.max()):.6g})")
    return EXIT_OK


def cmd_verify(args) -> int:
    from freqgan.verify import run_all
    checks = run_all(trials=args.trials, seed=args.seed)
    failed = [c for c in checks if c.passed is False]
    for c in checks:
        status = {True: "PASS", False: "FAIL", None: "INFO"}[c.passed]
        print(f"{status} [{c.suite}] {c.name}: residual {c.residual:.3e} (tol {c.tolerance:g})")
    if args.out:
        Path(args.out).write_text(json.dumps([c.as_dict() for c in checks], indent=1))
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed or measured")
    return EXIT_FAIL if failed else EXIT_OK


def tiling_correlation(image: np.ndarray, m: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Correlation between |F(upsampled)| and the m×m tiling of |F(image)|."""
    amp = dft2(image).amplitude
    up = dft2(zero_insert_upsample(image, m)).amplitude
    tiled = np.tile(amp, (m, m))
    corr = float(np.corrcoef(up.ravel(), tiled.ravel())[0, 1])
    return corr, amp, up


def cmd_demo_upsample(args) -> int:
    img = from_uint8(read_pgm(args.image))
    corr, amp, up = tiling_correlation(img, args.factor)
    out = _out_dir(args, "upsample_out")
    _write_plane_csv(out / "original_amplitude.csv", amp, "amplitude")
    _write_plane_csv(out / "upsampled_amplitude.csv", up, "amplitude")
    upsampled = zero_insert_upsample(img, args.factor)
    write_pgm(out / "upsampled_spectrum.pgm", log_amplitude_image(dft2(upsampled)))
    summary = {"factor": args.factor, "input_shape": list(img.shape),
               "output_shape": list(upsampled.shape), "tiling_correlation": corr}
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    print(f"tiling correlation {corr:.6f}; wrote {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    from freqgan.gan import TrainConfig, train
    raw = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out_dir"] = args.out
    if args.iters is not None:
        raw["iters"] = args.iters
    state, out = train(TrainConfig.from_dict(raw))
    print(f"trained {state.t} iterations; artifacts in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from freqgan.evaluate import evaluate
    from freqgan.gan import TrainConfig
    config = TrainConfig.from_json(args.config)
    report = evaluate(None, n_samples=args.n_samples, checkpoint=args.checkpoint,
                      out=args.out or str(Path(config.out_dir) / "eval" / "report.json"),
                      embedder=args.embedder, seed=args.seed or 0, config=config)
    print(json.dumps({k: report[k] for k in ("frechet_distance", "inception_score",
                                              "psd_high_quartile")}))
    return EXIT_OK


def cmd_equivariance(args) -> int:
    from freqgan.evfreq import check_shift_equivariance
    from freqgan.verify import toy_evfreq_factory
    modes = {"off": [False], "on": [True], "both": [False, True]}[args.pooling]
    reports, failed = [], False
    for pooling in modes:
        r = check_shift_equivariance(toy_evfreq_factory(args.channels, pooling), args.trials,
                                     size=args.size, seed=args.seed or 0)
        reports.append({"pooling": pooling, "trials": r.trials, "shifts": r.shifts,
                        "max_residual": r.max_residual, "asserted": r.asserted,
                        "passed": r.passed, "per_trial": r.per_trial})
        failed |= r.passed is False
        print(f"pooling {'on ' if pooling else 'off'}: max residual {r.max_residual:.3e}"
              + ("" if r.asserted else " (measured, not asserted)"))
    if args.out:
        Path(args.out).write_text(json.dumps(reports, indent=1))
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", default=None, help="output path or directory")

    p = argparse.ArgumentParser(prog="freqgan", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common],
                       help="image -> centered log-amplitude PGM, phase CSV, radial profile")
    s.add_argument("image", help="input PGM")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("psd", parents=[common], help="two PGM dirs -> power-spectrum distance CSV")
    s.add_argument("real_dir")
    s.add_argument("fake_dir")
    s.set_defaults(func=cmd_psd)

    s = sub.add_parser("verify", parents=[common], help="run the built-in property suites")
    s.add_argument("--trials", type=int, default=20, help="EV-Freq random weight draws")
    s.set_defaults(func=cmd_verify, seed=0)

    s = sub.add_parser("demo-upsample", parents=[common],
                       help="zero-insertion upsampling -> replicated spectrum data")
    s.add_argument("image", help="input PGM")
    s.add_argument("--factor", type=int, default=2)
    s.set_defaults(func=cmd_demo_upsample)

    s = sub.add_parser("train", parents=[common], help="train from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--iters", type=int, default=None, help="override the iteration count")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="evaluate a trained generator")
    s.add_argument("--config", required=True)
    s.add_argument("--checkpoint", default=None, help="checkpoint manifest (default: latest)")
    s.add_argument("--n-samples", type=int, default=2000)
    s.add_argument("--embedder", default="fixed-random-conv",
                   choices=["fixed-random-conv", "trained-toy-classifier"])
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("equivariance", parents=[common], help="EV-Freq shift residual report")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--size", type=int, default=16)
    s.add_argument("--channels", type=int, default=8)
    s.add_argument("--pooling", choices=["off", "on", "both"], default="both")
    s.set_defaults(func=cmd_equivariance)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (FreqGANError, OSError, json.JSONDecodeError) as exc:
        print(f"freqgan {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
