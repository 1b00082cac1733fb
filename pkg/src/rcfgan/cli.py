"""Command-line entry points.

Subcommands: train, validate-metric, swap, alpha-sweep, two-sample,
grad-check. Exit codes: 0 success, 1 a validated property failed, 2 usage
or configuration error, 3 training aborted on a non-finite loss.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfg_mod
from . import datasets, diagnostics
from .config import ConfigError
from .datasets import (ArrayStream, IdxFormatError, MixtureStream,
                       filter_digits, load_idx, preset, synthetic_digits)
from .train import TrainingDiverged, generate, train

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _say(args, message):
    if not args.quiet:
        print(message)


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_run_readme(out_dir, command, file_docs):
    lines = [f"Outputs of `rcfgan {command}`.", ""]
    for name, desc in file_docs:
        lines.append(f"- {name}: {desc}")
    with open(os.path.join(out_dir, "README.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# train

def _build_stream(dataset, generator_output):
    """Stream plus drawing metadata for a dataset name.

    Mixture preset names stream fresh draws; ``idx:IMAGES,LABELS`` streams a
    fixed image array scaled to [-1, 1].
    """
    if dataset.startswith("idx:"):
        spec = dataset[len("idx:"):]
        parts = spec.split(",")
        if len(parts) != 2:
            raise ConfigError("idx dataset needs idx:IMAGES_PATH,LABELS_PATH")
        ds = load_idx(parts[0], parts[1])
        return ArrayStream(ds.images), None, "tanh"
    mixture = preset(dataset)
    return MixtureStream(mixture), mixture, generator_output


def cmd_train(args):
    overrides = {}
    if args.config is not None:
        overrides.update(cfg_mod.read_config(args.config))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.dataset is not None:
        overrides["dataset"] = args.dataset
    resolved = cfg_mod.resolve(overrides)
    train_cfg = cfg_mod.to_train_config(resolved)

    try:
        stream, mixture, gen_out = _build_stream(resolved["dataset"],
                                                 resolved["generator_output"])
    except (KeyError, IdxFormatError, OSError) as exc:
        raise ConfigError(str(exc))

    out_dir = _ensure_out(args.out)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(cfg_mod.format_config(resolved))

    _say(args, f"training on {resolved['dataset']} for "
               f"{train_cfg.iterations} iterations")
    try:
        state, telemetry = train(train_cfg, stream, out_dir=out_dir,
                                 generator_output=gen_out)
    except TrainingDiverged as exc:
        dump = os.path.join(out_dir, "divergence.txt")
        with open(dump, "w") as fh:
            fh.write(f"{exc}\n\nrecent telemetry "
                     f"(iteration, critic, gen, recip, embed):\n")
            for row in exc.telemetry_tail:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"error: {exc} (dump in {dump})", file=sys.stderr)
        return EXIT_DIVERGED

    file_docs = [
        ("config.txt", "fully resolved run configuration"),
        ("telemetry.csv", "per-iteration scalars: iteration, critic_loss, "
                          "gen_loss, reciprocal_loss, embed_dist"),
        ("checkpoint_final.ckpt", "network weights at the last iteration"),
    ]
    if telemetry.rows:
        _say(args, f"final moving averages: critic "
                   f"{telemetry.moving_average('critic_loss'):.4f}, "
                   f"gen {telemetry.moving_average('gen_loss'):.4f}, "
                   f"recip {telemetry.moving_average('reciprocal_loss'):.4f}")

    if mixture is not None and train_cfg.iterations > 0:
        rng = np.random.default_rng(train_cfg.seed + 999)
        samples = generate(state, 2000, rng)
        if mixture.dim == 2:
            data = datasets.sample_mixture(mixture, 2000, rng).data
            diagnostics.scatter_png(os.path.join(out_dir, "scatter.png"),
                                    [data, samples])
            file_docs.append(("scatter.png",
                              "data (blue) vs generated (orange)"))
        report = diagnostics.mode_coverage(samples, mixture)
        _write_csv(os.path.join(out_dir, "modes.csv"),
                   ("modes_covered", "total_modes", "high_quality_fraction",
                    "min_count"),
                   [(report.modes_covered, report.total_modes,
                     repr(report.high_quality_fraction), report.min_count)])
        file_docs.append(("modes.csv", "mode coverage of 2000 generated "
                                       "samples: covered, total, "
                                       "high-quality fraction, count "
                                       "threshold"))
        _say(args, f"mode coverage: {report.modes_covered}/"
                   f"{report.total_modes}, high quality "
                   f"{report.high_quality_fraction:.3f}")

    _write_run_readme(out_dir, "train", file_docs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate-metric

def cmd_validate_metric(args):
    distance_fn = None
    if args.inject_fault:
        base = diagnostics._default_distance()

        def distance_fn(x, y, freqs):
            return -base(x, y, freqs)

    results = diagnostics.metric_suites(seed=args.seed,
                                        distance_fn=distance_fn,
                                        quick=args.quick)
    out_dir = _ensure_out(args.out)
    _write_csv(os.path.join(out_dir, "report.csv"),
               ("suite", "passed", "detail"),
               [(r.name, r.passed, '"' + r.detail.replace('"', "'") + '"')
                for r in results])
    _write_run_readme(out_dir, "validate-metric",
                      [("report.csv", "suite name, pass flag, detail")])
    width = max(len(r.name) for r in results)
    for r in results:
        _say(args, f"{r.name:<{width}}  "
                   f"{'pass' if r.passed else 'FAIL'}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed suites: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# swap

def cmd_swap(args):
    digits = args.digits
    if len(digits) != 2:
        raise ConfigError(f"swap needs exactly two digits, got {digits}")
    rng = np.random.default_rng(args.seed)
    if args.synthetic:
        ds = synthetic_digits(digits, per_class=max(args.n_out, 200),
                              rng=rng)
    else:
        if args.images is None or args.labels is None:
            raise ConfigError("swap needs --images and --labels "
                              "(or --synthetic)")
        try:
            ds = load_idx(args.images, args.labels)
        except (IdxFormatError, OSError) as exc:
            raise ConfigError(str(exc))
    try:
        set_a = filter_digits(ds, [digits[0]]).images
        set_b = filter_digits(ds, [digits[1]]).images
    except ValueError as exc:
        raise ConfigError(str(exc))

    result = diagnostics.swap_experiment(set_a, set_b, n_out=args.n_out,
                                         rng=rng)
    out_dir = _ensure_out(args.out)
    header = tuple(f"px{i}" for i in range(set_a.shape[1]))
    for key, block in result.samples.items():
        _write_csv(os.path.join(out_dir, f"samples_{key}.csv"), header,
                   [tuple(repr(v) for v in row) for row in block])

    rows = []
    checks_ok = True
    for key, block in result.samples.items():
        frac_a = diagnostics.nearest_mean_fraction(block, result.mean_a,
                                                   result.mean_b)
        phase_donor = digits[0] if key[0] == "a" else digits[1]
        donor_frac = frac_a if key[0] == "a" else 1.0 - frac_a
        rows.append((key, phase_donor, repr(donor_frac)))
        if donor_frac < 0.9:
            checks_ok = False
        _say(args, f"{key}: phase donor {phase_donor} wins "
                   f"classification {donor_frac:.3f}")
    _write_csv(os.path.join(out_dir, "classification_report.csv"),
               ("combo", "phase_donor", "phase_donor_fraction"), rows)
    _write_run_readme(out_dir, "swap", [
        ("samples_aa.csv .. samples_bb.csv",
         "pixel rows sampled from each phase/amplitude pairing; "
         "first letter = phase donor, second = amplitude donor"),
        ("classification_report.csv",
         "nearest-class-mean fraction won by the phase donor per combo"),
    ])
    if args.check and not checks_ok:
        print("phase-donor classification under 0.9", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# alpha sweep

def cmd_alpha_sweep(args):
    rows = diagnostics.alpha_sweep(args.alphas, iterations=args.budget,
                                   seed=args.seed)
    out_dir = _ensure_out(args.out)
    _write_csv(os.path.join(out_dir, "spread.csv"),
               ("alpha", "spread", "final_loss", "diverged"),
               [(repr(r.alpha), repr(r.spread), repr(r.final_loss),
                 r.diverged) for r in rows])
    _write_run_readme(out_dir, "alpha-sweep", [
        ("spread.csv", "alpha, RMS spread of generated samples about the "
                       "mixture mean, final loss, divergence flag"),
    ])
    for r in rows:
        flag = " (diverged)" if r.diverged else ""
        _say(args, f"alpha={r.alpha}: spread {r.spread:.4f}, "
                   f"final loss {r.final_loss:.4f}{flag}")
    if args.check:
        spreads = [r.spread for r in rows if not r.diverged]
        if len(spreads) != len(rows):
            print("a sweep diverged", file=sys.stderr)
            return EXIT_PROPERTY
        if any(b <= a for a, b in zip(spreads, spreads[1:])):
            print("spread not increasing with alpha", file=sys.stderr)
            return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# two-sample

def _load_csv_matrix(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read sample csv {path}: {exc}")
    return data


def cmd_two_sample(args):
    out_dir = _ensure_out(args.out)
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise ConfigError("file mode needs both --a and --b")
        a = _load_csv_matrix(args.a)
        b = _load_csv_matrix(args.b)
        rng = np.random.default_rng(args.seed)
        freqs = rng.standard_normal((args.k, a.shape[1]))
        result = diagnostics.permutation_test(a, b, freqs,
                                              num_perms=args.num_perms,
                                              level=args.level, rng=rng)
        _write_csv(os.path.join(out_dir, "result.csv"),
                   ("p_value", "observed", "num_perms", "reject"),
                   [(repr(result.p_value), repr(result.observed),
                     result.num_perms, result.reject)])
        _write_run_readme(out_dir, "two-sample",
                          [("result.csv", "p value, observed CF distance, "
                                          "permutations, reject flag")])
        _say(args, f"p = {result.p_value:.4f}, observed distance "
                   f"{result.observed:.4f}, reject at {args.level}: "
                   f"{result.reject}")
        return EXIT_OK

    rate, p_values = diagnostics.null_rejection_rate(
        trials=args.trials, n=args.n, num_perms=args.num_perms, k=args.k,
        level=args.level, shift=args.shift, seed=args.seed)
    regime = "null" if args.shift == 0.0 else f"shift {args.shift}"
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ("regime", "trials", "rejection_rate"),
               [(regime, args.trials, repr(rate))])
    _write_csv(os.path.join(out_dir, "p_values.csv"), ("p_value",),
               [(repr(p),) for p in p_values])
    _write_run_readme(out_dir, "two-sample", [
        ("summary.csv", "regime, trial count, rejection rate at the "
                        f"{args.level} level"),
        ("p_values.csv", "per-trial permutation p values"),
    ])
    _say(args, f"{regime}: rejection rate {rate:.3f} over "
               f"{args.trials} trials")
    if args.check:
        if args.shift == 0.0 and rate > 0.10:
            print(f"null rejection rate {rate:.3f} above 0.10",
                  file=sys.stderr)
            return EXIT_PROPERTY
        if args.shift > 0.0 and rate < 0.9:
            print(f"power {rate:.3f} under 0.9", file=sys.stderr)
            return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# grad-check

def cmd_grad_check(args):
    checks = diagnostics.gradient_check_suite(seed=args.seed)
    width = max(len(name) for name, _, _ in checks)
    bad = []
    for name, err, tol in checks:
        ok = err <= tol
        if not ok:
            bad.append(name)
        _say(args, f"{name:<{width}}  max rel err {err:.3e}  "
                   f"(tol {tol:.0e})  {'pass' if ok else 'FAIL'}")
    if bad:
        print(f"gradient checks failed: {', '.join(bad)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rcfgan",
        description="characteristic-function GAN: training and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_out, seed_default=0):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--out", default=default_out)
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("train", help="run the training loop")
    p.add_argument("--config", default=None)
    p.add_argument("--dataset", default=None,
                   help="preset name or idx:IMAGES,LABELS")
    p.add_argument("--iterations", type=int, default=None)
    # seed default None so a config-file seed is not silently overridden
    common(p, os.path.join("runs", "train"), seed_default=None)

    p = sub.add_parser("validate-metric", help="metric axiom suites")
    p.add_argument("--inject-fault", action="store_true",
                   help="negate the distance to prove the harness catches "
                        "a broken metric")
    p.add_argument("--quick", action="store_true")
    common(p, os.path.join("runs", "validate-metric"))

    p = sub.add_parser("swap", help="amplitude/phase swap demonstration")
    p.add_argument("--digits", type=_int_list, default=[1, 2])
    p.add_argument("--images", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--synthetic", action="store_true",
                   help="render digits instead of reading IDX files")
    p.add_argument("--n-out", type=int, default=64)
    p.add_argument("--check", action="store_true")
    common(p, os.path.join("runs", "swap"))

    p = sub.add_parser("alpha-sweep", help="spread vs alpha on bimodal data")
    p.add_argument("--alphas", type=_float_list,
                   default=[0.001, 0.5, 0.999])
    p.add_argument("--budget", type=int, default=400)
    p.add_argument("--check", action="store_true")
    common(p, os.path.join("runs", "alpha-sweep"))

    p = sub.add_parser("two-sample", help="permutation test on CF distance")
    p.add_argument("--a", default=None, help="csv of group A samples")
    p.add_argument("--b", default=None, help="csv of group B samples")
    p.add_argument("--shift", type=float, default=0.0,
                   help="mean shift for the alternative (0 = null)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--num-perms", type=int, default=200)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--check", action="store_true")
    common(p, os.path.join("runs", "two-sample"))

    p = sub.add_parser("grad-check", help="finite-difference gradient audit")
    common(p, os.path.join("runs", "grad-check"))

    return parser


_COMMANDS = {
    "train": cmd_train,
    "validate-metric": cmd_validate_metric,
    "swap": cmd_swap,
    "alpha-sweep": cmd_alpha_sweep,
    "two-sample": cmd_two_sample,
    "grad-check": cmd_grad_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
