"""Command-line front end: simulate, score, curves, replicate, rerun.

Every run writes ``manifest.json`` into its output directory. The manifest
holds the fully resolved options (seed included), so
``predscore rerun OUT/manifest.json --out OTHER`` reproduces the outputs
byte for byte. Exit codes: 0 success, 2 usage error, 3 data/contract
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__, _rng
from .data import PANEL_CSV_HEADER, RebalanceSpec, load_csv, load_panel_dataset, rebalance, write_panel_csv
from .errors import DataError, PredscoreError
from .evaluation import replicate
from .losses import LOSSES
from .models import N_DRAWS, ModelSpec, spec_by_name
from .scoring import prediction_score
from .simulation import SimConfig, simulate_grid, tomllib

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
MANIFEST = "manifest.json"
# options that never change outputs and so stay out of the manifest
_VOLATILE = {"out", "threads", "config", "command", "func", "verbose"}

log = logging.getLogger("predscore")


class UsageError(PredscoreError):
    exit_code = EXIT_USAGE


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _names(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _add_sim_options(p):
    g = p.add_argument_group("simulation")
    g.add_argument("--pi", type=_floats, help="comma-separated bot fractions (default 0,0.25,0.5,0.75,1)")
    g.add_argument("--J", type=int, help="cohorts per setting (default 10)")
    g.add_argument("--T", type=int, help="recorded rounds (default 15)")
    g.add_argument("--M", type=int, help="recruit pool size (default 10000)")
    g.add_argument("--p-participate", type=float, help="participation rate (default 0.0018)")
    g.add_argument("--human-coefs", type=_floats, help="b0,b1,b2,b3 for humans")
    g.add_argument("--bot-coefs", type=_floats, help="b0',b2' for bots")


def _add_scoring_options(p, K_default=None):
    g = p.add_argument_group("scoring")
    g.add_argument("--loss", choices=LOSSES, help="loss statistic (default roc_auc)")
    g.add_argument("--K", type=int, default=K_default, help="number of folds")
    g.add_argument("--scheme", choices=("partition", "subsample"), help="fold scheme")
    g.add_argument("--holdout-size", type=int, help="partition fold size used to pick K (default 50)")
    g.add_argument("--subset-size", type=int, help="subsample fold size (default 500)")
    g.add_argument("--draws", type=int, help=f"bootstrap draws per fold model (default {N_DRAWS}; 0 = plug-in MLE)")
    g.add_argument("--no-stratify", action="store_true", default=None, help="do not preserve class rates in folds")


def _add_common(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (generated and printed when absent)")
    p.add_argument("--config", help="TOML key = value file; command-line flags take precedence")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_pair_inputs(p):
    p.add_argument("--tau", help="CSV for tau (cross-validation side)")
    p.add_argument("--tau-prime", help="CSV for tau' (validation side)")
    p.add_argument("--label", help="label column (panel exports need none)")
    p.add_argument("--features", type=_names, help="comma-separated feature columns")
    p.add_argument("--rebalance", action="store_true", default=None, help="resample tau' to tau's baseline rate")
    p.add_argument("--rebalance-size", type=int, help="size of the rebalanced tau' (default: its size)")
    p.add_argument("--shared-fold-seed", action="store_true", default=None,
                   help="split tau' with the same fold seed as tau")


def build_parser():
    parser = argparse.ArgumentParser(prog="predscore", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"predscore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate public-goods-game panels, one CSV per bot fraction")
    _add_common(p)
    _add_sim_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="prediction score for one (tau, tau') pair")
    _add_common(p)
    _add_pair_inputs(p)
    p.add_argument("--model", help="researcher model: 1, 2 or 3")
    p.add_argument("--covariates", type=_names, help="comma-separated covariates (instead of --model)")
    p.add_argument("--h", choices=("ks", "mean_diff", "both"), help="headline score (default both)")
    _add_scoring_options(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("curves", help="per-fold ROC / PR curves for several models")
    _add_common(p)
    _add_pair_inputs(p)
    p.add_argument("--models", type=_names, help="comma-separated researcher models (default 1,2,3)")
    _add_scoring_options(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("replicate", help="repeat the grid accuracy study")
    _add_common(p)
    _add_sim_options(p)
    p.add_argument("--reps", type=int, help="replicates (default 20)")
    p.add_argument("--models", type=_names, help="comma-separated researcher models (default 1,2,3)")
    _add_scoring_options(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_rerun)
    return parser


DEFAULTS = {
    "loss": "roc_auc",
    "holdout_size": 50,
    "subset_size": 500,
    "draws": N_DRAWS,
    "no_stratify": False,
    "h": "both",
    "rebalance": False,
    "shared_fold_seed": False,
    "reps": 20,
    "models": ["1", "2", "3"],
}


def _apply_config(args, parser):
    """Fill options not given on the command line from --config, then defaults."""
    values = vars(args)
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest not in values or dest in _VOLATILE:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if values[dest] is None:
                values[dest] = value
    for key, value in DEFAULTS.items():
        if key in values and values[key] is None:
            values[key] = value
    if "seed" in values and values["seed"] is None:
        values["seed"] = int(np.random.SeedSequence().entropy % (2**32))
        print(f"seed: {values['seed']}", file=sys.stderr)
    if values.get("threads") is None:
        values["threads"] = os.cpu_count() or 1
    return args


def _sim_config(args) -> SimConfig:
    values = {
        "pi_grid": args.pi,
        "J": args.J,
        "T": args.T,
        "M": args.M,
        "p_participate": args.p_participate,
        "human_coefs": args.human_coefs,
        "bot_coefs": args.bot_coefs,
    }
    values = {k: v for k, v in values.items() if v is not None}
    return SimConfig.from_mapping({**values, "seed": args.seed})


def _manifest(args):
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE}
    return {"predscore_version": __version__, "command": args.command, "options": opts}


def _write(path, text):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _outdir(args):
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {args.out}: {exc}") from None
    if not os.access(args.out, os.W_OK):
        raise DataError(f"output directory {args.out} is not writable")
    _write(os.path.join(args.out, MANIFEST), json.dumps(_manifest(args), indent=2, sort_keys=True) + "\n")
    return args.out


def _panel_name(pi):
    return f"panel_pi{float(pi):g}.csv"


def cmd_simulate(args):
    config = _sim_config(args)
    out = _outdir(args)
    for pi, panel in simulate_grid(config).items():
        write_panel_csv(panel, os.path.join(out, _panel_name(pi)))
        log.info("pi=%g: %d participants, cooperation %.3f", pi, panel.n_participants, panel.cooperation_rate)
    print(f"wrote {len(config.pi_grid)} panel file(s) to {out}")
    return EXIT_OK


def _read_dataset(path, args):
    if not path:
        raise UsageError("both --tau and --tau-prime are required")
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if tuple(h.strip() for h in header) == PANEL_CSV_HEADER and not args.features:
        return load_panel_dataset(path)
    if not args.label or not args.features:
        raise UsageError(f"{path} is not a panel export; give --label and --features")
    return load_csv(path, args.label, args.features)


def _pair(args):
    tau = _read_dataset(args.tau, args)
    tau_prime = _read_dataset(args.tau_prime, args)
    if args.rebalance:
        size = args.rebalance_size or tau_prime.n
        tau_prime = rebalance(tau_prime, RebalanceSpec(tau.rate, size, _rng.child_seed(args.seed, _rng.REBALANCE)))
    return tau, tau_prime


def _fold_options(args, n):
    scheme = args.scheme or "partition"
    K = args.K
    if K is None:
        K = max(2, n // args.holdout_size) if scheme == "partition" else 10
    subset = args.subset_size if scheme == "subsample" else None
    return K, scheme, subset


def _score(args, tau, tau_prime, spec, h="both"):
    K, scheme, subset = _fold_options(args, tau.n)
    return prediction_score(
        tau,
        tau_prime,
        spec,
        K=K,
        scheme=scheme,
        subset_size=subset,
        loss=args.loss,
        h=h,
        seed=args.seed,
        stratified=not args.no_stratify,
        draws=args.draws,
        share_fold_seed=bool(args.shared_fold_seed),
        threads=args.threads,
    )


def cmd_score(args):
    if args.covariates:
        spec = ModelSpec(tuple(args.covariates))
    elif args.model:
        spec = spec_by_name(args.model)
    else:
        raise UsageError("give --model or --covariates")
    tau, tau_prime = _pair(args)
    report = _score(args, tau, tau_prime, spec, args.h)
    out = _outdir(args)
    _write(os.path.join(out, "report.json"), report.to_json() + "\n")
    _write(os.path.join(out, "curves.csv"), report.curves_csv())
    _write(os.path.join(out, "losses.csv"), report.losses_csv())
    print(
        f"{report.model_name} {report.loss_name}: ks={report.ks:.4f} "
        f"mean_difference={report.mean_difference:+.4f} (cv {report.cv.mean:.4f}, val {report.val.mean:.4f})"
    )
    return EXIT_OK


def cmd_curves(args):
    tau, tau_prime = _pair(args)
    specs = [spec_by_name(m) for m in args.models]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "kind", "side", "fold", "x", "y"])
    summary = []
    for spec in specs:
        report = _score(args, tau, tau_prime, spec)
        for c in report.curves:
            for x, y in c.points:
                w.writerow([spec.name, c.kind, c.side, c.fold_id, repr(float(x)), repr(float(y))])
        summary.append({"model": spec.name, "ks": report.ks, "mean_difference": report.mean_difference})
    out = _outdir(args)
    _write(os.path.join(out, "curves.csv"), buf.getvalue())
    _write(os.path.join(out, "summary.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for s in summary:
        print(f"{s['model']}: ks={s['ks']:.4f} mean_difference={s['mean_difference']:+.4f}")
    return EXIT_OK


def cmd_replicate(args):
    config = _sim_config(args)
    specs = [spec_by_name(m) for m in args.models]
    K = args.K or 10
    if args.scheme == "partition":
        raise UsageError("the replication study uses the subsample scheme")

    def progress(r, reps):
        print(f"rep {r + 1}/{reps} done", file=sys.stderr, flush=True)

    report = replicate(
        config,
        args.reps,
        specs,
        loss=args.loss,
        K=K,
        subset_size=args.subset_size,
        master_seed=args.seed,
        draws=args.draws,
        threads=args.threads,
        progress=progress,
    )
    out = _outdir(args)
    _write(os.path.join(out, "replication.json"), report.to_json() + "\n")
    _write(os.path.join(out, "replication.csv"), report.to_csv())
    for spec in specs:
        print(f"{spec.name}: median dCor {report.median_dcor(spec.name):.4f}")
    return EXIT_OK


def cmd_rerun(args):
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
        command = manifest["command"]
        options = manifest["options"]
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc}") from None
    parser = build_parser()
    ns = parser.parse_args([command, "--out", args.out])
    for key, value in options.items():
        setattr(ns, key, value)
    ns.threads = args.threads or os.cpu_count() or 1
    return ns.func(ns)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command != "rerun":
            _apply_config(args, parser)
        return args.func(args)
    except PredscoreError as exc:
        print(f"predscore {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
