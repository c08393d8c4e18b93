"""Command-line entry point: ``mcam generate | cluster | sweep | evaluate``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""
import argparse
import json
import sys
from pathlib import Path

from .clustering import APParams
from .errors import (BoundsError, ConfigError, ContractError, DegenerateInputError, FormatError,
                     NumericError)
from .metrics import NMI_NORMALIZATION, ari, block_rmse, dump_records, metric_record, nmi
from .pipeline import RunConfig, SweepSpec, run_mcam, run_sweep, write_json
from .synthgen import SyntheticSpec, generate, load_labels_csv, load_spec, save_labels_csv
from .tensor import read_tensor, save_tensor

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


def _preference(text):
    return text if text == "median" else float(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcam", description="Multiway clustering of 3-order tensors via slice affinity matrices.",
        epilog="exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric error")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic block tensor and its ground truth")
    gen.add_argument("--spec", help="JSON synthetic spec; flags below are ignored when given")
    gen.add_argument("--dims", type=int, nargs=3, default=(100, 100, 100))
    gen.add_argument("--n-clusters", type=int, default=9)
    gen.add_argument("--block-size", type=int, default=11)
    gen.add_argument("--gamma", type=float, default=55.0)
    gen.add_argument("--no-noise", action="store_true")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True, help="output directory")

    run = sub.add_parser("cluster", help="multiway clustering of a tensor file")
    run.add_argument("--input", required=True, help="T3B1 tensor, or .csv text tensor")
    run.add_argument("--variant", choices=("mcam1", "mcam2"), default="mcam1")
    run.add_argument("--engine", choices=("ap", "sc"), default="ap")
    run.add_argument("--k", type=int, nargs=3, help="cluster counts per mode (required for sc)")
    run.add_argument("--r", type=int, help="force the affinity dimension")
    run.add_argument("--damping", type=float, default=0.5)
    run.add_argument("--max-iterations", type=int, default=200)
    run.add_argument("--convergence-window", type=int, default=15)
    run.add_argument("--preference", type=_preference, default="median")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--output", required=True, help="output directory")

    sw = sub.add_parser("sweep", help="benchmark sweep over signal strengths")
    sw.add_argument("spec", help="JSON sweep spec")
    sw.add_argument("--output", required=True, help="results CSV")
    sw.add_argument("--runs", help="optional JSON file with per-run records")
    sw.add_argument("--workers", type=int, help="process count (default $MCAM_WORKERS or 1)")

    ev = sub.add_parser("evaluate", help="score labels against ground truth")
    ev.add_argument("--labels", required=True, help="mode,index,label CSV")
    ev.add_argument("--truth", help="ground-truth mode,index,label CSV")
    ev.add_argument("--tensor", help="tensor for block RMSE")
    ev.add_argument("--output", help="metrics JSON (default: stdout)")
    return parser


def cmd_generate(args):
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = SyntheticSpec.blocks(tuple(args.dims), args.n_clusters, args.block_size,
                                    args.gamma, not args.no_noise, args.seed)
    t, truth = generate(spec)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    save_tensor(t, out / "tensor.t3b")
    save_labels_csv(truth.labels, out / "truth.csv")
    write_json(spec.to_dict(), out / "spec.json")


def cmd_cluster(args):
    ap = APParams(args.damping, args.max_iterations, args.convergence_window, args.preference,
                  args.seed)
    cfg = RunConfig(args.input, args.variant, args.engine, args.k, args.r, ap, args.seed,
                    args.output)
    result = run_mcam(cfg)
    for m in result.report["modes"]:
        print(f"mode {m['mode']}: r={m['r']} clusters={m['n_clusters']}"
              + ("" if m["converged"] else " (not converged)"))


def cmd_sweep(args):
    with open(args.spec) as fh:
        spec = SweepSpec.from_dict(json.load(fh))
    result = run_sweep(spec, args.workers)
    result.write_csv(args.output)
    if args.runs:
        write_json(result.runs, args.runs)
    failed = [r for r in result.runs if "error" in r]
    for r in failed:
        print(f"warning: gamma={r['gamma']} {r['method']} rep={r['rep']}: {r['error']}",
              file=sys.stderr)


def cmd_evaluate(args):
    labels = load_labels_csv(args.labels)
    records = []
    if args.truth:
        truth = load_labels_csv(args.truth)
        for n, (a, b) in enumerate(zip(truth, labels), start=1):
            records.append(metric_record("ari", n, ari(a, b)))
            records.append(metric_record("nmi", n, nmi(a, b), normalization=NMI_NORMALIZATION))
    if args.tensor:
        mean, _ = block_rmse(read_tensor(args.tensor), labels)
        records.append(metric_record("block_rmse", None, mean, weighting="unweighted"))
    if not records:
        raise ConfigError("nothing to evaluate: pass --truth and/or --tensor")
    if args.output:
        dump_records(records, args.output)
    else:
        json.dump(records, sys.stdout, indent=2, sort_keys=True)
        print()


COMMANDS = {"generate": cmd_generate, "cluster": cmd_cluster, "sweep": cmd_sweep,
            "evaluate": cmd_evaluate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ConfigError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, BoundsError, DegenerateInputError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
