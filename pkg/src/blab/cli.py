"""Command-line entry point: experiment dispatch, CSV/JSON emission, SVG charts.

Exit codes: 0 success, 1 verify-suite failure, 2 config error, 3 data error,
4 numeric failure (training divergence or projection breakdown).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config, serialize_config
from .data import (DataError, export_csv, gen_gaussian_blobs, gen_symmetric_layout,
                   save_idx)
from .experiments import (ExperimentError, run_generalization_tracking,
                          run_iterative_projection, run_symmetry_experiment,
                          run_transfer)
from .fileio import atomic_write_text
from .nn import TrainingDivergence
from .svg import line_chart
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must be section.key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _records_chart(records, out_svg) -> None:
    xs = [r.iteration for r in records]
    ys = [r.mean_nn_distance for r in records]
    atomic_write_text(out_svg, line_chart(xs, ys, "Mean inter-class distance per iteration",
                                          "iteration", "mean distance"))


def cmd_iterproj(args) -> int:
    cfg = parse_config(args.config, _overrides(args.set))
    if args.iterations is not None:
        cfg.iterations = args.iterations
        cfg.validate()
    out = Path(args.out or "run_iterproj")
    records = run_iterative_projection(cfg, out_dir=out)
    _records_chart(records, out / "chart.svg")
    print(f"wrote {out / 'records.csv'} and {out / 'chart.svg'} "
          f"({len(records)} records)")
    return EXIT_OK


def cmd_gentrack(args) -> int:
    cfg = parse_config(args.config, _overrides(args.set))
    if args.iterations is not None:
        cfg.iterations = args.iterations
        cfg.validate()
    out = Path(args.out or "run_gentrack")
    records = run_generalization_tracking(cfg, out_dir=out)
    _records_chart(records, out / "chart.svg")
    print(f"wrote {out / 'records.csv'} ({len(records)} records, test accuracy tracked)")
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = parse_config(args.config, _overrides(args.set))
    report = run_transfer(cfg, args.mode, kappa=args.kappa)
    out = Path(args.out or "transfer_report.json")
    payload = {
        "mode": report.mode, "kappa": report.kappa, "valid": report.valid,
        "n_samples": report.n_samples,
        "fooling_rate_transfer": report.fooling_rate_transfer,
        "fooling_rate_source": report.fooling_rate_source,
        "fooling_rate_random_baseline": report.fooling_rate_random_baseline,
    }
    atomic_write_text(out, json.dumps(payload, indent=2) + "\n")
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_symmetry(args) -> int:
    report = run_symmetry_experiment(args.layout, args.trials,
                                     master_seed=args.seed, perturb=args.perturb,
                                     kappa=args.kappa)
    out = Path(args.out or "symmetry_report.json")
    atomic_write_text(out, json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    results, failing = run_suite(args.suite)
    all_ok = True
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}" + (f"  ({detail})" if detail else ""))
        all_ok &= ok
    if not all_ok and failing is not None:
        path = Path(f"verify_{args.suite}_failure.json")
        atomic_write_text(path, json.dumps(failing, indent=2, default=str) + "\n")
        print(f"failing case serialized to {path}", file=sys.stderr)
    return EXIT_OK if all_ok else EXIT_FAIL


def cmd_plot(args) -> int:
    from .experiments import records_from_csv
    text = Path(args.records).read_text()
    records = records_from_csv(text)
    if not records:
        raise DataError("records CSV has no rows")
    _records_chart(records, args.out)
    print(f"wrote {args.out} ({len(records)} points)")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    if args.kind == "blobs":
        half = args.distance / 2.0
        c0 = np.zeros(args.dim)
        c1 = np.zeros(args.dim)
        c0[0], c1[0] = -half, half
        data = gen_gaussian_blobs(args.dim, args.per_class, (c0, c1), args.sigma, args.seed)
    else:
        data = gen_symmetric_layout(args.kind).dataset
    out = Path(args.out)
    if args.format == "csv":
        export_csv(data, out)
        print(f"wrote {out} ({len(data)} samples)")
    else:
        side = int(round(np.sqrt(data.dim)))
        if side * side != data.dim:
            raise DataError("idx export needs a square feature dimension")
        labels_path = out.with_suffix(".labels.idx")
        save_idx(data, out, labels_path, side, side)
        print(f"wrote {out} and {labels_path}")
    return EXIT_OK


def cmd_show_config(args) -> int:
    cfg = parse_config(args.config, _overrides(args.set))
    sys.stdout.write(serialize_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="experiment config file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config value")
        sp.add_argument("--out", help="output directory / file")

    sp = sub.add_parser("iterproj", help="iterative boundary projection run")
    common(sp)
    sp.add_argument("--iterations", type=int)
    sp.set_defaults(fn=cmd_iterproj)

    sp = sub.add_parser("gentrack", help="iterative projection with test-accuracy tracking")
    common(sp)
    sp.add_argument("--iterations", type=int)
    sp.set_defaults(fn=cmd_gentrack)

    sp = sub.add_parser("transfer", help="adversarial transferability experiment")
    common(sp)
    sp.add_argument("--mode", choices=["cross_model", "cross_training_set"],
                    default="cross_training_set")
    sp.add_argument("--kappa", type=float, default=None)
    sp.set_defaults(fn=cmd_transfer)

    sp = sub.add_parser("symmetry", help="boundary-multiplicity experiment on a symmetric layout")
    sp.add_argument("--layout", default="square_xor")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--perturb", type=float, default=0.0)
    sp.add_argument("--kappa", type=float, default=0.1)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_symmetry)

    sp = sub.add_parser("verify", help="run a property suite")
    sp.add_argument("suite", help="oracle | claims | gradients")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("plot", help="records CSV -> SVG line chart")
    sp.add_argument("records")
    sp.add_argument("out")
    sp.set_defaults(fn=cmd_plot)

    sp = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    sp.add_argument("--kind", choices=["blobs", "square_xor", "mirrored_pairs"],
                    default="blobs")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["csv", "idx"], default="csv")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--per-class", dest="per_class", type=int, default=50)
    sp.add_argument("--distance", type=float, default=4.0)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_gen_data)

    sp = sub.add_parser("show-config", help="parse and echo a resolved config")
    common(sp)
    sp.set_defaults(fn=cmd_show_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ExperimentError, TrainingDivergence) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
