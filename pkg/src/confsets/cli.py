"""Command-line interface.

Subcommands: score, calibrate, predict, experiment, sweep, synth, dataprep.
All randomness flows from the given seed; rerunning any command with the
same arguments reproduces its outputs byte for byte. Exit codes: 0 success,
1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import conformal, dataprep, experiment, formats, synth
from .formats import FileFormatError
from .metrics import AggregateResult
from .scores import ScoreSpec, SimplexError, score_matrix

KIND_TOKENS = ("ip", "ms", "aps", "raps", "pip", "repip")


def _add_spec_args(parser, with_kind=True):
    if with_kind:
        parser.add_argument("--score", required=True, choices=KIND_TOKENS,
                            help="nonconformity score function")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0,
                        help="rank-penalty weight for raps")
    parser.add_argument("--gamma", type=float, default=0.0,
                        help="rank-penalty weight for repip")
    parser.add_argument("--k-reg", type=int, default=1,
                        help="rank at which the penalty starts")
    parser.add_argument("--u-mode", choices=("random", "fixed"), default="random",
                        help="tie-break draw mode for aps/raps")
    parser.add_argument("--u", dest="u_fixed", type=float, default=1.0,
                        help="tie-break value when --u-mode fixed")


def _spec_from_args(args, kind=None) -> ScoreSpec:
    return ScoreSpec(kind=kind or args.score, lam=args.lam, gamma=args.gamma,
                     k_reg=args.k_reg, u_mode=args.u_mode, u_fixed=args.u_fixed)


def _spec_config(spec: ScoreSpec) -> dict:
    return {"score": spec.kind, "lambda": spec.lam, "gamma": spec.gamma,
            "k_reg": spec.k_reg, "u_mode": spec.u_mode, "u": spec.u_fixed}


def cmd_score(args) -> int:
    ids, _, P = formats.read_probability_file(args.input)
    spec = _spec_from_args(args)
    u = conformal.draw_u(args.seed, P.shape[0], spec)
    scores = score_matrix(P, spec, u)
    config = {"command": "score", "input": args.input, "seed": args.seed,
              **_spec_config(spec)}
    rows = [[ids[i]] + [float(v) for v in scores[i]] for i in range(P.shape[0])]
    formats.write_table(args.output, ["id"] + [f"s_{k}" for k in range(P.shape[1])],
                        rows, config)
    return 0


def cmd_calibrate(args) -> int:
    _, labels, P = formats.read_probability_file(args.input)
    spec = _spec_from_args(args)
    record = conformal.calibrate(P, labels, spec, args.alpha, seed=args.seed)
    conformal.write_record(record, args.output)
    return 0


def cmd_predict(args) -> int:
    ids, labels, P = formats.read_probability_file(args.input)
    record = conformal.read_record(args.record)
    u = conformal.draw_u(args.seed, P.shape[0], record.spec)
    sets = conformal.predict_sets(P, record, u_values=u)
    config = {"command": "predict", "input": args.input, "record": args.record,
              "seed": args.seed, "alpha": record.alpha, **_spec_config(record.spec)}
    rows = [[ids[i], int(labels[i]), s.size,
             ";".join(str(k) for k in sorted(s.classes))]
            for i, s in enumerate(sets)]
    formats.write_table(args.output, ["id", "label", "set_size", "classes"],
                        rows, config)
    return 0


def _parse_specs(tokens: str, args) -> tuple:
    specs = []
    for token in tokens.split(","):
        token = token.strip().lower()
        if token not in KIND_TOKENS:
            raise ValueError(f"unknown score kind {token!r}")
        specs.append(_spec_from_args(args, kind=token))
    return tuple(specs)


def cmd_experiment(args) -> int:
    _, labels, P = formats.read_probability_file(args.input)
    specs = _parse_specs(args.specs, args)
    plan = experiment.ExperimentPlan(
        specs=specs, alpha=args.alpha, n_trials=args.trials,
        cal_fraction=args.cal_fraction, master_seed=args.master_seed,
        fill_empty_with_argmax=args.fill_empty)
    results = experiment.run_experiment(P, labels, plan)
    config = {"command": "experiment", "input": args.input, "specs": args.specs,
              "alpha": args.alpha, "trials": args.trials,
              "cal_fraction": args.cal_fraction, "master_seed": args.master_seed,
              "fill_empty": args.fill_empty, "lambda": args.lam,
              "gamma": args.gamma, "k_reg": args.k_reg, "u_mode": args.u_mode}

    trial_rows = []
    summary_rows = []
    for spec, agg in results.items():
        for i in range(agg.n_trials):
            trial_rows.append([spec.label(), i,
                               float(agg.coverage.values[i]),
                               float(agg.efficiency.values[i]),
                               float(agg.informativeness.values[i])])
        for name, m in (("coverage", agg.coverage), ("efficiency", agg.efficiency),
                        ("informativeness", agg.informativeness)):
            summary_rows.append([spec.label(), name, m.mean, m.std, m.min, m.max])
    prefix = args.output_prefix
    formats.write_table(f"{prefix}_trials.csv",
                        ["spec", "trial", "coverage", "efficiency", "informativeness"],
                        trial_rows, config)
    formats.write_table(f"{prefix}_summary.csv",
                        ["spec", "metric", "mean", "std", "min", "max"],
                        summary_rows, config)
    report = experiment.comparison_report(results)
    with open(f"{prefix}_report.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(formats.config_header(config) + report) + "\n")
    return 0


def cmd_sweep(args) -> int:
    _, labels, P = formats.read_probability_file(args.input)
    grid = tuple(float(v) for v in args.grid.split(","))
    sweep = experiment.SweepPlan(parameter=args.param, grid=grid, k_reg=args.k_reg,
                                 n_trials=args.trials, alpha=args.alpha,
                                 cal_fraction=args.cal_fraction,
                                 master_seed=args.master_seed)
    base_kind = "raps" if args.param == "lambda" else "repip"
    rows, saturation = experiment.run_sweep(P, labels, sweep, base_kind)
    config = {"command": "sweep", "input": args.input, "param": args.param,
              "grid": args.grid, "k_reg": args.k_reg, "trials": args.trials,
              "alpha": args.alpha, "cal_fraction": args.cal_fraction,
              "master_seed": args.master_seed, "base_kind": base_kind}
    formats.write_table(args.output,
                        ["value", "trial", "coverage", "efficiency", "informativeness"],
                        [[r["value"], r["trial"], r["coverage"], r["efficiency"],
                          r["informativeness"]] for r in rows], config)
    sat_path = args.saturation_output or f"{args.output}.saturation.csv"
    formats.write_table(sat_path,
                        ["value_lo", "value_hi", "identical_trials", "n_trials"],
                        [[s["value_lo"], s["value_hi"], s["identical_trials"],
                          s["n_trials"]] for s in saturation], config)
    return 0


def cmd_synth(args) -> int:
    config_obj = synth.SynthConfig(n_classes=args.k, n_examples=args.n,
                                   concentration=args.concentration, seed=args.seed)
    P, labels = synth.generate(config_obj)
    config = {"command": "synth", "k": args.k, "n": args.n,
              "concentration": args.concentration, "seed": args.seed}
    formats.write_probability_file(args.output, P, labels, config=config)
    return 0


def _load_mask(path: Path) -> np.ndarray:
    if path.suffix == ".npy":
        arr = np.load(path)
    else:
        from PIL import Image
        arr = np.asarray(Image.open(path))
    if arr.ndim != 2:
        raise FileFormatError(f"{path}: expected a single-channel mask, got shape {arr.shape}")
    return arr.astype(np.int64)


def _read_class_table(path):
    import csv as _csv
    names = {}
    with open(path, encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "name"]:
            raise FileFormatError(f"{path}: expected header 'id,name'")
        for row in reader:
            if row:
                names[int(row[0])] = row[1]
    if not names:
        raise FileFormatError(f"{path}: empty class table")
    return names


def _resolve_class(token: str, names: dict) -> int:
    by_name = {v: k for k, v in names.items()}
    if token in by_name:
        return by_name[token]
    try:
        cid = int(token)
    except ValueError:
        raise ValueError(f"unknown class {token!r}") from None
    if cid not in names:
        raise ValueError(f"unknown class id {cid}")
    return cid


def cmd_dataprep(args) -> int:
    names = _read_class_table(args.classes)
    soil_id = _resolve_class(args.soil, names)
    rasters = []
    for path in sorted(args.masks):
        p = Path(path)
        rasters.append(dataprep.MaskRaster(source_id=p.stem, labels=_load_mask(p),
                                           class_names=names, soil_id=soil_id))
    manifest = dataprep.build_manifest(rasters, args.tile_size, args.scope,
                                       seed=args.seed)
    if args.undersample:
        token, _, target = args.undersample.partition(":")
        if not target:
            raise ValueError("--undersample expects CLASS:COUNT")
        manifest = dataprep.undersample(manifest, _resolve_class(token, names),
                                        int(target), args.seed)
    if args.drop:
        ids = [_resolve_class(t.strip(), names) for t in args.drop.split(",")]
        manifest = dataprep.drop_classes(manifest, ids)
    header = formats.config_header({
        "command": "dataprep", "classes": args.classes, "soil": args.soil,
        "tile_size": args.tile_size, "scope": args.scope, "seed": args.seed,
        "undersample": args.undersample or "", "drop": args.drop or "",
        "n_masks": len(rasters)})
    header = [line[2:] for line in header]  # writers add their own '# '
    dataprep.write_manifest(manifest, args.output, header)
    if args.summary_output:
        dataprep.write_class_summary(manifest, args.summary_output, header)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confsets",
        description="Conformal classification: nonconformity scores, "
                    "calibration, prediction sets, and evaluation harness.")
    parser.add_argument("--config", help="file of key=value lines standing in for flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score every class of every input row")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_spec_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", help="compute a calibration record")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    _add_spec_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("predict", help="prediction sets from a calibration record")
    p.add_argument("--input", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="repeated-split comparison of score functions")
    p.add_argument("--input", required=True)
    p.add_argument("--output-prefix", required=True)
    p.add_argument("--specs", default="ip,ms,aps,raps,pip,repip")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--cal-fraction", type=float, default=experiment.DEFAULT_CAL_FRACTION)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--fill-empty", action="store_true",
                   help="post-fill empty sets with the argmax class")
    _add_spec_args(p, with_kind=False)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="regularization-weight grid sweep")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--saturation-output", default=None)
    p.add_argument("--param", required=True, choices=("lambda", "gamma"))
    p.add_argument("--grid", required=True, help="comma-separated ascending values")
    p.add_argument("--k-reg", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--cal-fraction", type=float, default=experiment.DEFAULT_CAL_FRACTION)
    p.add_argument("--master-seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate synthetic classifier outputs")
    p.add_argument("--k", type=int, default=13)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--concentration", type=float, default=synth.DEFAULT_CONCENTRATION)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dataprep", help="tile label masks into a dataset manifest")
    p.add_argument("--masks", nargs="+", required=True,
                   help="single-channel class-id rasters (.png or .npy)")
    p.add_argument("--classes", required=True, help="csv class table with id,name")
    p.add_argument("--soil", default="soil", help="background class name or id")
    p.add_argument("--tile-size", type=int, default=224)
    p.add_argument("--scope", choices=dataprep.SCOPES, default="non_soil")
    p.add_argument("--undersample", default=None, metavar="CLASS:COUNT")
    p.add_argument("--drop", default=None, help="comma-separated classes to remove")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--summary-output", default=None)
    p.set_defaults(func=cmd_dataprep)

    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Splice `--config FILE` key=value pairs in as ordinary flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    extra = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            flag = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() == "true":
                extra.append(flag)
            else:
                extra.extend([flag, value])
    return rest + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except (FileFormatError, SimplexError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
