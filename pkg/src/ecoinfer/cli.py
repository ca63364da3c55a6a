"""Command-line interface.

Subcommands: synth, summarize, reconstruct, similarity, train, predict,
experiment, sweep. Exits 0 on success; on failure prints a stage-tagged
diagnostic and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .aggregate import AggregateSpec, summarize
from .forest import (EnsembleModel, ForestParams, ensemble_predict, evaluate,
                     load_ensemble, save_ensemble, train_forest)
from .pipeline import (ExperimentPlan, StageError, default_workers,
                       run_controlled_sweep, run_experiment,
                       run_undersampling_sweep, SWEEPABLE)
from .reconstruct import generate_candidates, save_candidates
from .similarity import (EXACT_ASSIGNMENT, GREEDY_RANK, IDENTITY,
                         exact_match_fraction, match_rows)
from .synth import (builtin_configs, configs_from_json, configs_to_json,
                    generate_ground_truth)
from .tabular import Dataset


def _add_seed(p, default=0):
    p.add_argument("--seed", type=int, default=default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ecoinfer",
        description="Aggregate-statistics data reconstruction and "
                    "candidate-ensemble modeling.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a ground-truth dataset")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--builtin", type=int, metavar="1-10",
                   help="builtin parameter configuration index")
    g.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--n", type=int, default=None, help="override row count")
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    _add_seed(p, default=None)
    p.add_argument("--export-configs", action="store_true",
                   help="also write configs.json with all builtin configs")

    p = sub.add_parser("summarize", help="dataset CSV -> aggregate spec JSON")
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("reconstruct",
                       help="aggregate spec JSON -> candidate datasets")
    p.add_argument("spec", type=Path)
    p.add_argument("--candidates", type=int, default=9)
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--max-attempts", type=int, default=1000)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_seed(p)

    p = sub.add_parser("similarity", help="compare two dataset CSVs")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--method", choices=["greedy", "exact", "identity"],
                   default="greedy")
    p.add_argument("--features", nargs="*", default=None,
                   help="column subset (default: all columns)")
    p.add_argument("--out", type=Path, default=None,
                   help="write the JSON report here instead of stdout")

    p = sub.add_parser("train", help="train an ensemble on candidate CSVs")
    p.add_argument("candidates", type=Path, nargs="+")
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--out", type=Path, required=True, help="model JSON file")
    _add_seed(p)

    p = sub.add_parser("predict", help="predict outcomes with a saved ensemble")
    p.add_argument("model", type=Path)
    p.add_argument("dataset", type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--truth", action="store_true",
                   help="dataset has labels; also print metrics")

    p = sub.add_parser("experiment", help="full pipeline run")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--builtin", type=int, metavar="1-10")
    g.add_argument("--config", type=Path)
    g.add_argument("--spec", type=Path, help="aggregate spec JSON (no "
                   "ground-truth evaluation unless --truth is given)")
    p.add_argument("--truth", type=Path, default=None,
                   help="ground-truth CSV to evaluate a --spec run against")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--candidates", type=int, default=9)
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--rate", type=float, default=None,
                   help="majority-class undersampling rate")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    _add_seed(p, default=2000)

    p = sub.add_parser("sweep", help="undersampling-rate or controlled sweep")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--builtin", type=int, metavar="1-10")
    g.add_argument("--config", type=Path)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rates", type=float, nargs="+", default=None,
                   help="undersampling sweep rates")
    p.add_argument("--parameter", choices=SWEEPABLE, default=None,
                   help="controlled-sweep parameter")
    p.add_argument("--values", type=float, nargs="+", default=None)
    p.add_argument("--candidates", type=int, default=9)
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    _add_seed(p, default=2000)
    return ap


def _load_config(args):
    if getattr(args, "builtin", None) is not None:
        cfgs = builtin_configs()
        if not 1 <= args.builtin <= len(cfgs):
            raise ValueError(f"builtin config index must be 1..{len(cfgs)}")
        cfg = cfgs[args.builtin - 1]
    else:
        cfg = configs_from_json(args.config)[0]
    if getattr(args, "n", None):
        from .synth import with_overrides
        cfg = with_overrides(cfg, n=args.n)
    if getattr(args, "seed", None) is not None:
        from .synth import with_overrides
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def _forest_params(args, seed: int) -> ForestParams:
    return ForestParams(n_trees=args.trees, max_depth=args.depth, seed=seed)


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    ds = generate_ground_truth(cfg)
    ds.to_csv(args.out)
    if args.export_configs:
        configs_to_json(builtin_configs(), args.out.parent / "configs.json")
    print(f"wrote {ds.n_rows} rows to {args.out}")
    return 0


def _cmd_summarize(args) -> int:
    ds = Dataset.from_csv(args.dataset)
    summarize(ds).to_json(args.out)
    print(f"wrote aggregate spec to {args.out}")
    return 0


def _cmd_reconstruct(args) -> int:
    spec = AggregateSpec.from_json(args.spec)
    cs = generate_candidates(spec, args.candidates, args.delta, args.seed,
                             args.max_attempts)
    save_candidates(cs, args.out)
    print(f"wrote {len(cs.candidates)} candidates to {args.out} "
          f"({cs.attempts_used} attempts)")
    return 0


def _cmd_similarity(args) -> int:
    a = Dataset.from_csv(args.a)
    b = Dataset.from_csv(args.b)
    method = {"greedy": GREEDY_RANK, "exact": EXACT_ASSIGNMENT,
              "identity": IDENTITY}[args.method]
    subset = args.features if args.features else None
    matching = match_rows(a, b, method, subset)
    report = {
        "method": method,
        "average_distance": matching.average_distance,
        "similarity": 1.0 - matching.average_distance,
        "exact_match_fraction": exact_match_fraction(a, b, matching, subset),
        "n_rows": a.n_rows,
        "feature_subset": subset,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_train(args) -> int:
    models = []
    for k, path in enumerate(args.candidates):
        ds = Dataset.from_csv(path)
        models.append(train_forest(ds, _forest_params(args, args.seed + k)))
    save_ensemble(EnsembleModel(models=models), args.out)
    print(f"wrote ensemble of {len(models)} forests to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    ensemble = load_ensemble(args.model)
    ds = Dataset.from_csv(args.dataset)
    labels = ensemble_predict(ensemble, ds)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("prediction\n")
            fh.writelines(f"{int(v)}\n" for v in labels)
    else:
        print(",".join(str(int(v)) for v in labels))
    if args.truth:
        m = evaluate(labels, ds.outcome)
        print(json.dumps(m.to_dict(), indent=2, sort_keys=True))
    return 0


def _experiment_plan(args, base_seed: int) -> ExperimentPlan:
    workers = args.workers if args.workers else default_workers()
    kwargs = dict(n_candidates=args.candidates, delta=args.delta,
                  forest=_forest_params(args, seed=base_seed + 1),
                  out_dir=args.out, base_seed=base_seed, workers=workers)
    if getattr(args, "spec", None) is not None:
        spec = AggregateSpec.from_json(args.spec)
        truth = Dataset.from_csv(args.truth) if args.truth else None
        return ExperimentPlan(spec=spec, ground_truth=truth, **kwargs)
    return ExperimentPlan(config=_load_config(args), **kwargs)


def _cmd_experiment(args) -> int:
    if args.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    if args.repeats == 1:
        plan = _experiment_plan(args, args.seed)
        plan.undersample_rate = args.rate
        report = run_experiment(plan)
    else:
        accs = []
        for rep in range(args.repeats):
            a = argparse.Namespace(**vars(args))
            a.out = args.out / f"rep_{rep}"
            plan = _experiment_plan(a, args.seed + 7919 * rep)
            plan.undersample_rate = args.rate
            report = run_experiment(plan)
            accs.append(report.ensemble_metrics)
        summary = {"repeats": args.repeats, "ensemble_metrics": accs}
        with open(args.out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if report.ensemble_metrics:
        m = report.ensemble_metrics
        print(f"ensemble accuracy={m['accuracy']:.4f} "
              f"precision={m['precision'] if m['precision'] is not None else 'n/a'} "
              f"recall={m['recall']:.4f}")
    print(f"report written to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    plan = _experiment_plan(args, args.seed)
    if args.rates:
        plan.rates = args.rates
        reports = run_undersampling_sweep(plan)
        print(f"{len(reports)} undersampling reports written to {args.out}")
    elif args.parameter and args.values:
        reports = run_controlled_sweep(plan.config, args.parameter,
                                       args.values, plan)
        print(f"{len(reports)} controlled-sweep reports written to {args.out}")
    else:
        raise ValueError("provide --rates, or --parameter with --values")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "summarize": _cmd_summarize,
    "reconstruct": _cmd_reconstruct,
    "similarity": _cmd_similarity,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "experiment": _cmd_experiment,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except StageError as e:
        print(f"error at stage {e.stage}: {e.cause}", file=sys.stderr)
        return 2
    except Exception as e:  # surface a tagged one-liner, not a traceback
        print(f"error [{args.command}]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
