"""Command-line entry point: ``relscen <subcommand> ...``.

Exit status is 0 on success, 1 when the inputs are rejected or a solve fails,
and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bench
from .core import InstanceFormatError, ProblemKind, load_instance, save_instance
from .features import compute_features
from .forest import ForestModel, ForestParams, TrainingError, roc_auc, roc_csv
from .milp import export_lp
from .netmodels import encode_master
from .pipeline import GeneratorParams, generate_instance, label_instance, select_scenarios, train_on_instances
from .robust import MASTER_BACKENDS, ccg

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def resolve_seed(seed: Optional[int]) -> int:
    """Explicit seed, else ``RELSCEN_SEED``, else 0."""
    if seed is not None:
        return seed
    env = os.environ.get("RELSCEN_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RELSCEN_SEED must be an integer, got {env!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def corpus_paths(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"not a directory: {d}")
    paths = sorted(d.glob("*.json"))
    if not paths:
        raise UsageError(f"no instance files in {d}")
    return paths


def _write_text(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args) -> None:
    kind = ProblemKind(args.kind.upper())
    preset = bench.PRESETS[args.preset]
    size = args.size
    if size is None:
        size = preset.sp_sizes[0] if kind is ProblemKind.SP else preset.tsp_sizes[0]
    m = args.m if args.m is not None else preset.m
    seed = resolve_seed(args.seed)
    if args.count == 1:
        params = GeneratorParams(kind, size, layer_width=args.width, m=m, seed=seed)
        save_instance(generate_instance(params), args.out)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for j in range(args.count):
        params = GeneratorParams(kind, size, layer_width=args.width, m=m, seed=seed + j)
        inst = generate_instance(params)
        save_instance(inst, out / f"{inst.id}.json")


def cmd_label(args) -> None:
    inst = load_instance(args.input)
    rng = np.random.default_rng(resolve_seed(args.seed))
    rep = label_instance(inst, deadline=args.deadline, rng=rng, backend=args.backend)
    save_instance(inst.with_labels(rep.labels), args.out or args.input)
    print(f"{int(rep.labels.sum())} of {inst.m} scenarios relevant ({len(rep.collected)} collected)")


def cmd_features(args) -> None:
    inst = load_instance(args.input)
    fm = compute_features(inst)
    if not args.raw:
        fm = fm.normalized()
    _write_text(fm.to_csv(inst.labels), args.out)


def _labeled_corpus(directory):
    insts = [load_instance(p) for p in corpus_paths(directory)]
    missing = [i.id for i in insts if i.labels is None]
    if missing:
        raise ValueError(f"unlabeled instances in corpus: {', '.join(missing[:5])}")
    return insts


def cmd_train(args) -> None:
    params = ForestParams(n_trees=args.trees, max_depth=args.depth, seed=resolve_seed(args.seed))
    model = train_on_instances(_labeled_corpus(args.corpus), params)
    model.save(args.out)
    top = np.argsort(-model.importances)[:5]
    print("top features: " + ", ".join(f"{model.feature_names[j]}={model.importances[j]:.3f}" for j in top))


def cmd_roc(args) -> None:
    from .features import instance_features

    model = ForestModel.load(args.model)
    scores, labels = [], []
    for inst in _labeled_corpus(args.corpus):
        scores.append(model.predict_proba(instance_features(inst)))
        labels.append(inst.labels)
    s, y = np.concatenate(scores), np.concatenate(labels)
    if args.out is not None:
        Path(args.out).write_text(roc_csv(s, y))
    print(f"AUC {roc_auc(s, y):.4f}")


def cmd_select(args) -> None:
    inst = load_instance(args.input)
    model = ForestModel.load(args.model) if args.model else None
    sel = select_scenarios(args.method, inst, args.k, model=model, rng=np.random.default_rng(resolve_seed(args.seed)))
    print(" ".join(str(i) for i in sel.indices))
    if sel.uniform_fallback:
        print("all weights zero: sampled uniformly", file=sys.stderr)


def cmd_ccg(args) -> None:
    inst = load_instance(args.input)
    if args.start is not None:
        start = args.start
    else:
        model = ForestModel.load(args.model) if args.model else None
        rng = np.random.default_rng(resolve_seed(args.seed))
        start = select_scenarios(args.method, inst, args.k, model=model, rng=rng).indices
    run = ccg(inst, start, deadline=args.deadline, backend=args.backend)
    _write_text(run.to_json() + "\n", args.out)
    if args.out is not None:
        print(f"LB {run.lower_bound:.6g} UB {run.upper_bound:.6g} converged={run.converged}")


def _bench(args, experiment: str) -> None:
    overrides = dict(
        instance_paths=[str(p) for p in corpus_paths(args.corpus)],
        model_path=args.model,
        seed=resolve_seed(args.seed),
        output=args.out,
        backend=args.backend,
        workers=args.workers,
    )
    if args.methods is not None:
        overrides["methods"] = tuple(args.methods)
    if args.k is not None:
        overrides["k_values"] = tuple(args.k)
    if args.reps is not None:
        overrides["repetitions"] = args.reps
    if args.deadline is not None:
        overrides["deadline"] = args.deadline
    config = bench.ExperimentConfig.from_preset(experiment, args.preset, **overrides)
    result = bench.run_experiment(config)
    sys.stdout.write(result.summary_csv())


def cmd_bench_bounds(args) -> None:
    _bench(args, "bounds")


def cmd_bench_ccg(args) -> None:
    _bench(args, "ccg")


def cmd_export_lp(args) -> None:
    inst = load_instance(args.input)
    _write_text(export_lp(encode_master(inst, args.scenarios).model), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relscen", description="Scenario selection for two-stage robust problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    def seed(p):
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $RELSCEN_SEED or 0)")

    def backend(p):
        p.add_argument("--backend", choices=MASTER_BACKENDS, default="auto", help="master problem solver")

    p = add("generate", cmd_generate, "generate random instances")
    p.add_argument("--kind", type=str.lower, choices=["sp", "tsp"], required=True)
    p.add_argument("--size", "--layers", "--nodes", dest="size", type=int, default=None, help="SP layers or TSP nodes")
    p.add_argument("--width", type=int, default=5, help="SP layer width")
    p.add_argument("--m", type=int, default=None, help="number of scenarios")
    p.add_argument("--count", type=int, default=1, help="instances to generate; > 1 treats --out as a directory")
    p.add_argument("--preset", choices=sorted(bench.PRESETS), default="desk")
    p.add_argument("--out", required=True)
    seed(p)

    p = add("label", cmd_label, "label scenarios relevant via CCG and removal tests")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None, help="output file (default: overwrite input)")
    p.add_argument("--deadline", type=float, default=60.0, help="CCG time limit in seconds")
    seed(p)
    backend(p)

    p = add("features", cmd_features, "write the scenario feature matrix as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--raw", action="store_true", help="skip per-instance min-max normalization")

    p = add("train", cmd_train, "train a random forest on a labeled corpus")
    p.add_argument("--corpus", required=True, help="directory of labeled instance files")
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=5)
    seed(p)

    p = add("roc", cmd_roc, "ROC curve and AUC of a model on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="CSV file for the curve")

    p = add("select", cmd_select, "print k selected scenario indices")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", type=str.lower, choices=["ddh", "random", "maxsum"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--model", default=None)
    seed(p)

    p = add("ccg", cmd_ccg, "run column-and-constraint generation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--start", type=_int_list, default=None, help="comma-separated start scenarios")
    p.add_argument("--method", default="random", help="selection method when --start is absent")
    p.add_argument("--k", type=int, default=bench.CCG_START_SIZE)
    p.add_argument("--model", default=None)
    p.add_argument("--deadline", type=float, default=None)
    p.add_argument("--out", default=None)
    seed(p)
    backend(p)

    for name, func, help_text in (
        ("bench-bounds", cmd_bench_bounds, "lower bounds of master problems over selected scenarios"),
        ("bench-ccg", cmd_bench_ccg, "CCG runs started from selected scenarios"),
    ):
        p = add(name, func, help_text)
        p.add_argument("--corpus", required=True)
        p.add_argument("--model", default=None, help="trained model (needed for DDH)")
        p.add_argument("--methods", type=_str_list, default=None)
        p.add_argument("--k", type=_int_list, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--deadline", type=float, default=None)
        p.add_argument("--preset", choices=sorted(bench.PRESETS), default="desk")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None, help="directory for the CSV files")
        seed(p)
        backend(p)

    p = add("export-lp", cmd_export_lp, "write a master problem in LP format")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--scenarios", type=_int_list, required=True)
    p.add_argument("--out", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceFormatError, TrainingError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
