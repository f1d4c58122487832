"""Command-line entry points: data prep, training, evaluation, serving.

Subcommands:
  ingest    validate a region table + review log, filter casual users, write
            the enriched pair back out
  synth     generate a deterministic synthetic dataset with planted tastes
  dataset   build leave-one-out train/test CSVs for one level
  train     fit a boosted-tree model bundle for one level
  evaluate  sweep k, comparing the model against both baselines
  explain   emit the local-surrogate explanation for one feature row as JSON
  serve     run the HTTP API (REGIONREC_PORT / REGIONREC_DATA env overrides)
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, EngineConfig, Level, RegionrecError, ValidationError
from .explain import LimeConfig, explanation_to_dict, finalize_explanation, lime_explain
from .gbdt import GbdtParams, predict_proba_batch
from .ingest import (
    SyntheticSpec,
    attach_review_counts,
    filter_tourists,
    generate_synthetic,
    load_regions,
    load_reviews,
    write_assignments,
    write_regions,
    write_reviews,
)
from .interest import build_dataset, build_profiles, write_dataset_csv
from .recsys import (
    evaluate_sweep,
    load_bundle,
    save_bundle,
    sweep_to_csv,
    sweep_to_text,
    train_bundle,
)

ASSIGNMENTS_FILENAME = "assignments.csv"
REGIONS_FILENAME = "regions.csv"
REVIEWS_FILENAME = "reviews.csv"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except RegionrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionrec",
        description="Explainable two-stage city/neighborhood recommender.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and enrich a dataset")
    p.add_argument("--regions", required=True, help="region table CSV")
    p.add_argument("--reviews", required=True, help="review log CSV")
    p.add_argument(
        "--min-cbsas",
        type=int,
        default=6,
        help="minimum distinct cities per kept user (default 6)",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", help="JSON file of generator settings (optional)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("dataset", help="build train/test example CSVs")
    p.add_argument("--data", required=True, help="directory with regions.csv + reviews.csv")
    p.add_argument("--level", required=True, choices=["city", "neighborhood"])
    p.add_argument("--k", type=int, default=2, help="city top-set size (default 2)")
    p.add_argument("--m", type=int, default=3, help="neighborhood top-set size (default 3)")
    p.add_argument("--seed", type=int, default=7, help="split RNG seed (default 7)")
    p.add_argument("--min-cbsas", type=int, default=6)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_dataset)

    p = sub.add_parser("train", help="train a model bundle for one level")
    p.add_argument("--data", required=True, help="directory with regions.csv + reviews.csv")
    p.add_argument("--level", required=True, choices=["city", "neighborhood"])
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--min-cbsas", type=int, default=6)
    _add_gbdt_arguments(p)
    p.add_argument("--out", required=True, help="bundle JSON path")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("evaluate", help="model vs. baselines across k")
    p.add_argument("--data", required=True, help="directory with regions.csv + reviews.csv")
    p.add_argument(
        "--level",
        default="both",
        choices=["city", "neighborhood", "both"],
        help="levels to evaluate (default both)",
    )
    p.add_argument(
        "--k",
        default="2..5",
        help="k values: single '2', list '2,4', or range '2..5' (default)",
    )
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--min-cbsas", type=int, default=6)
    _add_gbdt_arguments(p)
    p.add_argument("--csv", help="also write the table as CSV to this path")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("explain", help="explain one prediction as JSON")
    p.add_argument("--model", required=True, help="bundle JSON path")
    p.add_argument(
        "--instance",
        required=True,
        help="comma-separated feature row matching the bundle's features",
    )
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--samples", type=int, default=5000)
    p.set_defaults(handler=_cmd_explain)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--data", required=True, help="directory with regions.csv + reviews.csv")
    p.add_argument("--models", help="directory with model bundles")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument(
        "--cors-origin",
        action="append",
        help="allowed CORS origin (repeatable; default *)",
    )
    p.set_defaults(handler=_cmd_serve)

    return parser


def _add_gbdt_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=150)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.15)
    p.add_argument("--min-samples-leaf", type=int, default=5)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--subsample", type=float, default=1.0)


def _gbdt_params(args: argparse.Namespace) -> GbdtParams:
    return GbdtParams(
        n_trees=args.trees,
        max_depth=args.depth,
        learning_rate=args.learning_rate,
        min_samples_leaf=args.min_samples_leaf,
        l2_leaf_reg=args.l2,
        subsample=args.subsample,
        rng_seed=args.seed,
    )


def _load_data_dir(data_dir: str, min_cbsas: int):
    data = Path(data_dir)
    regions, registry = load_regions(data / REGIONS_FILENAME)
    log = load_reviews(data / REVIEWS_FILENAME, regions)
    filtered = filter_tourists(log, min_cbsas)
    regions = attach_review_counts(regions, filtered)
    return regions, registry, filtered


def _cmd_ingest(args: argparse.Namespace) -> int:
    regions, registry = load_regions(args.regions)
    log = load_reviews(args.reviews, regions)
    filtered = filter_tourists(log, args.min_cbsas)
    regions = attach_review_counts(regions, filtered)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_regions(out / REGIONS_FILENAME, regions, registry)
    write_reviews(out / REVIEWS_FILENAME, filtered)
    print(
        f"kept {filtered.n_users}/{log.n_users} users "
        f"({len(filtered.events)}/{len(log.events)} reviews) across "
        f"{len(regions)} regions -> {out}"
    )
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec.from_json(args.spec) if args.spec else SyntheticSpec()
    regions, registry, log, assignments = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_regions(out / REGIONS_FILENAME, regions, registry)
    write_reviews(out / REVIEWS_FILENAME, log)
    write_assignments(out / ASSIGNMENTS_FILENAME, assignments)
    n_cities = spec.n_cities
    n_zips = spec.n_cities * spec.n_neighborhoods_per_city
    print(
        f"generated {n_cities} cities, {n_zips} neighborhoods, "
        f"{spec.n_users} users, {len(log.events)} reviews -> {out}"
    )
    return 0


def _cmd_dataset(args: argparse.Namespace) -> int:
    regions, registry, log = _load_data_dir(args.data, args.min_cbsas)
    config = EngineConfig(k=args.k, m=args.m, rng_seed=args.seed)
    level = Level(args.level)
    profiles = build_profiles(log)
    train, test = build_dataset(profiles, regions, registry, config, level)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_path = out / f"{level.value}.train.csv"
    test_path = out / f"{level.value}.test.csv"
    write_dataset_csv(train_path, train, registry)
    write_dataset_csv(test_path, test, registry)
    print(f"wrote {len(train)} train / {len(test)} test examples -> {out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    regions, registry, log = _load_data_dir(args.data, args.min_cbsas)
    config = EngineConfig(k=args.k, m=args.m, rng_seed=args.seed)
    level = Level(args.level)
    profiles = build_profiles(log)
    train, test = build_dataset(profiles, regions, registry, config, level)
    bundle = train_bundle(train, registry, level, _gbdt_params(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(out, bundle)
    print(
        f"trained {level.value} model on {len(train)} examples "
        f"({len(test)} held out) -> {args.out}"
    )
    return 0


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            ks = tuple(range(int(lo), int(hi) + 1))
        else:
            ks = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse k specification {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"k values must be positive, got {text!r}")
    return ks


def _cmd_evaluate(args: argparse.Namespace) -> int:
    regions, registry, log = _load_data_dir(args.data, args.min_cbsas)
    config = EngineConfig(m=args.m, rng_seed=args.seed)
    ks = _parse_ks(args.k)
    rows = evaluate_sweep(
        regions, registry, log, config, ks=ks, params=_gbdt_params(args)
    )
    if args.level != "both":
        rows = [r for r in rows if r.level == args.level]
    print(sweep_to_text(rows), end="")
    if args.csv:
        Path(args.csv).write_text(sweep_to_csv(rows), encoding="utf-8")
        print(f"wrote {args.csv}")
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.model)
    try:
        values = [float(part) for part in args.instance.split(",")]
    except ValueError:
        raise ValidationError(
            "--instance must be a comma-separated list of numbers"
        ) from None
    expected = len(bundle.background.feature_names)
    if len(values) != expected:
        raise ValidationError(
            f"instance has {len(values)} values, model expects {expected}"
        )
    instance = np.asarray(values)

    def predict_fn(A: np.ndarray) -> np.ndarray:
        return predict_proba_batch(bundle.model, np.atleast_2d(np.asarray(A, float)))

    expl = lime_explain(
        predict_fn,
        instance,
        bundle.background,
        LimeConfig(n_samples=args.samples, rng_seed=args.seed),
    )
    expl = finalize_explanation(expl, "the candidate region", [], [], top_n=3)
    print(json.dumps(explanation_to_dict(expl), indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app, load_engine

    data_dir = os.environ.get("REGIONREC_DATA", args.data)
    port = int(os.environ.get("REGIONREC_PORT", args.port))
    engine = load_engine(data_dir, args.models, config=EngineConfig())
    origins = tuple(args.cors_origin) if args.cors_origin else ("*",)
    app = create_app(engine, cors_origins=origins)
    uvicorn.run(app, host=args.host, port=port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
