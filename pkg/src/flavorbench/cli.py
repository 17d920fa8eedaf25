"""Command-line front end.

Every analysis command reads files, writes a JSON report with input
fingerprints, and is deterministic for a fixed --seed: running the same
command twice produces byte-identical output. Exit codes: 0 success,
1 data or provider error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import axes as axes_mod
from . import crossval as crossval_mod
from . import culture as culture_mod
from . import curation
from . import matchdb
from . import synth
from . import tagger
from .corpus import (
    DataFormatError,
    load_embeddings,
    load_labels,
    pairwise,
    save_embeddings,
    save_labels,
)
from .providers import ProviderError, load_provider_config
from .stats import Seed
from .workspace import load_coords3d, write_report


def _outpath(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _add_map_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--map", required=True, help="consolidation map CSV")
    parser.add_argument("--catalog", help="canonical catalog CSV")
    parser.add_argument("--overrides", help="override actions JSON, replayed on the map")


def _load_map(args):
    cmap = curation.load_consolidation_map(args.map, args.catalog)
    inputs = {"map": args.map}
    if args.catalog:
        inputs["catalog"] = args.catalog
    if args.overrides:
        overrides = curation.load_overrides(args.overrides)
        cmap, _audit = curation.apply_overrides(cmap, overrides)
        inputs["overrides"] = args.overrides
    return cmap, inputs


def _cmd_pairs(args) -> int:
    matrix = load_embeddings(args.embeddings)
    table = pairwise(matrix)
    table.save_csv(_outpath(args.out))
    return 0


def _cmd_consolidate(args) -> int:
    matrix = load_embeddings(args.embeddings)
    cmap, inputs = _load_map(args)
    merged = curation.consolidate(matrix, cmap)
    save_embeddings(merged, _outpath(args.out))
    if args.report:
        inputs["embeddings"] = args.embeddings
        write_report(args.report, {
            "analysis": "consolidate",
            "n_original": len(matrix),
            "n_canonical": len(merged),
            "n_removed": len(cmap.removed_ids()),
        }, inputs=inputs)
    return 0


def _cmd_noise(args) -> int:
    matrix = load_embeddings(args.embeddings)
    cmap, inputs = _load_map(args)
    inputs["embeddings"] = args.embeddings
    seed = Seed(args.seed)
    report = curation.variant_noise(matrix, cmap, top_k=args.top, seed=seed)
    write_report(args.out, report.to_dict(), inputs=inputs, seed=seed,
                 params={"top": args.top})
    return 0


def _evaluate(matrix, labels, args, seed):
    if args.measured:
        measured = load_labels(args.measured, matrix)
        return axes_mod.evaluate_measured(matrix, labels, measured,
                                          log_transform=args.log_scale)
    if labels.kind == "ordinal":
        return axes_mod.evaluate_ordinal(matrix, labels)
    if labels.kind == "binary":
        return axes_mod.evaluate_binary(matrix, labels)
    if labels.kind == "numeric":
        return axes_mod.evaluate_measured(matrix, labels, labels,
                                          log_transform=args.log_scale)
    if labels.kind == "categorical":
        return axes_mod.categorical_delta(matrix, labels).report()
    raise ValueError(f"labels of kind {labels.kind!r} have no direct analysis; "
                     f"use them as cuisine tags or a subset filter instead")


def _cmd_analyze(args) -> int:
    matrix = load_embeddings(args.embeddings)
    if args.normalize:
        matrix = matrix.normalized()
    labels = load_labels(args.labels, matrix)
    seed = Seed(args.seed)
    inputs = {"embeddings": args.embeddings, "labels": args.labels}
    if args.measured:
        inputs["measured"] = args.measured

    if args.subset:
        subset_doc = json.loads(Path(args.subset).read_text(encoding="utf-8"))
        subset_ids = [matrix.name_to_id[nm] for nm in subset_doc]
        measured = load_labels(args.measured, matrix) if args.measured else None
        reports = axes_mod.subset_report(matrix, labels, subset_ids,
                                         measured=measured,
                                         log_transform=args.log_scale)
        body = {"analysis": "subset", "sides": [r.to_dict() for r in reports]}
        inputs["subset"] = args.subset
    else:
        report = _evaluate(matrix, labels, args, seed)
        body = report.to_dict()
        if args.cv:
            config = crossval_mod.CVConfig(
                k=args.k, repeats=args.repeats, seed=seed, metric=args.metric,
                log_transform=args.log_scale,
            )
            body["cv"] = crossval_mod.cv_evaluate(matrix, labels, config).to_dict()
    params = {"normalize": args.normalize, "log_scale": args.log_scale, "cv": args.cv}
    write_report(args.out, body, inputs=inputs, seed=seed, params=params)
    return 0


def _cmd_crossval(args) -> int:
    matrix = load_embeddings(args.embeddings)
    if args.normalize:
        matrix = matrix.normalized()
    labels = load_labels(args.labels, matrix)
    seed = Seed(args.seed)
    config = crossval_mod.CVConfig(
        k=args.k, repeats=args.repeats, seed=seed, metric=args.metric,
        log_transform=args.log_scale,
    )
    report = crossval_mod.cv_evaluate(matrix, labels, config)
    write_report(args.out, report.to_dict(),
                 inputs={"embeddings": args.embeddings, "labels": args.labels},
                 seed=seed,
                 params={"k": args.k, "repeats": args.repeats, "metric": args.metric,
                         "log_scale": args.log_scale, "normalize": args.normalize})
    return 0


def _cmd_culture(args) -> int:
    matrix = load_embeddings(args.embeddings)
    tags = culture_mod.load_cuisine_tags(args.tags, matrix)
    seed = Seed(args.seed)
    body = {
        "analysis": "culture",
        "purity": culture_mod.knn_purity(matrix, tags, k=args.k).to_dict(),
        "intra_similarity": culture_mod.intra_cluster_similarity(matrix, tags).to_dict(),
    }
    if args.subsample:
        body["subsampled"] = culture_mod.subsampled_purity(
            matrix, tags, pool_ids=[int(i) for i in matrix.ids],
            target_size=args.subsample, iterations=args.iterations,
            seed=seed, k=args.k,
        ).to_dict()
    write_report(args.out, body,
                 inputs={"embeddings": args.embeddings, "tags": args.tags},
                 seed=seed,
                 params={"k": args.k, "subsample": args.subsample,
                         "iterations": args.iterations})
    return 0


def _cmd_geometry(args) -> int:
    matrix = load_embeddings(args.embeddings)
    axis_list = []
    labels_by_axis = {}
    for path in args.axis_labels:
        labels = load_labels(path, matrix)
        axis = axes_mod.build_axis(matrix, labels, log_transform=args.log_scale
                                   and labels.kind == "numeric")
        axis_list.append(axis)
        labels_by_axis[axis.name] = labels
    report = axes_mod.axis_geometry(axis_list, matrix=matrix,
                                    labels_by_axis=labels_by_axis)
    inputs = {"embeddings": args.embeddings}
    for i, path in enumerate(args.axis_labels):
        inputs[f"labels_{i}"] = path
    write_report(args.out, report.to_dict(), inputs=inputs,
                 params={"log_scale": args.log_scale})
    return 0


def _read_names(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


def _cmd_match(args) -> int:
    names = _read_names(args.names)
    entries = matchdb.load_db_entries(args.db)
    cmap = None
    if args.map:
        cmap = curation.load_consolidation_map(args.map, args.catalog)
    chat_client = embed_provider = None
    if args.provider:
        chat_client, embed_provider = load_provider_config(args.provider)
    table = matchdb.match_pipeline(
        names, entries, cmap=cmap,
        embed_provider=embed_provider, llm_client=chat_client,
        min_rule_score=args.min_rule_score,
    )
    table.save_csv(_outpath(args.out))
    for warning in table.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.join:
        if not args.embeddings:
            raise ValueError("--join needs --embeddings to resolve ingredient ids")
        matrix = load_embeddings(args.embeddings)
        nutrient = args.join.split(",") if "," in args.join else args.join
        label_set = matchdb.join_measurements(table, entries, nutrient, matrix)
        save_labels(label_set, _outpath(args.join_out), matrix)
    if args.report:
        inputs = {"names": args.names, "db": args.db}
        if args.map:
            inputs["map"] = args.map
        write_report(args.report, {
            "analysis": "match",
            "n_names": len(names),
            "n_matched": len(table.matched()),
            "match_rate": table.match_rate,
            "by_layer": {
                layer: sum(1 for r in table.rows if r.layer == layer)
                for layer in (matchdb.RULE_LAYER, matchdb.EMBED_LAYER, matchdb.LLM_LAYER)
            },
            "warnings": table.warnings,
        }, inputs=inputs, params={"min_rule_score": args.min_rule_score})
    return 0


def _cmd_tag(args) -> int:
    names = _read_names(args.names)
    schema = (tagger.load_schema(args.schema) if Path(args.schema).exists()
              else tagger.packaged_schema(args.schema))
    chat_client, _embed = load_provider_config(args.provider)
    if chat_client is None:
        raise ValueError("provider config has no chat section")
    run = tagger.tag_to_coverage(names, schema, chat_client, max_rounds=args.max_rounds)
    matrix = load_embeddings(args.embeddings)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for field_name, label_set in sorted(run.label_sets(matrix).items()):
        save_labels(label_set, out_dir / f"{field_name}.json", matrix)
    if args.report:
        write_report(args.report, {
            "analysis": "tag",
            "schema": schema.name,
            "n_names": len(names),
            "attempts": run.attempts,
        }, inputs={"names": args.names, "embeddings": args.embeddings})
    return 0


def _cmd_demo(args) -> int:
    path = synth.fixture_workspace(args.out)
    print(path)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.workspace, token_env=args.token_env,
                     frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flavorbench",
        description="ingredient-embedding analytics: consolidation, axes, "
                    "cross-validation, cuisine structure, matching, serving",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairs", help="all pairwise cosine similarities to CSV")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("consolidate", help="merge variant rows into canonical rows")
    p.add_argument("--embeddings", required=True)
    _add_map_args(p)
    p.add_argument("--out", required=True, help="consolidated embeddings TSV")
    p.add_argument("--report", help="optional JSON summary")
    p.set_defaults(func=_cmd_consolidate)

    p = sub.add_parser("noise", help="rank consolidation groups by internal disagreement")
    p.add_argument("--embeddings", required=True)
    _add_map_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("analyze", help="build an axis from labels and score recovery")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--measured", help="numeric labels evaluated against the axis")
    p.add_argument("--subset", help="JSON list of names; analyze subset vs complement")
    p.add_argument("--log-scale", action="store_true")
    p.add_argument("--normalize", action="store_true", help="unit-norm rows first")
    p.add_argument("--cv", action="store_true", help="add cross-validated recovery")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--metric", choices=crossval_mod.METRICS, default="spearman_rho")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("crossval", help="repeated k-fold axis recovery")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--metric", choices=crossval_mod.METRICS, default="spearman_rho")
    p.add_argument("--log-scale", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_crossval)

    p = sub.add_parser("culture", help="cuisine cluster purity and cohesion")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--tags", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--subsample", type=int, help="matched-pool subsample size")
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_culture)

    p = sub.add_parser("geometry", help="inter-axis geometry and partial correlations")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--axis-labels", nargs="+", required=True,
                   help="two or more label files, one axis each")
    p.add_argument("--log-scale", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_geometry)

    p = sub.add_parser("match", help="match ingredient names to database entries")
    p.add_argument("--names", required=True, help="one name per line")
    p.add_argument("--db", required=True, help="long-form measurements CSV")
    p.add_argument("--map", help="consolidation map for variant-name matching")
    p.add_argument("--catalog")
    p.add_argument("--provider", help="provider config JSON for embed+LLM layers")
    p.add_argument("--min-rule-score", type=float, default=matchdb.DEFAULT_MIN_RULE_SCORE)
    p.add_argument("--join", help="nutrient (or comma list summed) to join")
    p.add_argument("--join-out", help="labels JSON for the joined nutrient")
    p.add_argument("--embeddings", help="matrix for resolving ingredient ids on --join")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("tag", help="label names through a chat model schema")
    p.add_argument("--names", required=True)
    p.add_argument("--schema", required=True,
                   help="packaged schema name or path to a schema JSON")
    p.add_argument("--provider", required=True)
    p.add_argument("--max-rounds", type=int, default=tagger.DEFAULT_MAX_ROUNDS)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("demo", help="write the fixture workspace")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("serve", help="serve a workspace over HTTP")
    p.add_argument("--workspace", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token-env", help="env var holding a required bearer token")
    p.add_argument("--frontend", help="static frontend directory to mount at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, ValueError, KeyError, OSError,
            ProviderError, tagger.TaggingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
