"""Command line front end: train, explain, pick, sweep, oracle.

Every command reads a JSON run config (``--config``); scalar flags override
it.  Progress goes to stderr, artifacts to the output directory, and a
one-line summary to stdout.  Failures print a JSON error object to stderr
and exit 2 (config), 3 (data) or 4 (internal).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, load_config, validate
from .data import TEST, VALIDATION, Dataset, coverage, prepare_dataset
from .errors import AnchorKitError, ConfigError
from .linear import LimeRegion, explain_linear
from .models import TreeEnsemble, load_model, save_model, schema_digest, train_tree_ensemble
from .perturbation import TabularRowSampler
from .pick import (
    evaluate,
    explain_pool,
    random_pick,
    single_explanation_stats,
    submodular_pick,
    sweep,
    coverage_matrix,
)
from .report import emit_report, top_anchor_table
from .search import dumps, explanation_json, find_anchor

log = logging.getLogger("anchorkit")


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if getattr(args, "epsilon", None) is not None:
        cfg.anchor = dataclasses.replace(cfg.anchor, epsilon=args.epsilon)
    if getattr(args, "tau", None) is not None:
        cfg.tau = args.tau
    validate(cfg)
    return cfg


def _prepare(cfg: RunConfig):
    ds = prepare_dataset(cfg.dataset.path, cfg.dataset.label_column, cfg.dataset.schema_hints,
                         cfg.quantiles, cfg.split_seed)
    return ds


def _model_params(cfg: RunConfig) -> dict:
    m = cfg.model
    return {"n_trees": m.n_trees, "max_depth": m.max_depth, "seed": m.seed}


def _get_model(cfg: RunConfig, ds: Dataset) -> TreeEnsemble:
    """Reuse ``model.json`` from the output dir when it matches schema and config, else train."""
    path = os.path.join(cfg.output_dir, "model.json")
    digest = schema_digest(ds.schema_json())
    if os.path.exists(path):
        model = load_model(path)
        same = all(model.params.get(k) == v for k, v in _model_params(cfg).items())
        if model.schema_digest == digest and same and model.aggregation == cfg.model.aggregation:
            return model
        log.info("existing model.json does not match the config; retraining")
    return _train(cfg, ds)


def _train(cfg: RunConfig, ds: Dataset) -> TreeEnsemble:
    log.info("training %d trees (max_depth=%d)", cfg.model.n_trees, cfg.model.max_depth)
    model = train_tree_ensemble(ds, cfg.model.n_trees, cfg.model.max_depth, cfg.model.seed, cfg.model.aggregation)
    os.makedirs(cfg.output_dir, exist_ok=True)
    save_model(model, os.path.join(cfg.output_dir, "model.json"))
    return model


def _write_json(cfg: RunConfig, name: str, doc: dict) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc) + "\n")
    return path


def cmd_train(cfg: RunConfig, args) -> str:
    ds = _prepare(cfg)
    model = _train(cfg, ds)
    Xt, yt = ds.part(TEST)
    acc = float((model.predict_batch(Xt) == yt).mean()) if len(yt) else float("nan")
    return f"trained {model.n_trees} trees; test accuracy {acc:.4f}; wrote {os.path.join(cfg.output_dir, 'model.json')}"


def cmd_explain(cfg: RunConfig, args) -> str:
    ds = _prepare(cfg)
    model = _get_model(cfg, ds)
    val = ds.indices(VALIDATION)
    i = args.instance_index
    if not 0 <= i < len(val):
        raise ConfigError(f"--instance-index {i} outside validation split of size {len(val)}")
    row = int(val[i])
    x = ds.disc[row]
    sampler = TabularRowSampler.from_dataset(ds)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, row]))
    Xt, _ = ds.part(TEST)
    labels_t = model.predict_batch(Xt)
    provenance = {"config_digest": cfg.digest(), "dataset_row": row}
    if args.method == "anchor":
        anchor = find_anchor(model, x, sampler, cfg.anchor, rng)
        cov = coverage(anchor, Xt)
        r = evaluate([anchor], [0], Xt, labels=labels_t)
        doc = explanation_json(anchor, ds.schema, ds.class_names, i, cfg.anchor, cfg.seed, coverage=cov,
                               extra={**provenance, "test_precision": r.precision})
        summary = f"{anchor.describe(ds.schema, ds.class_names)} (coverage {cov:.3f})"
    else:
        p = cfg.lime
        expl = explain_linear(model, x, sampler, p.n_samples, p.sigma, p.K_feat, rng, p.lam)
        r = evaluate([LimeRegion(expl, cfg.tau)], [0], Xt, labels=labels_t)
        doc = {**expl.to_json(ds.schema, cfg.tau), "instance_index": i, "seed": cfg.seed,
               "target_class_name": ds.class_names[expl.target_class], "coverage": r.coverage,
               "test_precision": r.precision, **provenance}
        top = sorted(doc["weights"], key=lambda w: -abs(w["weight"]))[:3]
        summary = "linear explanation: " + ", ".join(f"{w['feature']} {w['weight']:+.3f}" for w in top)
    path = _write_json(cfg, f"explanation_{args.method}_{i}.json", doc)
    return f"{summary}; wrote {path}"


def cmd_pick(cfg: RunConfig, args) -> str:
    ds = _prepare(cfg)
    model = _get_model(cfg, ds)
    rows = ds.indices(VALIDATION)[: cfg.sweep.n_explain]
    sampler = TabularRowSampler.from_dataset(ds)
    pool = explain_pool(args.method, model, ds, rows, sampler, cfg.seed, cfg.threads, cfg.anchor, cfg.lime)
    if args.method == "lime":
        pool = [LimeRegion(e, cfg.tau) for e in pool]
    Xv, _ = ds.part(VALIDATION)
    Xt, _ = ds.part(TEST)
    labels_t = model.predict_batch(Xt)
    if args.pick == "sp":
        idx = submodular_pick(coverage_matrix(pool, Xv), args.k)
    else:
        idx = random_pick(len(pool), args.k, np.random.default_rng(np.random.SeedSequence([cfg.seed, args.k, 17])))
    r = evaluate(pool, idx, Xt, labels=labels_t)
    picked = []
    for i in idx:
        e = pool[i]
        if args.method == "anchor":
            picked.append(explanation_json(e, ds.schema, ds.class_names, int(i), cfg.anchor, cfg.seed))
        else:
            picked.append({**e.explanation.to_json(ds.schema, cfg.tau), "instance_index": int(i)})
    doc = {"method": args.method, "pick": args.pick, "K": args.k, "picked": picked, "coverage": r.coverage,
           "precision": r.precision, "seed": cfg.seed, "config_digest": cfg.digest()}
    path = _write_json(cfg, f"pick_{args.method}_{args.pick}_k{args.k}.json", doc)
    prec = "n/a" if r.precision is None else f"{r.precision:.3f}"
    return f"picked {len(idx)} {args.method} explanations ({args.pick}); coverage {r.coverage:.3f}, precision {prec}; wrote {path}"


def cmd_sweep(cfg: RunConfig, args) -> str:
    grid = cfg.sweep
    if getattr(args, "k", None) is not None:
        grid = dataclasses.replace(grid, k_list=[args.k])
    if getattr(args, "pick", None) is not None:
        grid = dataclasses.replace(grid, picks=[args.pick])
    if getattr(args, "method", None) is not None:
        grid = dataclasses.replace(grid, methods=[args.method])
    ds = _prepare(cfg)
    model = _get_model(cfg, ds)
    report = sweep(ds, model, grid, cfg.anchor, cfg.lime, cfg.seed, cfg.threads)
    table = None
    anchor_pools = {k: v for k, v in report.pools.items() if k[0] == "anchor"}
    if anchor_pools:
        eps = cfg.anchor.epsilon if ("anchor", cfg.anchor.epsilon) in anchor_pools else sorted(anchor_pools)[0][1]
        pool = anchor_pools[("anchor", eps)]
        Xv, _ = ds.part(VALIDATION)
        Xt, _ = ds.part(TEST)
        idx = submodular_pick(coverage_matrix(pool, Xv), min(cfg.top_k, len(pool)))
        cov, prec = single_explanation_stats(pool, Xt, model.predict_batch(Xt))
        stats = {i: (cov[i], None if np.isnan(prec[i]) else prec[i]) for i in idx}
        union = evaluate(pool, idx, Xt, model)
        table = (f"Top-{len(idx)} anchors by submodular pick (epsilon={eps:g}); "
                 f"combined test coverage {union.coverage:.3f}\n"
                 + top_anchor_table(pool, idx, ds.schema, ds.class_names, stats))
    written = emit_report(report, cfg.output_dir, cfg.digest(), cfg.seed, table)
    return f"sweep: {len(report.rows)} rows, {len(written)} artifacts in {cfg.output_dir}"


def cmd_oracle(cfg: RunConfig, args) -> str:
    from .oracle import run_oracle_suite

    result = run_oracle_suite(cfg.anchor, n_and=args.runs, n_random=args.runs // 2, seed=cfg.seed)
    result["config_digest"] = cfg.digest()
    path = _write_json(cfg, "oracle.json", result)
    status = "PASS" if result["passed"] else "FAIL"
    line = (f"oracle {status}: soundness violations {result['and']['violations']}/{result['and']['runs']}, "
            f"precise {result['random']['precise']}/{result['random']['runs']}, "
            f"near-shortest {result['random']['near_shortest']}/{result['random']['runs']}; wrote {path}")
    if not result["passed"]:
        raise _OracleFailure(line)
    return line


class _OracleFailure(AnchorKitError):
    exit_code = 4


COMMANDS = {"train": cmd_train, "explain": cmd_explain, "pick": cmd_pick, "sweep": cmd_sweep, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run config")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="explanation / pick seed")
    common.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    common.add_argument("--epsilon", type=float, help="anchor precision slack")
    common.add_argument("--tau", type=float, help="linear explanation coverage radius")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="anchorkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"anchorkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train the tree ensemble")
    p = sub.add_parser("explain", parents=[common], help="explain one validation instance")
    p.add_argument("--instance-index", type=int, required=True, help="position within the validation split")
    p.add_argument("--method", choices=["anchor", "lime"], default="anchor")
    p = sub.add_parser("pick", parents=[common], help="pick K explanations from the validation pool")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=["anchor", "lime"], default="anchor")
    p.add_argument("--pick", choices=["rp", "sp"], default="sp")
    p = sub.add_parser("sweep", parents=[common], help="precision/coverage sweep with CSV + SVG report")
    p.add_argument("--k", type=int, help="restrict the sweep to one K")
    p.add_argument("--method", choices=["anchor", "lime"], help="restrict the sweep to one method")
    p.add_argument("--pick", choices=["rp", "sp"], help="restrict the sweep to one pick method")
    p = sub.add_parser("oracle", parents=[common], help="search vs brute-force oracles on synthetic problems")
    p.add_argument("--runs", type=int, default=100)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        print(COMMANDS[args.command](cfg, args))
        return 0
    except AnchorKitError as exc:
        print(json.dumps(exc.to_json()), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - report anything else as an internal error
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
