"""Command-line entry point: ``hgdiff generate|diffuse|train|check``.

Each run reads one JSON config document, writes its outputs plus
``manifest.json`` and ``summary.json`` to ``--out``, and exits with

0 success, 1 property failure, 2 config error, 3 runtime or numeric error.

Relative paths inside a config are resolved against the config file's
folder. ``--seed`` overrides the config's ``seed``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import FAULTS, SUITES, run_suites
from .dataset_io import load_dataset, save_dataset
from .exceptions import DatasetFormatError, HgDiffError, ValidationError
from .hypergraph import LabeledHypergraph
from .model import EdHnnConfig
from .nn.rng import make_rng
from .potentials import EdgePotential, NodePotential
from .solvers import MODES, SolverConfig, run_diffusion, write_trajectory_csv
from .synth import (
    CsbmConfig,
    DiffusionPairConfig,
    gen_csbm,
    gen_diffusion_pairs,
    gen_gaussian_features,
    gen_uniform_hypergraph,
    load_pairs,
    pairs_checksum,
    save_pairs,
    split_dataset,
)
from .training import (
    classification_config,
    regression_config,
    train_diffusion_regression,
    train_node_classification,
    write_metrics_csv,
)

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(HgDiffError):
    pass


# -- config helpers -------------------------------------------------------------


def _section(doc, path, required=(), optional=None):
    """Check ``doc`` is a mapping with known keys; returns a shallow copy."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    allowed = set(required) | set(optional or {})
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in doc:
            raise ConfigError(f"{path}.{key}: missing required key")
    out = dict(optional or {})
    out.update(doc)
    return out


def _build(factory, kwargs, path):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else (base / p)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- generate -------------------------------------------------------------------

CSBM_KEYS = {"nodes_per_class": 2500, "num_hyperedges": 1000, "edge_size": 15, "alpha": 1}
FEATURE_KEYS = {"dim": 100, "class_separation": 1.0}
SPLIT_KEYS = {"fractions": [0.5, 0.25, 0.25]}
UNIFORM_KEYS = {"num_nodes": 1000, "num_hyperedges": 1000, "edge_size": 20}
PAIR_KEYS = {"num_pairs": 1000, "mode": "gd", "potential": {"kind": "ce"}, "eta": None,
             "sigma_range": [1.0, 10.0]}


def cmd_generate(cfg: dict, base: Path, out: Path, seed: int) -> dict:
    kind = cfg.get("kind")
    if kind == "csbm":
        c = _section(cfg, "config", ["kind"], {"seed": 0, "csbm": {}, "features": {}, "split": {}})
        cs = _section(c["csbm"], "config.csbm", (), CSBM_KEYS)
        fs = _section(c["features"], "config.features", (), FEATURE_KEYS)
        ss = _section(c["split"], "config.split", (), SPLIT_KEYS)
        d = gen_csbm(_build(CsbmConfig, dict(cs, seed=seed), "config.csbm"))
        feats = gen_gaussian_features(d.labels, fs["dim"], seed + 1, fs["class_separation"])
        d = split_dataset(d.with_features(feats), tuple(ss["fractions"]), seed + 2)
        save_dataset(d, out / "dataset.json")
        resolved = {"kind": kind, "seed": seed, "csbm": cs, "features": fs, "split": ss}
        summary = {"num_nodes": d.num_nodes, "num_hyperedges": d.hypergraph.num_edges}
        return {"config": resolved, "outputs": ["dataset.json"], "summary": summary}
    if kind == "uniform":
        c = _section(cfg, "config", ["kind"], {"seed": 0, "hypergraph": {}})
        hs = _section(c["hypergraph"], "config.hypergraph", (), UNIFORM_KEYS)
        h = _build(gen_uniform_hypergraph, dict(hs, seed=seed), "config.hypergraph")
        save_dataset(LabeledHypergraph(h), out / "dataset.json")
        resolved = {"kind": kind, "seed": seed, "hypergraph": hs}
        summary = {"num_nodes": h.num_nodes, "num_hyperedges": h.num_edges,
                   "total_degree": int(h.node_degrees.sum())}
        return {"config": resolved, "outputs": ["dataset.json"], "summary": summary}
    if kind == "diffusion_pairs":
        c = _section(cfg, "config", ["kind"], {"seed": 0, "hypergraph": {}, "pairs": {}})
        hs = c["hypergraph"]
        outputs = ["pairs.json"]
        if isinstance(hs, dict) and "path" in hs:
            hs = _section(hs, "config.hypergraph", ["path"])
            src = _resolve(base, hs["path"])
            h = load_dataset(src).hypergraph
            ref = str(src.resolve())
            hs = {"path": ref}
        else:
            hs = _section(hs, "config.hypergraph", (), UNIFORM_KEYS)
            h = _build(gen_uniform_hypergraph, dict(hs, seed=seed), "config.hypergraph")
            save_dataset(LabeledHypergraph(h), out / "hypergraph.json")
            ref = "hypergraph.json"
            outputs.insert(0, "hypergraph.json")
        ps = _section(c["pairs"], "config.pairs", (), PAIR_KEYS)
        pcfg = _build(DiffusionPairConfig, dict(ps, sigma_range=tuple(ps["sigma_range"]), seed=seed + 1),
                      "config.pairs")
        _build(lambda: pcfg.edge_potential, {}, "config.pairs.potential")
        pairs = gen_diffusion_pairs(h, pcfg)
        save_pairs(pairs, out / "pairs.json", ref, pcfg.to_dict())
        resolved = {"kind": kind, "seed": seed, "hypergraph": hs, "pairs": ps}
        summary = {"num_pairs": len(pairs), "checksum": pairs_checksum(pairs), "eta": pcfg.resolved_eta}
        return {"config": resolved, "outputs": outputs, "summary": summary}
    raise ConfigError("config.kind: expected one of csbm, uniform, diffusion_pairs")


# -- diffuse --------------------------------------------------------------------


def cmd_diffuse(cfg: dict, base: Path, out: Path, seed: int) -> dict:
    c = _section(cfg, "config", ["dataset"], {
        "seed": 0, "features": "dataset", "potential": {"kind": "ce"}, "node_potential": "quadratic",
        "mode": "gd", "solver": {}})
    sv = _section(c["solver"], "config.solver", (), {"eta": 0.1, "max_iters": 1000, "stop_tol": 1e-8})
    d = load_dataset(_resolve(base, c["dataset"]))
    if c["features"] == "dataset":
        if d.features is None:
            raise ConfigError("config.features: dataset has no features; use \"random\"")
        X = d.features
    elif c["features"] == "random":
        X = make_rng(seed).normal(size=(d.num_nodes, 1))
    else:
        raise ConfigError("config.features: expected \"dataset\" or \"random\"")
    if c["mode"] not in MODES:
        raise ConfigError(f"config.mode: expected one of {MODES}")
    edge = _build(EdgePotential.from_config, {"doc": c["potential"]}, "config.potential")
    node = _build(NodePotential.from_config, {"doc": c["node_potential"]}, "config.node_potential")
    scfg = _build(SolverConfig, sv, "config.solver")
    res = run_diffusion(d.hypergraph, X, node, edge, scfg, c["mode"])
    write_trajectory_csv(res, out / "trajectory.csv")
    save_dataset(d.with_features(res.state.H), out / "final.json")
    resolved = dict(c, dataset=str(_resolve(base, c["dataset"]).resolve()), seed=seed, solver=sv,
                    potential=edge.to_config(), node_potential=node.to_config()["node_kind"])
    summary = {"iterations": res.state.t, "initial_objective": res.objectives[0],
               "final_objective": res.objectives[-1]}
    return {"config": resolved, "outputs": ["trajectory.csv", "final.json"], "summary": summary}


# -- train ----------------------------------------------------------------------

TRAIN_KEYS = {"seed": 0, "epochs": 200, "lr": 1e-3, "weight_decay": 0.0, "model": {}}
MODEL_KEYS = set(EdHnnConfig.__dataclass_fields__) - {"in_dim", "out_dim", "task"}


def _model_overrides(doc, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in doc:
        if key not in MODEL_KEYS:
            raise ConfigError(f"{path}.{key}: unknown key")
    return dict(doc)


def cmd_train(cfg: dict, base: Path, out: Path, seed: int) -> dict:
    task = cfg.get("task", "classification")
    if task == "classification":
        c = _section(cfg, "config", ["dataset"], dict(TRAIN_KEYS, task=task, depth_sweep=None))
        model = _model_overrides(c["model"], "config.model")
        d = load_dataset(_resolve(base, c["dataset"]))
        if not d.has_masks or d.features is None or d.labels is None:
            raise ConfigError("config.dataset: classification needs features, labels and masks")
        depths = c["depth_sweep"]
        runs = [(None, model)] if depths is None else [(int(L), dict(model, num_layers=int(L))) for L in depths]
        summary, outputs = {}, []
        for L, overrides in runs:
            mcfg = _build(lambda **kw: classification_config(d, **kw), overrides, "config.model")
            res = train_node_classification(d, mcfg, c["epochs"], seed, c["lr"], c["weight_decay"])
            tag = "" if L is None else f"_L{L}"
            write_metrics_csv(res.history, out / f"metrics{tag}.csv")
            res.model.save(out / f"checkpoint{tag}.json")
            outputs += [f"metrics{tag}.csv", f"checkpoint{tag}.json"]
            if L is None:
                summary = res.summary()
            else:
                summary.setdefault("runs", []).append(dict(res.summary(), num_layers=L))
        if depths is not None:
            counts = {r["num_parameters"] for r in summary["runs"]}
            summary["parameter_count_constant"] = len(counts) == 1
        resolved = dict(c, dataset=str(_resolve(base, c["dataset"]).resolve()), seed=seed)
        return {"config": resolved, "outputs": outputs, "summary": summary}
    if task == "regression":
        c = _section(cfg, "config", ["pairs"], dict(TRAIN_KEYS, task=task, hidden_sweep=None,
                                                     variants=["ed_hnn"], batch_size=16))
        model = _model_overrides(c["model"], "config.model")
        pairs_path = _resolve(base, c["pairs"])
        pairs, ref, _ = load_pairs(pairs_path)
        h = load_dataset(ref).hypergraph
        widths = c["hidden_sweep"] or [model.get("hidden_dim", 64)]
        rows, outputs = [], []
        for variant in c["variants"]:
            for width in widths:
                overrides = dict(model, hidden_dim=int(width), variant=variant)
                mcfg = _build(regression_config, overrides, "config.model")
                res = train_diffusion_regression(pairs, h, mcfg, c["epochs"], seed, c["lr"], c["batch_size"],
                                                 c["weight_decay"])
                rows.append(dict(res.summary(), variant=variant, hidden_dim=int(width)))
                if len(widths) == 1 and len(c["variants"]) == 1:
                    res.model.save(out / "checkpoint.json")
                    outputs.append("checkpoint.json")
        with open(out / "mae.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variant", "hidden_dim", "mae", "identity_mae"])
            for r in rows:
                w.writerow([r["variant"], r["hidden_dim"], repr(r["mae"]), repr(r["identity_mae"])])
        outputs.insert(0, "mae.csv")
        resolved = dict(c, pairs=str(pairs_path.resolve()), seed=seed)
        summary = rows[0] if len(rows) == 1 else {"runs": rows}
        return {"config": resolved, "outputs": outputs, "summary": summary}
    raise ConfigError("config.task: expected classification or regression")


# -- check ----------------------------------------------------------------------


def cmd_check(cfg: dict, base: Path, out: Path, seed: int) -> dict:
    c = _section(cfg, "config", (), {"seed": 0, "suites": None, "fault": None})
    if c["fault"] is not None and c["fault"] not in FAULTS:
        raise ConfigError(f"config.fault: expected one of {FAULTS} or null")
    if c["suites"] is not None:
        bad = [s for s in c["suites"] if s not in SUITES]
        if bad:
            raise ConfigError(f"config.suites: unknown suites {bad}")
    results = run_suites(c["suites"], seed, c["fault"])
    for r in results:
        print(r.line())
    report = {"suites": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    _write_json(out / "report.json", report)
    summary = {"passed": report["passed"],
               "max_residual": {r.name: r.max_residual for r in results}}
    return {"config": dict(c, seed=seed), "outputs": ["report.json"], "summary": summary,
            "failed": not report["passed"]}


COMMANDS = {"generate": cmd_generate, "diffuse": cmd_diffuse, "train": cmd_train, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hgdiff", description="Hypergraph diffusion and ED-HNN experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "check", help="JSON config document")
        s.add_argument("--out", default="out", help="output folder (created if missing)")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            cfg, base = {}, Path.cwd()
        else:
            path = Path(args.config)
            try:
                cfg = json.loads(path.read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise ConfigError(f"config file {path} not found") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
            base = path.parent
        if not isinstance(cfg, dict):
            raise ConfigError("config: expected an object")
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("config.seed: expected a non-negative integer")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](copy.deepcopy(cfg), base, out, seed)
    except (ConfigError, ValidationError, DatasetFormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HgDiffError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": seed,
        "config": result["config"],
        "outputs": result["outputs"] + ["summary.json"],
    }
    _write_json(out / "summary.json", result["summary"])
    _write_json(out / "manifest.json", manifest)
    if result.get("failed"):
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
