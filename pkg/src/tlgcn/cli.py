"""Command-line interface: ``tlgcn <command> ...``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import tracemalloc
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, datasets, plotting
from .containers import file_digest
from .graph_data import (
    AGGREGATORS,
    DataError,
    INDEX_POLICIES,
    SplitSet,
    bin_snapshots,
    density,
    load_edge_list,
    load_prepared,
    mask_adjacency_to_train,
    save_prepared,
    split_observations,
)
from .metrics import evaluate
from .model import (
    VARIANTS,
    ConfigMismatch,
    Encoder,
    EncoderConfig,
    load_checkpoint,
    normalize_variant,
    parameter_count,
    save_checkpoint,
)
from .synthetic import graph_to_edges, planted_graph, random_instance, write_edge_csv
from .tensor_core import InvalidArgument, TensorError, make_transform
from .training import (
    GradientSet,
    TrainConfig,
    backward,
    grad_check_report,
    grid_search,
    relu_margin,
    train,
)

log = logging.getLogger("tlgcn")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3
GRADCHECK_TOL = 1e-4
RELU_MARGIN = 1e-3


class UsageError(Exception):
    pass


def resolve_input(path: str) -> Path:
    """Use ``path`` as given, else look it up under ``$TLGCN_DATA_DIR``."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    root = os.environ.get(datasets.DATA_DIR_ENV)
    if root and (Path(root) / p).exists():
        return Path(root) / p
    return p


def _fmt(v: float) -> str:
    return repr(float(v))


def write_manifest(path: Path, command: str, config: dict, dataset_digest: str | None,
                   wall_time: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "dataset_digest": dataset_digest,
        "tool_version": __version__,
        "wall_time_s": round(wall_time, 3),
        "epoch_semantics": "one full-batch Adam step per epoch",
        "dropout": "none",
    }
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def write_history(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("epoch\ttrain_loss\tval_mae\tval_rmse\n")
        for r in history:
            fh.write(f"{r.epoch}\t{_fmt(r.train_loss)}\t{_fmt(r.val_mae)}\t{_fmt(r.val_rmse)}\n")


def write_timing(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("epoch\twall_time_s\n")
        for r in history:
            fh.write(f"{r.epoch}\t{r.wall_time:.6f}\n")


def _write_tsv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


# ---------------------------------------------------------------- arguments

def _add_encoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layers", type=int, default=2, help="propagation layers L")
    p.add_argument("--fdim", type=int, default=16, help="feature dimension F")
    p.add_argument("--band", type=int, default=5, help="bandwidth b of M")
    p.add_argument("--m", default="M1", choices=["M1", "M2"], help="transform matrix variant")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=None, help="learning rate (default 0.05)")
    p.add_argument("--l2", type=float, default=None, help="L2 coefficient on X (default 1e-4)")
    p.add_argument("--beta", type=float, default=1.0, help="smooth-L1 threshold")
    p.add_argument("--max-epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="parameter initialisation seed")


def _train_config(args) -> TrainConfig:
    base = TrainConfig()
    return TrainConfig(lr=base.lr if args.lr is None else args.lr,
                       l2=base.l2 if args.l2 is None else args.l2,
                       beta=args.beta, max_epochs=args.max_epochs,
                       # a short run should not be rejected over the default patience
                       patience=min(args.patience, args.max_epochs), seed=args.seed)


def _encoder_config(args, t_slots: int) -> EncoderConfig:
    return EncoderConfig.build(t_slots, args.layers, args.fdim, args.band, args.m)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlgcn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="bin an edge list into snapshots and split it")
    p.add_argument("input", help="edge list (path or name under $TLGCN_DATA_DIR)")
    p.add_argument("--slots", type=int, default=None, help="number of time slots T")
    p.add_argument("--aggregator", choices=AGGREGATORS, default=None)
    p.add_argument("--format", choices=["auto", "csv", "tsv", "whitespace"], default="auto")
    p.add_argument("--index", choices=INDEX_POLICIES, default=None)
    p.add_argument("--columns", default=None, help="comma-separated column names, e.g. src,dst,time")
    p.add_argument("--dataset", choices=sorted(datasets.REGISTRY), default=None,
                   help="apply a known dataset's defaults and compare counts")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("-o", "--out", default="prepared.npz")

    p = sub.add_parser("synth", help="write a planted synthetic edge list")
    p.add_argument("out")
    p.add_argument("--nodes", type=int, default=50)
    p.add_argument("--slots", type=int, default=10)
    p.add_argument("--edges-per-slot", type=int, default=300)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("prepared")
    p.add_argument("--variant", default="tlgcn", help=f"one of {', '.join(VARIANTS)}")
    _add_encoder_flags(p)
    _add_train_flags(p)
    p.add_argument("--grid", action="store_true", help="grid-search lr and l2")
    p.add_argument("--repeats", type=int, default=1, help="independent runs with seeds seed..seed+k-1")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --grid")
    p.add_argument("-o", "--out", default="run")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("checkpoint")
    p.add_argument("prepared")
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--fdim", type=int, default=None)
    p.add_argument("--band", type=int, default=None)
    p.add_argument("--m", default=None, choices=["M1", "M2"])
    p.add_argument("-o", "--out", default=None, help="directory for report files")

    p = sub.add_parser("gradcheck", help="finite-difference check on a random instance")
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--fdim", type=int, default=4)
    p.add_argument("--slots", type=int, default=5)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--obs", type=int, default=12)
    p.add_argument("--band", type=int, default=3)
    p.add_argument("--m", default="M1", choices=["M1", "M2"])
    p.add_argument("--l2", type=float, default=0.01)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--variant", default="tlgcn")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", action="store_true", help="double one gradient coordinate first")

    p = sub.add_parser("ablate", help="train all four variants with shared settings")
    p.add_argument("prepared")
    _add_encoder_flags(p)
    _add_train_flags(p)
    p.add_argument("-o", "--out", default="ablation")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("sweep", help="test error over a range of L or F")
    p.add_argument("prepared")
    p.add_argument("--param", choices=["layers", "fdim"], required=True)
    p.add_argument("--values", required=True, help="comma-separated values, e.g. 1,2,3,4,5")
    p.add_argument("--variant", default="tlgcn")
    _add_encoder_flags(p)
    _add_train_flags(p)
    p.add_argument("-o", "--out", default="sweep")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("dump-m", help="print a transform matrix")
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--band", type=int, required=True)
    p.add_argument("--m", default="M1", choices=["M1", "M2"])
    p.add_argument("--plot", default=None, help="also write a heatmap to this file")

    sub.add_parser("datasets", help="list known public datasets")
    return parser


# ----------------------------------------------------------------- commands

def cmd_prepare(args) -> int:
    info = datasets.get(args.dataset) if args.dataset else None
    t_slots = args.slots or (info.t_slots if info else None)
    if t_slots is None:
        raise UsageError("--slots is required unless --dataset is given")
    aggregator = args.aggregator or (info.aggregator if info else "last")
    index = args.index or (info.index if info else "compact")
    columns = (tuple(c.strip() for c in args.columns.split(",")) if args.columns
               else (info.columns if info else ("src", "dst", "weight", "time")))
    src = resolve_input(args.input)
    if not src.exists():
        raise DataError(f"{src}: no such file")

    start = time.perf_counter()
    edges = load_edge_list(src, args.format, index=index, columns=columns)
    g = bin_snapshots(edges, t_slots, aggregator)
    policy = "seeded-random-80-10-10"
    try:
        split = split_observations(g, args.seed)
    except InvalidArgument as exc:
        # still write the container so tiny inputs can be inspected
        log.warning("%s; storing every observation as training data", exc)
        split = SplitSet(np.arange(g.n_obs), np.zeros(0, np.int64), np.zeros(0, np.int64), args.seed)
        policy = "unsplit"
    out = Path(args.out)
    meta = {"source": src.name, "index": index, "columns": list(columns), "split_policy": policy}
    save_prepared(out, g, split, meta)

    dens = density(len(edges), g.n)
    print(f"nodes\t{g.n}")
    print(f"edges\t{len(edges)}")
    print(f"observations\t{g.n_obs}")
    print(f"time_slots\t{g.t_slots}")
    print(f"density\t{dens:.6g}")
    print(f"split\t{len(split.train)}/{len(split.validation)}/{len(split.test)}")
    print(f"digest\t{file_digest(out)}")
    if info:
        for key, ours, ref in (("nodes", g.n, info.nodes), ("edges", len(edges), info.edges)):
            flag = "ok" if ours == ref else "DIFFERS"
            print(f"reference_{key}\t{ref}\t{flag}")
    config = {"t_slots": t_slots, "aggregator": aggregator, "index": index, "columns": list(columns),
              "split_seed": args.seed, "split_policy": policy,
              "binning": "equal-width, right-closed", "input_digest": file_digest(src)}
    write_manifest(out.with_suffix(".manifest.json"), "prepare", config, file_digest(out),
                   time.perf_counter() - start)
    return EXIT_OK


def cmd_synth(args) -> int:
    g = planted_graph(args.nodes, args.slots, args.edges_per_slot, noise=args.noise, seed=args.seed)
    write_edge_csv(graph_to_edges(g), args.out)
    print(f"wrote {g.n_obs} edges over {g.n} nodes and {g.t_slots} slots to {args.out}")
    return EXIT_OK


def _load_prepared_arg(path: str):
    p = resolve_input(path)
    if not p.exists():
        raise DataError(f"{p}: no such file")
    g, split, meta = load_prepared(p)
    if meta.get("split_policy") == "unsplit":
        raise DataError(f"{p}: too few observations for a train/validation/test split")
    return g, split, meta, file_digest(p)


def _run_config(args, cfg: EncoderConfig, tc: TrainConfig, variant: str, meta: dict) -> dict:
    return {**cfg.as_dict(), **tc.as_dict(), "variant": variant,
            "split_seed": meta.get("split_seed"), "aggregator": meta.get("aggregator"),
            "split_policy": meta.get("split_policy")}


def _model_label(variant: str, m_variant: str) -> str:
    if variant == "tlgcn":
        return "TLGCN-V1" if m_variant == "M1" else "TLGCN-V2"
    return plotting.VARIANT_LABELS[variant]


def cmd_train(args) -> int:
    variant = normalize_variant(args.variant)
    if args.grid and (args.lr is not None or args.l2 is not None):
        raise UsageError("--grid searches lr and l2; do not pass --lr/--l2 with it")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if args.grid and args.repeats > 1:
        raise UsageError("--grid and --repeats cannot be combined")
    tc = _train_config(args)
    g, split, meta, digest = _load_prepared_arg(args.prepared)
    cfg = _encoder_config(args, g.t_slots)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()

    if args.grid:
        best, runs = grid_search(g, split, cfg, tc, variant, jobs=args.jobs)
        _write_tsv(out / "grid.tsv", ["lr", "l2", "best_val_mae", "best_epoch"],
                   [[r.lr, r.l2, r.result.best_val_mae, r.result.best_epoch] for r in runs])
        tc = replace(tc, lr=best.lr, l2=best.l2)
        results = [best.result]
        print(f"grid best lr={best.lr:g} l2={best.l2:g} val_mae={best.result.best_val_mae:.6f}")
    else:
        results = [train(g, split, cfg, replace(tc, seed=tc.seed + r), variant)
                   for r in range(args.repeats)]

    res = results[0]
    save_checkpoint(out / "checkpoint.npz", res.params, cfg,
                    {"split_seed": split.seed, "init_seed": tc.seed, "dataset_digest": digest})
    write_history(out / "history.tsv", res.history)
    write_timing(out / "timing.tsv", res.history)
    test = evaluate(res.params, build_masked(g, split), split.test, cfg, "test", res.encoder)
    print(f"best_epoch\t{res.best_epoch}")
    print(f"val_mae\t{res.best_val_mae:.6f}")
    print(f"test_mae\t{test.mae:.6f}")
    print(f"test_rmse\t{test.rmse:.6f}")

    if args.repeats > 1:
        rows = []
        for r, rr in enumerate(results):
            rep = evaluate(rr.params, build_masked(g, split), split.test, cfg, "test", rr.encoder)
            rows.append([tc.seed + r, rr.best_epoch, rr.best_val_mae, rep.mae, rep.rmse])
        _write_tsv(out / "repeats.tsv", ["seed", "best_epoch", "val_mae", "test_mae", "test_rmse"], rows)
        maes, rmses = np.array([r[3] for r in rows]), np.array([r[4] for r in rows])
        print(f"test_mae_mean_std\t{maes.mean():.4f}±{maes.std():.4f}")
        print(f"test_rmse_mean_std\t{rmses.mean():.4f}±{rmses.std():.4f}")

    if not args.no_plot:
        plotting.plot_history(res.history, out / "history.png", _model_label(variant, cfg.m_variant))
    config = _run_config(args, cfg, tc, variant, meta)
    config.update(grid=bool(args.grid), repeats=args.repeats)
    write_manifest(out / "manifest.json", "train", config, digest, time.perf_counter() - start)
    return EXIT_OK


def build_masked(g, split):
    return mask_adjacency_to_train(g, split)


def _check_compat(ckpt_meta: dict, g, args) -> None:
    pairs = [("n", g.n), ("t_slots", g.t_slots)]
    for field_name, flag in (("layers", args.layers), ("fdim", args.fdim), ("band", args.band),
                             ("m_variant", args.m)):
        if flag is not None:
            pairs.append((field_name, flag))
    for field_name, expected in pairs:
        if ckpt_meta[field_name] != expected:
            raise ConfigMismatch(field_name, expected, ckpt_meta[field_name])


def cmd_eval(args) -> int:
    ckpt = resolve_input(args.checkpoint)
    if not ckpt.exists():
        raise DataError(f"{ckpt}: no such file")
    params, cfg, ckpt_meta = load_checkpoint(ckpt)
    g, split, meta, digest = _load_prepared_arg(args.prepared)
    _check_compat(ckpt_meta, g, args)
    rep = evaluate(params, build_masked(g, split), split.get(args.split), cfg, args.split)

    label = _model_label(params.variant, cfg.m_variant)
    name = Path(args.prepared).stem
    print(f"{'Dataset':<16}{'Metric':<8}{label}")
    print(f"{name:<16}{'MAE':<8}{rep.mae:.3f}")
    print(f"{'':<16}{'RMSE':<8}{rep.rmse:.3f}")
    print(f"# split={args.split} count={rep.count} variant={params.variant} "
          f"L={cfg.layers} F={cfg.fdim} b={cfg.bandwidth} M={cfg.m_variant}")
    out = Path(args.out) if args.out else ckpt.parent
    out.mkdir(parents=True, exist_ok=True)
    (out / f"report_{args.split}.txt").write_text(rep.to_text())
    (out / f"report_{args.split}.json").write_text(rep.to_json() + "\n")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    variant = normalize_variant(args.variant)
    inst = random_instance(args.seed, args.nodes, args.fdim, args.slots, args.layers, args.obs,
                           args.band, args.m, variant)
    tc = TrainConfig(l2=args.l2)
    enc = Encoder(inst.a_norm, inst.cfg, variant)
    grads = None
    if args.corrupt:
        grads = backward(inst.params, inst.a_norm, inst.cfg, inst.obs, inst.targets, tc, enc)
        arrays = {k: np.array(v, dtype=np.float64) for k, v in grads.arrays().items()}
        flat = arrays["x"].reshape(-1)
        flat[np.argmax(np.abs(flat))] *= 2.0
        grads = GradientSet.from_arrays(arrays)
    worst = grad_check_report(inst.params, inst.a_norm, inst.cfg, inst.obs, inst.targets, tc,
                              args.step, grads=grads, encoder=enc)
    for name, err in worst.items():
        print(f"{name}\t{err:.3e}")
    err = max(worst.values())
    print(f"max_relative_error\t{err:.3e}")
    if not enc.light:
        margin = relu_margin(enc, inst.params)
        print(f"relu_margin\t{margin:.3e}")
        if margin < RELU_MARGIN:
            log.warning("a pre-activation lies within %g of the ReLU kink; try another --seed",
                        RELU_MARGIN)
    return EXIT_OK if err < GRADCHECK_TOL else EXIT_CHECK


def _train_eval_measured(g, split, cfg, tc, variant):
    tracemalloc.start()
    try:
        res = train(g, split, cfg, tc, variant)
        rep = evaluate(res.params, build_masked(g, split), split.test, cfg, "test", res.encoder)
        peak = tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()
    return res, rep, peak


def ablation_rows(g, split, cfg: EncoderConfig, tc: TrainConfig) -> list[dict]:
    rows = []
    for variant in VARIANTS:
        res, rep, peak = _train_eval_measured(g, split, cfg, tc, variant)
        rows.append({"variant": variant, "val_mae": res.best_val_mae, "test_mae": rep.mae,
                     "test_rmse": rep.rmse, "params": parameter_count(g.n, cfg, variant),
                     "peak_mem_mb": peak / 2**20, "best_epoch": res.best_epoch})
    return rows


def cmd_ablate(args) -> int:
    tc = _train_config(args)
    g, split, meta, digest = _load_prepared_arg(args.prepared)
    cfg = _encoder_config(args, g.t_slots)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows = ablation_rows(g, split, cfg, tc)
    header = ["variant", "val_mae", "test_mae", "test_rmse", "params", "peak_mem_mb", "best_epoch"]
    _write_tsv(out / "ablation.tsv", header, [[r[k] for k in header] for r in rows])
    print("\t".join(header))
    for r in rows:
        print(f"{plotting.VARIANT_LABELS[r['variant']]}\t{r['val_mae']:.4f}\t{r['test_mae']:.4f}\t"
              f"{r['test_rmse']:.4f}\t{r['params']}\t{r['peak_mem_mb']:.2f}\t{r['best_epoch']}")
    if not args.no_plot:
        plotting.plot_ablation(rows, out / "ablation.png")
    write_manifest(out / "manifest.json", "ablate", _run_config(args, cfg, tc, "all", meta), digest,
                   time.perf_counter() - start)
    by = {r["variant"]: r for r in rows}
    delta = by["wo_l"]["params"] - by["tlgcn"]["params"]
    expected = cfg.layers * cfg.fdim * cfg.fdim * cfg.t_slots
    if delta != expected or not by["tlgcn"]["params"] < by["wo_l"]["params"]:
        print(f"parameter delta {delta} != L*F*F*T = {expected}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_sweep(args) -> int:
    variant = normalize_variant(args.variant)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be integers, got {args.values!r}") from None
    if not values or min(values) < 1:
        raise UsageError("--values must be positive integers")
    tc = _train_config(args)
    g, split, meta, digest = _load_prepared_arg(args.prepared)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows = []
    for v in values:
        setattr(args, args.param, v)
        cfg = _encoder_config(args, g.t_slots)
        res = train(g, split, cfg, tc, variant)
        rep = evaluate(res.params, build_masked(g, split), split.test, cfg, "test", res.encoder)
        rows.append([v, res.best_val_mae, rep.mae, rep.rmse, res.best_epoch])
        print(f"{args.param}={v}\ttest_mae={rep.mae:.4f}\ttest_rmse={rep.rmse:.4f}")
    _write_tsv(out / "sweep.tsv", [args.param, "val_mae", "test_mae", "test_rmse", "best_epoch"], rows)
    if not args.no_plot:
        plotting.plot_sweep(args.param, values, [r[2] for r in rows], [r[3] for r in rows],
                            out / "sweep.png")
    config = {**tc.as_dict(), "variant": variant, "param": args.param, "values": values,
              "layers": args.layers, "fdim": args.fdim, "band": args.band, "m_variant": args.m}
    write_manifest(out / "manifest.json", "sweep", config, digest, time.perf_counter() - start)
    return EXIT_OK


def cmd_dump_m(args) -> int:
    m = make_transform(args.m, args.slots, args.band)
    for t, row in enumerate(m.entries):
        line = " ".join(repr(float(v)) for v in row)
        if m.variant == "M1":
            line += f"  # row sum {float(row.sum())!r}"
        print(line)
    if args.plot:
        plotting.plot_transform(m.entries, args.plot, f"{m.variant}, T={args.slots}, b={args.band}")
    return EXIT_OK


def cmd_datasets(args) -> int:
    print("name\tedges\tnodes\tdensity\tT\taggregator\turl")
    for d in datasets.REGISTRY.values():
        print(f"{d.name}\t{d.edges}\t{d.nodes}\t{d.density}\t{d.t_slots}\t{d.aggregator}\t{d.url}")
    print(f"# place files under ${datasets.DATA_DIR_ENV}; downloads are manual")
    return EXIT_OK


COMMANDS = {
    "prepare": cmd_prepare,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
    "dump-m": cmd_dump_m,
    "datasets": cmd_datasets,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (DataError, ConfigMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TensorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
