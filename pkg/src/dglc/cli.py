"""``dglc`` command line: fetch, stats, train, baseline, sweep, report.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import shutil
import sys
import tempfile
import urllib.request
import zipfile
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import baselines
from .graph import DatasetFormatError, load_dataset, parse_tudataset
from .metrics import evaluate
from .trainer import TrainConfig, dump_json, save_checkpoint, summarize, sweep, train

DEFAULT_URL = "https://www.chrsmrrs.com/graphkerneldatasets/{name}.zip"
BASELINE_METHODS = ("wl+sc", "sp+sc", "wl+km", "sp+km")

log = logging.getLogger("dglc")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# fetch
# ---------------------------------------------------------------------------


def _safe_extract(zf: zipfile.ZipFile, dest: Path):
    root = dest.resolve()
    for member in zf.namelist():
        target = (dest / member).resolve()
        if root not in target.parents and target != root:
            raise DatasetFormatError(f"archive member escapes destination: {member}")
    zf.extractall(dest)


def cmd_fetch(name: str, dest, url: str | None = None, from_file=None, timeout: float = 60.0) -> Path:
    """Download (or read) a TUDataset zip, check it, and extract it under ``dest``."""
    dest = Path(dest)
    if from_file is not None:
        payload = Path(from_file).read_bytes()
    else:
        url = url or DEFAULT_URL.format(name=name)
        log.info("downloading %s", url)
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            payload = resp.read()
    try:
        zf = zipfile.ZipFile(io.BytesIO(payload))
        bad = zf.testzip()
    except zipfile.BadZipFile as exc:
        raise DatasetFormatError(f"malformed archive: {exc}") from None
    if bad is not None:
        raise DatasetFormatError(f"corrupt member in archive: {bad}")

    with tempfile.TemporaryDirectory() as tmp:
        _safe_extract(zf, Path(tmp))
        hits = sorted(Path(tmp).rglob("*_A.txt"))
        if not hits:
            raise DatasetFormatError("archive has no *_A.txt file")
        src = hits[0].parent
        prefix = hits[0].name[: -len("_A.txt")]
        for suffix in ("graph_indicator", "graph_labels"):
            if not (src / f"{prefix}_{suffix}.txt").exists():
                raise DatasetFormatError(f"archive lacks {prefix}_{suffix}.txt")
        out = dest / name
        if out.exists():
            shutil.rmtree(out)
        shutil.copytree(src, out)
    parse_tudataset(out, prefix)
    return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

FLAG_TO_FIELD = {
    "mode": "mode",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "lr": "learning_rate",
    "layers": "num_layers",
    "hidden_dim": "hidden_dim",
    "z_dim": "z_dim",
    "seed": "seed",
    "pretrain_epochs": "pretrain_epochs",
    "cluster_weight": "cluster_weight",
}
CLI_CONFIG_KEYS = {"dataset", "data_dir", "out", "method", "seeds", "grid", "wl_iterations"}


def load_cli_config(path) -> tuple[dict, dict]:
    """Split a JSON config into (train-config fields, CLI-level fields); unknown keys are rejected."""
    if path is None:
        return {}, {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    train_keys = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(data) - train_keys - CLI_CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    return {k: v for k, v in data.items() if k in train_keys}, {k: v for k, v in data.items() if k in CLI_CONFIG_KEYS}


def _resolve(args, cli_cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cli_cfg.get(key, default)


def make_train_config(args, train_cfg: dict) -> TrainConfig:
    merged = dict(train_cfg)
    for flag, name in FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[name] = value
    try:
        return TrainConfig.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def write_embeddings_csv(path, z: np.ndarray, dataset: str, seed: int) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# dataset={dataset},seed={seed}\n")
        fh.write(",".join(f"z{i}" for i in range(z.shape[1])) + "\n")
        for row in z:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return path


def read_embeddings_csv(path) -> tuple[dict, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    meta = dict(kv.split("=", 1) for kv in lines[0].lstrip("# ").split(","))
    rows = [list(map(float, ln.split(","))) for ln in lines[2:] if ln]
    return meta, np.asarray(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    train_cfg, cli_cfg = load_cli_config(args.config)
    base = make_train_config(args, train_cfg)
    name = _resolve(args, cli_cfg, "dataset")
    if not name:
        raise UsageError("--dataset is required")
    out = Path(_resolve(args, cli_cfg, "out", "runs"))
    seeds = int(_resolve(args, cli_cfg, "seeds", 1))
    if seeds < 1:
        raise UsageError("--seeds must be positive")
    dataset = load_dataset(name, _resolve(args, cli_cfg, "data_dir"))
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for s in range(base.seed, base.seed + seeds):
        cfg = replace(base, seed=s)
        models = []
        res = train(dataset, cfg, model_out=models)
        stem = f"{dataset.name}_{cfg.mode}_seed{s}"
        dump_json(res.to_json(), out / f"{stem}.json")
        save_checkpoint(models[0], out / f"{stem}.ckpt", meta={"dataset": dataset.name, "config": asdict(cfg)})
        write_embeddings_csv(out / f"{stem}_z.csv", res.embeddings, dataset.name, s)
        print(f"{stem}: acc={res.acc:.4f} nmi={res.nmi:.4f} ari={res.ari:.4f} ({res.seconds:.1f}s)")
        results.append(res)
    if seeds > 1:
        rows = [{"key": base.mode, "seed": r.config.seed, "acc": r.acc, "nmi": r.nmi, "ari": r.ari} for r in results]
        summary = summarize(rows)[0]
        dump_json(summary, out / f"{dataset.name}_{base.mode}_summary.json")
        print(f"mean over {seeds} seeds: acc={summary['acc_mean']:.4f}±{summary['acc_std']:.4f}")
    return 0


def run_baseline(dataset, method: str, seed: int = 0, wl_iterations: int = 3):
    kernel, clusterer = method.split("+")
    graphs = dataset.graphs
    gram = baselines.wl_kernel(graphs, wl_iterations) if kernel == "wl" else baselines.sp_kernel(graphs)
    c = dataset.num_classes
    if clusterer == "sc":
        labels = baselines.spectral_clustering(gram, c, seed=seed)
    else:
        labels = baselines.kmeans(gram.values, c, seed=seed).labels
    return gram, labels, evaluate(dataset.graph_labels, labels)


def cmd_baseline(args) -> int:
    _, cli_cfg = load_cli_config(args.config)
    name = _resolve(args, cli_cfg, "dataset")
    method = _resolve(args, cli_cfg, "method")
    if not name:
        raise UsageError("--dataset is required")
    if method not in BASELINE_METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {BASELINE_METHODS}")
    seed = args.seed if args.seed is not None else 0
    dataset = load_dataset(name, _resolve(args, cli_cfg, "data_dir"))
    out = Path(_resolve(args, cli_cfg, "out", "runs"))
    out.mkdir(parents=True, exist_ok=True)
    gram, labels, scores = run_baseline(dataset, method, seed, args.wl_iterations)
    stem = f"{dataset.name}_{method.replace('+', '_')}_seed{seed}"
    doc = {"dataset": dataset.name, "method": method, "seed": seed, **scores, "labels": [int(x) for x in labels]}
    dump_json(doc, out / f"{stem}.json")
    if args.export_gram:
        gram.to_csv(out / f"{dataset.name}_{method.split('+')[0]}_gram.csv")
    print(f"{stem}: acc={scores['acc']:.4f} nmi={scores['nmi']:.4f} ari={scores['ari']:.4f}")
    return 0


def parse_grid(text) -> dict:
    if isinstance(text, dict):
        grid = text
    else:
        try:
            grid = json.loads(text)
        except (TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"grid must be a JSON object like '{{\"d_z\": [10, 20]}}': {exc}") from None
    if not isinstance(grid, dict) or not grid or any(not isinstance(v, list) or not v for v in grid.values()):
        raise UsageError("grid must map parameter names to non-empty lists")
    return grid


def cmd_sweep(args) -> int:
    train_cfg, cli_cfg = load_cli_config(args.config)
    base = make_train_config(args, train_cfg)
    grid = parse_grid(_resolve(args, cli_cfg, "grid"))
    name = _resolve(args, cli_cfg, "dataset")
    if not name:
        raise UsageError("--dataset is required")
    seeds = int(_resolve(args, cli_cfg, "seeds", 1))
    dataset = load_dataset(name, _resolve(args, cli_cfg, "data_dir"))
    out = Path(_resolve(args, cli_cfg, "out", "runs"))
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = sweep(dataset, base, grid, seeds=range(base.seed, base.seed + seeds), workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"dataset": dataset.name, "mode": base.mode, "grid": grid, "rows": rows}
    path = dump_json(doc, out / f"{dataset.name}_sweep.json")
    print(f"{len(rows)} runs written to {path}")
    return 0


def format_report(doc: dict) -> str:
    rows = summarize(doc["rows"])
    lines = [f"{'key':<28} {'runs':>4} {'ACC':>14} {'NMI':>14} {'ARI':>14}"]
    for r in rows:
        cells = [f"{100 * r[m + '_mean']:6.2f}±{100 * r[m + '_std']:5.2f}" for m in ("acc", "nmi", "ari")]
        lines.append(f"{r['key']:<28} {r['runs']:>4} " + " ".join(f"{c:>14}" for c in cells))
    return "\n".join(lines)


def cmd_report(args) -> int:
    doc = json.loads(Path(args.sweep_json).read_text())
    print(format_report(doc))
    return 0


def cmd_stats(args) -> int:
    dataset = load_dataset(args.dataset, args.data_dir)
    print(json.dumps(dataset.stats(), indent=2))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _add_train_flags(p):
    p.add_argument("--mode", choices=("full", "d1", "d2", "d3"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--layers", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--z-dim", type=int)
    p.add_argument("--pretrain-epochs", type=int)
    p.add_argument("--cluster-weight", type=float)


def _add_common(p):
    p.add_argument("--dataset")
    p.add_argument("--data-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--config", help="JSON file; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dglc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download and extract a TUDataset archive")
    p.add_argument("name")
    p.add_argument("--dest", default="data")
    p.add_argument("--url")
    p.add_argument("--from-file", help="use a local zip instead of downloading")
    p.set_defaults(func=lambda a: (print(cmd_fetch(a.name, a.dest, a.url, a.from_file)), 0)[1])

    p = sub.add_parser("stats", help="print dataset statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--data-dir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train the clustering model")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--seeds", type=int, help="run seeds seed..seed+N-1")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("baseline", help="graph kernel + spectral clustering / k-means")
    _add_common(p)
    p.add_argument("--method", choices=BASELINE_METHODS)
    p.add_argument("--wl-iterations", type=int, default=3)
    p.add_argument("--export-gram", action="store_true")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="hyperparameter grid")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--grid", help='JSON object, e.g. \'{"d_z": [10, 20]}\'')
    p.add_argument("--seeds", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarise a sweep JSON")
    p.add_argument("sweep_json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dglc: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 1
        print(f"dglc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
