"""Joint mini-batch training, ablation modes, checkpoints and hyperparameter sweeps."""

from __future__ import annotations

import itertools
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import tensor as T
from .baselines import kmeans
from .cluster import (
    EmptyClusterError,
    ProjectorParams,
    hard_labels,
    init_centers,
    init_projector,
    kl_loss,
    project,
    soft_assign,
    target_distribution,
)
from .encoder import EncoderParams, encode_batch, init_encoder, make_batch
from .graph import GraphDataset, build_features
from .metrics import evaluate
from .mi import DiscriminatorParams, init_discriminator, js_mi_loss

log = logging.getLogger(__name__)

MODES = ("full", "d1", "d2", "d3")


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    mode: str = "full"
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 1e-3
    num_layers: int = 4
    hidden_dim: int = 64
    z_dim: int = 16
    num_clusters: int | None = None
    seed: int = 0
    pretrain_epochs: int = 5
    cluster_weight: float = 1.0
    kmeans_restarts: int = 10

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1e-5 <= self.learning_rate <= 1e-3:
            raise ValueError("learning_rate must lie in [1e-5, 1e-3]")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.num_layers < 1 or self.hidden_dim < 1 or self.z_dim < 1:
            raise ValueError("num_layers, hidden_dim and z_dim must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)


@dataclass
class Model:
    encoder: EncoderParams
    discriminator: DiscriminatorParams
    projector: ProjectorParams
    centers: T.Tensor

    def named_tensors(self) -> dict:
        out = {}
        out.update({f"encoder/{k}": v for k, v in self.encoder.tensors.items()})
        out.update({f"discriminator/{k}": v for k, v in self.discriminator.tensors.items()})
        out.update({f"projector/{k}": v for k, v in self.projector.tensors.items()})
        out["cluster/centers"] = self.centers
        return out


def build_model(d_in: int, config: TrainConfig, num_clusters: int, rng) -> Model:
    enc = init_encoder(d_in, config.num_layers, config.hidden_dim, rng)
    disc = init_discriminator(enc.out_dim, rng=rng)
    proj = init_projector(enc.out_dim, config.z_dim, hidden_dim=config.hidden_dim, rng=rng)
    centers = T.Tensor(np.zeros((num_clusters, config.z_dim)), requires_grad=True, name="centers")
    return Model(enc, disc, proj, centers)


@dataclass
class RunResult:
    dataset: str
    config: TrainConfig
    labels: np.ndarray
    acc: float
    nmi: float
    ari: float
    loss_curve: list
    seconds: float
    embeddings: np.ndarray = field(repr=False, default=None)
    graph_repr: np.ndarray = field(repr=False, default=None)
    lc_at_init: float | None = None
    lc_final: float | None = None

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "mode": self.config.mode,
            "config": asdict(self.config),
            "seed": self.config.seed,
            "acc": self.acc,
            "nmi": self.nmi,
            "ari": self.ari,
            "seconds": self.seconds,
            "loss_curve": self.loss_curve,
            "lc_at_init": self.lc_at_init,
            "lc_final": self.lc_final,
            "labels": [int(x) for x in self.labels],
        }


def iterate_batches(n: int, batch_size: int, rng: np.random.Generator):
    """Shuffled index batches; a trailing batch with fewer than 2 graphs is dropped."""
    order = rng.permutation(n)
    for lo in range(0, n, batch_size):
        idx = order[lo : lo + batch_size]
        if len(idx) >= 2:
            yield idx


def embed_dataset(model: Model, dataset: GraphDataset, features, batch_size: int = 256):
    """Frozen full-dataset pass: graph readouts ``H`` and cluster embeddings ``Z``."""
    hs, zs = [], []
    with T.no_grad():
        for lo in range(0, len(dataset), batch_size):
            idx = np.arange(lo, min(lo + batch_size, len(dataset)))
            batch = make_batch([dataset.graphs[i] for i in idx], [features[i] for i in idx], idx)
            enc = encode_batch(batch, model.encoder)
            hs.append(enc.graph_repr.value)
            zs.append(project(enc.graph_repr, model.projector).value)
    return np.concatenate(hs), np.concatenate(zs)


def full_dataset_kl(z: np.ndarray, centers: np.ndarray) -> float:
    with T.no_grad():
        q = soft_assign(z, centers).value
    return float(kl_loss(target_distribution(q), q).value)


def _check_finite(value: float, what: str, epoch: int):
    if not np.isfinite(value):
        raise TrainingDivergedError(f"{what} became non-finite ({value}) in epoch {epoch}")


def _run_epoch(model, dataset, features, config, opt, rng, use_mi: bool, use_cluster: bool, epoch: int):
    lr_sum, lc_sum, steps, skipped = 0.0, 0.0, 0, 0
    for idx in iterate_batches(len(dataset), config.batch_size, rng):
        batch = make_batch([dataset.graphs[i] for i in idx], [features[i] for i in idx], idx)
        enc = encode_batch(batch, model.encoder)
        loss = None
        if use_mi:
            l_r = js_mi_loss(enc, model.discriminator)
            _check_finite(l_r.item(), "L_r", epoch)
            lr_sum += l_r.item()
            loss = l_r
        if use_cluster:
            q = soft_assign(project(enc.graph_repr, model.projector), model.centers)
            try:
                p = target_distribution(q.value)
            except EmptyClusterError:
                skipped += 1
                log.warning("epoch %d: empty cluster column, skipping L_c for this batch", epoch)
            else:
                l_c = kl_loss(p, q)
                _check_finite(l_c.item(), "L_c", epoch)
                lc_sum += l_c.item()
                weighted = T.scale(l_c, config.cluster_weight)
                loss = weighted if loss is None else T.add(loss, weighted)
        steps += 1
        if loss is None:
            continue
        loss.backward()
        opt.step()
    steps = max(steps, 1)
    return {
        "epoch": epoch,
        "l_r": lr_sum / steps if use_mi else None,
        "l_c": lc_sum / steps if use_cluster else None,
        "skipped_lc_batches": skipped,
    }


def train(dataset: GraphDataset, config: TrainConfig, features=None, model_out: list | None = None) -> RunResult:
    """Train one run and label the whole dataset.

    Modes: ``full`` pretrains with the MI loss, initialises centres by k-means
    and then minimises ``L_r + L_c``, labelling by argmax of Q. ``d1`` trains on
    MI only and labels by k-means on the readouts. ``d2`` trains like ``full``
    but labels by k-means on Z. ``d3`` spends the first half of the epochs on
    MI only and the rest on ``L_c`` only, labelling by Q.
    """
    start = time.perf_counter()
    features = build_features(dataset) if features is None else features
    c = config.num_clusters or dataset.num_classes
    rng = np.random.default_rng(config.seed)
    model = build_model(features[0].shape[1], config, c, rng)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    opt = T.Adam(model.named_tensors(), lr=config.learning_rate)

    if config.mode == "d1":
        pre = config.epochs
    elif config.mode == "d3":
        pre = config.epochs // 2
    else:
        pre = min(config.pretrain_epochs, config.epochs)

    curve = []
    for epoch in range(pre):
        curve.append(_run_epoch(model, dataset, features, config, opt, shuffle_rng, True, False, epoch))
        log.info("epoch %d (MI only): L_r=%.5f", epoch, curve[-1]["l_r"])

    lc_init = None
    if config.mode != "d1":
        _, z = embed_dataset(model, dataset, features)
        model.centers.value = init_centers(z, c, seed=config.seed, restarts=config.kmeans_restarts)
        lc_init = full_dataset_kl(z, model.centers.value)
        use_mi = config.mode != "d3"
        for epoch in range(pre, config.epochs):
            curve.append(_run_epoch(model, dataset, features, config, opt, shuffle_rng, use_mi, True, epoch))
            log.info("epoch %d: %s", epoch, curve[-1])

    h, z = embed_dataset(model, dataset, features)
    lc_final = None
    if config.mode == "d1":
        labels = kmeans(h, c, seed=config.seed, restarts=config.kmeans_restarts).labels
    elif config.mode == "d2":
        labels = kmeans(z, c, seed=config.seed, restarts=config.kmeans_restarts).labels
        lc_final = full_dataset_kl(z, model.centers.value)
    else:
        with T.no_grad():
            q = soft_assign(z, model.centers.value).value
        labels = hard_labels(q)
        lc_final = full_dataset_kl(z, model.centers.value)

    scores = evaluate(dataset.graph_labels, labels)
    if model_out is not None:
        model_out.append(model)
    return RunResult(
        dataset=dataset.name,
        config=config,
        labels=labels,
        loss_curve=curve,
        seconds=time.perf_counter() - start,
        embeddings=z,
        graph_repr=h,
        lc_at_init=lc_init,
        lc_final=lc_final,
        **scores,
    )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(model: Model, path, meta: dict | None = None) -> Path:
    arrays = {name: t.value for name, t in model.named_tensors().items()}
    return T.save_arrays(path, arrays, meta=meta)


def load_checkpoint(path, model: Model | None = None) -> dict:
    """Read a checkpoint; with ``model`` given, validate shapes and copy values in."""
    if model is None:
        return T.load_arrays(path)
    named = model.named_tensors()
    arrays = T.load_arrays(path, {k: v.shape for k, v in named.items()})
    for name, t in named.items():
        t.value = arrays[name].copy()
    return arrays


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

GRID_KEYS = {"d_h": "hidden_dim", "d_z": "z_dim", "K": "num_layers", "layers": "num_layers"}


def expand_grid(grid: dict) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must name at least one parameter with at least one value")
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def sweep(dataset: GraphDataset, base: TrainConfig, grid: dict, seeds=(0,), workers: int = 1) -> list[dict]:
    """One row per (grid point, seed); rows are keyed by the grid point."""
    points = expand_grid(grid)
    features = build_features(dataset)
    jobs = []
    for point in points:
        overrides = {GRID_KEYS.get(k, k): v for k, v in point.items()}
        key = ",".join(f"{k}={v}" for k, v in point.items())
        for seed in seeds:
            jobs.append((key, point, replace(base, seed=int(seed), **overrides)))

    def run(job):
        key, point, cfg = job
        res = train(dataset, cfg, features)
        return {
            "key": key,
            "params": point,
            "seed": cfg.seed,
            "acc": res.acc,
            "nmi": res.nmi,
            "ari": res.ari,
            "seconds": res.seconds,
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and standard deviation of each metric per grid key, in first-seen order."""
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row["key"], []).append(row)
    out = []
    for key, rs in groups.items():
        entry = {"key": key, "runs": len(rs)}
        for m in ("acc", "nmi", "ari"):
            vals = np.array([r[m] for r in rs])
            entry[f"{m}_mean"] = float(vals.mean())
            entry[f"{m}_std"] = float(vals.std())
        out.append(entry)
    return out


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
