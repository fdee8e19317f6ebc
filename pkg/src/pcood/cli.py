"""Command-line front end for the OOD evaluation pipeline.

Composes the library into file-level subcommands: synthesize fixtures,
aggregate prediction tensors, score points, and produce AUROC / ROC /
IoU reports and colorized ID/OOD maps. Every output is written to a
temp file and renamed into place, reports carry input hashes instead of
timestamps, and all computations are independent of --workers, so
reruns on the same inputs are byte-identical.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_outputs
from .errors import TruncatedStreamError, ValidationError
from .evaluation import (DEFAULT_BIN_COUNT, EXACT_MODE_MAX_POINTS, TIE_RULE,
                         confusion_merge, confusion_new, confusion_accumulate,
                         apply_threshold, argmax_labels, exact_auroc,
                         hist_accumulate, hist_auroc, hist_merge, hist_new,
                         hist_new_range, optimal_threshold, roc_curve,
                         seg_metrics, write_metrics_report, write_roc_csv,
                         read_roc_csv)
from .pointcloud import parse_semantic3d, write_idood_map
from .predictive import (PredictiveTensor, TENSOR_MAGIC, TensorKind,
                         aggregate, read_tensor, write_tensor)
from .scores import (ScoreKind, ScoreVector, read_scores_csv,
                     score_distribution, write_scores_csv)
from .synth import (GaussianPairSpec, sample_scores_chunk, synth_tensor_blocks)

DEFAULT_K_SWEEP = (1, 5, 10, 15, 20)

_KIND_FLAGS = {"msp": ScoreKind.MSP_COMPLEMENT, "entropy": ScoreKind.ENTROPY}
_MODES = ("exact", "hist", "auto")


@dataclass
class RunConfig:
    """One validated CLI invocation."""

    subcommand: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    kind: ScoreKind = ScoreKind.MSP_COMPLEMENT
    k: int | None = None
    k_list: tuple | None = None
    bins: int = DEFAULT_BIN_COUNT
    mode: str = "auto"
    threshold: float | None = None
    workers: int = 1
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for role, path in {**self.inputs, **self.outputs}.items():
            if not path:
                raise ValidationError(f"{self.subcommand}: empty path for {role}")
        if self.k is not None and self.k < 1:
            raise ValidationError(f"--k must be >= 1, got {self.k}")
        if self.k_list is not None:
            if not self.k_list or any(k < 1 for k in self.k_list):
                raise ValidationError(f"--k-list entries must be >= 1, got {self.k_list}")
        if self.bins < 2:
            raise ValidationError(f"--bins must be >= 2, got {self.bins}")
        if self.mode not in _MODES:
            raise ValidationError(f"--mode must be one of {_MODES}, got {self.mode!r}")
        if self.workers < 1:
            raise ValidationError(f"--workers must be >= 1, got {self.workers}")


# ---------------------------------------------------------------------------
# Shared machinery
# ---------------------------------------------------------------------------

def _shards(total: int, workers: int):
    """Split range(total) into at most `workers` contiguous [start, stop)."""
    if total <= 0:
        return [(0, 0)]
    workers = max(1, min(workers, total))
    base, extra = divmod(total, workers)
    bounds = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def _run_shards(fn, shard_args, workers: int):
    """Apply fn over shard argument tuples, preserving shard order."""
    if workers <= 1 or len(shard_args) <= 1:
        return [fn(*args) for args in shard_args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda args: fn(*args), shard_args))


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_tensor(path: str) -> PredictiveTensor:
    with open(path, "rb") as f:
        try:
            return read_tensor(f)
        except (ValidationError, TruncatedStreamError) as exc:
            raise type(exc)(f"{path}: {exc}") from None


def _load_scores_or_tensor(path: str):
    """Return ("tensor", PredictiveTensor) or ("scores", ndarray) by sniffing."""
    with open(path, "rb") as f:
        head = f.read(len(TENSOR_MAGIC))
    if head == TENSOR_MAGIC:
        return "tensor", _load_tensor(path)
    with open(path, "rb") as f:
        try:
            return "scores", read_scores_csv(f)
        except ValidationError as exc:
            raise type(exc)(f"{path}: {exc}") from None


def _tensor_scores(tensor: PredictiveTensor, kind: ScoreKind, k: int,
                   workers: int) -> np.ndarray:
    """Aggregate k members and score every point, sharded over points."""

    def shard(a, b):
        sub = PredictiveTensor(tensor.values[:, a:b, :], tensor.kind)
        return score_distribution(aggregate(sub, k), kind).scores

    parts = _run_shards(shard, _shards(tensor.n_points, workers), workers)
    return np.concatenate(parts) if parts else np.zeros(0)


def _resolve_k(config: RunConfig, tensor: PredictiveTensor) -> list:
    if config.k_list is not None:
        return list(config.k_list)
    if config.k is not None:
        return [config.k]
    return [tensor.n_members]


def _provenance(inputs) -> list:
    entries = []
    for role, path in inputs:
        entries.append((f"input_{role}", path))
        entries.append((f"input_{role}_sha256", _sha256(path)))
    return entries


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_aggregate(config: RunConfig) -> int:
    tensor = _load_tensor(config.inputs["in"])
    k = config.k if config.k is not None else tensor.n_members

    def shard(a, b):
        sub = PredictiveTensor(tensor.values[:, a:b, :], tensor.kind)
        return aggregate(sub, k).probs

    parts = _run_shards(shard, _shards(tensor.n_points, config.workers),
                        config.workers)
    probs = np.concatenate(parts) if parts else np.zeros((0, tensor.n_classes))
    out = PredictiveTensor(probs[np.newaxis].astype(np.float32),
                           TensorKind.PROBABILITIES)
    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_tensor(out, sink)
    dev = np.abs(np.sum(out.values[0], axis=-1, dtype=np.float64) - 1.0)
    max_dev = float(dev.max()) if dev.size else 0.0
    print(f"points={out.n_points} classes={out.n_classes} members_used={k} "
          f"max_row_sum_dev={max_dev!r}")
    return 0


def cmd_score(config: RunConfig) -> int:
    tensor = _load_tensor(config.inputs["in"])
    k = config.k if config.k is not None else tensor.n_members
    values = _tensor_scores(tensor, config.kind, k, config.workers)
    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_scores_csv(values, sink)
    return 0


def _hist_over_shards(values: np.ndarray, population: str, hist_factory,
                      workers: int):
    """Per-shard histograms merged in shard order; deterministic for any W."""
    def shard(a, b):
        return hist_accumulate(hist_factory(), values[a:b], population)

    parts = _run_shards(shard, _shards(values.shape[0], workers), workers)
    merged = parts[0]
    for part in parts[1:]:
        merged = hist_merge(merged, part)
    return merged


def _score_inputs(config: RunConfig):
    """Load --id/--ood, via tensors (with k) or raw score CSVs."""
    id_form, id_data = _load_scores_or_tensor(config.inputs["id"])
    ood_form, ood_data = _load_scores_or_tensor(config.inputs["ood"])
    if id_form != ood_form:
        raise ValidationError(
            "--id and --ood must both be tensors or both be score CSVs"
        )
    return id_form, id_data, ood_data


def cmd_auroc(config: RunConfig) -> int:
    form, id_data, ood_data = _score_inputs(config)
    entries = [("command", "auroc")]
    entries += _provenance([("id", config.inputs["id"]),
                            ("ood", config.inputs["ood"])])
    entries.append(("kind", config.kind.value))
    entries.append(("tie_rule", TIE_RULE))

    if form == "scores":
        if config.k is not None or config.k_list is not None:
            raise ValidationError("--k/--k-list apply to tensor inputs only")
        n_id, n_ood = id_data.shape[0], ood_data.shape[0]
        mode = config.mode
        if mode == "auto":
            mode = "exact" if n_id + n_ood <= EXACT_MODE_MAX_POINTS else "hist"
        entries.append(("mode", mode))
        if mode == "hist":
            entries.append(("bins", config.bins))
        entries.append(("n_id", n_id))
        entries.append(("n_ood", n_ood))
        if mode == "exact":
            value = exact_auroc(id_data, ood_data)
        else:
            value = hist_auroc_over(id_data, ood_data, config.bins, config.workers)
        entries.append(("auroc", value))
    else:
        ks = _resolve_k(config, id_data)
        if id_data.n_classes != ood_data.n_classes:
            raise ValidationError(
                f"class counts differ: {id_data.n_classes} vs {ood_data.n_classes}"
            )
        n_id, n_ood = id_data.n_points, ood_data.n_points
        mode = config.mode
        if mode == "auto":
            mode = "exact" if n_id + n_ood <= EXACT_MODE_MAX_POINTS else "hist"
        entries.append(("mode", mode))
        if mode == "hist":
            entries.append(("bins", config.bins))
        entries.append(("n_id", n_id))
        entries.append(("n_ood", n_ood))
        for k in ks:
            id_scores = _tensor_scores(id_data, config.kind, k, config.workers)
            ood_scores = _tensor_scores(ood_data, config.kind, k, config.workers)
            if mode == "exact":
                value = exact_auroc(id_scores, ood_scores)
            else:
                factory = lambda: hist_new(config.kind, id_data.n_classes,
                                           config.bins)
                hist = _hist_over_shards(id_scores, "id", factory, config.workers)
                hist = hist_merge(hist, _hist_over_shards(
                    ood_scores, "ood", factory, config.workers))
                value = hist_auroc(hist)
            entries.append((f"auroc_k{k}", value))

    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_metrics_report(entries, sink)
    return 0


def hist_auroc_over(id_values: np.ndarray, ood_values: np.ndarray,
                    bins: int, workers: int) -> float:
    """Histogram AUROC of raw score arrays over their pooled range."""
    if id_values.size == 0 or ood_values.size == 0:
        raise ValidationError("both populations must be non-empty")
    lo = float(min(id_values.min(), ood_values.min()))
    hi = float(max(id_values.max(), ood_values.max()))
    if not lo < hi:
        hi = lo + 1.0  # all scores identical; a single occupied bin is fine
    factory = lambda: hist_new_range(lo, hi, bins)
    hist = _hist_over_shards(id_values, "id", factory, workers)
    hist = hist_merge(hist, _hist_over_shards(ood_values, "ood", factory, workers))
    return hist_auroc(hist)


def cmd_roc(config: RunConfig) -> int:
    form, id_data, ood_data = _score_inputs(config)
    metadata = [("kind", config.kind.value), ("bins", config.bins),
                ("tie_rule", TIE_RULE)]
    if form == "scores":
        if config.k is not None or config.k_list is not None:
            raise ValidationError("--k/--k-list apply to tensor inputs only")
        id_scores, ood_scores = id_data, ood_data
        if id_scores.size == 0 or ood_scores.size == 0:
            raise ValidationError("both populations must be non-empty")
        lo = float(min(id_scores.min(), ood_scores.min()))
        hi = float(max(id_scores.max(), ood_scores.max()))
        if not lo < hi:
            hi = lo + 1.0
        factory = lambda: hist_new_range(lo, hi, config.bins)
        k = None
    else:
        if id_data.n_classes != ood_data.n_classes:
            raise ValidationError(
                f"class counts differ: {id_data.n_classes} vs {ood_data.n_classes}"
            )
        k = config.k if config.k is not None else id_data.n_members
        id_scores = _tensor_scores(id_data, config.kind, k, config.workers)
        ood_scores = _tensor_scores(ood_data, config.kind, k, config.workers)
        factory = lambda: hist_new(config.kind, id_data.n_classes, config.bins)
    hist = _hist_over_shards(id_scores, "id", factory, config.workers)
    hist = hist_merge(hist, _hist_over_shards(ood_scores, "ood", factory,
                                              config.workers))
    curve = roc_curve(hist)
    threshold, j = optimal_threshold(curve)
    if k is not None:
        metadata.append(("k", k))
    metadata += [("n_id", hist.n_id), ("n_ood", hist.n_ood),
                 ("youden_threshold", threshold), ("youden_j", j)]
    metadata += _provenance([("id", config.inputs["id"]),
                             ("ood", config.inputs["ood"])])
    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_roc_csv(curve, sink, metadata)
    return 0


def cmd_iou(config: RunConfig) -> int:
    tensor = _load_tensor(config.inputs["pred"])
    with open(config.inputs["points"], "rb") as pf, \
            open(config.inputs["labels"], "rb") as lf:
        try:
            cloud = parse_semantic3d(pf, lf, class_count=tensor.n_classes)
        except ValidationError as exc:
            raise type(exc)(f"{config.inputs['points']}: {exc}") from None
    if len(cloud) != tensor.n_points:
        raise ValidationError(
            f"cloud has {len(cloud)} points but tensor has {tensor.n_points}"
        )
    k = config.k if config.k is not None else tensor.n_members

    def shard(a, b):
        sub = PredictiveTensor(tensor.values[:, a:b, :], tensor.kind)
        predicted = argmax_labels(aggregate(sub, k))
        return confusion_accumulate(confusion_new(tensor.n_classes),
                                    predicted, cloud.labels[a:b])

    parts = _run_shards(shard, _shards(tensor.n_points, config.workers),
                        config.workers)
    matrix = parts[0]
    for part in parts[1:]:
        matrix = confusion_merge(matrix, part)
    metrics = seg_metrics(matrix)

    entries = [("command", "iou")]
    entries += _provenance([("points", config.inputs["points"]),
                            ("labels", config.inputs["labels"]),
                            ("pred", config.inputs["pred"])])
    entries += [("k", k), ("n_classes", tensor.n_classes),
                ("total_counted", matrix.total_counted),
                ("ignored", matrix.ignored),
                ("mean_iou", metrics.mean_iou)]
    for c in range(tensor.n_classes):
        entries.append((f"per_class_iou_{c + 1}", float(metrics.per_class_iou[c])))
    entries.append(("accuracy", metrics.accuracy))
    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_metrics_report(entries, sink)
    return 0


def cmd_map(config: RunConfig) -> int:
    tensor = _load_tensor(config.inputs["pred"])
    with open(config.inputs["points"], "rb") as pf:
        try:
            cloud = parse_semantic3d(pf, class_count=tensor.n_classes)
        except ValidationError as exc:
            raise type(exc)(f"{config.inputs['points']}: {exc}") from None
    if len(cloud) != tensor.n_points:
        raise ValidationError(
            f"cloud has {len(cloud)} points but tensor has {tensor.n_points}"
        )
    k = config.k if config.k is not None else tensor.n_members
    if config.threshold is not None:
        threshold = config.threshold
    else:
        with open(config.inputs["roc"], "rb") as f:
            try:
                _, metadata = read_roc_csv(f)
            except ValidationError as exc:
                raise type(exc)(f"{config.inputs['roc']}: {exc}") from None
        if "youden_threshold" not in metadata:
            raise ValidationError(
                f"{config.inputs['roc']}: no youden_threshold metadata"
            )
        threshold = float(metadata["youden_threshold"])
    values = _tensor_scores(tensor, config.kind, k, config.workers)
    vector = ScoreVector(values, config.kind, tensor.n_classes)
    mask = apply_threshold(vector, threshold)
    with atomic_outputs([config.outputs["out"]]) as (sink,):
        write_idood_map(cloud, mask, sink)
    return 0


def cmd_synth(config: RunConfig) -> int:
    if config.extra["what"] == "scores":
        spec = GaussianPairSpec(
            mu_id=config.extra["mu_id"], sigma_id=config.extra["sigma_id"],
            mu_ood=config.extra["mu_ood"], sigma_ood=config.extra["sigma_ood"],
            n_id=config.extra["n_id"], n_ood=config.extra["n_ood"],
            seed=config.seed)

        def draw(population, n):
            parts = _run_shards(
                lambda a, b: sample_scores_chunk(spec, population, a, b),
                _shards(n, config.workers), config.workers)
            return np.concatenate(parts) if parts else np.zeros(0)

        id_scores = draw("id", spec.n_id)
        ood_scores = draw("ood", spec.n_ood)
        with atomic_outputs([config.outputs["out_id"],
                             config.outputs["out_ood"]]) as (id_sink, ood_sink):
            write_scores_csv(id_scores, id_sink)
            write_scores_csv(ood_scores, ood_sink)
        return 0

    n_points = config.extra["points"]
    n_classes = config.extra["classes"]
    n_members = config.extra["members"]
    separability = config.extra["separability"]
    parts = _run_shards(
        lambda a, b: synth_tensor_blocks(n_points, n_classes, n_members,
                                         separability, config.seed, a, b),
        _shards(n_points, config.workers), config.workers)
    id_block = np.concatenate([p[0] for p in parts], axis=1)
    ood_block = np.concatenate([p[1] for p in parts], axis=1)
    id_tensor = PredictiveTensor(id_block, TensorKind.PROBABILITIES)
    ood_tensor = PredictiveTensor(ood_block, TensorKind.PROBABILITIES)
    with atomic_outputs([config.outputs["out_id"],
                         config.outputs["out_ood"]]) as (id_sink, ood_sink):
        write_tensor(id_tensor, id_sink)
        write_tensor(ood_tensor, ood_sink)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # Usage errors are validation errors: exit 1, not argparse's 2.
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _k_list(text: str):
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"bad k list: {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcood",
                     description="Uncertainty-based OOD evaluation for point "
                                 "cloud semantic segmentation.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, kind=False, k=False, bins=False, mode=False):
        p.add_argument("--workers", type=int, default=1,
                       help="worker count; results are identical for any value")
        if kind:
            p.add_argument("--kind", choices=sorted(_KIND_FLAGS), default="msp",
                           help="OOD score: msp (1 - max softmax prob) or entropy")
        if k:
            p.add_argument("--k", type=int, default=None,
                           help="members to average (default: all)")
        if bins:
            p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT,
                           help="histogram bin count")
        if mode:
            p.add_argument("--mode", choices=_MODES, default="auto",
                           help="exact sort, streaming histogram, or auto by size")

    p = sub.add_parser("aggregate", help="average tensor members into a "
                                         "K=1 probability tensor")
    p.add_argument("--in", dest="input", required=True, help="input PCOD tensor")
    p.add_argument("--out", required=True, help="output PCOD tensor (K=1)")
    add_common(p, k=True)

    p = sub.add_parser("score", help="write per-point OOD scores as CSV")
    p.add_argument("--in", dest="input", required=True, help="input PCOD tensor")
    p.add_argument("--out", required=True, help="output score CSV")
    add_common(p, kind=True, k=True)

    p = sub.add_parser("auroc", help="AUROC report between ID and OOD inputs")
    p.add_argument("--id", required=True, help="ID PCOD tensor or score CSV")
    p.add_argument("--ood", required=True, help="OOD PCOD tensor or score CSV")
    p.add_argument("--k-list", type=_k_list, default=None,
                   help="comma-separated ensemble sizes to sweep "
                        f"(e.g. {','.join(map(str, DEFAULT_K_SWEEP))})")
    p.add_argument("--out", required=True, help="output key=value report")
    add_common(p, kind=True, k=True, bins=True, mode=True)

    p = sub.add_parser("roc", help="ROC curve CSV with the Youden threshold")
    p.add_argument("--id", required=True, help="ID PCOD tensor or score CSV")
    p.add_argument("--ood", required=True, help="OOD PCOD tensor or score CSV")
    p.add_argument("--out", required=True, help="output ROC CSV")
    add_common(p, kind=True, k=True, bins=True)

    p = sub.add_parser("iou", help="segmentation metrics report")
    p.add_argument("--points", required=True, help="Semantic3D points file")
    p.add_argument("--labels", required=True, help="per-point truth labels")
    p.add_argument("--pred", required=True, help="prediction PCOD tensor")
    p.add_argument("--out", required=True, help="output key=value report")
    add_common(p, k=True)

    p = sub.add_parser("map", help="write a green/red ID/OOD point map")
    p.add_argument("--points", required=True, help="Semantic3D points file")
    p.add_argument("--pred", required=True, help="prediction PCOD tensor")
    p.add_argument("--threshold", type=float, default=None,
                   help="OOD-score threshold (higher score = OOD)")
    p.add_argument("--roc", default=None,
                   help="ROC CSV to take the Youden threshold from")
    p.add_argument("--out", required=True, help="output map file")
    add_common(p, kind=True, k=True)

    p = sub.add_parser("synth", help="generate synthetic fixtures")
    what = p.add_subparsers(dest="what", required=True)

    ps = what.add_parser("scores", help="Gaussian ID/OOD score CSVs")
    ps.add_argument("--mu-id", type=float, default=0.0)
    ps.add_argument("--sigma-id", type=float, default=1.0)
    ps.add_argument("--mu-ood", type=float, default=1.0)
    ps.add_argument("--sigma-ood", type=float, default=1.0)
    ps.add_argument("--n-id", type=int, required=True)
    ps.add_argument("--n-ood", type=int, required=True)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out-id", required=True)
    ps.add_argument("--out-ood", required=True)
    ps.add_argument("--workers", type=int, default=1)

    pt = what.add_parser("tensor", help="ID/OOD prediction tensor pair")
    pt.add_argument("--points", type=int, required=True)
    pt.add_argument("--classes", type=int, default=8)
    pt.add_argument("--members", type=int, default=20)
    pt.add_argument("--separability", type=float, default=3.0)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out-id", required=True)
    pt.add_argument("--out-ood", required=True)
    pt.add_argument("--workers", type=int, default=1)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    sc = args.subcommand
    if sc == "aggregate":
        return RunConfig(sc, inputs={"in": args.input},
                         outputs={"out": args.out}, k=args.k,
                         workers=args.workers)
    if sc == "score":
        return RunConfig(sc, inputs={"in": args.input},
                         outputs={"out": args.out},
                         kind=_KIND_FLAGS[args.kind], k=args.k,
                         workers=args.workers)
    if sc == "auroc":
        return RunConfig(sc, inputs={"id": args.id, "ood": args.ood},
                         outputs={"out": args.out},
                         kind=_KIND_FLAGS[args.kind], k=args.k,
                         k_list=args.k_list, bins=args.bins, mode=args.mode,
                         workers=args.workers)
    if sc == "roc":
        return RunConfig(sc, inputs={"id": args.id, "ood": args.ood},
                         outputs={"out": args.out},
                         kind=_KIND_FLAGS[args.kind], k=args.k,
                         bins=args.bins, workers=args.workers)
    if sc == "iou":
        return RunConfig(sc, inputs={"points": args.points,
                                     "labels": args.labels,
                                     "pred": args.pred},
                         outputs={"out": args.out}, k=args.k,
                         workers=args.workers)
    if sc == "map":
        if (args.threshold is None) == (args.roc is None):
            raise ValidationError("map needs exactly one of --threshold or --roc")
        inputs = {"points": args.points, "pred": args.pred}
        if args.roc is not None:
            inputs["roc"] = args.roc
        return RunConfig(sc, inputs=inputs, outputs={"out": args.out},
                         kind=_KIND_FLAGS[args.kind], k=args.k,
                         threshold=args.threshold, workers=args.workers)
    if sc == "synth":
        if args.what == "scores":
            extra = {"what": "scores", "mu_id": args.mu_id,
                     "sigma_id": args.sigma_id, "mu_ood": args.mu_ood,
                     "sigma_ood": args.sigma_ood, "n_id": args.n_id,
                     "n_ood": args.n_ood}
        else:
            extra = {"what": "tensor", "points": args.points,
                     "classes": args.classes, "members": args.members,
                     "separability": args.separability}
        return RunConfig(sc, outputs={"out_id": args.out_id,
                                      "out_ood": args.out_ood},
                         seed=args.seed, workers=args.workers, extra=extra)
    raise ValidationError(f"unknown subcommand {sc!r}")


_COMMANDS = {
    "aggregate": cmd_aggregate,
    "score": cmd_score,
    "auroc": cmd_auroc,
    "roc": cmd_roc,
    "iou": cmd_iou,
    "map": cmd_map,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return _COMMANDS[config.subcommand](config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TruncatedStreamError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
