"""Experiment runners: iterative projection, transferability, symmetry,
generalization tracking. Deterministic replay from a single master seed,
with per-iteration checkpoints and resume."""

from __future__ import annotations

import io
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (ProjectionResult, ProjectorOptions, adversarial_overshoot,
                       export_projection_csv, project_dataset, project_to_boundary)
from .data import (DataError, Dataset, export_csv, filter_binary, gen_gaussian_blobs,
                   gen_symmetric_layout, import_csv, load_idx, sample_balanced)
from .fileio import atomic_write_text
from .metrics import nearest_opposite_mean_distance
from .nn import (MlpNetwork, TrainConfig, TrainingDivergence, accuracy,
                 init_network, margin_batch, save_checkpoint, train)
from .rng import derive_seed, make_rng

MANIFEST_VERSION = 1

# positional seed namespaces, so derived seeds never collide across uses
SEED_ITER = 1
SEED_TRIAL = 2
SEED_EVAL = 3
SEED_BASELINE = 4
SEED_SPLIT = 5


class ExperimentError(RuntimeError):
    """Run aborted: training failed or too many projections did not converge."""


@dataclass
class DatasetSpec:
    source: str = "blobs"  # blobs | idx | csv | symmetric
    seed: int = 0
    # blobs
    dim: int = 2
    per_class: int = 50
    center_distance: float = 4.0
    sigma: float = 0.5
    # idx
    images_path: str = ""
    labels_path: str = ""
    class_a: int = 3
    class_b: int = 5
    subset: int = 0  # 0 keeps everything
    # csv
    csv_path: str = ""
    # symmetric
    layout_kind: str = "square_xor"


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    dims: list[int] = field(default_factory=lambda: [2, 16, 16, 2])
    train: TrainConfig = field(default_factory=TrainConfig)
    projector: ProjectorOptions = field(default_factory=ProjectorOptions)
    iterations: int = 5
    master_seed: int = 0
    unconverged_abort_fraction: float = 0.10
    kappa: float = 0.1
    dims_b: list[int] | None = None  # second architecture (cross-model transfer)
    eval_fraction: float = 0.25
    test_fraction: float = 0.25

    def validate(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        self.train.validate()
        self.projector.validate()


@dataclass
class IterationRecord:
    iteration: int
    mean_nn_distance: float
    mean_projection_norm: float
    train_accuracy: float | None
    test_accuracy: float | None
    unconverged_count: int
    epochs_run: int


@dataclass
class TransferReport:
    fooling_rate_transfer: float
    fooling_rate_source: float
    fooling_rate_random_baseline: float
    kappa: float
    mode: str
    valid: bool = True
    n_samples: int = 0


def build_dataset(spec: DatasetSpec, seed_override: int | None = None) -> Dataset:
    seed = spec.seed if seed_override is None else seed_override
    if spec.source == "blobs":
        half = spec.center_distance / 2.0
        c0 = np.zeros(spec.dim)
        c1 = np.zeros(spec.dim)
        c0[0], c1[0] = -half, half
        return gen_gaussian_blobs(spec.dim, spec.per_class, (c0, c1), spec.sigma, seed)
    if spec.source == "idx":
        data = load_idx(spec.images_path, spec.labels_path)
        data = filter_binary(data, spec.class_a, spec.class_b)
        if spec.subset:
            data = sample_balanced(data, spec.subset, seed)
        return data
    if spec.source == "csv":
        return import_csv(spec.csv_path)
    if spec.source == "symmetric":
        return gen_symmetric_layout(spec.layout_kind).dataset
    raise ValueError(f"unknown dataset source {spec.source!r}")


def stratified_split(data: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic per-class split; second part gets ceil(fraction) of each class."""
    rng = make_rng(seed, stream=0x5B117)
    take_a, take_b = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(data.labels == cls)
        perm = rng.permutation(idx)
        cut = int(round(len(idx) * fraction))
        take_b.append(perm[:cut])
        take_a.append(perm[cut:])
    a = np.sort(np.concatenate(take_a))
    b = np.sort(np.concatenate(take_b))
    return (Dataset(data.samples[a], data.labels[a], data.name + "_a"),
            Dataset(data.samples[b], data.labels[b], data.name + "_b"))


def _train_fresh(dims, data: Dataset, base_cfg: TrainConfig, seed: int) -> tuple[MlpNetwork, "TrainReport"]:
    net = init_network(dims, seed)
    report = train(net, data, replace(base_cfg, seed=seed))
    return net, report


def records_to_csv(records: list[IterationRecord]) -> str:
    buf = io.StringIO()
    buf.write("iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count\n")
    for r in records:
        train_acc = "" if r.train_accuracy is None else repr(r.train_accuracy)
        test_acc = "" if r.test_accuracy is None else repr(r.test_accuracy)
        buf.write(f"{r.iteration},{r.mean_nn_distance!r},{r.mean_projection_norm!r},"
                  f"{train_acc},{test_acc},{r.unconverged_count}\n")
    return buf.getvalue()


def records_from_csv(text: str) -> list[IterationRecord]:
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("iteration,"):
        raise DataError("not a records CSV")
    records = []
    for line in lines[1:]:
        it, nn, pn, tr, te, uc = line.split(",")
        records.append(IterationRecord(int(it), float(nn), float(pn),
                                       float(tr) if tr else None,
                                       float(te) if te else None, int(uc), 0))
    return records


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["train"]["adam_betas"] = list(d["train"]["adam_betas"])
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    d["dataset"] = DatasetSpec(**d["dataset"])
    tr = dict(d["train"])
    tr["adam_betas"] = tuple(tr["adam_betas"])
    d["train"] = TrainConfig(**tr)
    d["projector"] = ProjectorOptions(**d["projector"])
    return ExperimentConfig(**d)


class RunDirectory:
    """Persistent layout of one iterative-projection run."""

    def __init__(self, path):
        self.path = Path(path)
        self.checkpoints = self.path / "checkpoints"
        self.projections = self.path / "projections"
        self.working = self.path / "working"

    def create(self) -> None:
        for d in (self.path, self.checkpoints, self.projections, self.working):
            d.mkdir(parents=True, exist_ok=True)

    def write_manifest(self, cfg: ExperimentConfig, completed: int, status: str,
                       started: float, with_test: bool) -> None:
        manifest = {
            "format_version": MANIFEST_VERSION,
            "tool_version": __version__,
            "config": config_to_dict(cfg),
            "completed_iterations": completed,
            "status": status,
            "with_test": with_test,
            "started_at": started,
            "updated_at": time.time(),
        }
        atomic_write_text(self.path / "manifest.json", json.dumps(manifest, indent=2) + "\n")

    def read_manifest(self) -> dict:
        path = self.path / "manifest.json"
        if not path.exists():
            raise ExperimentError(f"no manifest in {self.path}")
        try:
            manifest = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ExperimentError(f"corrupt manifest in {self.path}: {e}") from e
        if manifest.get("format_version") != MANIFEST_VERSION:
            raise ExperimentError(f"manifest format version {manifest.get('format_version')} "
                                  f"!= supported {MANIFEST_VERSION}")
        return manifest

    def save_iteration(self, k: int, net: MlpNetwork, working: Dataset, results) -> None:
        save_checkpoint(net, self.checkpoints / f"iter_{k}.blab")
        export_projection_csv(results, working.labels, self.projections / f"iter_{k}.csv")
        export_csv(working, self.working / f"iter_{k}.csv")

    def write_records(self, records) -> None:
        atomic_write_text(self.path / "records.csv", records_to_csv(records))


def _iterate(cfg: ExperimentConfig, data: Dataset, records: list[IterationRecord],
             start_iter: int, test_data: Dataset | None, run_dir: RunDirectory | None,
             started: float, stop_after: int | None) -> list[IterationRecord]:
    for k in range(start_iter, cfg.iterations + 1):
        seed_k = derive_seed(cfg.master_seed, SEED_ITER, k)
        net, report = _train_fresh(cfg.dims, data, cfg.train, seed_k)
        if report.stopped_reason != "criterion_met":
            if run_dir:
                run_dir.write_records(records)
                run_dir.write_manifest(cfg, k - 1, "aborted_training", started, test_data is not None)
            raise ExperimentError(f"iteration {k}: training hit the epoch cap "
                                  f"(accuracy {report.final_train_accuracy:.3f})")

        projected, results = project_dataset(net, data, cfg.projector)
        unconverged = sum(not r.converged for r in results)
        if unconverged > cfg.unconverged_abort_fraction * len(data):
            if run_dir:
                run_dir.write_records(records)
                run_dir.write_manifest(cfg, k - 1, "aborted_projection", started, test_data is not None)
            raise ExperimentError(f"iteration {k}: {unconverged}/{len(data)} projections "
                                  "did not converge")

        # unconverged samples did not move, so they contribute zero norm
        mean_norm = float(np.mean([r.distance if r.converged else 0.0 for r in results]))
        data = projected
        records.append(IterationRecord(
            iteration=k,
            mean_nn_distance=nearest_opposite_mean_distance(data),
            mean_projection_norm=mean_norm,
            train_accuracy=report.final_train_accuracy,
            test_accuracy=accuracy(net, test_data) if test_data is not None else None,
            unconverged_count=unconverged,
            epochs_run=report.epochs_run,
        ))
        if run_dir:
            run_dir.save_iteration(k, net, data, results)
            run_dir.write_records(records)
            done = k == cfg.iterations
            run_dir.write_manifest(cfg, k, "finished" if done else "running",
                                   started, test_data is not None)
        if stop_after is not None and k >= stop_after:
            break
    return records


def run_iterative_projection(cfg: ExperimentConfig, out_dir=None,
                             test_data: Dataset | None = None,
                             stop_after: int | None = None) -> list[IterationRecord]:
    """Iterative projection: train a fresh-seeded network, replace the
    working set with its boundary projections, repeat. Record 0 describes
    the raw working set; identical configs replay identically."""
    cfg.validate()
    data = build_dataset(cfg.dataset)
    if not data.both_classes_present():
        raise ExperimentError("dataset must contain both classes")

    run_dir = None
    started = time.time()
    if out_dir is not None:
        run_dir = RunDirectory(out_dir)
        run_dir.create()
        run_dir.write_manifest(cfg, 0, "running", started, test_data is not None)

    records = [IterationRecord(0, nearest_opposite_mean_distance(data), 0.0,
                               None, None, 0, 0)]
    if run_dir:
        export_csv(data, run_dir.working / "iter_0.csv")
        run_dir.write_records(records)
    return _iterate(cfg, data, records, 1, test_data, run_dir, started, stop_after)


def checkpoint_resume(run_dir, test_data: Dataset | None = None) -> list[IterationRecord]:
    """Continue an interrupted run from its last completed iteration.

    Derived seeds are positional, so the resumed records match an
    uninterrupted run exactly. Resuming a finished run is a no-op."""
    rd = RunDirectory(run_dir)
    manifest = rd.read_manifest()
    cfg = config_from_dict(manifest["config"])
    completed = manifest["completed_iterations"]
    records = records_from_csv((rd.path / "records.csv").read_text())
    if manifest["status"] == "finished" or completed >= cfg.iterations:
        return records
    if manifest["with_test"] and test_data is None:
        raise ExperimentError("run tracked test accuracy; pass the same test set to resume")
    data = import_csv(rd.working / f"iter_{completed}.csv")
    records = records[:completed + 1]
    return _iterate(cfg, data, records, completed + 1, test_data, rd, time.time(), None)


def run_generalization_tracking(cfg: ExperimentConfig, out_dir=None) -> list[IterationRecord]:
    """Iterative projection with per-iteration accuracy on an untouched test split."""
    cfg.validate()
    full = build_dataset(cfg.dataset)
    train_part, test_part = stratified_split(full, cfg.test_fraction,
                                             derive_seed(cfg.master_seed, SEED_SPLIT))
    if len(test_part) == 0 or not test_part.both_classes_present():
        raise ExperimentError("test split is empty or single-class")
    return _track_on(cfg, train_part, test_part, out_dir)


def _track_on(cfg: ExperimentConfig, train_part: Dataset, test_part: Dataset,
              out_dir) -> list[IterationRecord]:
    run_dir = None
    started = time.time()
    if out_dir is not None:
        run_dir = RunDirectory(out_dir)
        run_dir.create()
        run_dir.write_manifest(cfg, 0, "running", started, True)
    records = [IterationRecord(0, nearest_opposite_mean_distance(train_part), 0.0,
                               None, None, 0, 0)]
    if run_dir:
        export_csv(train_part, run_dir.working / "iter_0.csv")
        run_dir.write_records(records)
    return _iterate(cfg, train_part, records, 1, test_part, run_dir, started, None)


def _fooling_rate(net: MlpNetwork, points: np.ndarray, labels: np.ndarray) -> float:
    m = margin_batch(net, points)
    wrong = np.where(labels == 1, m <= 0, m >= 0)
    return float(wrong.mean())


def run_transfer(cfg: ExperimentConfig, mode: str, kappa: float | None = None) -> TransferReport:
    """Craft overshoot adversarials against a source network and measure how
    often an independently trained target misclassifies them, against an
    equal-norm random-direction baseline."""
    cfg.validate()
    if mode not in ("cross_model", "cross_training_set"):
        raise ValueError(f"unknown transfer mode {mode!r}")
    kappa = cfg.kappa if kappa is None else kappa

    full = build_dataset(cfg.dataset)
    pool, eval_data = stratified_split(full, cfg.eval_fraction,
                                       derive_seed(cfg.master_seed, SEED_SPLIT))
    if mode == "cross_training_set":
        data_a, data_b = stratified_split(pool, 0.5, derive_seed(cfg.master_seed, SEED_SPLIT, 1))
        dims_a = dims_b = cfg.dims
    else:
        data_a = data_b = pool
        dims_a = cfg.dims
        dims_b = cfg.dims_b or cfg.dims
        if dims_b == dims_a and cfg.dims_b is None:
            raise ValueError("cross_model transfer needs a second architecture (dims_b)")

    net_a, _ = _train_fresh(dims_a, data_a, cfg.train, derive_seed(cfg.master_seed, SEED_TRIAL, 0))
    net_b, _ = _train_fresh(dims_b, data_b, cfg.train, derive_seed(cfg.master_seed, SEED_TRIAL, 1))
    valid = accuracy(net_b, eval_data) >= 0.90 and accuracy(net_a, eval_data) >= 0.90

    m_a = margin_batch(net_a, eval_data.samples)
    m_b = margin_batch(net_b, eval_data.samples)
    ok = (np.where(eval_data.labels == 1, m_a > 0, m_a < 0)
          & np.where(eval_data.labels == 1, m_b > 0, m_b < 0))
    xs = eval_data.samples[ok]
    labels = eval_data.labels[ok]

    rng = make_rng(derive_seed(cfg.master_seed, SEED_BASELINE), stream=0)
    adv, base, kept = [], [], []
    for x, lab in zip(xs, labels):
        res = project_to_boundary(net_a, x, int(lab), data_a, cfg.projector)
        if not res.converged:
            continue
        a = adversarial_overshoot(net_a, res, kappa)
        direction = rng.standard_normal(len(x))
        direction /= np.linalg.norm(direction)
        b = x + np.linalg.norm(a - x) * direction
        adv.append(a)
        base.append(b)
        kept.append(lab)
    if not adv:
        return TransferReport(0.0, 0.0, 0.0, kappa, mode, valid=False, n_samples=0)
    adv = np.array(adv)
    base = np.array(base)
    kept = np.array(kept)

    return TransferReport(
        fooling_rate_transfer=_fooling_rate(net_b, adv, kept),
        fooling_rate_source=_fooling_rate(net_a, adv, kept),
        fooling_rate_random_baseline=_fooling_rate(net_b, base, kept),
        kappa=kappa, mode=mode, valid=valid, n_samples=len(kept))


def _unit_projection_signature(net: MlpNetwork, layout_data: Dataset,
                               opts: ProjectorOptions) -> tuple[np.ndarray, list[ProjectionResult]] | None:
    _, results = project_dataset(net, layout_data, opts)
    units = []
    for r in results:
        if not r.converged or r.distance == 0:
            return None
        units.append(r.vector / r.distance)
    return np.array(units), results


def run_symmetry_experiment(layout_kind: str, trials: int, master_seed: int = 0,
                            dims=(2, 16, 2), perturb: float = 0.0, kappa: float = 0.1,
                            cluster_cos: float = 0.3,
                            train_cfg: TrainConfig | None = None,
                            opts: ProjectorOptions | None = None) -> dict:
    """Train many independently seeded networks on a (possibly perturbed)
    symmetric layout, cluster their boundary orientations by the projection
    directions of the layout points, and compare adversarial transfer within
    vs across clusters."""
    layout = gen_symmetric_layout(layout_kind, perturb)
    data = layout.dataset
    train_cfg = train_cfg or TrainConfig(optimizer="adam", learning_rate=1e-2,
                                         max_epochs=5000, batch_size=len(data),
                                         accuracy_target=0.99)
    opts = opts or ProjectorOptions()

    sigs, nets, all_results = [], [], []
    failures = 0
    for t in range(trials):
        seed_t = derive_seed(master_seed, SEED_TRIAL, t)
        net = init_network(list(dims), seed_t)
        try:
            report = train(net, data, replace(train_cfg, seed=seed_t))
        except TrainingDivergence:
            failures += 1
            continue
        if report.stopped_reason != "criterion_met":
            failures += 1
            continue
        sig = _unit_projection_signature(net, data, opts)
        if sig is None:
            failures += 1
            continue
        sigs.append(sig[0])
        all_results.append(sig[1])
        nets.append(net)

    # greedy clustering on mean per-point cosine between signatures
    clusters: list[list[int]] = []
    reps: list[np.ndarray] = []
    assignment = []
    for i, sig in enumerate(sigs):
        placed = False
        for c, rep in enumerate(reps):
            if float((sig * rep).sum(axis=1).mean()) >= cluster_cos:
                clusters[c].append(i)
                assignment.append(c)
                placed = True
                break
        if not placed:
            reps.append(sig)
            clusters.append([i])
            assignment.append(len(clusters) - 1)

    within_rates, cross_rates = [], []
    for i in range(len(nets)):
        adv = np.array([adversarial_overshoot(nets[i], r, kappa) for r in all_results[i]])
        for j in range(len(nets)):
            if i == j:
                continue
            rate = _fooling_rate(nets[j], adv, data.labels)
            (within_rates if assignment[i] == assignment[j] else cross_rates).append(rate)

    sizes = sorted((len(c) for c in clusters), reverse=True)
    return {
        "layout": layout_kind,
        "perturb": perturb,
        "trials": trials,
        "failed_trials": failures,
        "cluster_count": len(clusters),
        "cluster_sizes": sizes,
        "dominant_fraction": (sizes[0] / len(sigs)) if sigs else 0.0,
        "within_cluster_transfer": float(np.mean(within_rates)) if within_rates else None,
        "cross_cluster_transfer": float(np.mean(cross_rates)) if cross_rates else None,
    }
