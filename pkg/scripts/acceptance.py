"""
Acceptance run on the canonical planted configuration.
Prints one PASS/FAIL row per criterion; exit status 1 if any fails.

    python -m scripts.acceptance [--threads N] [--work-dir DIR]
"""
import argparse
import itertools
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from sklearn.metrics import adjusted_rand_score

from refinery.core.config import settings
from refinery.core.logging import configure_logging
from refinery.core.parallel import derive_rng
from refinery.models.clustering import ClusterAssignment, SimilarityMatrix
from refinery.models.dataset import FeatureMatrix, class_views
from refinery.models.hierarchy import Hierarchy
from refinery.models.linear import LossKind
from refinery.repositories.finf import decode_features, encode_features
from refinery.schemas.bucbam import BucbamConfig, MergeMode, PruneStrategy
from refinery.schemas.pipeline import PipelineConfig
from refinery.schemas.splitting import SplitMethod
from refinery.schemas.synth import SynthSpec
from refinery.services.bucbam_service import bucbam_split, merge_clusters, prune_small_clusters
from refinery.services.eval_service import average_precision
from refinery.services.fusion_service import fuse
from refinery.services.hierarchy_service import add_finer_level
from refinery.services.kmeans_service import kmeans_fit
from refinery.services.linear_service import binary_gradient, binary_objective, train_binary
from refinery.services.pipeline_service import PipelineService
from refinery.services.probe_service import gradient_check, init_probe
from refinery.services.splitter_service import split_kmeans
from refinery.services.stats_service import pca_top2
from refinery.services.synth_service import generate_source, planted_ari

CANONICAL = SynthSpec(n_classes=10, subconcepts_per_class=3, samples_per_subconcept=60, dim=16,
                      separation=6.0, seed=42)


def planted_recovery():
    """BUCBAM-SS defaults recover the planted subconcepts."""
    dataset, truth = generate_source(CANONICAL)
    start = time.perf_counter()
    result = bucbam_split(dataset, BucbamConfig(seed=42), threads=1)
    seconds = time.perf_counter() - start
    _, finer = add_finer_level(Hierarchy.root(dataset.class_count), result.assignments, dataset.labels)
    recovery = planted_ari(finer, truth)
    ok = recovery.exact_classes >= 9 and recovery.global_ari >= 0.9 and seconds <= 60
    return ok, f"K^M=3 in {recovery.exact_classes}/10 classes, ARI {recovery.global_ari:.4f}, {seconds:.1f}s"


def k_insensitivity():
    """Identical final partitions for K in {20, 26, 32}."""
    dataset, _ = generate_source(CANONICAL)
    labelings = []
    for k in (20, 26, 32):
        result = bucbam_split(dataset, BucbamConfig(k_initial=k, seed=42))
        _, finer = add_finer_level(Hierarchy.root(dataset.class_count), result.assignments, dataset.labels)
        labelings.append(finer.labels)
    scores = [adjusted_rand_score(a, b) for a, b in itertools.combinations(labelings, 2)]
    return all(s == 1.0 for s in scores), "pairwise ARI " + ", ".join(f"{s:.4f}" for s in scores)


def merge_algebra():
    """K^M(AS) <= K^M(SS) on random matrices; worked examples exact."""
    rng = derive_rng(4)
    violations = 0
    for _ in range(10_000):
        size = int(rng.integers(2, 17))
        matrix = SimilarityMatrix(0, rng.uniform(0.0, 1.0, size=(size, size)))
        if merge_clusters(matrix, MergeMode.AS, 0.8).k_merged > merge_clusters(matrix, MergeMode.SS, 0.8).k_merged:
            violations += 1
    first = merge_clusters(SimilarityMatrix(0, [[1, .9, .1], [.95, 1, .05], [.2, .1, 1]]), MergeMode.SS, 0.8)
    second = SimilarityMatrix(0, [[1, .85], [.5, 1]])
    examples = (
        first.components == ((0, 1), (2,))
        and merge_clusters(second, MergeMode.AS, 0.8, 0.4).components == ((0, 1),)
        and merge_clusters(second, MergeMode.SS, 0.8, 0.4).components == ((0,), (1,))
    )
    return violations == 0 and examples, f"{violations} violations, worked examples {'ok' if examples else 'WRONG'}"


def pruning_floor():
    """Every pruned cluster reaches S, or the class collapsed."""
    rng = derive_rng(5)
    violations = 0
    for trial in range(1_000):
        n = int(rng.integers(5, 120))
        k = int(rng.integers(1, min(n, 20) + 1))
        members = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        assignment = ClusterAssignment(0, np.arange(n), members)
        features = FeatureMatrix(rng.normal(size=(n, 3)))
        for strategy in PruneStrategy:
            pruned = prune_small_clusters(assignment, features, 15, strategy)
            if pruned.k > 1 and pruned.sizes.min() < 15:
                violations += 1
            elif pruned.k == 1 and n >= 15 and pruned.sizes[0] != n:
                violations += 1
    return violations == 0, f"{violations} violations over 1000 assignments x 2 strategies"


def _ap_oracle(scores, relevant) -> float:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    precisions = []
    for rank, item in enumerate(order, start=1):
        if relevant[item]:
            hits = sum(1 for j in order[:rank] if relevant[j])
            precisions.append(hits / rank)
    return math.fsum(precisions) / len(precisions)


def metric_oracle():
    """AP equals the rank-counting oracle exactly."""
    rng = derive_rng(6)
    mismatches = 0
    for _ in range(1_000):
        n = int(rng.integers(1, 40))
        scores = np.round(rng.uniform(size=n), 1)
        relevant = rng.uniform(size=n) < 0.4
        relevant[int(rng.integers(n))] = True
        if average_precision(scores, relevant) != _ap_oracle(scores.tolist(), relevant.tolist()):
            mismatches += 1
    worked = average_precision([0.9, 0.8, 0.7], [1, 0, 1])
    ok = mismatches == 0 and abs(worked - 5 / 6) <= 1e-12
    return ok, f"{mismatches} mismatches, worked example {worked!r}"


def gradient_correctness():
    """Analytic gradients against central differences."""
    rng = derive_rng(7)
    probe_worst = logistic_worst = 0.0
    for trial in range(100):
        d, h, c = (int(v) for v in rng.integers(2, 7, size=3))
        model = init_probe(d, h, c, seed=trial)
        x = rng.normal(size=(8, d))
        y = rng.integers(0, c, size=8)
        probe_worst = max(probe_worst, gradient_check(model, x, y, weight_decay=1e-3, seed=trial))

        w, b = rng.normal(size=d), float(rng.normal())
        xs, ys = rng.normal(size=(12, d)), rng.integers(0, 2, size=12)
        grad_w, grad_b = binary_gradient(w, b, xs, ys, LossKind.LOGISTIC, 1e-2)
        eps = 1e-6
        numeric = [
            (binary_objective(w + eps * e, b, xs, ys, LossKind.LOGISTIC, 1e-2)
             - binary_objective(w - eps * e, b, xs, ys, LossKind.LOGISTIC, 1e-2)) / (2 * eps)
            for e in np.eye(d)
        ]
        numeric.append((binary_objective(w, b + eps, xs, ys, LossKind.LOGISTIC, 1e-2)
                        - binary_objective(w, b - eps, xs, ys, LossKind.LOGISTIC, 1e-2)) / (2 * eps))
        analytic = [*grad_w, grad_b]
        for a, n in zip(analytic, numeric):
            logistic_worst = max(logistic_worst, abs(a - n) / max(1e-8, abs(a) + abs(n)))
    ok = probe_worst < 1e-4 and logistic_worst < 1e-6
    return ok, f"probe {probe_worst:.2e}, logistic {logistic_worst:.2e}"


def optimization_invariants():
    """Monotone k-means, exact PCA eigenpairs, logistic at the grid optimum."""
    rng = derive_rng(8)
    rises = 0
    for run in range(500):
        x = rng.normal(size=(int(rng.integers(10, 80)), 3))
        k = int(rng.integers(1, 8))
        history = np.array(kmeans_fit(FeatureMatrix(x), k, seed=run).inertia_history)
        rises += int(np.sum(np.diff(history) > 1e-9 * history[:-1] + 1e-12))

    x = rng.normal(size=(200, 6)) * np.array([3.0, 2.0, 1.0, 0.5, 0.3, 0.1])
    projection = pca_top2(FeatureMatrix(x))
    centered = x - x.mean(axis=0)
    covariance = centered.T @ centered / (x.shape[0] - 1)
    residual = max(
        float(np.linalg.norm(covariance @ projection.components[:, i] - projection.explained[i]
                             * projection.components[:, i]))
        for i in range(2)
    )

    gap = 0.0
    for toy in range(5):
        pos = rng.normal(1.0, 1.0, size=(30, 1))
        neg = rng.normal(-1.0, 1.0, size=(30, 1))
        model = train_binary(FeatureMatrix(pos), FeatureMatrix(neg), LossKind.LOGISTIC, l2=1e-2,
                             iters=5000, lr=1.0, standardize=False)
        xs = np.vstack([pos, neg])
        ys = np.r_[np.ones(30), np.zeros(30)]
        found = binary_objective(model.w, model.b, xs, ys, LossKind.LOGISTIC, 1e-2)
        grid = np.linspace(-4.0, 4.0, 401)
        best = min(binary_objective([w], b, xs, ys, LossKind.LOGISTIC, 1e-2) for w in grid for b in grid)
        gap = max(gap, found - best)
    ok = rises == 0 and residual <= 1e-6 and gap <= 1e-3
    return ok, f"{rises} inertia rises, PCA residual {residual:.1e}, logistic gap {gap:.1e}"


def structural_laws(run_a: Path, run_b: Path):
    """Fixed-K level growth, fused width, FINF bit-exactness, rerun identity."""
    dataset, _ = generate_source(CANONICAL)
    assignments = [
        split_kmeans(view, dataset.features.rows(view.sample_indices), 4, seed=view.class_id)
        for view in class_views(dataset)
    ]
    _, finer = add_finer_level(Hierarchy.root(dataset.class_count), assignments, dataset.labels)
    growth = finer.finer_class_count == 4 * dataset.class_count

    spe = FeatureMatrix(derive_rng(9).normal(size=(20, 64)))
    fine = FeatureMatrix(derive_rng(10).normal(size=(20, 64)))
    width = fuse(spe, fine).dim == 128

    values = derive_rng(11).normal(size=(7, 5)).astype(np.float32).astype(np.float64)
    raw = encode_features(values)
    finf = encode_features(decode_features(raw)) == raw and np.array_equal(decode_features(raw).values, values)

    identical = all(
        (run_a / "reports" / name).read_bytes() == (run_b / "reports" / name).read_bytes()
        for name in ("eval_spenet.json", "eval_finet.json", "eval_spefinet.json")
    )
    ok = growth and width and finf and identical
    return ok, f"growth {growth}, fused width {width}, FINF {finf}, rerun identical {identical}"


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the acceptance criteria")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--work-dir", type=Path, default=None, help="Keep run directories here")
    args = parser.parse_args()
    configure_logging("WARNING")
    if args.threads:
        settings.THREADS = args.threads

    work = args.work_dir or Path(tempfile.mkdtemp(prefix="refinery-acceptance-"))
    config = PipelineConfig.default_synthetic(seed=42)
    service = PipelineService(config, run_dir=work / "run_a")
    result = service.run()
    PipelineService(config, run_dir=work / "run_b").run()
    reports = result.refinement.reports

    def universality():
        """SpeFiNet >= FiNet >= SpeNet; SpeFiNet ahead of SpeNet by 2 points on the subconcept task."""
        spe, fin, both = (reports[n] for n in ("spenet", "finet", "spefinet"))
        ordered = both.average >= fin.average >= spe.average
        strict = both.score_of("subconcept") - spe.score_of("subconcept") >= 0.02
        detail = f"averages {spe.average:.4f} / {fin.average:.4f} / {both.average:.4f}"
        return ordered and strict, detail + ("" if strict else " (subconcept gap < 2 points)")

    def baseline_degradation():
        """Tiny-bandwidth mean-shift over-splits and scores below BUCBAM-SS."""
        splitter = config.splitter.model_copy(update={"method": SplitMethod.MEANSHIFT, "bandwidth": 1e-3})
        meanshift = config.model_copy(update={"splitter": splitter})
        refinement = service.refine(result.source, meanshift, work / "run_a" / "meanshift")
        ratio = float(np.mean(refinement.finer.k_per_class() / result.source.dataset.class_counts()))
        lower = refinement.reports["spefinet"].average < reports["spefinet"].average
        return ratio >= 0.9 and lower, f"mean K_i/N_i {ratio:.3f}, spefinet {refinement.reports['spefinet'].average:.4f}"

    checks = [
        ("1 planted recovery", planted_recovery),
        ("2 K-insensitivity", k_insensitivity),
        ("3 universality ordering", universality),
        ("4 merge-rule algebra", merge_algebra),
        ("5 pruning floor", pruning_floor),
        ("6 metric oracle", metric_oracle),
        ("7 gradient correctness", gradient_correctness),
        ("8 optimization invariants", optimization_invariants),
        ("9 structural laws", lambda: structural_laws(work / "run_a", work / "run_b")),
        ("10 baseline degradation", baseline_degradation),
    ]
    failures = 0
    print(f"{'criterion':<28} {'result':<6} detail")
    for name, check in checks:
        try:
            ok, detail = check()
        except Exception as exc:
            ok, detail = False, f"error: {exc}"
        failures += not ok
        print(f"{name:<28} {'PASS' if ok else 'FAIL':<6} {detail}")
    print(f"\nrun directories in {work}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
