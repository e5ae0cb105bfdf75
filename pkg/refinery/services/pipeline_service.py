"""
End-to-end run: SpeNet probe, split, finer level, FiNet probe, fusion,
universality evaluation and cluster diagnostics, with every stage's artifacts
written under the run directory.
"""
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

from refinery.core.config import settings
from refinery.core.errors import RefineryError, ShapeError, StageError
from refinery.core.parallel import derive_int
from refinery.models.clustering import ClusterAssignment
from refinery.models.dataset import FeatureMatrix, LabeledDataset
from refinery.models.hierarchy import FinerAssignment, Hierarchy
from refinery.models.probe import ProbeModel
from refinery.models.tasks import PlantedTruth, TargetTask
from refinery.repositories.finf import load_features, save_features
from refinery.repositories.hierarchy_repository import save_finer_assignment, save_hierarchy
from refinery.repositories.labels import load_class_names, load_labels
from refinery.repositories.model_repository import save_probe
from refinery.repositories.report_repository import save_report, save_table
from refinery.repositories.task_repository import TaskRepository
from refinery.schemas.pipeline import PipelineConfig
from refinery.schemas.report import EvalReport, RecoveryReport, RunManifest, StageRecord
from refinery.schemas.splitting import SplitMethod
from refinery.schemas.training import ProbeConfig
from refinery.services.bucbam_service import BucbamResult, bucbam_split, export_bucbam
from refinery.services.eval_service import evaluate_representation
from refinery.services.fusion_service import FusedExtractor, ProbeExtractor, fuse
from refinery.services.hierarchy_service import add_finer_level, relabel_dataset
from refinery.services.probe_service import extract_features, train_probe
from refinery.services.splitter_service import split_dataset
from refinery.services.stats_service import class_projections, compute_cluster_stats, export_stats
from refinery.services.synth_service import generate_source, generate_targets, planted_ari, save_synth_artifacts

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# stage keys for seeds derived from the master seed
SPE_PROBE_STREAM = 1
SPLIT_STREAM = 2
BUCBAM_STREAM = 3
FINE_PROBE_STREAM = 4

REPRESENTATIONS = ("spenet", "finet", "spefinet")


@dataclass
class SourceArtifacts:
    """Outputs of the stages shared by every splitting method."""
    dataset: LabeledDataset
    tasks: list[TargetTask]
    spenet: ProbeModel
    spe_features: FeatureMatrix
    spe_report: EvalReport
    truth: Optional[PlantedTruth] = None
    class_names: Optional[list[str]] = None


@dataclass
class RefinementArtifacts:
    """Outputs of one split -> FiNet -> SpeFiNet chain."""
    method: str
    assignments: list[ClusterAssignment]
    hierarchy: Hierarchy
    finer: FinerAssignment
    finet: ProbeModel
    reports: dict[str, EvalReport]
    recovery: Optional[RecoveryReport] = None
    bucbam: Optional[BucbamResult] = None

    @property
    def mean_k(self) -> float:
        return float(self.finer.k_per_class().mean())


@dataclass
class PipelineResult:
    run_dir: Path
    source: SourceArtifacts
    refinement: RefinementArtifacts
    manifest: Optional[RunManifest] = field(default=None, repr=False)


def _reseeded(probe: ProbeConfig, master: int, stream: int) -> ProbeConfig:
    return probe.model_copy(update={"seed": derive_int(master, stream, probe.seed)})


class PipelineService:
    """
    Runs the refinement stages in order and records each one.

    A failing stage is recorded in the manifest, its partial artifacts are
    kept, and the error is re-raised as StageError naming the stage.
    """

    def __init__(self, config: PipelineConfig, run_dir: Optional[PathLike] = None, threads: Optional[int] = None):
        self.config = config
        self.root = Path(run_dir if run_dir is not None else config.output_dir)
        self.threads = threads or settings.worker_count
        self.stages: list[StageRecord] = []
        self.reports: dict[str, str] = {}
        self.failed_stage: Optional[str] = None

    @contextmanager
    def _stage(self, name: str) -> Iterator[list[Path]]:
        """Time a stage and collect the paths it writes."""
        artifacts: list[Path] = []
        start = time.perf_counter()
        logger.info("stage %s: start", name)
        try:
            yield artifacts
        except Exception as exc:
            self.failed_stage = name
            logger.error("stage %s failed: %s", name, exc)
            self.write_manifest()
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc
        seconds = time.perf_counter() - start
        self.stages.append(StageRecord(name=name, seconds=seconds, artifacts=[self._relative(p) for p in artifacts]))
        logger.info("stage %s: done in %.2fs", name, seconds)

    def _relative(self, path: Path) -> str:
        try:
            return Path(path).relative_to(self.root).as_posix()
        except ValueError:
            return Path(path).as_posix()

    def _report_echo(self, config: PipelineConfig) -> dict:
        return {"config_hash": config.config_hash(), "seed": config.seed}

    # ------------------------------------------------------------------
    # Shared stages
    # ------------------------------------------------------------------

    def _load_data(self) -> tuple[LabeledDataset, list[TargetTask], Optional[PlantedTruth], Optional[list[str]]]:
        config = self.config
        data_dir = self.root / "data"
        with self._stage("data") as artifacts:
            if config.synth is not None:
                dataset, truth = generate_source(config.synth)
                tasks = generate_targets(truth, config.synth, config.eval.kinds)
                artifacts.extend(save_synth_artifacts(data_dir, dataset, truth, tasks).values())
                return dataset, tasks, truth, None

            features = load_features(config.data.features)
            labels, count = load_labels(config.data.labels, features.n_samples)
            names = load_class_names(config.data.names, count) if config.data.names else None
            dataset = LabeledDataset(features, labels, count)
            tasks = TaskRepository(config.eval.tasks).load_all()
            for task in tasks:
                if task.train.dim != dataset.dim:
                    raise ShapeError(f"task {task.name} has dim {task.train.dim}, source data has dim {dataset.dim}")
            logger.info("loaded %d samples in %d classes, %d target tasks", dataset.n_samples, count, len(tasks))
            return dataset, tasks, None, names

    def prepare(self) -> SourceArtifacts:
        """Data, SpeNet probe, its features and its evaluation."""
        config = self.config
        dataset, tasks, truth, names = self._load_data()

        with self._stage("spenet") as artifacts:
            probe_config = _reseeded(config.spe_probe, config.seed, SPE_PROBE_STREAM)
            spenet = train_probe(dataset, probe_config.hidden_dim, probe_config.train_config())
            spe_features = extract_features(spenet, dataset.features)
            artifacts.append(save_probe(spenet, self.root / "spenet.bin"))
            artifacts.append(save_features(spe_features, self.root / "spe_features.finf"))

        with self._stage("eval_spenet") as artifacts:
            spe_report = evaluate_representation(
                ProbeExtractor(spenet, "spenet"), tasks, config.eval.linear_probe,
                config_echo=self._report_echo(config), threads=self.threads,
            )
            path = save_report(spe_report, self.root / "reports" / "eval_spenet.json")
            artifacts.append(path)
            self.reports["spenet"] = self._relative(path)

        return SourceArtifacts(dataset, tasks, spenet, spe_features, spe_report, truth, names)

    # ------------------------------------------------------------------
    # Per-method stages
    # ------------------------------------------------------------------

    def _split(self, source: SourceArtifacts, config: PipelineConfig, out: Path,
               prefix: str) -> tuple[str, list[ClusterAssignment], Optional[BucbamResult]]:
        with self._stage(f"{prefix}split") as artifacts:
            represented = source.dataset.with_features(source.spe_features)
            if config.splitter.method is SplitMethod.BUCBAM:
                bucbam_config = config.bucbam.model_copy(
                    update={"seed": derive_int(config.seed, BUCBAM_STREAM, config.bucbam.seed)}
                )
                result = bucbam_split(represented, bucbam_config, self.threads)
                artifacts.extend(export_bucbam(result, out / "bucbam"))
                return config.bucbam.label, result.assignments, result

            seed = derive_int(config.seed, SPLIT_STREAM)
            assignments = split_dataset(source.dataset, source.spe_features, config.splitter, seed, self.threads)
            return config.splitter.label, assignments, None

    def refine(self, source: SourceArtifacts, config: Optional[PipelineConfig] = None,
               out: Optional[PathLike] = None) -> RefinementArtifacts:
        """
        Split with the configured method, build the finer level, train FiNet,
        fuse and evaluate FiNet and SpeFiNet.
        """
        config = config or self.config
        out = Path(out) if out is not None else self.root
        prefix = "" if out == self.root else f"{self._relative(out)}/"
        method, assignments, bucbam = self._split(source, config, out, prefix)

        with self._stage(f"{prefix}hierarchy") as artifacts:
            root = Hierarchy.root(source.dataset.class_count)
            hierarchy, finer = add_finer_level(root, assignments, source.dataset.labels)
            fine_dataset = relabel_dataset(source.dataset, finer)
            artifacts.append(save_hierarchy(hierarchy, out / "hierarchy.json"))
            artifacts.append(save_finer_assignment(finer, out / "finer_assignment.csv"))
            recovery = None
            if source.truth is not None:
                recovery = planted_ari(finer, source.truth)
                artifacts.append(save_report(recovery, out / "recovery.json"))

        with self._stage(f"{prefix}finet") as artifacts:
            probe_config = _reseeded(config.fine_probe, config.seed, FINE_PROBE_STREAM)
            finet = train_probe(fine_dataset, probe_config.hidden_dim, probe_config.train_config())
            fine_features = extract_features(finet, source.dataset.features)
            artifacts.append(save_probe(finet, out / "finet.bin"))
            artifacts.append(save_features(fine_features, out / "fine_features.finf"))

        with self._stage(f"{prefix}fuse") as artifacts:
            fused = fuse(source.spe_features, fine_features)
            artifacts.append(save_features(fused.matrix, out / "spefine_features.finf"))

        reports = {"spenet": source.spe_report}
        with self._stage(f"{prefix}eval") as artifacts:
            fine_extractor = ProbeExtractor(finet, "finet")
            extractors = {
                "finet": fine_extractor,
                "spefinet": FusedExtractor(ProbeExtractor(source.spenet, "spenet"), fine_extractor),
            }
            for name, extractor in extractors.items():
                reports[name] = evaluate_representation(
                    extractor, source.tasks, config.eval.linear_probe, splitter=method,
                    config_echo=self._report_echo(config), threads=self.threads,
                )
                path = save_report(reports[name], out / "reports" / f"eval_{name}.json")
                artifacts.append(path)
                self.reports[f"{prefix}{name}"] = self._relative(path)
            artifacts.append(self._save_breakdown(reports, out / "reports" / "breakdown.csv"))

        if self.config.export_stats:
            with self._stage(f"{prefix}stats") as artifacts:
                artifacts.extend(self._export_stats(assignments, source.spe_features, out / "stats"))

        return RefinementArtifacts(method, assignments, hierarchy, finer, finet, reports, recovery, bucbam)

    def _save_breakdown(self, reports: dict[str, EvalReport], path: Path) -> Path:
        tasks = reports["spenet"].tasks
        rows = [
            (task.name, task.metric.value, *(reports[r].score_of(task.name) for r in REPRESENTATIONS))
            for task in tasks
        ]
        rows.append(("average", "mixed", *(reports[r].average for r in REPRESENTATIONS)))
        return save_table(path, ("task", "metric", *REPRESENTATIONS), rows)

    def _export_stats(self, assignments: list[ClusterAssignment], features: FeatureMatrix, out: Path) -> list[Path]:
        stats = compute_cluster_stats(assignments, features)
        return export_stats(stats, class_projections(assignments, features), out)

    # ------------------------------------------------------------------

    def write_manifest(self, config: Optional[PipelineConfig] = None) -> RunManifest:
        config = config or self.config
        manifest = RunManifest(
            app=settings.APP_NAME,
            version=settings.APP_VERSION,
            config=config.echo(),
            config_hash=config.config_hash(),
            stages=list(self.stages),
            failed_stage=self.failed_stage,
            reports=dict(self.reports),
        )
        save_report(manifest, self.root / "manifest.json")
        return manifest

    def run(self) -> PipelineResult:
        """All stages for the configured splitter, then the manifest."""
        self.root.mkdir(parents=True, exist_ok=True)
        source = self.prepare()
        refinement = self.refine(source)
        manifest = self.write_manifest()
        finet, spefinet = refinement.reports["finet"], refinement.reports["spefinet"]
        logger.info(
            "run %s: spenet %.4f, finet %.4f, spefinet %.4f (%s)",
            self.root, source.spe_report.average, finet.average, spefinet.average, refinement.method,
        )
        return PipelineResult(self.root, source, refinement, manifest)


def run_pipeline(config: PipelineConfig, threads: Optional[int] = None) -> Path:
    """Execute a full run and return its directory."""
    try:
        return PipelineService(config, threads=threads).run().run_dir
    except StageError:
        raise
    except RefineryError as exc:
        raise StageError("manifest", exc) from exc
