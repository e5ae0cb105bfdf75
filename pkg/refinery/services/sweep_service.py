"""
Multi-run studies sharing one SpeNet: the K sweep and the splitting-method
comparison table.
"""
import logging
import re
from typing import Optional, Sequence

from refinery.core.errors import ConfigError
from refinery.repositories.report_repository import save_table
from refinery.schemas.bucbam import MergeMode
from refinery.schemas.pipeline import PipelineConfig
from refinery.schemas.report import ComparisonRow, SweepRow
from refinery.schemas.splitting import SplitMethod
from refinery.services.pipeline_service import PipelineService

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_KS = (2, 4, 8, 16)
DEFAULT_METHODS = (
    "random-K16",
    "kmeans-K16",
    "spectral-K16",
    "affinity",
    "meanshift",
    "bucbam-as",
    "bucbam-ss",
)

_FIXED_K = re.compile(r"^(random|kmeans|spectral)-K(\d+)$")


def method_config(config: PipelineConfig, method: str) -> PipelineConfig:
    """
    Config running the named method: `<random|kmeans|spectral>-K<k>`,
    `affinity`, `meanshift`, or `bucbam-<as|ss>`.
    """
    name = method.strip()
    match = _FIXED_K.match(name)
    if match:
        k = int(match.group(2))
        if k < 1:
            raise ConfigError(f"{method}: K must be >= 1")
        splitter = config.splitter.model_copy(update={"method": SplitMethod(match.group(1)), "k": k})
        return config.model_copy(update={"splitter": splitter})
    if name in (SplitMethod.AFFINITY.value, SplitMethod.MEANSHIFT.value):
        splitter = config.splitter.model_copy(update={"method": SplitMethod(name)})
        return config.model_copy(update={"splitter": splitter})
    if name.startswith("bucbam"):
        mode = name.partition("-")[2] or config.bucbam.merge_mode.value
        try:
            bucbam = config.bucbam.model_copy(update={"merge_mode": MergeMode(mode)})
        except ValueError:
            raise ConfigError(f"unknown merge mode in {method!r}") from None
        splitter = config.splitter.model_copy(update={"method": SplitMethod.BUCBAM})
        return config.model_copy(update={"splitter": splitter, "bucbam": bucbam})
    raise ConfigError(f"unknown splitting method {method!r}")


def k_sweep(
    config: PipelineConfig,
    ks: Sequence[int] = DEFAULT_SWEEP_KS,
    method: SplitMethod = SplitMethod.KMEANS,
    threads: Optional[int] = None,
) -> list[SweepRow]:
    """
    FiNet and SpeFiNet averages for each K of a fixed-K splitter.

    Runs land in <output_dir>/k<K>/; the table goes to sweep.csv.
    """
    if not ks:
        raise ConfigError("K sweep needs at least one K")
    if any(k < 1 for k in ks):
        raise ConfigError(f"K values must be >= 1, got {list(ks)}")
    if method in (SplitMethod.AFFINITY, SplitMethod.MEANSHIFT, SplitMethod.BUCBAM):
        raise ConfigError(f"{method.value} does not take a fixed K")

    service = PipelineService(config, threads=threads)
    source = service.prepare()
    rows = []
    for k in ks:
        run_config = method_config(config, f"{method.value}-K{k}")
        refinement = service.refine(source, run_config, service.root / f"k{k}")
        rows.append(SweepRow(
            k=k,
            spenet_average=source.spe_report.average,
            finet_average=refinement.reports["finet"].average,
            spefinet_average=refinement.reports["spefinet"].average,
        ))
        logger.info("K=%d: finet %.4f, spefinet %.4f", k, rows[-1].finet_average, rows[-1].spefinet_average)

    save_table(
        service.root / "sweep.csv",
        ("k", "spenet_average", "finet_average", "spefinet_average"),
        ((r.k, r.spenet_average, r.finet_average, r.spefinet_average) for r in rows),
        comments=(f"splitter: {method.value}-K",),
    )
    service.write_manifest()
    return rows


def compare_splitters(
    config: PipelineConfig,
    methods: Sequence[str] = DEFAULT_METHODS,
    threads: Optional[int] = None,
) -> list[ComparisonRow]:
    """FiNet / SpeFiNet averages per splitting method, written to compare.csv."""
    configs = [(m, method_config(config, m)) for m in methods]
    service = PipelineService(config, threads=threads)
    source = service.prepare()
    rows = []
    for name, run_config in configs:
        refinement = service.refine(source, run_config, service.root / name)
        rows.append(ComparisonRow(
            method=name,
            finet_average=refinement.reports["finet"].average,
            spefinet_average=refinement.reports["spefinet"].average,
            mean_k=refinement.mean_k,
        ))

    save_table(
        service.root / "compare.csv",
        ("method", "finet_average", "spefinet_average", "mean_k"),
        ((r.method, r.finet_average, r.spefinet_average, r.mean_k) for r in rows),
        comments=(f"spenet average: {source.spe_report.average!r}",),
    )
    service.write_manifest()
    return rows
