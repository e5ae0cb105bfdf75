"""
Refinement, training, evaluation and orchestration services.
"""
from refinery.services.bucbam_service import BucbamResult, bucbam_split
from refinery.services.eval_service import evaluate_representation
from refinery.services.pipeline_service import PipelineService, run_pipeline
from refinery.services.splitter_service import split_dataset
from refinery.services.sweep_service import compare_splitters, k_sweep
from refinery.services.synth_service import generate_source, generate_targets, planted_ari

__all__ = [
    "BucbamResult",
    "PipelineService",
    "bucbam_split",
    "compare_splitters",
    "evaluate_representation",
    "generate_source",
    "generate_targets",
    "k_sweep",
    "planted_ari",
    "run_pipeline",
    "split_dataset",
]
