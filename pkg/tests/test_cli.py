"""
Command-line surface: exit codes, config overrides and the command chain.
"""
import json
from pathlib import Path

import pytest

from refinery.cli import main
from refinery.cli.common import apply_overrides, load_pipeline_config, parse_override
from refinery.core.config import settings
from refinery.core.errors import ConfigError
from refinery.repositories.finf import load_features
from refinery.schemas.pipeline import PipelineConfig

SMALL_SYNTH = [
    "--classes", "3", "--subconcepts", "2", "--per", "15", "--dim", "6",
    "--train-per", "5", "--test-per", "5", "--seed", "1",
]

RUN_CONFIG = """
seed = 3

[synth]
n_classes = 3
subconcepts_per_class = 2
samples_per_subconcept = 15
dim = 6
train_per_subconcept = 5
test_per_subconcept = 5

[spe_probe]
hidden_dim = 6
epochs = 2

[fine_probe]
hidden_dim = 6
epochs = 2

[splitter]
method = "kmeans"
k = 2

[eval.linear_probe]
iters = 30
"""


@pytest.fixture(autouse=True)
def restore_threads(monkeypatch):
    monkeypatch.setattr(settings, "THREADS", settings.THREADS)


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["synth", *SMALL_SYNTH, "--out-dir", str(out)]) == 0
    return out


def test_synth_writes_source_and_tasks(synth_dir):
    for name in ("source.finf", "source_labels.csv", "truth.csv", "tasks.json"):
        assert (synth_dir / name).is_file()
    assert load_features(synth_dir / "source.finf").values.shape == (90, 6)
    tasks = json.loads((synth_dir / "tasks.json").read_text())["tasks"]
    assert [task["name"] for task in tasks] == ["subconcept", "recombined", "shifted"]


def test_invalid_arguments_exit_with_config_code(tmp_path):
    assert main(["synth", "--classes", "0", "--out-dir", str(tmp_path)]) == 2
    assert main(["--threads", "0", "synth", "--out-dir", str(tmp_path)]) == 2


def test_missing_required_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["synth"])
    assert info.value.code == 2


def test_threads_flag_sets_the_pool_size(tmp_path):
    assert main(["--threads", "2", "synth", *SMALL_SYNTH, "--out-dir", str(tmp_path)]) == 0
    assert settings.THREADS == 2


def test_missing_input_exits_with_failure_code(tmp_path):
    code = main(["extract", "--model", str(tmp_path / "none.bin"), "--features", str(tmp_path / "none.finf"),
                 "--out", str(tmp_path / "out.finf")])
    assert code == 3


@pytest.mark.parametrize(
    "item, path, value",
    [
        ("spe_probe.epochs=5", ["spe_probe", "epochs"], 5),
        ("splitter.method=kmeans", ["splitter", "method"], "kmeans"),
        ("bucbam.s_high = 0.7", ["bucbam", "s_high"], 0.7),
        ('eval.kinds=["subconcept"]', ["eval", "kinds"], ["subconcept"]),
        ("export_stats=false", ["export_stats"], False),
    ],
)
def test_parse_override(item, path, value):
    assert parse_override(item) == (path, value)


def test_overrides_reject_malformed_items():
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")
    with pytest.raises(ConfigError):
        apply_overrides({"seed": 1}, ["seed.value=2"])


def test_default_config_is_the_canonical_synthetic_run(tmp_path):
    config = load_pipeline_config(None)
    assert config.config_hash() == PipelineConfig.default_synthetic().config_hash()
    custom = load_pipeline_config(None, ["splitter.k=4"], seed=5, out_dir=tmp_path / "run")
    assert custom.seed == 5
    assert custom.splitter.k == 4
    assert custom.output_dir == tmp_path / "run"
    with pytest.raises(ConfigError):
        load_pipeline_config(tmp_path / "missing.toml")


def test_pipeline_command(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(RUN_CONFIG)
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(config), "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 3
    assert (out / "reports" / "eval_spefinet.json").is_file()


def test_pipeline_command_rejects_unknown_fields(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(RUN_CONFIG)
    assert main(["pipeline", "--config", str(config), "--set", "splitter.colour=blue"]) == 2
    assert main(["pipeline", "--config", str(config), "--set", "oops"]) == 2


def test_pipeline_command_reports_stage_failures(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text(
        '[data]\nfeatures = "missing.finf"\nlabels = "missing.csv"\n\n[eval]\ntasks = "missing.json"\n'
    )
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(config), "--out-dir", str(out)]) == 3
    assert json.loads((out / "manifest.json").read_text())["failed_stage"] == "data"


def test_command_chain(synth_dir, tmp_path):
    source = str(synth_dir / "source.finf")
    labels = str(synth_dir / "source_labels.csv")
    work = tmp_path / "work"

    def run(*argv) -> int:
        return main([str(arg) for arg in argv])

    assert run("train-probe", "--features", source, "--labels", labels, "--hidden", 6, "--epochs", 2,
               "--seed", 4, "--out", work / "spenet.bin") == 0
    assert run("extract", "--model", work / "spenet.bin", "--features", source, "--out", work / "spe.finf") == 0
    assert load_features(work / "spe.finf").dim == 6

    assert run("split", "--features", work / "spe.finf", "--labels", labels, "--method", "kmeans", "--k", 2,
               "--seed", 1, "--out-dir", work / "split") == 0
    assignment = work / "split" / "finer_assignment.csv"
    assert (work / "split" / "hierarchy.json").is_file()

    assert run("train-probe", "--features", source, "--finer-assignment", assignment, "--hidden", 5,
               "--epochs", 2, "--out", work / "finet.bin") == 0
    assert run("extract", "--model", work / "finet.bin", "--features", source, "--out", work / "fine.finf") == 0
    assert run("fuse", "--spe", work / "spe.finf", "--fine", work / "fine.finf", "--out", work / "fused.finf") == 0
    assert load_features(work / "fused.finf").dim == 11

    assert run("stats", "--features", work / "spe.finf", "--assignment", assignment,
               "--out-dir", work / "stats") == 0
    assert (work / "stats" / "summary.json").is_file()

    assert run("bucbam", "--features", source, "--labels", labels, "--spe-model", work / "spenet.bin",
               "--k", 4, "--min-size", 5, "--mode", "as", "--out-dir", work / "bucbam") == 0
    assert (work / "bucbam" / "merge_plans.json").is_file()
    assert (work / "bucbam" / "finer_assignment.csv").is_file()

    assert run("eval", "--tasks", synth_dir / "tasks.json", "--model", work / "spenet.bin",
               "--fuse-with", work / "finet.bin", "--iters", 30, "--out", work / "spefinet.json") == 0
    report = json.loads((work / "spefinet.json").read_text())
    assert report["representation"] == "spefinet"
    assert report["dim"] == 11
    assert [task["name"] for task in report["tasks"]] == ["subconcept", "recombined", "shifted"]

    assert run("eval", "--tasks", synth_dir / "tasks.json", "--iters", 30, "--out", work / "raw.json") == 0
    assert json.loads((work / "raw.json").read_text())["dim"] == 6


def test_eval_rejects_fuse_without_model(synth_dir, tmp_path):
    code = main(["eval", "--tasks", str(synth_dir / "tasks.json"), "--fuse-with", str(tmp_path / "x.bin"),
                 "--out", str(tmp_path / "r.json")])
    assert code == 2


def test_split_out_names_the_assignment_csv(synth_dir, tmp_path):
    out = tmp_path / "run" / "assignments.csv"
    assert main(["split", "--features", str(synth_dir / "source.finf"), "--labels",
                 str(synth_dir / "source_labels.csv"), "--method", "kmeans", "--k", "2",
                 "--seed", "1", "--out", str(out)]) == 0
    assert out.is_file()
    assert (out.parent / "hierarchy.json").is_file()
    assert not (out.parent / "finer_assignment.csv").exists()


def test_split_without_any_output_is_rejected(synth_dir):
    assert main(["split", "--features", str(synth_dir / "source.finf"), "--labels",
                 str(synth_dir / "source_labels.csv"), "--k", "2"]) == 2


def test_eval_repr_and_models(synth_dir, tmp_path):
    source = str(synth_dir / "source.finf")
    labels = str(synth_dir / "source_labels.csv")
    spenet, finet = tmp_path / "spenet.bin", tmp_path / "finet.bin"
    assignment = tmp_path / "split" / "assignments.csv"
    assert main(["train-probe", "--features", source, "--labels", labels, "--hidden", "6", "--epochs", "2",
                 "--seed", "4", "--out", str(spenet)]) == 0
    assert main(["split", "--features", source, "--labels", labels, "--k", "2", "--out", str(assignment)]) == 0
    assert main(["train-probe", "--features", source, "--finer-assignment", str(assignment), "--hidden", "5",
                 "--epochs", "2", "--out", str(finet)]) == 0

    tasks = str(synth_dir / "tasks.json")
    expected = {
        "spe": ([spenet], "spenet", 6),
        "fine": ([finet], "finet", 5),
        "spefine": ([spenet, finet], "spefinet", 11),
    }
    for representation, (models, name, dim) in expected.items():
        out = tmp_path / f"{representation}.json"
        assert main(["eval", "--tasks", tasks, "--repr", representation, "--models", *map(str, models),
                     "--iters", "30", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["representation"] == name
        assert report["dim"] == dim


@pytest.mark.parametrize(
    "extra",
    [
        ["--repr", "spefine", "--models", "only_one.bin"],
        ["--repr", "spe"],
        ["--models", "a.bin"],
        ["--repr", "spe", "--models", "a.bin", "--model", "b.bin"],
    ],
)
def test_eval_rejects_inconsistent_repr_flags(synth_dir, tmp_path, extra):
    code = main(["eval", "--tasks", str(synth_dir / "tasks.json"), *extra, "--out", str(tmp_path / "r.json")])
    assert code == 2
