import json

import pytest

from conftest import make_log
from ppmbench import pipeline
from ppmbench.config import PipelineConfig, resolve_config
from ppmbench.errors import ConfigError, EmptyTrainingSetError, PipelineError
from ppmbench.log_model import write_csv
from ppmbench.pipeline import build_benchmark, run_pipeline
from ppmbench.synth import generate


@pytest.fixture
def synth_csv(tmp_path):
    log, _ = generate(21, 150, scenario="heavy_straddling")
    path = tmp_path / "log.csv"
    write_csv(log, path)
    return path


def test_history_lists_every_stage():
    log, _ = generate(4, 100)
    bench = build_benchmark(log, PipelineConfig())
    steps = [h.step for h in bench.log.history]
    assert steps == [
        "synth",
        "deduplicate",
        "trim_chronological",
        "choose_max_duration",
        "filter_long_cases",
        "generate_prefixes",
        "debias_end",
        "split",
    ]
    assert bench.max_duration_source == "scan"
    assert bench.scan


def test_override_skips_scan():
    log, _ = generate(4, 100)
    bench = build_benchmark(log, PipelineConfig(max_duration_days=8.0))
    assert bench.max_duration_source == "override"
    assert not bench.scan
    assert max(c.duration_days for c in bench.log) <= 8.0


def test_stage_name_in_error():
    log = make_log({"a": [0, 10], "b": [1, 11], "c": [2, 12]})
    with pytest.raises(PipelineError) as err:
        build_benchmark(log, PipelineConfig(remove_long_cases=False, debias_end=False))
    assert err.value.stage == "split"
    assert isinstance(err.value.cause, EmptyTrainingSetError)
    assert "stage 'split' failed" in str(err.value)


def test_parse_stage_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("case_id,activity,timestamp\nx,a,yesterday\n")
    with pytest.raises(PipelineError) as err:
        run_pipeline(PipelineConfig(input=str(bad), out=str(tmp_path / "o")))
    assert err.value.stage == "parse"
    assert "bad.csv:2" in str(err.value)


def test_outputs_and_manifest(synth_csv, tmp_path):
    out = tmp_path / "out"
    manifest = run_pipeline(PipelineConfig(input=str(synth_csv), out=str(out)))
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "scan.csv", "test.csv", "train.csv"]
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk == json.loads(json.dumps(manifest))
    assert on_disk["config"]["out"] is None
    assert len(on_disk["input"]["sha256"]) == 64


def test_failure_leaves_no_partial_files(synth_csv, tmp_path, monkeypatch):
    out = tmp_path / "out"
    real = pipeline.write_prefixes
    calls = []

    def flaky(path, log, prefixes):
        calls.append(path)
        if len(calls) == 2:
            raise OSError("disk full")
        return real(path, log, prefixes)

    monkeypatch.setattr(pipeline, "write_prefixes", flaky)
    with pytest.raises(PipelineError) as err:
        run_pipeline(PipelineConfig(input=str(synth_csv), out=str(out)))
    assert err.value.stage == "write"
    assert list(out.iterdir()) == []


def test_rerun_is_byte_identical(synth_csv, tmp_path):
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_pipeline(PipelineConfig(input=str(synth_csv), out=str(out)))
        blobs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert blobs[0] == blobs[1]


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"preset": "BPIC_2019", "test_fraction": 0.3, "end_bound": "2019-01"}))
    cfg = resolve_config(cfg_file, None, test_fraction=0.25)
    assert cfg.case_column == "case:concept:name"
    assert cfg.start_bound == "2018-01"
    assert cfg.end_bound == "2019-01"
    assert cfg.test_fraction == 0.25


def test_config_rejects_unknown_keys_and_presets(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"test_fracton": 0.3}))
    with pytest.raises(ConfigError, match="test_fracton"):
        resolve_config(cfg_file)
    with pytest.raises(ConfigError, match="unknown preset"):
        resolve_config(preset="BPIC_1999")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"test_fraction": 0},
        {"test_fraction": 1.0},
        {"long_case_cap": 0.1, "max_duration_days": 5},
        {"max_duration_days": -1},
        {"split_mode": "random"},
        {"start_bound": "2020-05", "end_bound": "2020-01"},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        PipelineConfig(**kwargs)


def test_digest_ignores_output_dir():
    assert PipelineConfig(out="x").digest() == PipelineConfig(out="y").digest()
    assert PipelineConfig().digest() != PipelineConfig(test_fraction=0.3).digest()
