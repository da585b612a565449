import json
import time
from pathlib import Path

import pytest

from reviewforge import pipeline
from reviewforge.errors import StaleInput, StageFailure

GOLDEN = Path(__file__).parent / "fixtures" / "golden"

ARTIFACTS = [name for names in pipeline._OUTPUTS.values() for name in names]


def run_config(tmp_path, name="run", **overrides):
    config = pipeline.default_config()
    config["source"] = str(GOLDEN / "dump")
    config["run_dir"] = str(tmp_path / name)
    config.update(overrides)
    return config


def test_golden_run_matches_committed_manifest(tmp_path):
    start = time.monotonic()
    manifest = pipeline.run(run_config(tmp_path))
    elapsed = time.monotonic() - start
    expected = json.loads((GOLDEN / "expected_manifest.json").read_text())
    for stage, entry in expected.items():
        assert manifest["stages"][stage]["counts"] == entry["counts"], stage
        assert manifest["stages"][stage]["outputs"] == entry["outputs"], stage
    assert elapsed < 60.0


def test_golden_run_byte_identical_artifacts(tmp_path):
    pipeline.run(run_config(tmp_path, "run_a"))
    pipeline.run(run_config(tmp_path, "run_b"))
    for name in ARTIFACTS:
        a = (tmp_path / "run_a" / name).read_bytes()
        b = (tmp_path / "run_b" / name).read_bytes()
        assert a == b, name


def test_rerun_skips_all_stages(tmp_path):
    config = run_config(tmp_path)
    pipeline.run(config)
    mtimes = {name: (tmp_path / "run" / name).stat().st_mtime_ns for name in ARTIFACTS}
    pipeline.run(config)
    after = {name: (tmp_path / "run" / name).stat().st_mtime_ns for name in ARTIFACTS}
    assert after == mtimes


def test_tau_change_reruns_only_downstream(tmp_path):
    config = run_config(tmp_path)
    pipeline.run(config)
    run_dir = tmp_path / "run"
    before = {name: (run_dir / name).stat().st_mtime_ns for name in ARTIFACTS}
    changed = dict(config, tau=0.9)
    manifest = pipeline.run(changed)
    after = {name: (run_dir / name).stat().st_mtime_ns for name in ARTIFACTS}
    untouched = list(pipeline._OUTPUTS["ingest"]) + list(pipeline._OUTPUTS["segment"])
    for name in ARTIFACTS:
        if name in untouched:
            assert after[name] == before[name], name
        else:
            assert after[name] > before[name], name
    # a stricter threshold cannot admit more pairs
    expected = json.loads((GOLDEN / "expected_manifest.json").read_text())
    assert (
        manifest["stages"]["align"]["counts"]["pairs"]
        <= expected["align"]["counts"]["pairs"]
    )


def test_tampered_output_raises_stale_input(tmp_path):
    config = run_config(tmp_path)
    pipeline.run(config)
    target = tmp_path / "run" / "mappings.jsonl"
    target.write_text(target.read_text() + '{"schema_version":1,"paper_id":"x","segment_id":"x/R/1","span_id":"x/r1","confidence":0.9,"span_text":"s","segment_text":"t","perspective":null,"impact":null}\n')
    with pytest.raises(StaleInput):
        pipeline.run(config)
    # --force rebuilds instead
    manifest = pipeline.run(config, force=True)
    assert manifest["stages"]["align"]["counts"]["pairs"] == json.loads(
        (GOLDEN / "expected_manifest.json").read_text()
    )["align"]["counts"]["pairs"]


def test_stage_failure_wraps_cause(tmp_path):
    config = run_config(tmp_path, source=str(tmp_path / "missing_dir"))
    with pytest.raises(StageFailure) as exc:
        pipeline.run(config)
    assert exc.value.stage == "ingest"


def test_stage_subset_runs_in_graph_order(tmp_path):
    config = run_config(tmp_path)
    manifest = pipeline.run(config, stages=["ingest", "segment"])
    assert set(manifest["stages"]) == {"ingest", "segment"}
    assert not (tmp_path / "run" / "mappings.jsonl").exists()
    manifest = pipeline.run(config)
    assert set(manifest["stages"]) == set(pipeline.STAGE_ORDER)
