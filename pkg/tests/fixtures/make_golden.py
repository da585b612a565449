"""Regenerate the committed golden-run fixture.

Writes the 10-submission corpus dump and the expected stage counts and
artifact digests produced by a full pipeline run over it.  Run from the
repository root:

    python3 tests/fixtures/make_golden.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from synth import write_corpus_dir  # noqa: E402

from reviewforge import pipeline  # noqa: E402


def main() -> None:
    dump = write_corpus_dir(HERE / "golden" / "dump", 10)
    with tempfile.TemporaryDirectory() as tmp:
        config = pipeline.default_config()
        config["source"] = str(dump)
        config["run_dir"] = str(Path(tmp) / "run")
        manifest = pipeline.run(config)
    expected = {
        stage: {"counts": entry["counts"], "outputs": entry["outputs"]}
        for stage, entry in manifest["stages"].items()
    }
    out = HERE / "golden" / "expected_manifest.json"
    out.write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
