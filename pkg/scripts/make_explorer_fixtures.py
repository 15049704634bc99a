"""Regenerate the explorer parity fixtures under frontend/tests/fixtures/.

For each of three synthetic scenes: decompose via the CLI, export a
bundle, then run the CLI segmenter with five threshold sets and record
its raw label output.  The explorer's tests must reproduce every label
byte from the bundle's raw reflectance alone.

Run from the repository root:  python3 scripts/make_explorer_fixtures.py
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "frontend" / "tests" / "fixtures"

sys.path.insert(0, str(ROOT / "src"))

from retiseg import cli, image_io, oracle  # noqa: E402

SCENES = [
    ("bundle_a", dict(height=24, width=24, phase_count=2, bias_amplitude=0.5,
                      noise_sigma=0.0, seed=5),
     dict(alpha="0.01", beta="8", gamma="6")),
    ("bundle_b", dict(height=32, width=32, phase_count=3, bias_amplitude=0.45,
                      noise_sigma=0.0, seed=21),
     dict(alpha="0.01", beta="12", gamma="8")),
    ("bundle_c", dict(height=40, width=28, phase_count=2, bias_amplitude=0.6,
                      noise_sigma=0.0, seed=3),
     dict(alpha="0.02", beta="20", gamma="8")),
]

THRESHOLD_SETS = [
    ("k2_mid", [0.5]),
    ("k2_low", [0.3]),
    ("k3_wide", [0.25, 0.75]),
    ("k3_high", [0.55, 0.75]),
    ("k4_even", [0.2, 0.5, 0.8]),
]


def run_cli(*argv):
    code = cli.main([str(a) for a in argv])
    if code != 0:
        raise SystemExit(f"cli {argv} failed with exit code {code}")


def main():
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    FIXTURES.mkdir(parents=True)
    index = {"bundles": []}

    for name, scene_args, params in SCENES:
        scene = oracle.synth_biased_scene(**scene_args)
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            image_io.save_image(scene.image, tmp / "scene.png", clamp=True)
            run_cli("decompose", "--in", tmp / "scene.png", "--out", tmp / "dec",
                    "--alpha", params["alpha"], "--beta", params["beta"],
                    "--gamma", params["gamma"], "--max-iter", "400")
            run_cli("export-bundle", "--decomposed", tmp / "dec",
                    "--out", FIXTURES / name)

            bundle_id = json.loads(
                (FIXTURES / name / "manifest.json").read_text()
            )["bundle_id"]

            cases = []
            for case_name, interior in THRESHOLD_SETS:
                choice = {"thresholds": interior, "K": len(interior) + 1,
                          "bundle_id": bundle_id}
                choice_file = FIXTURES / name / f"choice_{case_name}.json"
                choice_file.write_text(json.dumps(choice, indent=2, sort_keys=True))
                seg_dir = tmp / f"seg_{case_name}"
                run_cli("segment", "--bundle", FIXTURES / name, "--out", seg_dir,
                        "--thresholds-file", choice_file, "--raw-labels")
                shutil.copy(seg_dir / "labels.u8",
                            FIXTURES / name / f"labels_{case_name}.u8")
                cases.append({
                    "name": case_name,
                    "choice": f"{name}/choice_{case_name}.json",
                    "labels": f"{name}/labels_{case_name}.u8",
                })
            index["bundles"].append({"dir": name, "bundle_id": bundle_id,
                                     "cases": cases})

    (FIXTURES / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True))
    n_cases = sum(len(b["cases"]) for b in index["bundles"])
    print(f"wrote {len(index['bundles'])} bundles, {n_cases} labeled cases "
          f"to {FIXTURES}")


if __name__ == "__main__":
    main()
