"""Render every figure kind from CSVs produced by the actual harness CLI.

The harness is consumed strictly through its command-line interface; the
test is skipped when the `gogrow` package is not installed alongside.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from gogrow_figures.render import FigureSpec, render

pytest.importorskip("gogrow", reason="harness package not installed")


def harness(*args):
    proc = subprocess.run([sys.executable, "-m", "gogrow.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def harness_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("harness")
    harness("simulate", "--chi", "2", "--k", "32", "--t-end", "10",
            "--seed", "2", "--out", str(root / "sim"))
    harness("speed-sweep", "--k-list", "16,32", "--chi-list", "2.0,0.5",
            "--replicates", "3", "--t1", "2", "--t2", "8", "--t-end", "8",
            "--seed", "4", "--out", str(root / "speed"))
    harness("histogram", "--chi", "2", "--k", "64", "--t-end", "10",
            "--seed", "5", "--out", str(root / "hist"))
    harness("lineage", "--chi", "2", "--k", "32", "--t-end", "10", "--s", "5",
            "--seed", "6", "--window-lo", "-10", "--window-hi", "5",
            "--out", str(root / "lin"))
    harness("fp-evolve", "--chi", "2", "--dz", "0.05", "--s-end", "10",
            "--z-min", "-45", "--z-max", "30", "--out", str(root / "fp"))
    return root


@pytest.mark.parametrize("figure,inputs,overlay", [
    ("speed", {"speed": "speed/speed.csv"}, {}),
    ("histogram", {"histogram": "hist/histogram.csv"}, {"chi": 2.0, "K": 64, "dx": 0.1}),
    ("trajectories", {"snapshots": "sim/snapshots.csv", "xi": "sim/xi.csv"}, {}),
    ("ancestry", {"lineage": "lin/lineage.csv"}, {"chi": 2.0, "dx": 0.5}),
    ("fp", {"fp_profile": "fp/fp_profile.csv"}, {"chi": 2.0}),
])
def test_figure_from_real_harness_output(harness_outputs, tmp_path, figure, inputs, overlay):
    spec = FigureSpec(
        figure=figure,
        inputs={k: str(harness_outputs / v) for k, v in inputs.items()},
        output=str(tmp_path / f"{figure}.svg"),
        overlay=overlay,
    )
    out = render(spec)
    data = out.read_bytes()
    assert data.startswith(b"<?xml") and b"<svg" in data
    # byte-stable rerun
    assert render(spec).read_bytes() == data
