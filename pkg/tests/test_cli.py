import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from shapeflow import io
from shapeflow.cli import EXIT_BREAKDOWN, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from shapeflow.contour import area


@pytest.fixture()
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def gen(kind, out, *extra):
    assert main(["generate", kind, "--output", out, *extra]) == EXIT_OK
    return io.read_contour(out)


# --------------------------------------------------------------- generate


def test_generate_circle(work):
    c = gen("circle", "c.json", "--samples", "128")
    assert len(c) == 128
    assert np.allclose(np.linalg.norm(c.points, axis=1), 1.0, atol=1e-15)


def test_generate_star_and_bump(work):
    s = gen("star", "s.json", "--amplitude", "0.3", "--lobes", "5")
    assert area(s) > 0
    b = gen("bump", "b.json")
    assert area(b) > np.pi


def test_generate_star_matches_formula(work):
    s = gen("star", "s.json", "--amplitude", "0.3", "--lobes", "5", "--samples", "256")
    th = np.arctan2(s.points[:, 1], s.points[:, 0])
    r = np.linalg.norm(s.points, axis=1)
    assert np.allclose(r, 1 + 0.3 / 5 * np.sin(5 * th), atol=1e-6)


@pytest.mark.parametrize(
    "args",
    [
        ["generate", "star", "--amplitude", "6", "--lobes", "5", "--output", "x.json"],
        ["generate", "circle", "--radius", "-1", "--output", "x.json"],
        ["generate", "hexagon", "--output", "x.json"],
        ["generate", "circle"],
    ],
)
def test_generate_usage_errors(work, args):
    assert main(args) == EXIT_USAGE


# --------------------------------------------------------------- lift / decompose


def test_lift_outputs(work):
    gen("circle", "c.json")
    assert main(["lift", "--contour", "c.json", "--field", "const:1", "--mesh-size", "0.1", "--output", "out"]) == EXIT_OK
    pot = read_csv("out/potential.csv")
    grad = read_csv("out/gradient.csv")
    assert list(pot[0]) == ["vertex", "x", "y", "u", "S"]
    assert list(grad[0]) == ["triangle", "cx", "cy", "gx", "gy"]
    # S is the compatible value for the inscribed polygon: 2 / cos(pi / N)
    assert float(pot[0]["S"]) == pytest.approx(2 / np.cos(np.pi / 128), abs=1e-12)
    assert float(pot[0]["S"]) == pytest.approx(2.0, abs=1e-3)
    # radial arrows
    c = np.array([[float(r["cx"]), float(r["cy"])] for r in grad])
    g = np.array([[float(r["gx"]), float(r["gy"])] for r in grad])
    cosang = np.einsum("ij,ij->i", c, g) / (np.linalg.norm(c, axis=1) * np.linalg.norm(g, axis=1))
    # direction is ill-conditioned near the origin where the field vanishes
    assert np.min(cosang[np.linalg.norm(c, axis=1) > 0.2]) > 0.95
    root = ET.parse("out/lift.svg").getroot()
    assert root.tag.endswith("svg")
    assert "href" not in Path("out/lift.svg").read_text()
    run = json.loads(Path("out/run.json").read_text())
    assert run["command"] == "lift" and run["params"]["mesh_size"] == 0.1


def test_lift_translation_arrows(work):
    gen("circle", "c.json")
    main(["lift", "--contour", "c.json", "--field", "cos:1", "--mesh-size", "0.1", "--output", "out"])
    g = np.array([[float(r["gx"]), float(r["gy"])] for r in read_csv("out/gradient.csv")])
    assert np.max(np.abs(g - [1, 0])) < 0.1


def test_lift_high_frequency_decays(work):
    gen("circle", "c.json", "--samples", "128")
    main(["lift", "--contour", "c.json", "--field", "cos:8", "--mesh-size", "0.05", "--output", "out"])
    rows = read_csv("out/gradient.csv")
    c = np.array([[float(r["cx"]), float(r["cy"])] for r in rows])
    g = np.linalg.norm([[float(r["gx"]), float(r["gy"])] for r in rows], axis=1)
    r = np.linalg.norm(c, axis=1)
    assert np.mean(g[r < 0.5]) / np.mean(g[r > 0.9]) < 0.2


def test_lift_bad_field_spec(work):
    gen("circle", "c.json")
    assert main(["lift", "--contour", "c.json", "--field", "tan:1", "--output", "out"]) == EXIT_USAGE
    assert main(["lift", "--contour", "missing.json", "--field", "const:1", "--output", "out"]) == EXIT_USAGE


def test_lift_field_file(work):
    c = gen("circle", "c.json", "--samples", "64")
    Path("a.json").write_text(json.dumps({"values": list(np.cos(c.reference_angle()))}))
    assert main(["lift", "--contour", "c.json", "--field", "file:a.json+0.5*const:0", "--output", "out"]) == EXIT_OK
    Path("bad.json").write_text(json.dumps({"values": [1.0, 2.0]}))
    assert main(["lift", "--contour", "c.json", "--field", "file:bad.json", "--output", "out2"]) == EXIT_USAGE


@pytest.mark.parametrize(
    "spec,check",
    [
        ("const:1", lambda d: np.linalg.norm(d["v_trans"]) < 1e-8 and abs(d["lambda"] - 2) < 1e-3),
        ("cos:1", lambda d: np.allclose(d["v_trans"], [1, 0], atol=1e-3) and abs(d["lambda"]) < 1e-10),
        ("cos:2", lambda d: abs(d["norms"]["def"] / d["total_norm"] - 1) < 1e-3),
    ],
)
def test_decompose(work, spec, check):
    gen("circle", "c.json")
    assert main(["decompose", "--contour", "c.json", "--field", spec, "--mesh-size", "0.1", "--output", "d"]) == EXIT_OK
    d = json.loads(Path("d/decomposition.json").read_text())
    assert check(d)
    assert set(d["orthogonality"]) == {"trans_scale", "trans_def", "scale_def"}


# --------------------------------------------------------------- geodesic / verify / render


def _shoot(name, field, horizon, steps, extra=()):
    return main(
        ["geodesic", "--contour", "c.json", "--field", field, "--horizon", str(horizon), "--steps", str(steps),
         "--mesh-size", "0.1", "--particles", "40", "--output", name, *extra]
    )


def test_geodesic_and_verify_translation(work):
    gen("circle", "c.json", "--samples", "64")
    assert _shoot("g", "cos:1", 1.0, 16, ["--trajectories"]) == EXIT_OK
    d = Path("g")
    for name in ("path.json", "run.json", "diagnostics.csv", "filmstrip.svg", "overlay.svg", "trajectories.svg", "trajectories.csv"):
        assert (d / name).exists(), name
    for svg in d.glob("*.svg"):
        ET.parse(svg)
    summary = json.loads((d / "path.json").read_text())
    assert summary["status"] == "ok"
    assert summary["length"] == pytest.approx(1.0, rel=0.01)
    final = io.read_contour(d / "contour_0016.json")
    start = io.read_contour("c.json")
    assert np.max(np.abs(final.points - start.points - [1, 0])) < 0.02
    rows = read_csv(d / "diagnostics.csv")
    assert list(rows[0]) == ["step", "t", "length_increment", "continuity_residual", "uniformity_std", "kinetic_norm"]
    assert sum(float(r["length_increment"]) for r in rows) == pytest.approx(summary["length"], rel=1e-12)
    traj = read_csv(d / "trajectories.csv")
    assert list(traj[0]) == ["particle", "step", "t", "x", "y"]
    assert main(["verify", "g"]) == EXIT_OK
    assert all(r["pass"] == "1" for r in read_csv(d / "verify.csv"))


def test_geodesic_dt_flag(work):
    gen("circle", "c.json", "--samples", "64")
    assert main(["geodesic", "--contour", "c.json", "--field", "const:1", "--horizon", "0.25", "--dt", "0.03125",
                 "--mesh-size", "0.1", "--particles", "20", "--output", "g"]) == EXIT_OK
    assert json.loads(Path("g/run.json").read_text())["params"]["steps"] == 8
    assert main(["geodesic", "--contour", "c.json", "--field", "const:1", "--horizon", "0.25", "--dt", "0.03",
                 "--output", "g2"]) == EXIT_USAGE
    assert main(["geodesic", "--contour", "c.json", "--field", "const:1", "--steps", "4", "--output", "g3"]) == EXIT_USAGE


def test_geodesic_breakdown_exit(work):
    gen("circle", "c.json", "--samples", "64")
    assert _shoot("g", "const:-1", 1.0, 16) == EXIT_BREAKDOWN
    summary = json.loads(Path("g/path.json").read_text())
    assert summary["status"] == "breakdown"
    assert len(summary["times"]) < 17
    assert Path("g/contour_0001.json").exists()


def test_verify_stationary(work):
    gen("circle", "c.json", "--samples", "64")
    assert _shoot("g", "const:0", 0.5, 8) == EXIT_OK
    assert main(["verify", "g"]) == EXIT_OK
    for r in read_csv("g/verify.csv")[1:-1]:
        assert float(r["continuity_residual"]) == 0.0
        assert float(r["uniformity_std"]) == 0.0


def test_verify_corrupted(work):
    gen("circle", "c.json", "--samples", "64")
    assert _shoot("g", "cos:1", 0.5, 8) == EXIT_OK
    Path("g/contour_0003.json").write_text("{not json")
    assert main(["verify", "g"]) == EXIT_USAGE
    assert main(["verify", "nowhere"]) == EXIT_USAGE


def test_verify_threshold_failure(work):
    gen("circle", "c.json", "--samples", "64")
    assert _shoot("g", "cos:2", 0.25, 8) == EXIT_OK
    assert main(["verify", "g", "--continuity-tolerance", "1e-9"]) == EXIT_NUMERIC


def test_render(work):
    gen("circle", "c.json", "--samples", "64")
    assert main(["render", "--contour", "c.json", "--output", "r1"]) == EXIT_OK
    assert main(["render", "--contour", "c.json", "--field", "cos:2", "--mesh-size", "0.1", "--output", "r2"]) == EXIT_OK
    _shoot("g", "const:1", 0.25, 8)
    assert main(["render", "--path", "g", "--output", "r3", "--width", "300"]) == EXIT_OK
    for f in ("r1/contour.svg", "r2/lift.svg", "r3/filmstrip.svg", "r3/overlay.svg"):
        ET.parse(f)
        assert Path(f).read_text().startswith("<?xml")
    assert main(["render", "--output", "r4"]) == EXIT_USAGE


def test_determinism(work):
    gen("circle", "c.json", "--samples", "64")
    for out in ("a", "b"):
        assert _shoot(out, "cos:2", 0.25, 8, ["--trajectories"]) == EXIT_OK
    for f in sorted(Path("a").iterdir()):
        if f.name == "run.json":
            continue
        assert f.read_bytes() == (Path("b") / f.name).read_bytes(), f.name


def test_entry_point_help(work):
    out = subprocess.run([sys.executable, "-m", "shapeflow", "geodesic", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "diagnostics.csv" in out.stdout and "--mesh-size" in out.stdout
    out = subprocess.run([sys.executable, "-m", "shapeflow", "bogus"], capture_output=True, text=True)
    assert out.returncode == EXIT_USAGE
