import json
import subprocess
import sys

import numpy as np
import pytest

from hullscope.cli import main
from hullscope.data import read_matrix, write_matrix
from hullscope.plots import read_svg_counts


def write_csv(path, rows, header=True):
    rows = np.atleast_2d(rows)
    lines = [",".join(f"c{j}" for j in range(rows.shape[1]))] if header else []
    lines += [",".join(repr(float(x)) for x in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def triangle(tmp_path):
    train = write_csv(tmp_path / "train.csv", [[0, 0], [1, 0], [0, 1]])
    queries = write_csv(tmp_path / "q.csv", [[1, 1], [0.2, 0.2], [-1, -1], [3, 0]])
    return train, queries


def run(*argv):
    return main([str(a) for a in argv])


def test_project_json(tmp_path, triangle):
    train, q = triangle
    out = tmp_path / "o"
    assert run("project", "--train", train, "--queries", q, "--out", out, "--index", 0) == 0
    rep = json.loads((out / "project.json").read_text())
    assert rep["schema"] == "hullscope.project/1"
    p = rep["projections"][0]
    assert {"distance", "dual_gap", "iterations", "converged"} <= set(p)
    assert p["distance"] == pytest.approx(np.sqrt(0.5), abs=1e-6)
    np.testing.assert_allclose(read_matrix(out / "delta.hsmx"), [[0.5, 0.5]], atol=1e-6)
    np.testing.assert_allclose(read_matrix(out / "on_hull.hsmx"), [[0.5, 0.5]], atol=1e-6)


def test_project_image_triplet(tmp_path):
    rng = np.random.default_rng(1)
    write_matrix(tmp_path / "t.hsmx", rng.uniform(size=(10, 16)))
    write_matrix(tmp_path / "q.hsmx", rng.uniform(size=(2, 16)) + 0.5)
    out = tmp_path / "o"
    assert run("project", "--train", tmp_path / "t.hsmx", "--queries", tmp_path / "q.hsmx",
               "--out", out, "--image-shape", "4x4", "--normalize", "unit") == 0
    for i in (0, 1):
        for part in ("original", "on_hull", "delta"):
            assert (out / f"query{i}_{part}.pgm").read_bytes().startswith(b"P5\n4 4\n255\n")


def test_missing_file_exit_2(tmp_path, triangle, capsys):
    assert run("project", "--train", tmp_path / "nope.csv", "--queries", triangle[1],
               "--out", tmp_path / "o") == 2
    assert "not found" in capsys.readouterr().err


def test_unknown_flag_is_error(tmp_path, triangle):
    with pytest.raises(SystemExit) as e:
        run("diameter", "--train", triangle[0], "--out", tmp_path, "--bogus")
    assert e.value.code == 2


def test_distances_outputs(tmp_path, triangle):
    train, q = triangle
    out = tmp_path / "o"
    assert run("distances", "--train", train, "--queries", q, "--out", out, "--bins", 5) == 0
    rep = json.loads((out / "distances.json").read_text())
    lines = (out / "distances.csv").read_text().splitlines()
    assert lines[0] == "index,distance,ratio,outside"
    assert len(lines) == 5
    rows = [l.split(",") for l in lines[1:]]
    assert [int(r[3]) for r in rows] == [1, 0, 1, 1]
    assert float(rows[3][1]) == pytest.approx(2.0, abs=1e-6)
    assert float(rows[3][2]) == float(rows[3][1]) / rep["diameter"]
    svg = read_svg_counts((out / "distances.svg").read_text())
    assert svg["queries"] == rep["histogram"]["counts"]
    assert sum(rep["histogram"]["counts"]) == 4
    assert rep["farthest"][0] == 3
    assert rep["fraction_outside"] == 0.75


def test_distances_empty_queries(tmp_path, triangle):
    empty = tmp_path / "e.csv"
    empty.write_text("c0,c1\n")
    assert run("distances", "--train", triangle[0], "--queries", empty, "--out", tmp_path / "o") == 2


def test_diameter(tmp_path):
    two = write_csv(tmp_path / "two.csv", [[0, 0], [3, 0]])
    out = tmp_path / "o"
    assert run("diameter", "--train", two, "--out", out) == 0
    assert json.loads((out / "diameter.json").read_text())["diameter"] == 3.0
    assert run("diameter", "--train", two, "--out", out, "--mode", "approx") == 0
    rep = json.loads((out / "diameter.json").read_text())
    assert rep["method"] == "approx" and rep["guaranteed_factor"] == 0.5


def test_diameter_matches_naive(tmp_path):
    from hullscope import PointSet
    from hullscope.metrics import diameter_naive
    X = np.random.default_rng(3).normal(size=(1000, 8)).astype(np.float32)
    write_matrix(tmp_path / "x.hsmx", X)
    out = tmp_path / "o"
    assert run("diameter", "--train", tmp_path / "x.hsmx", "--out", out, "--block-size", 300) == 0
    rep = json.loads((out / "diameter.json").read_text())
    assert rep["diameter"] == diameter_naive(PointSet(X.astype(np.float64)))


def test_ood(tmp_path):
    rng = np.random.default_rng(4)
    train = write_csv(tmp_path / "t.csv", rng.uniform(size=(30, 3)))
    ind = write_csv(tmp_path / "in.csv", rng.uniform(0.3, 0.6, size=(10, 3)))
    outd = write_csv(tmp_path / "out.csv", rng.uniform(3, 4, size=(10, 3)))
    out = tmp_path / "o"
    assert run("ood", "--train", train, "--in-dist", ind, "--out-dist", outd, "--out", out) == 0
    rep = json.loads((out / "ood.json").read_text())
    assert rep["tpr"] == 1.0 and rep["fpr"] == 0.0
    svg = read_svg_counts((out / "ood.svg").read_text())
    assert svg["in-distribution"] == rep["histogram"]["in_counts"]
    assert svg["out-of-distribution"] == rep["histogram"]["out_counts"]
    assert run("ood", "--train", train, "--in-dist", ind, "--out-dist", ind, "--out", out) == 0
    rep = json.loads((out / "ood.json").read_text())
    assert rep["tpr"] == rep["fpr"]
    bad = write_csv(tmp_path / "bad.csv", rng.uniform(size=(4, 2)))
    assert run("ood", "--train", train, "--in-dist", ind, "--out-dist", bad, "--out", out) == 2


def test_features(tmp_path):
    rng = np.random.default_rng(5)
    write_matrix(tmp_path / "imgs.hsmx", rng.uniform(size=(12, 64)))
    out = tmp_path / "o"
    args = ["features", "--images", tmp_path / "imgs.hsmx", "--image-shape", "8x8",
            "--family", "db2", "--levels", "2", "--selector", "rrqr", "--k", 5, "--out", out]
    assert run(*args) == 0
    m = read_matrix(out / "features.hsmx")
    assert m.shape == (12, 5)
    side = json.loads((out / "features.json").read_text())
    assert side["source"]["family"] == "db2" and side["source"]["levels"] == 2
    assert side["selection"]["kind"] == "rrqr" and len(side["selected_indices"]) == 5
    first = (out / "features.hsmx").read_bytes()
    assert run(*args) == 0
    assert (out / "features.hsmx").read_bytes() == first
    assert run("features", "--images", tmp_path / "imgs.hsmx", "--image-shape", "8x8",
               "--selector", "laplacian", "--k", 3, "--out", out) == 0
    assert read_matrix(out / "features.hsmx").shape == (12, 3)
    assert run("features", "--images", tmp_path / "imgs.hsmx", "--image-shape", "8x8",
               "--family", "db11", "--out", out) == 2


def test_split(tmp_path):
    train = write_csv(tmp_path / "t.csv", [[0, 0], [1, 0], [0, 1], [1, 1]])
    inside = [[0.5, 0.5]] * 10
    outside = [[2.0 + i, 2.0] for i in range(10)]
    q = write_csv(tmp_path / "q.csv", inside + outside)
    labels = tmp_path / "labels.csv"
    labels.write_text("label\n" + "\n".join(["1"] * 20) + "\n")
    preds = tmp_path / "preds.csv"
    preds.write_text("\n".join(["1"] * 7 + ["0"] * 3 + ["1"] * 3 + ["0"] * 7) + "\n")
    out = tmp_path / "o"
    assert run("split", "--train", train, "--queries", q, "--predictions", preds,
               "--labels", labels, "--out", out) == 0
    rep = json.loads((out / "split.json").read_text())
    assert (rep["accuracy_inside"], rep["accuracy_outside"], rep["accuracy"]) == (0.7, 0.3, 0.5)
    assert rep["n_inside"] + rep["n_outside"] == 20
    q2 = write_csv(tmp_path / "q2.csv", outside)
    labels.write_text("\n".join(["1"] * 10) + "\n")
    preds.write_text("\n".join(["1"] * 10) + "\n")
    assert run("split", "--train", train, "--queries", q2, "--predictions", preds,
               "--labels", labels, "--out", out) == 0
    rep = json.loads((out / "split.json").read_text())
    assert rep["accuracy_inside"] is None and rep["accuracy"] == 1.0
    preds.write_text("1\n")
    assert run("split", "--train", train, "--queries", q2, "--predictions", preds,
               "--labels", labels, "--out", out) == 2


def test_strict_exit_3(tmp_path):
    rng = np.random.default_rng(6)
    train = write_csv(tmp_path / "t.csv", rng.normal(size=(40, 10)))
    q = write_csv(tmp_path / "q.csv", rng.normal(size=(3, 10)) * 3)
    common = ["--train", train, "--queries", q, "--out", tmp_path / "o", "--max-iters", 1,
              "--gap-tol", 1e-14]
    assert run("project", *common) == 0
    assert run("project", *common, "--strict") == 3
    assert run("distances", *common, "--strict") == 3


def test_test_fraction_split(tmp_path):
    rng = np.random.default_rng(7)
    train = write_csv(tmp_path / "t.csv", rng.normal(size=(50, 3)))
    out = tmp_path / "o"
    assert run("distances", "--train", train, "--test-fraction", 0.2, "--seed", 3, "--out", out) == 0
    assert json.loads((out / "distances.json").read_text())["n_queries"] == 10
    assert run("distances", "--train", train, "--out", out) == 2


def test_threads_env_fallback(tmp_path, triangle, monkeypatch):
    monkeypatch.setenv("HULLSCOPE_THREADS", "x")
    assert run("distances", "--train", triangle[0], "--queries", triangle[1], "--out", tmp_path) == 2
    monkeypatch.setenv("HULLSCOPE_THREADS", "3")
    assert run("distances", "--train", triangle[0], "--queries", triangle[1], "--out", tmp_path) == 0


def test_module_entry_point(tmp_path, triangle):
    r = subprocess.run([sys.executable, "-m", "hullscope", "diameter", "--train", triangle[0],
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "diameter.json").read_text())["diameter"] == pytest.approx(np.sqrt(2))
