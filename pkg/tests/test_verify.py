import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from edgefc.cli import main
from edgefc.mesh import GridSpec, generate_tet_grid, read_mesh
from edgefc.mms import MMSField, exact_primitive
from edgefc.verify import (
    CSV_COLUMNS,
    StudySpec,
    compute_l1_error,
    observed_order,
    run_study,
)


@pytest.mark.parametrize(
    "e_fine, expected", [(1.25e-3, 3.0), (2.5e-3, 2.0), (1e-2, 0.0)],
)
def test_observed_order_examples(e_fine, expected):
    assert observed_order(1e-2, e_fine, 0.1, 0.05) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.1, 0.05), (1.0, -1.0, 0.1, 0.05), (1, 1, 0, 0.05)])
def test_observed_order_rejects_nonpositive(args):
    with pytest.raises(ValueError):
        observed_order(*args)


def test_l1_error_examples():
    x = np.random.default_rng(0).uniform(0, 1, (50, 3)) * [1, 1, 1e-3]
    mms = MMSField()
    w = exact_primitive(x, mms)
    np.testing.assert_array_equal(compute_l1_error(w, mms, x), 0.0)
    off = w.copy()
    off[:, 2] += 0.125
    np.testing.assert_allclose(compute_l1_error(off, mms, x), [0, 0, 0.125, 0, 0], atol=1e-15)
    noisy = w * (1 + 0.01 * np.random.default_rng(1).normal(size=w.shape))
    perm = np.random.default_rng(2).permutation(50)
    np.testing.assert_allclose(compute_l1_error(noisy[perm], mms, x[perm]),
                               compute_l1_error(noisy, mms, x), rtol=1e-14)


@pytest.mark.parametrize("ns", [(16,), (24, 16), (16, 16)])
def test_study_spec_rejects_bad_n(ns):
    with pytest.raises(ValueError):
        StudySpec(ns)


def test_study_spec_forces_kappa_for_fc():
    spec = StudySpec((4, 5), kappa=0.0)
    assert spec.scheme("third_fc", "roe").kappa == 0.5
    assert spec.scheme("third_fr", "roe").kappa == 0.0


def _read_study(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    return header, rows


@pytest.fixture(scope="module")
def tiny_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("study")
    spec = StudySpec((4, 5, 6), (("second", "roe"), ("third_fc", "hllc")), seed=3, out_dir=out)
    return run_study(spec), out


def test_study_outputs(tiny_study):
    report, out = tiny_study
    assert report.all_converged
    header, rows = _read_study(out / "study.csv")
    assert "seed=3" in header[0]
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [(r["scheme"], r["n"]) for r in rows] == [
        ("second", "4"), ("second", "5"), ("second", "6"),
        ("third_fc", "4"), ("third_fc", "5"), ("third_fc", "6"),
    ]
    for prev, cur in zip(rows, rows[1:]):
        if prev["scheme"] != cur["scheme"]:
            assert cur["order_u"] == ""
            continue
        expected = math.log(float(prev["err_u"]) / float(cur["err_u"])) / math.log(
            float(prev["h"]) / float(cur["h"]))
        assert float(cur["order_u"]) == pytest.approx(expected, abs=1e-4)
    for r in rows:
        assert float(r["h"]) == pytest.approx(1.0 / (int(r["n"]) - 1))
        assert all(float(r[c]) >= 0 for c in CSV_COLUMNS[4:9])
    blocks = (out / "study.dat").read_text().split("\n\n\n")
    assert len(blocks) == 2
    data = [l.split() for l in blocks[1].splitlines() if l and not l.startswith("#")]
    assert len(data) == 3 and all(len(d) == 6 for d in data)
    assert (out / "history_third_fc_hllc_n6.csv").exists()


def test_study_is_deterministic(tiny_study, tmp_path):
    report, _ = tiny_study
    again = run_study(replace(report.spec, out_dir=tmp_path))
    for a, b in zip(report.runs, again.runs):
        np.testing.assert_array_equal(a.errors, b.errors)
        assert a.iterations == b.iterations


def test_cli_single_run(tmp_path, capsys):
    code = main(["--scheme", "2nd", "--n", "4,5", "--out", str(tmp_path)])
    assert code == 0
    text = capsys.readouterr().out
    assert "Roe(2nd)" in text and "order_u" in text
    _, rows = _read_study(tmp_path / "study.csv")
    assert [r["n"] for r in rows] == ["4", "5"]


def test_cli_reports_nonconvergence(tmp_path):
    assert main(["--n", "4", "--max-iters", "1", "--out", str(tmp_path)]) == 1


def test_cli_export_mesh(tmp_path):
    assert main(["--n", "3,4", "--export-mesh", "--seed", "2", "--out", str(tmp_path)]) == 0
    mesh = read_mesh(tmp_path / "mesh_n4.txt")
    ref = generate_tet_grid(GridSpec(4, seed=2))
    np.testing.assert_array_equal(mesh.node_coords, ref.node_coords)
    np.testing.assert_array_equal(mesh.tets, ref.tets)


@pytest.mark.parametrize(
    "argv",
    [["--scheme", "3rd-fc", "--kappa", "0.3"], ["--scheme", "3rd-fr", "--flux", "hllc"],
     ["--n", "8,4"], ["--n", "x"], ["--flux", "ausm"], ["--drop", "0"], ["--study", "--n", "8"]],
)
def test_cli_rejects_invalid_options(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(argv + ["--out", str(tmp_path)])
    assert exc.value.code == 2


def test_cli_accepts_kappa_half_for_fc(tmp_path):
    assert main(["--kappa", "0.5", "--n", "3", "--export-mesh", "--out", str(tmp_path)]) == 0
