import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from complexity_cca import cli, io

NS = "{http://www.w3.org/2000/svg}"

# F1 as trade data: shares make R(p1,A)=1.05, R(p1,B)=0.95, R(p2,B)=1.91, so a
# cutoff of 0.9 yields X = [[1,1],[0,1]] (a cutoff of 1 cannot, see README).
F1_TRADE = "year,country,product,value\n2018,A,p1,10\n2018,B,p1,10\n2018,B,p2,1\n"
F1_VARS = "country,y\nA,0\nB,1\n"


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def f1_files(tmp_path):
    (tmp_path / "trade.csv").write_text(F1_TRADE)
    (tmp_path / "vars.csv").write_text(F1_VARS)
    return tmp_path


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run("synth", "--seed", 5, "--products", 80, "--countries", 20, "--variables", 5,
               "--var-noise", 0.2, "--out", d) == 0
    return d


def read_json(path):
    return json.loads(path.read_text())


def test_ca_f1(f1_files):
    out = f1_files / "ca"
    assert run("ca", "--trade", f1_files / "trade.csv", "--threshold", 0.9, "--out", out) == 0
    header, labels, vals = io.read_scores(out / "eci.csv")
    assert header == ["country", "axis1"] and labels == ["A", "B"]
    np.testing.assert_allclose(vals[:, 0], [-np.sqrt(2), np.sqrt(2) / 2], atol=1e-10)
    rep = read_json(out / "report.json")
    assert rep["eigenvalues"] == [0.25]
    for key in ("eigenvalues", "inertia_shares", "trace", "pruned", "residuals", "iterations", "version"):
        assert key in rep
    assert rep["inputs"]["trade"] == io.sha256_file(f1_files / "trade.csv")


def test_ca_reflections(f1_files):
    out = f1_files / "ca"
    assert run("ca", "--trade", f1_files / "trade.csv", "--threshold", 0.9, "--reflections", 2,
               "--out", out) == 0
    rows = (out / "reflections.csv").read_text().splitlines()
    assert rows[0] == "kind,label,iter0,iter1,iter2"
    assert rows[1] == "country,A,1,2,1.5"


def test_ca_iterative_and_both(f1_files):
    out = f1_files / "it"
    assert run("ca", "--trade", f1_files / "trade.csv", "--threshold", 0.9, "--method", "both",
               "--out", out) == 0
    rep = read_json(out / "report.json")
    assert rep["equivalence"]["correlations"][0] == pytest.approx(1.0, abs=1e-10)
    assert run("ca", "--trade", f1_files / "trade.csv", "--threshold", 0.9, "--method", "iterative",
               "--axes", 1, "--out", out) == 0
    assert read_json(out / "report.json")["eigenvalues"][0] == pytest.approx(0.25, abs=1e-9)


def test_missing_input_is_input_error(tmp_path, capsys):
    assert run("ca", "--trade", tmp_path / "nope.csv", "--out", tmp_path) == 3
    assert "not found" in capsys.readouterr().err


def test_bad_arguments(f1_files):
    assert run("ca", "--trade", f1_files / "trade.csv", "--tol", -1) == 2
    assert run("ca", "--trade", f1_files / "trade.csv", "--axes", 0) == 2
    assert run("synth", "--out", f1_files / "s") == 2
    with pytest.raises(SystemExit) as exc:
        run("ca", "--method", "magic")
    assert exc.value.code == 2


def test_cca_f1_matches_ca(f1_files):
    out = f1_files / "cca"
    assert run("cca", "--trade", f1_files / "trade.csv", "--vars", f1_files / "vars.csv",
               "--threshold", 0.9, "--method", "both", "--out", out) == 0
    eq = read_json(out / "equivalence.json")
    assert eq["correlations"] == [1.0]
    _, _, e = io.read_scores(out / "cca_e_std.csv")
    np.testing.assert_allclose(e[:, 0], [-np.sqrt(2), np.sqrt(2) / 2], atol=1e-10)
    assert (out / "cca_b.csv").read_text().splitlines()[0] == "variable,axis,coefficient"
    for name in ("cca_u.csv", "cca_v.csv", "report.json"):
        assert (out / name).exists()


def test_cca_drops_country_without_variables(tmp_path):
    (tmp_path / "t.csv").write_text(
        "year,country,product,value\n" + "\n".join(
            f"2018,{c},{p},5" for c, p in [("A", "p1"), ("A", "p2"), ("B", "p2"), ("B", "p3"), ("C", "p3"),
                                            ("C", "p4"), ("D", "p4"), ("D", "p1"), ("E", "p1")]))
    (tmp_path / "v.csv").write_text("country,y\nA,1\nB,2\nC,4\nD,3\n")
    assert run("cca", "--trade", tmp_path / "t.csv", "--vars", tmp_path / "v.csv", "--out", tmp_path / "o") == 0
    rep = read_json(tmp_path / "o" / "report.json")
    assert rep["pruned"]["dropped_countries"] == ["E"]
    assert rep["pruned"]["reason_per_item"]["countries"]["E"] == "not in variables file"


def test_cca_axes_contract(planted):
    out = planted / "cca3"
    assert run("cca", "--config", planted / "config.json", "--axes", 3, "--out", out) == 0
    for name in ("cca_e_std.csv", "cca_u.csv", "cca_v.csv"):
        header = (out / name).read_text().splitlines()[0].split(",")
        assert header[1:] == ["cca1", "cca2", "cca3"]
    rows = (out / "cca_b.csv").read_text().splitlines()[1:]
    assert len(rows) == 6 * 3


def test_config_precedence(planted, tmp_path):
    cfg = read_json(planted / "config.json")
    cfg.update(trade=str(planted / "trade.csv"), vars=str(planted / "vars.csv"), axes=1)
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert run("cca", "--config", tmp_path / "c.json", "--out", tmp_path / "a") == 0
    assert len(read_json(tmp_path / "a" / "report.json")["eigenvalues"]) == 1
    assert run("cca", "--config", tmp_path / "c.json", "--axes", 2, "--out", tmp_path / "b") == 0
    assert len(read_json(tmp_path / "b" / "report.json")["eigenvalues"]) == 2
    (tmp_path / "bad.json").write_text('{"colour": 1}')
    assert run("ca", "--config", tmp_path / "bad.json") == 2


def svg_root(path):
    return ET.fromstring(path.read_bytes())


def test_biplot_axis_pair_23(planted):
    out = planted / "bp"
    assert run("biplot", "--config", planted / "config.json", "--axis-pair", "2,3", "--cap-axis", "3=0.5",
               "--out", out) == 0
    labels = [t.text for t in svg_root(out / "biplot.svg").findall(f"{NS}text[@class='axis-label']")]
    assert labels[0].startswith("CCA-2 (") and labels[1].startswith("CCA-3 (")
    rep = read_json(out / "report.json")
    assert rep["biplot"]["axis_pair"] == [2, 3]
    assert all(c["y"] > 0.5 for c in rep["biplot"]["clipped"])
    rows = (out / "biplot.csv").read_text().splitlines()
    assert rows[0] == "entity,kind,axis_a,axis_b,size,group"
    assert sum(1 for r in rows if ",ray," in r) == 5


def test_biplot_lall_centroids(planted):
    products = [r.split(",")[2] for r in (planted / "trade.csv").read_text().splitlines()[1:]]
    products = sorted(set(products))
    cats = ["PPm", "PPo", "RBa", "RBo", "LTt", "LTo", "MTa", "MTp", "MTe", "HTe", "HTo"]
    (planted / "lall.csv").write_text("product,category\n" + "".join(
        f"{p},{cats[i % 11]}\n" for i, p in enumerate(products)))
    out = planted / "bpl"
    assert run("biplot", "--config", planted / "config.json", "--lall", planted / "lall.csv", "--out", out) == 0
    root = svg_root(out / "biplot.svg")
    assert len(root.findall(f"{NS}circle[@class='centroid']")) == 11
    assert not root.findall(f"{NS}circle[@class='product']")


def test_biplot_unknown_category(planted, capsys):
    (planted / "badlall.csv").write_text("product,category\nP01,XYZ\nP02,HTe\nP03,ABC\n")
    assert run("biplot", "--config", planted / "config.json", "--lall", planted / "badlall.csv",
               "--out", planted / "x") == 9
    err = capsys.readouterr().err
    assert "ABC" in err and "XYZ" in err


def test_biplot_many_products_unlabeled(planted):
    out = planted / "bpu"
    assert run("biplot", "--trade", planted / "trade.csv", "--threshold",
               read_json(planted / "config.json")["threshold"], "--out", out) == 0
    root = svg_root(out / "biplot.svg")
    assert len(root.findall(f"{NS}circle[@class='product']")) > 50
    assert not root.findall(f"{NS}text[@class='product-label']")
    assert root.findall(f"{NS}text[@class='country-label']")


def test_validate(planted):
    out = planted / "val"
    assert run("validate", "--config", planted / "config.json", "--method", "both", "--out", out) == 0
    rep = read_json(out / "validation.json")
    assert rep["passed"] and rep["ca"]["passed"] and rep["cca"]["passed"]
    assert min(rep["equivalence"]["correlations"]) >= 1 - 1e-6


def test_exit_codes(tmp_path, planted):
    # collinear variables
    lines = (planted / "vars.csv").read_text().splitlines()
    (tmp_path / "dup.csv").write_text("\n".join(
        ["country,a,b"] + [f"{r.split(',')[0]},{r.split(',')[1]},{r.split(',')[1]}" for r in lines[1:]]))
    thr = read_json(planted / "config.json")["threshold"]
    assert run("cca", "--trade", planted / "trade.csv", "--vars", tmp_path / "dup.csv",
               "--threshold", thr, "--out", tmp_path / "o") == 5
    # disconnected: two countries with disjoint portfolios
    (tmp_path / "dis.csv").write_text("year,country,product,value\n2018,A,p1,5\n2018,A,p2,5\n"
                                      "2018,B,p3,5\n2018,B,p4,5\n")
    assert run("ca", "--trade", tmp_path / "dis.csv", "--out", tmp_path / "o") == 6
    assert run("ca", "--trade", tmp_path / "dis.csv", "--out", tmp_path / "o", "--largest-component") == 4
    # no convergence
    assert run("cca", "--config", planted / "config.json", "--method", "iterative", "--max-iter", 2,
               "--out", tmp_path / "o") == 7
    # negative value
    (tmp_path / "neg.csv").write_text("year,country,product,value\n2018,A,p1,-1\n")
    assert run("ca", "--trade", tmp_path / "neg.csv", "--out", tmp_path / "o") == 4


def snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


@pytest.mark.parametrize("cmd,extra", [
    ("ca", ["--reflections", 3, "--method", "both"]),
    ("cca", ["--method", "both"]),
    ("biplot", ["--axis-pair", "1,3", "--back-extension"]),
    ("validate", []),
])
def test_determinism(planted, tmp_path, cmd, extra):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cmd, "--config", planted / "config.json", *extra, "--out", a) == 0
    assert run(cmd, "--config", planted / "config.json", *extra, "--out", b) == 0
    assert snapshot(a) == snapshot(b)
    assert snapshot(a)


def test_synth_determinism(tmp_path):
    for d in ("a", "b"):
        assert run("synth", "--seed", 9, "--products", 40, "--countries", 12, "--noise", 0.1,
                   "--out", tmp_path / d) == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")
    assert set(snapshot(tmp_path / "a")) == {"trade.csv", "vars.csv", "truth.csv", "planted.csv",
                                            "config.json", "synth.json"}
