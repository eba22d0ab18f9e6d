import json

import pytest

from superint.cli import SchemaMismatch, diff_reports, main


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_verify_caged(tmp_path):
    code, rep, _ = run(tmp_path, "verify", "--system", "caged", "-p", "1", "-q", "1")
    assert code == 0
    r = rep["results"][0]
    assert rep["schema_version"] == 1
    eq = {e["name"]: e["status"] for e in r["equations"]}
    assert eq["Example (1,1) [L1,L3]"] == "verified"


def test_verify_ttw_11_reports_l5_discrepancies(tmp_path):
    code, rep, _ = run(tmp_path, "verify", "--system", "ttw", "-p", "1", "-q", "1")
    r = rep["results"][0]
    eq = {e["name"]: e["status"] for e in r["equations"]}
    assert eq["Example (1,1)"] == "verified"
    assert r["L5"]["checks"]["[L2,L5] = L4"]
    assert code == 1  # the k=1 beta display and {L5,L2} constant do not hold


def test_verify_without_l5_passes(tmp_path):
    code, _, _ = run(tmp_path, "verify", "--system", "ttw", "-p", "1", "-q", "1", "--no-l5")
    assert code == 0


def test_rep_ttw_example(tmp_path):
    csv = tmp_path / "spectrum.csv"
    code, rep, _ = run(tmp_path, "rep", "--system", "ttw", "-p", "1", "-q", "2", "-M", "2",
                       "--a", "1/3", "--b", "1/5", "--omega", "1", "--csv", str(csv))
    r = rep["results"][0]["representation"]
    assert r["spectrum_matches"]
    assert r["dimension"] == 3
    assert csv.read_text().startswith("N,index,L2,closed_form")
    assert code == 1  # energy closed form disagrees for k != 1


def test_rep_caged(tmp_path):
    code, rep, _ = run(tmp_path, "rep", "--system", "caged", "-p", "1", "-q", "1", "-M", "3",
                       "--a1", "1/3", "--a2", "2/7", "--mu", "3/2", "--matrices")
    assert code == 0
    assert len(rep["results"][0]["representation"]["matrices"]["L3"]) == 4


def test_numeric_and_stackel(tmp_path):
    code, rep, _ = run(tmp_path, "numeric", "--points", "16", "--seed", "3")
    assert code == 0 and all(r["status"] == "pass" for r in rep["numeric"])
    code, rep, _ = run(tmp_path, "stackel", "-p", "2", "-q", "1", name="st.json")
    assert code == 0
    assert "Z" in rep["results"][0]["energy_formula"]


@pytest.mark.parametrize("args", [
    ["verify", "--system", "nope"],
    ["verify", "--system", "ttw", "-p", "2", "-q", "4"],
    ["numeric", "--points", "3"],
    ["rep", "--system", "ttw", "-p", "1", "-q", "1", "--a", "1/3"],
    ["rep", "--system", "sphere"],
    ["verify", "--bogus"],
])
def test_config_errors_exit_2(tmp_path, args):
    assert main(args + ["--out", str(tmp_path / "x.json")] if args[-1] != "--bogus" else args) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "job.cfg"
    cfg.write_text("# demo\nsystem = caged\np = 2\nq = 1\n")
    code, rep, _ = run(tmp_path, "verify", "--config", str(cfg), "-p", "1")
    assert code == 0
    assert (rep["results"][0]["p"], rep["results"][0]["q"]) == (1, 1)
    assert rep["config"]["system"] == "caged"


def test_config_file_errors_name_the_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("system = caged\nthis line is wrong\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "bad.cfg:2" in capsys.readouterr().err


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SUPERINT_OUT_DIR", str(tmp_path / "reports"))
    assert main(["verify", "--system", "caged", "-p", "1", "-q", "2"]) == 0
    assert (tmp_path / "reports" / "verify_caged_1-2.json").exists()


def test_determinism_and_parallel_order(tmp_path):
    args = ["verify", "--system", "caged,complex_euclidean", "--pairs", "1/1,2/1,1/2"]
    _, _, a = run(tmp_path, *args, name="a.json")
    _, _, b = run(tmp_path, *args, "--jobs", "3", name="b.json")
    assert a.read_bytes() == b.read_bytes()


def test_diff(tmp_path, capsys):
    _, rep, path = run(tmp_path, "verify", "--system", "caged", "-p", "1", "-q", "1")
    assert diff_reports(rep, rep) == []
    changed = json.loads(json.dumps(rep))
    changed["results"][0]["P_polys"]["P1"] = "t|0:1"
    lines = diff_reports(rep, changed)
    assert len(lines) == 1 and "P_polys.P1" in lines[0] and "caged" in lines[0]
    other = tmp_path / "other.json"
    other.write_text(json.dumps(changed))
    assert main(["diff", str(path), str(other)]) == 1
    assert main(["diff", str(path), str(path)]) == 0
    with pytest.raises(SchemaMismatch):
        diff_reports(rep, dict(rep, schema_version=2))


def test_diff_tolerance_change_confined_to_numeric(tmp_path):
    _, a, _ = run(tmp_path, "numeric", "--tol", "1e-10", name="a.json")
    _, b, _ = run(tmp_path, "numeric", "--tol", "1e-9", name="b.json")
    lines = diff_reports(a, b)
    assert lines
    assert all(l.split()[1].startswith(("numeric", "config.tol")) for l in lines)
