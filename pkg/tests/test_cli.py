import json
from pathlib import Path

import pytest

from cayleyltc.cli import main


@pytest.fixture(scope="module")
def z5_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("z5")
    rc = main(["build", "--group", "cyclic:5", "--gens", "1,4",
               "--base", "rep:2", "--out", str(out)])
    assert rc == 0
    return out


def test_build_writes_artifacts(z5_dir):
    manifest = json.loads((z5_dir / "manifest.json").read_text())
    assert manifest["format"] == "instance v1"
    assert manifest["derived"]["n_squares"] == 5
    assert (z5_dir / "complex.cay2.npz").exists()
    assert (z5_dir / "code.f2mat").exists()


def test_build_rejects_length_mismatch(tmp_path, capsys):
    rc = main(["build", "--group", "cyclic:5", "--gens", "1,4",
               "--base", "bch:3,3", "--out", str(tmp_path / "x")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "base length 7" in err


def test_build_rejects_bad_group(tmp_path):
    assert main(["build", "--group", "dihedral:5", "--gens", "1",
                 "--base", "rep:2", "--out", str(tmp_path / "x")]) == 2


def test_analyze_rate_and_sigma(z5_dir, capsys):
    assert main(["analyze", str(z5_dir / "manifest.json"), "--which", "rate"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "pass" and rep["k"] == 1
    assert main(["analyze", str(z5_dir / "manifest.json"), "--which", "sigma"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["sigma"] == [1, 1]


def test_analyze_distance(z5_dir, capsys):
    assert main(["analyze", str(z5_dir / "manifest.json"),
                 "--which", "distance"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "pass"
    assert rep["distance"] == 5


def test_analyze_smooth(z5_dir, capsys):
    rc = main(["analyze", str(z5_dir / "manifest.json"), "--which", "smooth",
               "--alpha", "1/4", "--beta", "2/3", "--delta", "1", "--dldpc", "2"])
    rep = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert rep["verdict"] == "pass"


def test_analyze_spectral_non_lps_is_na(z5_dir, capsys):
    rc = main(["analyze", str(z5_dir / "manifest.json"), "--which", "spectral"])
    rep = json.loads(capsys.readouterr().out)
    assert rep["lambda"] == pytest.approx(0.309017, abs=1e-6)
    assert rep["verdict"] == "na"
    assert rc == 2


def test_analyze_detects_corruption(z5_dir, tmp_path, capsys):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(z5_dir, broken)
    blob = (broken / "complex.cay2.npz").read_bytes()
    (broken / "complex.cay2.npz").write_bytes(blob + b"tampered")
    rc = main(["analyze", str(broken / "manifest.json"), "--which", "rate"])
    assert rc == 2
    assert "hash mismatch" in capsys.readouterr().err


def test_experiment_kappa_deterministic_across_workers(z5_dir, tmp_path):
    args = ["experiment", str(z5_dir / "manifest.json"), "--kind", "kappa",
            "--trials", "40", "--seed", "99", "--weights", "1,2"]
    assert main(args + ["--workers", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--workers", "8", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    assert a == b
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_experiment_decode_contracts(z5_dir, tmp_path, capsys):
    rc = main(["experiment", str(z5_dir / "manifest.json"), "--kind", "decode",
               "--trials", "30", "--seed", "5", "--weights", "1,2",
               "--out", str(tmp_path / "dec"), "--format", "json"])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["all_contracts_ok"] is True
    lines = (tmp_path / "dec.csv").read_text().splitlines()
    assert len(lines) == 31


def test_experiment_zero_trials(z5_dir, tmp_path):
    rc = main(["experiment", str(z5_dir / "manifest.json"), "--kind", "decode",
               "--trials", "0", "--seed", "1", "--weights", "1,1",
               "--out", str(tmp_path / "empty")])
    assert rc == 0
    lines = (tmp_path / "empty.csv").read_text().splitlines()
    assert lines == ["trial,weight,D,outcome,iterations,delta_initial,"
                     "dist_to_output,dist_bound,contract_ok"]


def test_experiment_csv_stdout(z5_dir, tmp_path, capsys):
    rc = main(["experiment", str(z5_dir / "manifest.json"), "--kind", "kappa",
               "--trials", "3", "--seed", "2", "--weights", "1,1",
               "--out", str(tmp_path / "k"), "--format", "csv"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("trial,weight,D,kappa_hat,certified,in_code")


def test_inspect_artifacts(z5_dir, capsys):
    assert main(["inspect", str(z5_dir / "manifest.json")]) == 0
    capsys.readouterr()
    assert main(["inspect", str(z5_dir / "code.f2mat")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["format"] == "f2mat v1"
    assert rep["rank"] == 4
    assert main(["inspect", str(z5_dir / "complex.cay2.npz")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["counts"]["squares"] == 5


def test_inspect_rejects_garbage(tmp_path):
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"\x00\x01\x02")
    assert main(["inspect", str(bad)]) == 2


def test_build_with_separate_b_generators(tmp_path, capsys):
    rc = main(["build", "--group", "cyclic:12", "--gens", "1,11",
               "--gens-b", "5,7", "--base", "rep:2", "--out", str(tmp_path / "z12")])
    assert rc == 0
    manifest = json.loads((tmp_path / "z12" / "manifest.json").read_text())
    assert manifest["derived"]["tnc"] is True
    assert manifest["derived"]["n_squares"] == 12


def test_decode_experiment_z12_all_codewords(tmp_path, capsys):
    # at corruption weights 1..2 the TNC toy decodes every trial
    out = tmp_path / "z12"
    assert main(["build", "--group", "cyclic:12", "--gens", "1,11",
                 "--gens-b", "5,7", "--base", "rep:2", "--out", str(out)]) == 0
    capsys.readouterr()
    rc = main(["experiment", str(out / "manifest.json"), "--kind", "decode",
               "--trials", "1000", "--seed", "31", "--weights", "1,2",
               "--out", str(tmp_path / "d")])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n_far"] == 0
    assert rep["all_contracts_ok"] is True


def test_lps_end_to_end_build_and_ramanujan_verdict(tmp_path, capsys):
    # full LPS instance: square code over budget is skipped, manifest still
    # carries the derived parameters; spectral analysis passes the
    # Ramanujan bound 2*sqrt(5)/6
    out = tmp_path / "lps"
    rc = main(["build", "--group", "psl2:41", "--lps", "5", "--base", "parity:6",
               "--out", str(out)])
    assert rc == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["derived"]["n_edges"] == 206640
    assert manifest["derived"]["n_squares"] == 309960
    assert manifest["derived"]["delta1"] == [1, 3]
    assert manifest["derived"]["sigma1"] is None       # r*k1 = 30 over budget
    assert "skipped" in manifest["square_code"]
    rc = main(["analyze", str(out / "manifest.json"), "--which", "spectral",
               "--method", "iterative"])
    rep = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert rep["verdict"] == "pass"
    assert rep["lambda"] <= rep["ramanujan_bound"]
