import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from recongnn.cli import main
from recongnn.config import KEYS, load_config
from recongnn.errors import ConfigError
from recongnn.generators import cycle_graph, srg_pair
from recongnn.graph import save_graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- config ---------------------------------------------------------------


def write_ini(tmp_path, body, name="run.ini"):
    p = tmp_path / name
    p.write_text(body)
    return p


def test_config_precedence(tmp_path):
    p = write_ini(tmp_path, "[run]\nhidden = 16\nepochs = 3\n")
    cfg = load_config(p, {"epochs": "7"})
    assert cfg["hidden"] == 16 and cfg["epochs"] == 7 and cfg["lr"] == KEYS["lr"][1]


@pytest.mark.parametrize("body", ["[run]\nhiden = 3\n", "[model]\nhidden = 3\n", "[run]\nschema_version = 9\n",
                                  "[run]\nepochs = many\n", "[run]\nstandardize = maybe\n", "no section\n"])
def test_config_errors(tmp_path, body):
    with pytest.raises(ConfigError):
        load_config(write_ini(tmp_path, body))


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_resolved_ini_roundtrip(tmp_path):
    cfg = load_config(write_ini(tmp_path, "[run]\nconv = gcn\nstandardize = true\n"))
    back = load_config(cfg.write(tmp_path / "out"))
    assert back.resolved() == cfg.resolved() and back.hash() == cfg.hash()


def test_hash_stable_and_sensitive():
    assert load_config(None, {"seed": 1}).hash() == load_config(None, {"seed": "1"}).hash()
    assert load_config(None, {"seed": 1}).hash() != load_config(None, {"seed": 2}).hash()


# -- cli: structural commands ----------------------------------------------


def test_cli_wl_srg_indistinguishable(tmp_path, capsys):
    paths = []
    for i, g in enumerate(srg_pair()):
        paths.append(tmp_path / f"g{i}.json")
        save_graph(g, paths[-1])
    code, out, _ = run(capsys, "wl", *paths, "--arity", "2")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "indistinguishable" and doc["color_class"] == [0, 0]


def test_cli_wl_distinguishes_c6_two_triangles(tmp_path, capsys):
    save_graph(cycle_graph(6), tmp_path / "a.txt")
    save_graph(cycle_graph(3).disjoint_union(cycle_graph(3)), tmp_path / "b.txt")
    code, out, _ = run(capsys, "wl", tmp_path / "a.txt", tmp_path / "b.txt", "--arity", "2")
    assert code == 0 and json.loads(out)["verdict"] == "distinguishable"
    code, out, _ = run(capsys, "wl", tmp_path / "a.txt", tmp_path / "b.txt")
    assert json.loads(out)["verdict"] == "indistinguishable"


def test_cli_deck_c4(tmp_path, capsys):
    save_graph(cycle_graph(4), tmp_path / "c4.json")
    code, out, _ = run(capsys, "deck", tmp_path / "c4.json", "-k", 3)
    doc = json.loads(out)
    assert code == 0 and doc["classes"] == 1 and doc["cards"] == 4
    assert doc["deck"][0]["multiplicity"] == 4 and len(doc["deck"][0]["edges"]) == 2


def test_cli_recon_check(capsys):
    code, out, _ = run(capsys, "recon-check", "-n", 7, "-k", 6)
    doc = json.loads(out)
    assert code == 0 and doc["collisions"] == 0 and doc["classes"] == 1044


def test_cli_rerun_byte_identical(tmp_path, capsys):
    outs = []
    for d in ("a", "b"):
        code, out, _ = run(capsys, "recon-check", "-n", 5, "-k", 3, "--out", tmp_path / d)
        assert code == 0
        outs.append((tmp_path / d / "recon_check.json").read_bytes())
    assert outs[0] == outs[1]
    cfg = load_config(tmp_path / "a" / "config.resolved.ini")
    assert json.loads(outs[0])["config_hash"] == cfg.hash()


# -- cli: exit codes -------------------------------------------------------


def test_cli_unknown_config_key_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "recon-check", "-n", 4, "-k", 3, "--config", write_ini(tmp_path, "[run]\nbogus = 1\n"))
    assert code == 2 and "bogus" in err


def test_cli_bad_set_exit_2(capsys):
    assert run(capsys, "recon-check", "-n", 4, "-k", 3, "--set", "noequals")[0] == 2


def test_cli_budget_exit_3(tmp_path, capsys):
    save_graph(cycle_graph(20), tmp_path / "c20.json")
    code, _, err = run(capsys, "deck", tmp_path / "c20.json", "-k", 10, "--budget-subgraphs", 1000)
    assert code == 3 and "budget-subgraphs" in err


def test_cli_missing_graph_exit_2(tmp_path, capsys):
    assert run(capsys, "deck", tmp_path / "nope.json", "-k", 2)[0] == 2


def test_cli_usage_error_from_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["deck"])
    assert exc.value.code == 2


# -- cli: experiments ------------------------------------------------------


def test_cli_gen_train_eval(tmp_path, capsys):
    data = tmp_path / "data"
    code, out, _ = run(capsys, "gen", "--dataset", "cycles-4", "--set", "size=40", "--out", data)
    assert code == 0 and json.loads(out)["size"] == 40
    ledger = tmp_path / "results.csv"
    common = ["--set", f"data_dir={data}", "--set", "hidden=8", "--set", "layers=2", "--set", "phi_dims=8",
              "--set", "rho_dims=8", "--set", "train_samples=2", "--set", f"ledger={ledger}"]
    code, out, _ = run(capsys, "train", "--epochs", 2, "--out", tmp_path / "runs", *common)
    doc = json.loads(out)
    assert code == 0 and doc["model"] == "gin-recon[n-1]" and doc["metric"] == "test_accuracy"
    run_dir = tmp_path / "runs" / doc["run_id"]
    for name in ("checkpoint.json", "curve.csv", "config.resolved.ini", "result.json", "run_meta.json"):
        assert (run_dir / name).exists()
    code, out, _ = run(capsys, "eval", run_dir / "checkpoint.json", *common)
    assert code == 0 and json.loads(out)["value"] == doc["value"]
    rows = list(csv.DictReader(ledger.open()))
    assert len(rows) == 2 and set(rows[0]) == {"run_id", "dataset", "model", "k", "metric", "value", "seed"}


def test_cli_variance(capsys):
    code, out, _ = run(capsys, "variance", "--trials", 50, "--set", "dataset=padded-connectivity",
                       "--set", "size=40", "--set", "hidden=8", "--set", "layers=2", "--set", "outer=10")
    doc = json.loads(out)
    assert code == 0 and doc["dataset"] == "padded-connectivity"
    assert all(doc[k] >= 0 for k in ("var_gnn", "var_aug", "var_recon"))


def test_cli_audit_all_subset(tmp_path, capsys):
    code, out, _ = run(capsys, "audit-all", "--only", "2,3", "--out", tmp_path)
    assert code == 0 and out.count("PASS") == 2
    assert len(list(csv.reader((tmp_path / "audit.csv").open()))) == 3


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "recongnn.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "recon-check" in res.stdout


def test_shipped_configs_load():
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.ini"))
    assert len(paths) >= 4
    for p in paths:
        load_config(p)
