import csv
import io
import subprocess
import sys

import pytest

from bridgeflow.cli import main
from bridgeflow.simulation import TABLE_FILES

EXAMPLE_BANDS = """\
- {id: P1, min: 0.485, max: 0.495, networks: [P]}
- {id: Q1, min: 0.512, max: 0.520, networks: [Q]}
"""
ROUTE3 = """\
networks:
  - {id: P, current: 900, tbd: 100}
  - {id: Q, current: 1000}
  - {id: R, current: 1000}
assets:
  - {id: AP, min: 0.3, max: 0.3, networks: [P]}
  - {id: AQ, min: 0.35333333333333333, max: 0.35333333333333333, networks: [Q]}
  - {id: AR, min: 0.35333333333333333, max: 0.35333333333333333, networks: [R]}
bridges:
  - {from: P, to: Q, cap: 100}
  - {from: P, to: R, cap: 100}
  - {from: Q, to: R, cap: 100}
max_stretch: 0
"""


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_default(tmp_path):
    code, out, err = run("simulate", "--out", str(tmp_path))
    assert code == 0, err
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(TABLE_FILES.values())
    assert '"delta": 0.0001' in out and '"max_bridge_stretch": 0.2' in out
    assert "scenarios:          35" in out
    assert "nonzero transfers:" in out and "max |transfer|:" in out


def test_simulate_missing_config(tmp_path):
    missing = tmp_path / "nope.yaml"
    code, out, err = run("simulate", "--config", str(missing), "--out", str(tmp_path / "o"))
    assert code != 0 and str(missing) in err and out == ""


def test_simulate_bad_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_scenarios: [1, 2\n")
    assert run("simulate", "--config", str(cfg))[0] == 1
    cfg.write_text("colour: blue\n")
    code, _, err = run("simulate", "--config", str(cfg))
    assert code == 1 and "colour" in err


def test_simulate_deterministic_and_precedence(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_scenarios: 4\nrng_seed: 1\n")
    for name in ("a", "b"):
        code, out, _ = run("--seed", "2", "simulate", "--config", str(cfg), "--out", str(tmp_path / name))
        assert code == 0
        assert '"rng_seed": 2' in out and '"n_scenarios": 4' in out
    for fname in TABLE_FILES.values():
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    code, out, _ = run("simulate", "--config", str(cfg), "--out", str(tmp_path / "c"), "--format", "csv")
    assert csv_rows(out.split("}\n", 1)[1].split("wrote")[0])[0]["scenarios"] == "19"


def test_transfer_noop():
    code, out, _ = run("transfer", "--curr-p", "1000", "--curr-q", "1000", "--cap-pq", "5", "--cap-qp", "5", "--format", "csv")
    assert code == 0
    row = csv_rows(out)[0]
    for c in ("TransferAmount_PQ_Delta", "TransferAmount_QP_Delta", "TransferAmount_PQ", "TransferAmount_QP"):
        assert float(row[c]) == 0


def test_transfer_rejects_excess_withdrawal():
    code, out, err = run("transfer", "--curr-p", "10", "--curr-q", "10", "--tbd-p", "-30",
                         "--cap-pq", "1", "--cap-qp", "1")
    assert code == 1 and "WithdrawalExceedsInvestment" in err and out == ""


def test_transfer_missing_flag():
    code, _, err = run("transfer", "--curr-p", "10", "--curr-q", "10", "--cap-pq", "1")
    assert code == 1 and "--cap-qp" in err


def test_transfer_example(tmp_path):
    bands = tmp_path / "bands.yaml"
    bands.write_text(EXAMPLE_BANDS)
    code, out, _ = run("transfer", "--curr-p", "5000", "--curr-q", "5000", "--cap-pq", "130",
                       "--cap-qp", "130", "--bands-file", str(bands))
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("TransferAmount_PQ_Delta"))
    assert float(line.split()[-1]) == pytest.approx(120)


def test_transfer_csv_round_trip(tmp_path):
    bands = tmp_path / "bands.yaml"
    bands.write_text(EXAMPLE_BANDS)
    argv = ["transfer", "--format", "csv", "--curr-p", "43210.123", "--tbd-p", "-777.7",
            "--curr-q", "5100.5", "--tbd-q", "12345.6", "--cap-pq", "1300", "--cap-qp", "9000",
            "--bands-file", str(bands), "--max-stretch", "0.15"]
    code, out, _ = run(*argv)
    row = csv_rows(out)[0]
    again = ["transfer", "--format", "csv", "--bands-file", str(bands)]
    for key in ("tbd_p", "curr_p", "tbd_q", "curr_q", "cap_pq", "cap_qp", "max_stretch", "delta",
                "min_weight", "max_weight"):
        again += ["--" + key.replace("_", "-"), row[key]]
    code2, out2, _ = run(*again)
    assert code == code2 == 0
    assert csv_rows(out2)[0] == row


def test_transfer_config_file_and_override(tmp_path):
    cfg = tmp_path / "t.yaml"
    cfg.write_text("curr_p: 5000\ncurr_q: 5000\ncap_pq: 130\ncap_qp: 130\nassets:\n"
                   + "".join("  " + l + "\n" for l in EXAMPLE_BANDS.splitlines()))
    row = csv_rows(run("transfer", "--config", str(cfg), "--format", "csv")[1])[0]
    assert float(row["TransferAmount_PQ_Delta"]) == pytest.approx(120)
    row = csv_rows(run("transfer", "--config", str(cfg), "--format", "csv", "--cap-pq", "50")[1])[0]
    assert float(row["TransferAmount_PQ_Delta"]) == pytest.approx(50)


def test_transfer_round_and_out_file(tmp_path):
    target = tmp_path / "t.csv"
    code, out, _ = run("transfer", "--curr-p", "1000.4", "--curr-q", "999.7", "--tbd-p", "-300",
                       "--cap-pq", "50", "--cap-qp", "50", "--format", "csv", "--round", "--out", str(target))
    assert code == 0 and out == ""
    row = csv_rows(target.read_text())[0]
    assert row["curr_p"] == "1000" and "." not in row["TransferAmount_PQ"]


def test_route_three_networks(tmp_path):
    cfg = tmp_path / "r.yaml"
    cfg.write_text(ROUTE3)
    code, out, _ = run("route", "--config", str(cfg), "--format", "csv")
    assert code == 0
    transfers_text, residual_text = out.split("\n\n")
    moves = csv_rows(transfers_text)
    assert [(m["from"], m["to"]) for m in moves] == [("P", "Q"), ("P", "R")]
    assert [float(m["amount"]) for m in moves] == pytest.approx([60, 40])
    residuals = {r["network"]: float(r["outside_band"]) for r in csv_rows(residual_text)}
    assert residuals["R"] == pytest.approx(-20)
    code, out, _ = run("route", "--config", str(cfg))
    assert code == 0 and "transfers:" in out and "residuals:" in out


def test_route_two_networks_matches_transfer(tmp_path):
    cfg = tmp_path / "r.yaml"
    cfg.write_text(
        "networks:\n  - {id: P, current: 50000, tbd: -15000}\n  - {id: Q, current: 50000, tbd: 45000}\n"
        "assets:\n  - {id: P1, min: 0.25, max: 0.30, networks: [P]}\n"
        "  - {id: Q1, min: 0.25, max: 0.30, networks: [Q]}\n"
        "  - {id: S1, min: 0.15, max: 0.20}\n  - {id: S2, min: 0.20, max: 0.25}\n"
        "bridges:\n  - {from: P, to: Q, cap: 60000, cap_back: 60000}\n"
    )
    bands = tmp_path / "b.yaml"
    bands.write_text(
        "- {id: P1, min: 0.25, max: 0.30, networks: [P]}\n- {id: Q1, min: 0.25, max: 0.30, networks: [Q]}\n"
        "- {id: S1, min: 0.15, max: 0.20}\n- {id: S2, min: 0.20, max: 0.25}\n"
    )
    _, out, _ = run("route", "--config", str(cfg), "--format", "csv")
    move = csv_rows(out.split("\n\n")[0])[0]
    _, out, _ = run("transfer", "--format", "csv", "--curr-p", "50000", "--tbd-p", "-15000",
                    "--curr-q", "50000", "--tbd-q", "45000", "--cap-pq", "60000", "--cap-qp", "60000",
                    "--bands-file", str(bands))
    row = csv_rows(out)[0]
    assert (move["from"], move["to"]) == ("Q", "P")
    assert float(move["delta_ab"]) == float(row["TransferAmount_QP_Delta"])
    assert float(move["delta_ba"]) == float(row["TransferAmount_PQ_Delta"])
    assert float(move["simple_ab"]) == float(row["TransferAmount_QP"])


def test_route_balanced_and_errors(tmp_path):
    cfg = tmp_path / "r.yaml"
    cfg.write_text(
        "networks:\n  - {id: A, current: 100}\n  - {id: B, current: 100}\n"
        "assets:\n  - {id: X, min: 0.4, max: 0.6}\n  - {id: Y, min: 0.4, max: 0.6}\n"
        "bridges:\n  - {from: A, to: B, cap: 10}\n"
    )
    code, out, _ = run("route", "--config", str(cfg))
    assert code == 0 and "(none)" in out
    assert run("route")[0] == 1
    cfg.write_text("networks: []\n")
    assert run("route", "--config", str(cfg))[0] == 1


def test_usage_errors():
    assert run()[0] == 2
    assert run("transfer", "--format", "xml")[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "bridgeflow", "simulate", "--out", str(tmp_path), "--seed", "3"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "wrote primary" in proc.stdout
