import csv
import json

import pytest

from quasilab.cli import fmt, main
from quasilab.config import ExperimentConfig
from quasilab.errors import ConfigError

COS = {"family": "trig_polynomial", "terms": [{"k": [1], "cos": 2.0}]}
GOLDEN = [{"rule": "constant", "value": 1}]


def write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def gordon_cfg(**kw):
    cfg = {"experiment": "gordon-check", "frequencies": GOLDEN, "potential": COS,
           "gamma": 1.0, "delta": 0.5, "lambda0": 4.0}
    cfg.update(kw)
    return cfg


def test_constant_potential_gordon_run(tmp_path, capsys):
    cfg = gordon_cfg(potential={"family": "trig_polynomial", "terms": [{"k": [1], "cos": 0.0}]},
                     tau=[5])
    out = tmp_path / "out"
    assert main(["gordon-check", "--config", write(tmp_path, "c.json", cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "gordon-check.csv")
    assert rows[0]["passed"] == "true" and rows[0]["rho_log"] == "-inf"
    assert "hypothesis verified at this period" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert {"config", "seed", "versions", "wall_time_s"} <= set(manifest)


def test_failed_check_exits_one(tmp_path):
    cfg = gordon_cfg(taus=[[3], [5]])
    assert main(["run", "--config", write(tmp_path, "c.json", cfg), "--out", str(tmp_path / "o")]) == 1


def test_measure_zero_row(tmp_path):
    # seed 1; the coverage rate over 100 seeds is an acceptance check
    cfg = {"experiment": "measure-zero", "m": [2, 2, 2], "epsilon": 0.1,
           "mc": {"samples": 1_000_000}}
    out = tmp_path / "o"
    assert main(["measure-zero", "--config", write(tmp_path, "m.json", cfg), "--seed", "1",
                 "--out", str(out)]) == 0
    row = read_csv(out / "measure-zero.csv")[0]
    assert float(row["closed_form"]) == 1.25e-4
    assert float(row["low"]) <= 1.25e-4 <= float(row["high"]) and row["contains"] == "true"


def test_validation_failures_exit_two(tmp_path, capsys):
    bad = gordon_cfg(tau=[3], gamma=0.5, delta=0.5)
    assert main(["run", "--config", write(tmp_path, "b.json", bad)]) == 2
    assert "gamma > delta > 0" in capsys.readouterr().err
    unknown = gordon_cfg(tau=[3], colour="red")
    assert main(["run", "--config", write(tmp_path, "u.json", unknown)]) == 2
    assert "colour" in capsys.readouterr().err
    wrong_kind = gordon_cfg(tau=[3])
    assert main(["spectrum", "--config", write(tmp_path, "w.json", wrong_kind)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    misplaced = {"experiment": "spectrum", "frequencies": GOLDEN, "potential": COS,
                 "sides": [5], "epsilon": 0.1}
    assert main(["run", "--config", write(tmp_path, "x.json", misplaced)]) == 2


def test_report_trend(tmp_path, capsys):
    manifests = []
    for tau in (8, 3, 5):
        out = tmp_path / f"run{tau}"
        main(["run", "--config", write(tmp_path, f"g{tau}.json", gordon_cfg(tau=[tau])),
              "--out", str(out)])
        manifests.append(str(out / "manifest.json"))
    capsys.readouterr()
    assert main(["report", manifests[0]]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert main(["report", *manifests, "--out", str(tmp_path / "rep")]) == 0
    rows = read_csv(tmp_path / "rep" / "gordon_trend.csv")
    assert [int(r["tau_product"]) for r in rows] == [3, 5, 8]
    margins = [float(r["margin_log"]) for r in rows]
    assert margins[0] > margins[1] > margins[2]
    assert main(["report"]) == 0
    assert capsys.readouterr().out.startswith("manifest,tau,tau_product")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["report", str(bad)]) == 2


def test_manifest_echo_reruns_identically(tmp_path):
    cfg = {"experiment": "measure-probe", "probe": "f-set", "potential": COS, "y": [0.05],
           "epsilon": 0.3, "mc": {"samples": 50_000}}
    first = tmp_path / "a"
    main(["run", "--config", write(tmp_path, "p.json", cfg), "--seed", "9", "--out", str(first)])
    echo = json.loads((first / "manifest.json").read_text())["config"]
    ExperimentConfig.from_dict(echo)
    second = tmp_path / "b"
    main(["run", "--config", write(tmp_path, "echo.json", echo), "--out", str(second)])
    assert (first / "measure-probe.csv").read_bytes() == (second / "measure-probe.csv").read_bytes()


def test_spectrum_and_transport_runs(tmp_path):
    spec = {"experiment": "spectrum", "frequencies": GOLDEN, "potential": COS, "phase": [0.1],
            "sides": [20], "want_vectors": True, "dump_vectors": True}
    out = tmp_path / "s"
    assert main(["run", "--config", write(tmp_path, "s.json", spec), "--out", str(out)]) == 0
    rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 20 and all(0 < float(r["ipr"]) <= 1 for r in rows)
    assert (out / "eigenvectors.bin").exists()
    trans = {"experiment": "transport", "disorder": {"strength": 10.0, "seed": 3},
             "sides": [101], "times": [0, 1, 2, 4]}
    out = tmp_path / "t"
    assert main(["run", "--config", write(tmp_path, "t.json", trans), "--out", str(out)]) == 0
    rows = read_csv(out / "transport.csv")
    assert [r["t"] for r in rows] == ["0", "1", "2", "4"]


def test_other_experiments(tmp_path):
    search = {"experiment": "freq-search", "frequencies": GOLDEN, "target": 0.5}
    main(["run", "--config", write(tmp_path, "f.json", search), "--out", str(tmp_path / "f")])
    assert read_csv(tmp_path / "f" / "freq-search.csv")[0]["tau"] == "1"
    inter = {"experiment": "interleave", "frequencies": GOLDEN * 2, "epsilon": 2}
    main(["run", "--config", write(tmp_path, "i.json", inter), "--out", str(tmp_path / "i")])
    row = read_csv(tmp_path / "i" / "interleave.csv")[0]
    assert (row["found"], row["n"], row["m"]) == ("true", "1", "1")
    probe = {"experiment": "measure-probe", "probe": "e-set",
             "potential": {"family": "inverse_power_singularity", "center": [0.5], "beta": 0.25},
             "M": 2.0, "mc": {"samples": 20_000}}
    main(["run", "--config", write(tmp_path, "e.json", probe), "--out", str(tmp_path / "e")])
    assert float(read_csv(tmp_path / "e" / "measure-probe.csv")[0]["exact"]) == 0.125


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "measure-zero", "m": [0], "epsilon": 0.1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "nope"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "measure-zero", "m": [2], "epsilon": 0.1,
                                    "mc": {"sample": 10}})


def test_float_format():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true" and fmt([1, 2]) == "1 2" and fmt(None) == ""
