import csv
import json
import subprocess
import sys

import pytest

from qedprim import Circuit
from qedprim.cli import EXIT_CONFIG, EXIT_LIMIT, EXIT_OK, main
from qedprim.qasm import import_qasm


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


class TestBuild:
    def test_outputs_and_stats(self, tmp_path, capsys):
        assert main(["build", "cnot-ued", "--n", "6", "--detect", "--out", str(tmp_path)]) == EXIT_OK
        line = capsys.readouterr().out
        assert "depth=5" in line and "cnots=10" in line
        c = Circuit.from_json((tmp_path / "cnot-ued.json").read_text())
        assert c.stats().n_measure_optional == 3
        assert import_qasm((tmp_path / "cnot-ued.qasm").read_text()).ops == c.ops

    def test_ghz_chain(self, tmp_path, capsys):
        assert main(["build", "ghz", "--chain", "10", "--flags", "type0", "--out", str(tmp_path)]) == EXIT_OK
        assert "depth=7" in capsys.readouterr().out

    @pytest.mark.parametrize("proto", ["cnot-mb", "cnot-fud", "cnot-mixed", "bell-ued", "bell-mixed", "fanout"])
    def test_other_protocols(self, tmp_path, proto):
        args = ["build", proto, "--n", "8", "--out", str(tmp_path)]
        if "mixed" in proto:
            args += ["--k", "2"]
        assert main(args) == EXIT_OK
        assert (tmp_path / f"{proto}.qasm").exists()


class TestExitCodes:
    def test_unknown_protocol(self, tmp_path):
        assert main(["build", "teleport-everything", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_invalid_n(self, tmp_path):
        assert main(["build", "cnot-ued", "--n", "2", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_preset(self, tmp_path):
        assert main(["run", "cnot-ued", "--preset", "lunar", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"colour": "blue"}))
        assert main(["build", "cnot-ued", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_oracle_limit(self, tmp_path):
        assert main(["ghz-mqc", "--layout", "ghz75", "--exact", "--preset", "bitflip",
                     "--out", str(tmp_path)]) == EXIT_LIMIT

    def test_report_without_results(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == EXIT_CONFIG


class TestExperiments:
    def test_certify_csv(self, tmp_path):
        assert main(["certify-cnot", "--n", "3-4", "--detect", "on", "--shots", "50", "--preset", "ibm-like",
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = list(csv.reader((tmp_path / "certify_cnot.csv").open()))
        assert rows[0] == ["n", "variant", "detect", "F_gate", "std", "discard"]
        assert [r[0] for r in rows[1:]] == ["3", "4"]
        data = json.loads((tmp_path / "certify_cnot.json").read_text())
        assert data["rows"][0]["seed"] == 0 and "noise_digest" in data["rows"][0]

    def test_certify_exact_noiseless(self, tmp_path):
        assert main(["certify-cnot", "--n", "4", "--detect", "off", "--exact", "--out", str(tmp_path)]) == EXIT_OK
        row = json.loads((tmp_path / "certify_cnot.json").read_text())["rows"][0]
        assert row["F_gate"] == pytest.approx(1.0)

    def test_ghz_mqc_exact(self, tmp_path):
        assert main(["ghz-mqc", "--chain", "5", "--exact", "--out", str(tmp_path)]) == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "ghz_mqc.csv").open()))
        assert [int(r["flags"]) for r in rows] == [0, 1, 2]
        assert all(float(r["F"]) == pytest.approx(1.0) for r in rows)

    def test_ghz_mqc_sampled_with_mitigation(self, tmp_path):
        assert main(["ghz-mqc", "--chain", "4", "--flags", "none", "--shots", "200", "--mitigate",
                     "--preset", "ibm-like", "--out", str(tmp_path)]) == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "ghz_mqc.csv").open()))
        assert len(rows) == 1 and 0.0 <= float(rows[0]["F"]) <= 1.0

    def test_tomography_exact(self, tmp_path):
        assert main(["tomography", "--n", "4", "--exact", "--out", str(tmp_path)]) == EXIT_OK
        rep = json.loads((tmp_path / "tomography.json").read_text())
        assert rep["fidelity"] == pytest.approx(1.0) and len(rep["rho"]) == 4

    def test_report(self, tmp_path):
        main(["run", "cnot-ued", "--n", "4", "--shots", "20", "--out", str(tmp_path)])
        main(["tomography", "--n", "4", "--exact", "--out", str(tmp_path)])
        assert main(["report", "--out", str(tmp_path)]) == EXIT_OK
        rep = json.loads((tmp_path / "report.json").read_text())
        assert set(rep["results"]) == {"run.json", "tomography.json"}

    def test_config_file_sets_defaults(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"shots": 30, "seed": 5, "preset": "bitflip"}))
        out = tmp_path / "o"
        assert main(["run", "cnot-ued", "--n", "4", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        prov = json.loads((out / "run.json").read_text())["provenance"]
        assert (prov["shots"], prov["seed"], prov["preset"]) == (30, 5, "bitflip")


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["run", "cnot-ued", "--n", "5", "--detect", "--shots", "300", "--preset", "ibm-like", "--seed", "4"],
        ["certify-cnot", "--n", "3", "--detect", "on", "--shots", "40", "--preset", "bitflip"],
        ["ghz-mqc", "--chain", "4", "--shots", "100", "--preset", "bitflip"],
        ["tomography", "--n", "4", "--shots", "100", "--preset", "ibm-like"],
    ])
    def test_byte_identical(self, tmp_path, argv):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == EXIT_OK
        assert main(argv + ["--out", str(b)]) == EXIT_OK
        assert _files(a) == _files(b)

    def test_console_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "qedprim.cli", "build", "cnot-mb", "--n", "6",
                            "--out", str(tmp_path)], capture_output=True, text=True)
        assert r.returncode == 0 and "depth=2" in r.stdout
