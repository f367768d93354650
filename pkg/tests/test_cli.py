import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from ddlab import cli


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    return code, out


def load_schema(name):
    with resources.files("ddlab.schemas").joinpath(f"{name}.json").open() as fh:
        return json.load(fh)


def check(command, payload):
    jsonschema.validate(payload, load_schema(command))


def test_usage_error_exits_1(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["no-such-command"]) == 1
    assert cli.main(["fixed", "--c", "0.0"]) == 1          # missing --b
    assert cli.main(["sweep", "--b", "0.1", "--c-from", "0", "--c-to", "1",
                     "--c-step", "-1"]) == 1


def test_numerical_failure_exits_2(tmp_path):
    # no fixed point at these parameters: no trap can certify
    code, _ = run(["trap", "--b", "0.25", "--c", "1.0"], tmp_path)
    assert code == 2


def test_fixed_points_output(tmp_path):
    code, out = run(["fixed", "--b", "0.25", "--c", "0.0"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("fixed", doc)
    xs = sorted(o["points"][0][0] for o in doc["fixed_points"])
    assert np.allclose(xs, [0.0, 1.25])


def test_orbits_json_and_csv(tmp_path):
    code, out = run(["orbits", "--b", "0.1", "--c", "-1.3",
                     "--max-period", "4", "--json"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("orbits", doc)
    assert sorted(o["period"] for o in doc["orbits"]) == [1, 1, 2]
    code, out = run(["orbits", "--b", "0.1", "--c", "-1.3",
                     "--max-period", "4", "--csv"], tmp_path, "out.csv")
    assert code == 0
    assert out.read_text().splitlines()[0].startswith("period,")


def test_quadritomie_cases(tmp_path):
    code, out = run(["quadritomie", "--b", "0.25", "--c", "1.0"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("quadritomie", doc)
    assert doc["case"] == "NoFixedPoint"


def test_trap_certificate_schema(tmp_path):
    code, out = run(["trap", "--b", "0.1", "--c", "-1.3"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("trap", doc)
    assert doc["certificate"]["certified"] is True


def test_cascade_schema(tmp_path):
    code, out = run(["cascade", "--b", "0.1", "--c", "-1.42",
                     "--max-period", "16"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("cascade", doc)
    assert doc["depth"] >= 2


def test_manifolds_output(tmp_path):
    code, out = run(["manifolds", "--b", "0.1", "--c", "-1.3"], tmp_path)
    assert code == 0
    check("manifolds", json.loads(out.read_text()))


def test_entropy_output(tmp_path):
    code, out = run(["entropy", "--b", "0.1", "--c", "-3.0"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("entropy", doc)
    assert doc["value"] > 0.4


def test_dissipation_output(tmp_path):
    code, out = run(["dissipation", "--b", "0.1", "--c", "-1.3"], tmp_path)
    assert code == 0
    check("dissipation", json.loads(out.read_text()))


def test_chains_output(tmp_path):
    code, out = run(["chains", "--b", "0.1", "--c", "-1.3",
                     "--max-period", "2"], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("chains", doc)
    assert doc["cycles"] == []


def test_sweep_csv_layout(tmp_path):
    code, out = run(["sweep", "--b", "0.1", "--c-from", "-1.0",
                     "--c-to", "-0.8", "--c-step", "0.1", "--csv"],
                    tmp_path, "sweep.csv")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "b,c,seed,case,attractor_period,entropy,cascade_depth,error"
    assert len(lines) == 4
    cs = [float(r.split(",")[1]) for r in lines[1:]]
    assert cs == sorted(cs)


def test_rerun_is_byte_identical(tmp_path):
    _, a = run(["orbits", "--b", "0.1", "--c", "-1.3", "--max-period", "4",
                "--seed", "7"], tmp_path, "a.json")
    _, b = run(["orbits", "--b", "0.1", "--c", "-1.3", "--max-period", "4",
                "--seed", "7"], tmp_path, "b.json")
    assert a.read_bytes() == b.read_bytes()


def test_sweep_threads_do_not_change_output(tmp_path, monkeypatch):
    argv = ["sweep", "--b", "0.1", "--c-from", "-1.0", "--c-to", "-0.8",
            "--c-step", "0.1", "--csv"]
    monkeypatch.setenv("DDLAB_THREADS", "1")
    _, a = run(argv, tmp_path, "t1.csv")
    monkeypatch.setenv("DDLAB_THREADS", "2")
    _, b = run(argv, tmp_path, "t2.csv")
    assert a.read_bytes() == b.read_bytes()


def test_h_file_input(tmp_path):
    xs = np.linspace(0.0, 1.0, 41)
    np.savetxt(tmp_path / "h.txt",
               np.column_stack([xs, 3.2 * xs * (1 - xs), 3.2 - 6.4 * xs]))
    code, out = run(["orbits", "--b", "0.01", "--max-period", "2",
                     "--h-file", str(tmp_path / "h.txt")], tmp_path)
    assert code == 0
    doc = json.loads(out.read_text())
    check("orbits", doc)
    assert len(doc["orbits"]) >= 1


def test_missing_h_file_is_usage_error(tmp_path):
    assert cli.main(["orbits", "--b", "0.01",
                     "--h-file", str(tmp_path / "missing.txt")]) == 1
