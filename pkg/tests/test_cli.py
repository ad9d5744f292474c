import json

import numpy as np
import pytest

from musyn.cli import UsageError, main, parse_grid, parse_strategy
from musyn.dkiter import FixedOrder, ListOrder
from musyn.lti import (
    FrequencyGrid,
    FrequencyResponseData,
    StateSpace,
    freq_response,
)

from conftest import make_rs_plant, write_frd_csv


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# flag parsing


def test_parse_grid_log():
    grid = parse_grid("0.01:100:5:log")
    assert len(grid) == 5
    assert grid.omegas[0] == pytest.approx(0.01)
    assert grid.omegas[-1] == pytest.approx(100.0)


def test_parse_grid_lin():
    grid = parse_grid("1:5:5:lin")
    assert np.allclose(grid.omegas, [1, 2, 3, 4, 5])


@pytest.mark.parametrize(
    "bad", ["1:2:3", "0:2:5:log", "2:1:5:log", "1:2:1:log", "1:2:5:cubic"]
)
def test_parse_grid_rejects(bad):
    with pytest.raises(UsageError):
        parse_grid(bad)


def test_parse_strategy_fixed():
    s = parse_strategy("fixed:order=4,iters=3")
    assert isinstance(s, FixedOrder)
    assert (s.order, s.iterations) == (4, 3)


def test_parse_strategy_list():
    s = parse_strategy("list:2,2,2")
    assert isinstance(s, ListOrder)
    assert s.orders == [2, 2, 2]


def test_parse_strategy_interactive():
    assert parse_strategy("interactive:max_order=5") == ("interactive", 5)


def test_parse_strategy_rejects_unknown():
    with pytest.raises(UsageError):
        parse_strategy("genetic:pop=10")
    with pytest.raises(UsageError):
        parse_strategy("fixed:bogus=1")


# ---------------------------------------------------------------------------
# subcommands


def test_norm_first_order(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps(StateSpace.from_tf([1.0], [1.0, 1.0]).to_dict()))
    code, out, _ = run(["norm", str(p)], capsys)
    assert code == 0
    assert float(out) == pytest.approx(1.0, rel=1e-4)


def test_norm_static_gain(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps(StateSpace.static_gain([[2.0]]).to_dict()))
    code, out, _ = run(["norm", str(p)], capsys)
    assert code == 0 and float(out) == pytest.approx(2.0)


def test_norm_unstable_exits_2(tmp_path, capsys):
    p = tmp_path / "g.json"
    unstable = StateSpace(np.array([[1.0]]), np.eye(1), np.eye(1), np.zeros((1, 1)))
    p.write_text(json.dumps(unstable.to_dict()))
    code, _, err = run(["norm", str(p)], capsys)
    assert code == 2
    assert "unstable system" in err


def test_norm_missing_file_exits_2(tmp_path, capsys):
    code, _, _ = run(["norm", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_mu_half_identity(tmp_path, capsys):
    sys_p = tmp_path / "half.json"
    sys_p.write_text(json.dumps(StateSpace.static_gain(0.5 * np.eye(2)).to_dict()))
    st_p = tmp_path / "st.json"
    st_p.write_text(json.dumps([{"kind": "full", "dim": 2}]))
    out_csv = tmp_path / "mu.csv"
    code, out, _ = run(
        [
            "mu",
            str(sys_p),
            "--structure",
            str(st_p),
            "--grid",
            "0.1:10:4:log",
            "-o",
            str(out_csv),
        ],
        capsys,
    )
    assert code == 0
    assert "robust: yes" in out
    rows = out_csv.read_text().strip().splitlines()
    assert rows[0] == "omega,mu_upper"
    assert len(rows) == 5
    assert float(rows[1].split(",")[1]) == pytest.approx(0.5, rel=1e-3)


def test_mu_not_robust(tmp_path, capsys):
    sys_p = tmp_path / "two.json"
    sys_p.write_text(json.dumps(StateSpace.static_gain(2.0 * np.eye(2)).to_dict()))
    st_p = tmp_path / "st.json"
    st_p.write_text(json.dumps([{"kind": "full", "dim": 2}]))
    code, out, _ = run(
        ["mu", str(sys_p), "--structure", str(st_p), "--grid", "0.1:10:3:log"],
        capsys,
    )
    assert code == 0
    assert "robust: no" in out


def test_mu_malformed_structure_exits_2(tmp_path, capsys):
    sys_p = tmp_path / "half.json"
    sys_p.write_text(json.dumps(StateSpace.static_gain(0.5 * np.eye(2)).to_dict()))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(
        ["mu", str(sys_p), "--structure", str(bad), "--grid", "0.1:10:3:log"],
        capsys,
    )
    assert code == 2
    assert "line 1" in err


def test_hinfsyn_writes_controller(tmp_path, capsys):
    from test_hinf import sensitivity_plant

    plant_p = tmp_path / "plant.json"
    plant_p.write_text(json.dumps(sensitivity_plant().to_dict()))
    out_p = tmp_path / "K.json"
    code, out, _ = run(["hinfsyn", str(plant_p), "-o", str(out_p)], capsys)
    assert code == 0
    gamma = float(out.split("gamma:")[1])
    assert gamma == pytest.approx(1.0, rel=5e-3)
    K = StateSpace.from_dict(json.loads(out_p.read_text()))
    assert K.n_inputs == 1 and K.n_outputs == 1


def test_dkiter_end_to_end(tmp_path, capsys):
    spec_p = tmp_path / "spec.json"
    spec_p.write_text(
        json.dumps(
            {
                "plant": make_rs_plant().to_dict(),
                "uncertainty": [{"kind": "full", "dim": 1}],
                "n_w2": 1,
                "n_z2": 1,
            }
        )
    )
    out_dir = tmp_path / "out"
    code, out, _ = run(
        [
            "dkiter",
            str(spec_p),
            "--grid",
            "0.01:100:12:log",
            "--strategy",
            "list:2",
            "--out-dir",
            str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    peaks = [it["peak"] for it in report["iterations"]]
    assert report["best_peak"] <= peaks[0]
    assert (out_dir / "controller.json").exists()
    assert (out_dir / "mu_iter0.csv").exists()
    assert (out_dir / "mu_iter1.csv").exists()
    assert "best peak" in out


def test_dkiter_missing_spec_exits_2(tmp_path, capsys):
    code, _, _ = run(
        ["dkiter", str(tmp_path / "nope.json"), "--strategy", "list:2"], capsys
    )
    assert code == 2


def test_ucover_pipeline(tmp_path, capsys):
    grid = FrequencyGrid(np.logspace(-1, 1, 10))
    G0 = StateSpace.from_tf([1.0], [1.0, 1.0])
    nom = freq_response(G0, grid)
    nom_p = tmp_path / "nom.csv"
    write_frd_csv(nom_p, nom)
    model_paths = []
    for g in (0.8, 1.1, 1.3):
        p = tmp_path / f"m{g}.csv"
        write_frd_csv(p, FrequencyResponseData(grid, g * nom.values))
        model_paths.append(str(p))
    out_dir = tmp_path / "uc"
    code, out, _ = run(
        [
            "ucover",
            "--nominal",
            str(nom_p),
            "--models",
            *model_paths,
            "--form",
            "multiplicative_input",
            "--order",
            "1",
            "--grid",
            "0.1:10:10:log",
            "--out-dir",
            str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    assert (out_dir / "max_sv.csv").exists()
    assert (out_dir / "weight_response.csv").exists()
    weights = json.loads((out_dir / "weight.json").read_text())
    assert len(weights) == 1
    # gain perturbations: max |E| = 0.3 at every frequency; fit overbounds
    rows = (out_dir / "max_sv.csv").read_text().strip().splitlines()[1:]
    sv = np.array([float(r.split(",")[1]) for r in rows])
    assert np.allclose(sv, 0.3, atol=1e-9)


def test_ucover_unknown_form_exits_2(tmp_path, capsys):
    grid = FrequencyGrid(np.logspace(-1, 1, 5))
    nom = freq_response(StateSpace.from_tf([1.0], [1.0, 1.0]), grid)
    nom_p = tmp_path / "nom.csv"
    write_frd_csv(nom_p, nom)
    code, _, err = run(
        [
            "ucover",
            "--nominal",
            str(nom_p),
            "--models",
            str(nom_p),
            "--form",
            "bogus",
            "--grid",
            "0.1:10:5:log",
        ],
        capsys,
    )
    assert code == 2
    assert "additive" in err and "multiplicative_input" in err
