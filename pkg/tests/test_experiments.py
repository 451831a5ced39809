import csv
import io
import json

import numpy as np
import pytest

from ising_continuum import cli
from ising_continuum.experiments import (ConfigError, ExperimentConfig, ResultTable, SCHEMAS,
                                         fingerprint, fit_power_law, instance_seed, preset,
                                         run)
from ising_continuum.instances import IsingInstance
from ising_continuum.models import ModelSpec, parse_grid, rewire_count
from ising_continuum.report import emit, render_svg, to_csv, to_json


def _small_rewire(jobs=1):
    return preset("rewire-sweep", 17, sizes=(16,), percents=(0, 50), replicates=3, jobs=jobs)


# -- models ---------------------------------------------------------------------


def test_grid_parsing():
    assert parse_grid("4x6") == (4, 6)
    assert parse_grid(5) == (5, 5)
    with pytest.raises(ValueError):
        parse_grid("4by6")


@pytest.mark.parametrize("spec,n", [
    (ModelSpec("mobius", 20), 20), (ModelSpec("torus", "4x6"), 24),
    (ModelSpec("chimera", "2x2"), 32), (ModelSpec("mattis-torus", "3x4"), 12),
    (ModelSpec("ladder-field", 12), 12), (ModelSpec("planar3r-field", 16), 16),
    (ModelSpec("circulant", 30, k=7), 30), (ModelSpec("sk", 9, "bimodal"), 9),
    (ModelSpec("regular", 20, k=4), 20), (ModelSpec("mattis-regular", 20), 20),
])
def test_specs_build_declared_size(spec, n):
    assert spec.spin_count() == n
    assert spec.build(3).n == n


def test_rewire_count_rounds_half_edges():
    from ising_continuum.instances import gen_mobius_ladder

    assert rewire_count(gen_mobius_ladder(50), 0.4) == 30
    with pytest.raises(ValueError):
        rewire_count(gen_mobius_ladder(5), 1.5)


def test_unknown_model():
    with pytest.raises(ValueError):
        ModelSpec("hypercube", 8)


# -- configuration ----------------------------------------------------------------


@pytest.mark.parametrize("over", [
    dict(experiment="nope"), dict(master_seed="x"), dict(replicates=0),
    dict(bands=((0.6, 0.5),)), dict(experiment="scaling", sizes=(202,)),
    dict(experiment="rewire-sweep", sizes=(9,), percents=(0,)),
    dict(experiment="connectivity-sweep", sizes=(31,), ks=(3,)),
    dict(experiment="simple-fraction", points=()),
])
def test_invalid_configs(over):
    kw = dict(experiment="rewire-sweep", master_seed=1, sizes=(16,), percents=(0,))
    kw.update(over)
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).validate()


def test_seeds_depend_on_every_coordinate():
    cfg = _small_rewire()
    seeds = {instance_seed(cfg, p, r) for p in range(3) for r in range(3)}
    assert len(seeds) == 9


def test_fingerprint_separates_weights():
    a = IsingInstance.from_edges(3, [(0, 1, -1.0), (1, 2, -1.0)])
    b = IsingInstance.from_edges(3, [(0, 1, -1.0), (1, 2, 1.0)])
    assert fingerprint(a) != fingerprint(b)
    assert fingerprint(a) == fingerprint(IsingInstance.from_edges(3, [(0, 1, -1.0),
                                                                      (1, 2, -1.0)]))


def test_power_law_fit_recovers_exponent():
    N = np.array([100, 200, 400, 800])
    f = fit_power_law(N, 0.006 * N ** 1.986)
    assert f["slope"] == pytest.approx(1.986)
    assert f["prefactor"] == pytest.approx(0.006)


# -- runners -------------------------------------------------------------------------


def test_rewire_sweep_schema_and_values():
    table = run(_small_rewire())
    assert table.columns == SCHEMAS["rewire-sweep"]
    assert [r["percent"] for r in table.rows] == [0, 50]
    zero = table.rows[0]
    # all replicates of the unrewired ladder are the same instance
    assert zero["iqr_lo"] == zero["iqr_hi"]
    assert zero["p_simple"] == 1.0
    assert all(r["unsolved_count"] == 0 for r in table.rows)
    assert len(table.details) == 6


def test_parallel_run_is_identical():
    a, b = run(_small_rewire(1)), run(_small_rewire(2))
    assert to_csv(a) == to_csv(b)


def test_connectivity_small():
    cfg = preset("connectivity-sweep", 5, sizes=(12,), ks=(2, 11), replicates=2)
    table = run(cfg)
    by_k = {r["k"]: r for r in table.rows}
    assert by_k[11]["p_simple"] == 1.0           # complete graph
    assert by_k[2]["frustration_mean"] >= 0


def test_simple_fraction_small():
    cfg = preset("simple-fraction", 5, points=(ModelSpec("mattis-complete", 10),
                                               ModelSpec("sk", 3, "gaussian")), replicates=5)
    table = run(cfg)
    assert [r["p_simple"] for r in table.rows] == [1.0, 1.0]


def test_scaling_fixed_budget_and_band():
    cfg = preset("scaling", 2, sizes=(8, 12), bands=((0.3, 0.7),), budgets=(50,), runs=20)
    table = run(cfg)
    ok = [r for r in table.rows if r["status"] == "ok"]
    fixed = [r for r in table.rows if r["status"] == "fixed_budget"]
    assert len(ok) == 2 and len(fixed) == 2
    assert all(0.3 <= r["p_measured"] <= 0.7 for r in ok)
    assert table.fit and "n_iter_at_1000" in table.fit[0]


def test_unsolved_rows_are_flagged():
    cfg = preset("rewire-sweep", 3, sizes=(40,), percents=(100,), replicates=2,
                 node_budget=0)
    table = run(cfg)
    assert table.rows[0]["unsolved_count"] == 2
    assert table.flagged


# -- output -------------------------------------------------------------------------------


def test_csv_and_json_outputs(tmp_path):
    table = run(_small_rewire())
    paths = emit(table, "csv", tmp_path / "sweep.csv")
    assert [p.name for p in paths] == ["sweep.csv", "sweep.details.json"]
    rows = list(csv.DictReader(io.StringIO(paths[0].read_text())))
    assert list(rows[0]) == table.all_columns
    assert rows[0]["master_seed"] == "17"
    doc = json.loads(to_json(table))
    assert len(doc) == 2 and doc[1]["percent"] == 50
    side = json.loads(paths[1].read_text())
    assert len(side["instances"]) == 6


def test_svg_is_reproducible(tmp_path):
    table = run(_small_rewire())
    a, b = render_svg(table), render_svg(table)
    assert a == b and a.lstrip().startswith("<?xml")


def test_empty_table_still_renders(tmp_path):
    empty = ResultTable("simple-fraction", SCHEMAS["simple-fraction"], [])
    assert to_csv(empty).strip() == ",".join(empty.all_columns)
    assert json.loads(to_json(empty)) == []
    assert "no data" in render_svg(empty)
    with pytest.raises(ValueError):
        emit(empty, "xlsx", tmp_path / "x")


# -- command line ------------------------------------------------------------------------------


def test_cli_generate_and_solve(tmp_path, capsys):
    inst = tmp_path / "m.json"
    assert cli.main(["generate", "--model", "mobius", "--size", "12", "--out", str(inst)]) == 0
    capsys.readouterr()
    assert cli.main(["solve", "--instance", str(inst)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["best_energy"] == -14 and doc["status"] == "optimal"


def test_cli_osc_check(capsys):
    assert cli.main(["osc-check", "--model", "mobius-odd-swap", "--size", "10"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["is_simple"] is False


def test_cli_ht_run_formats(tmp_path, capsys):
    out = tmp_path / "ht"
    code = cli.main(["ht-run", "--model", "mobius", "--size", "16", "--seed", "1",
                     "--max-iters", "100", "--format", "csv,json,svg", "--out", str(out)])
    assert code == 0
    for suffix in (".csv", ".json", ".svg"):
        assert out.with_suffix(suffix).exists()


def test_cli_experiment_writes_all_formats(tmp_path):
    out = tmp_path / "fr"
    code = cli.main(["exp-simple-fraction", "--seed", "4", "--model", "sk", "--dist", "bimodal",
                     "--sizes", "4,5", "--replicates", "3", "--format", "csv,json,svg",
                     "--out", str(out)])
    assert code == 0
    for name in ("fr.csv", "fr.json", "fr.svg", "fr.details.json"):
        assert (tmp_path / name).exists()


@pytest.mark.parametrize("argv", [
    ["exp-rewire", "--sizes", "16"],                          # no master seed
    ["generate", "--model", "sk", "--size", "5"],             # random model without seed
    ["generate", "--model", "mobius", "--size", "7"],         # odd spin count
    ["solve", "--instance", "/nonexistent/x.json"],
    ["exp-rewire", "--seed", "1", "--sizes", "9"],
    ["bogus"],
])
def test_cli_config_errors(argv, capsys):
    assert cli.main(argv) == 2


def test_cli_budget_exit(tmp_path, capsys):
    code = cli.main(["solve", "--model", "regular", "--size", "60", "--dist", "gaussian",
                     "--seed", "1", "--method", "bb", "--node-budget", "10"])
    assert code == 3
    code = cli.main(["exp-rewire", "--seed", "1", "--sizes", "40", "--percents", "100",
                     "--replicates", "1", "--node-budget", "0", "--out",
                     str(tmp_path / "r.csv")])
    assert code == 3
