import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from mtdeval.cli import main
from mtdeval.experiments import distance_regret_study, sweep_frequency
from mtdeval.graph import generate_synthetic, load_graph, parse_graph
from mtdeval.planner import Backend
from mtdeval.report import (
    REGRET_COLUMNS,
    STATS_COLUMNS,
    parse_regret_csv,
    parse_stats_csv,
    regret_csv,
    stats_csv,
)

SMALL = ["--nodes", "10", "--out-degree", "2", "--pool", "5", "--graph-seed", "3", "--backend", "greedy",
         "--horizon", "6"]


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def header(path):
    return tuple(path.read_text().splitlines()[0].split(","))


def test_gen_graph_round_trip_and_bytes(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["gen-graph", "--nodes", "20", "--out-degree", "3", "--p", "0.9", "--pool", "10",
                     "--seed", "1", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    g = parse_graph(a.read_text())
    assert g == generate_synthetic(20, 3, 0.9, 10, 1)
    assert "20 nodes" in capsys.readouterr().out


def test_gen_graph_rejects_one_node(tmp_path, capsys):
    assert main(["gen-graph", "--nodes", "1", "--out", str(tmp_path / "g.json")]) == 2
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "g.json").exists()


def test_simulate_with_graph_file(tmp_path):
    gfile = tmp_path / "g.json"
    main(["gen-graph", "--nodes", "10", "--out-degree", "2", "--pool", "5", "--seed", "3", "--out", str(gfile)])
    argv = ["simulate", "--graph", str(gfile), "--k", "3", "--period", "3", "--trials", "100", "--seed", "1",
            "--backend", "greedy", "--horizon", "6", "--t-max", "30"]
    assert run(tmp_path, *argv) == 0
    first = (tmp_path / "simulate.csv").read_bytes()
    assert run(tmp_path, *argv) == 0
    assert (tmp_path / "simulate.csv").read_bytes() == first
    assert header(tmp_path / "simulate.csv") == STATS_COLUMNS
    [row] = parse_stats_csv(first.decode())
    assert row.stats.trials == 100 and row.frequency == pytest.approx(1 / 3) and row.k == 3


def test_missing_graph_file(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert run(tmp_path, "simulate", "--graph", str(missing)) == 2
    assert str(missing) in capsys.readouterr().err


def test_too_many_ids(tmp_path, capsys):
    assert run(tmp_path, "simulate", *SMALL, "--k", "99", "--trials", "1") == 2
    assert "k" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--frequency", "0.4"],
        ["simulate", "--period", "3", "--frequency", "1/3"],
        ["sweep", "--kind", "bogus"],
        ["simulate", "--backend", "nope"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_two(tmp_path, argv, capsys):
    assert main(argv) == 2


def test_invalid_period_and_trials(tmp_path):
    assert run(tmp_path, "simulate", *SMALL, "--period", "0", "--trials", "1") == 2
    assert run(tmp_path, "simulate", *SMALL, "--trials", "0") == 2


def test_frequency_sweep_rows_and_plot(tmp_path):
    argv = ["sweep", *SMALL, "--trials", "40", "--t-max", "30", "--seed", "2"]
    assert run(tmp_path, *argv) == 0
    rows = parse_stats_csv((tmp_path / "sweep.csv").read_text())
    assert [r.frequency for r in rows] == [0.0, 0.2, 0.25, 1 / 3, 0.5, 1.0]
    assert not (tmp_path / "sweep.svg").exists()
    first = (tmp_path / "sweep.csv").read_bytes()
    assert run(tmp_path, *argv, "--plot") == 0
    assert (tmp_path / "sweep.csv").read_bytes() == first
    root = ET.fromstring((tmp_path / "sweep.svg").read_text())
    assert root.tag.endswith("svg")
    assert any(el.tag.endswith("polyline") for el in root.iter())


def test_ids_sweep_rows(tmp_path):
    assert run(tmp_path, "sweep", *SMALL, "--kind", "ids", "--trials", "30", "--t-max", "30") == 0
    rows = parse_stats_csv((tmp_path / "sweep.csv").read_text())
    assert [r.k for r in rows] == [1, 2, 3, 4, 5]
    assert all(r.frequency == pytest.approx(1 / 3) for r in rows)


def test_regret_command(tmp_path, capsys):
    g = generate_synthetic(10, 2, 0.9, 5, 3)
    argv = ["regret", *SMALL, "--schedules", "3", "--episodes", "5",
            "--initial", f"{g.target_node},{g.initial_node}"]
    assert run(tmp_path, *argv) == 0
    out = capsys.readouterr().out
    assert "chi-squared" in out
    text = (tmp_path / "regret.csv").read_text()
    assert header(tmp_path / "regret.csv") == REGRET_COLUMNS
    rows = parse_regret_csv(text)
    assert len(rows) == 6
    assert all(r.regret == 0.0 for r in rows if r.initial_state == g.target_node)
    first = (tmp_path / "regret.csv").read_bytes()
    assert run(tmp_path, *argv) == 0
    assert (tmp_path / "regret.csv").read_bytes() == first


def test_regret_defaults(tmp_path):
    assert run(tmp_path, "regret", *SMALL, "--episodes", "1") == 0
    rows = parse_regret_csv((tmp_path / "regret.csv").read_text())
    assert {r.schedule_index for r in rows} == set(range(10))


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"trials": 25, "t_max": 20, "period": 2, "k": 2, "backend": "greedy", "nodes": 10,
                               "out_degree": 2, "pool": 5, "graph_seed": 3, "horizon": 6}))
    assert main(["--config", str(cfg), "simulate", "--out-dir", str(tmp_path)]) == 0
    [row] = parse_stats_csv((tmp_path / "simulate.csv").read_text())
    assert (row.stats.trials, row.k, row.frequency) == (25, 2, 0.5)
    assert main(["--config", str(cfg), "simulate", "--trials", "7", "--out-dir", str(tmp_path)]) == 0
    [row] = parse_stats_csv((tmp_path / "simulate.csv").read_text())
    assert row.stats.trials == 7


@pytest.mark.parametrize(
    "content", ['{"bogus": 1}', '{"trials": "many"}', '{"backend": "quantum"}', "[1, 2]", "{not json"]
)
def test_bad_config(tmp_path, content, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(content)
    assert main(["--config", str(cfg), "simulate", "--out-dir", str(tmp_path)]) == 2
    assert "config" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["--config", str(tmp_path / "none.json"), "simulate"]) == 2


def test_csv_round_trip_is_exact():
    g = generate_synthetic(10, 2, 0.8, 5, 3)
    sweep = sweep_frequency(g, 2, [0, Fraction(1, 3), 1], horizon=6, t_max=25, trials=30, seed=5,
                            backend=Backend.GREEDY)
    assert tuple(parse_stats_csv(stats_csv(sweep.rows))) == sweep.rows
    study = distance_regret_study(g, [g.initial_node, g.target_node], n_schedules=2, horizon=6, h=10,
                                  backend=Backend.GREEDY, episodes=3)
    assert parse_regret_csv(regret_csv(study.rows)) == study.rows


def test_parse_rejects_wrong_header():
    with pytest.raises(ValueError):
        parse_stats_csv("a,b\n1,2\n")
    with pytest.raises(ValueError):
        parse_regret_csv("a,b\n1,2\n")


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.json"
    done = subprocess.run([sys.executable, "-m", "mtdeval", "gen-graph", "--nodes", "6", "--out-degree", "2",
                           "--pool", "3", "--out", str(out)], capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert load_graph(out).node_count == 6
    bad = subprocess.run([sys.executable, "-m", "mtdeval", "simulate", "--graph", str(tmp_path / "x.json")],
                         capture_output=True, text=True)
    assert bad.returncode == 2
