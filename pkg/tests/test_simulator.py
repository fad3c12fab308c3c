import json

import numpy as np
import pytest

from fleam import simulator as sim
from fleam.cli import sample_file


def test_zero_bots_zero_delay():
    r = sim.run_delay_simulation(sim.AttackScenario(bot_count=0, trials=10))
    assert r.mean_delay == 0.0 and r.per_1000_bots == 0.0


def test_pure_pattern_one_without_jitter_is_exact():
    sc = sim.AttackScenario(bot_count=750, mix=(1.0, 0.0, 0.0), jitter=0.0, trials=5)
    r = sim.run_delay_simulation(sc)
    assert np.all(r.traces["delay"] == 750 * 1.9)
    assert r.stdev_delay == 0.0


def test_ratio_matches_closed_form_for_several_mixes():
    for mix in [(1 / 3, 1 / 3, 1 / 3), (0.6, 0.3, 0.1), (0.1, 0.1, 0.8)]:
        c = sim.compare_delay_models(sim.AttackScenario(mix=mix, trials=300, seed=2))
        assert abs(c.ratio_mean - c.closed_form) <= max(c.ratio_ci, 1e-12) * 3
        assert 0.25 <= c.ratio_mean <= 0.32


def test_delay_linear_in_bot_count():
    curve = sim.delay_curve(sim.AttackScenario(trials=200), range(100, 1001, 100))
    n = np.array([c[0] for c in curve], dtype=float)
    for col in (1, 2):
        y = np.array([c[col] for c in curve])
        slope, icpt = np.polyfit(n, y, 1)
        resid = y - (slope * n + icpt)
        r2 = 1 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
        assert r2 > 0.999


def test_seeded_runs_reproduce():
    a = sim.run_delay_simulation(sim.AttackScenario(trials=50, seed=9))
    b = sim.run_delay_simulation(sim.AttackScenario(trials=50, seed=9))
    assert a.traces["delay"].tobytes() == b.traces["delay"].tobytes()
    assert a.traces["queue_total"].tobytes() == b.traces["queue_total"].tobytes()


def test_scenario_validation():
    with pytest.raises(ValueError):
        sim.AttackScenario(mix=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        sim.AttackScenario(delay_model="cloud")


def test_scenario_file_loading(tmp_path):
    sc, spec = sim.load_scenario(sample_file("scenario.ini"), seed=4)
    assert sc.trials == 1000 and spec.defenders == 4 and sc.seed == spec.seed == 4
    (tmp_path / "s.json").write_text(json.dumps({"delay": {"bot_count": 10, "mix": [1, 0, 0]}}))
    sc, _ = sim.load_scenario(tmp_path / "s.json")
    assert sc.bot_count == 10 and sc.mix == (1, 0, 0)
    (tmp_path / "bad.json").write_text(json.dumps({"delay": {"bots": 10}}))
    with pytest.raises(ValueError):
        sim.load_scenario(tmp_path / "bad.json")


@pytest.fixture(scope="module")
def small_traffic():
    return sim.mixed_traffic(sim.TrafficSpec(slots=6, seed=1))


def _truth(traffic):
    return lambda ws: [t.malicious for t in traffic]


def test_perfect_detector_joint(small_traffic):
    r = sim.run_accuracy_simulation(small_traffic, sim.Defense("joint"), _truth(small_traffic))
    assert (r.bpr, r.mdr, r.system_accuracy) == (1.0, 1.0, 1.0)


def test_drop_everything_detector(small_traffic):
    r = sim.run_accuracy_simulation(small_traffic, sim.Defense("joint"), lambda ws: [True] * len(ws))
    assert (r.bpr, r.mdr, r.system_accuracy) == (0.0, 1.0, 0.5)


def test_accuracy_is_mean_of_rates(small_traffic):
    rng = np.random.default_rng(0)
    flags = rng.random(len(small_traffic)) < 0.5
    for mode in ("joint", "individual"):
        r = sim.run_accuracy_simulation(small_traffic, sim.Defense(mode), None, flags)
        assert r.system_accuracy == (r.bpr + r.mdr) / 2


def test_single_class_stream_flags_undefined(small_traffic):
    benign = [t for t in small_traffic if not t.malicious]
    r = sim.run_accuracy_simulation(benign, sim.Defense(), lambda ws: [False] * len(ws))
    assert r.mdr is None and r.system_accuracy is None and r.info["undefined"] == ["mdr"]


def test_individual_misses_nonlocal_attacks(small_traffic):
    r = sim.run_accuracy_simulation(small_traffic, sim.Defense("individual"), _truth(small_traffic))
    local = [t.malicious and t.victim == t.observer for t in small_traffic]
    assert r.mdr == sum(local) / sum(t.malicious for t in small_traffic)


def test_joint_beats_individual_with_trained_detector(detector, small_traffic):
    grid = sim.accuracy_grid(small_traffic, detector)
    for placement in ("victim", "attacker"):
        assert grid[("joint", placement)].system_accuracy >= grid[("individual", placement)].system_accuracy


def test_reports_written(tmp_path):
    c = sim.compare_delay_models(sim.AttackScenario(trials=20))
    sim.write_reports_csv([("v", c.victim), ("a", c.attacker)], tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[1].startswith("v,")
    sim.write_summary_json(c.summary(), tmp_path / "s.json")
    assert json.loads((tmp_path / "s.json").read_text())["closed_form_ratio"] == pytest.approx(2.6 / 9.1)
