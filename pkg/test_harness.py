import json

import numpy as np
import pandas as pd
import pytest

from diskanalysis import npf
from errors import InvalidParameterError
from harness import (
    ExperimentConfig,
    ResultTable,
    _disk_scenario,
    derived_seed,
    generate_topology,
    run_compare,
    run_disk,
    run_gain,
    run_snapshot,
    summarize_compare,
)


def read_header(csv_text):
    first = csv_text.splitlines()[0]
    assert first.startswith("# config: ")
    return json.loads(first[len("# config: "):])


class TestConfig:
    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig(kind="plot")

    def test_needs_an_instance(self):
        with pytest.raises(InvalidParameterError):
            ExperimentConfig(kind="compare", n_instances=0)

    def test_workers_not_recorded(self):
        assert "workers" not in ExperimentConfig(kind="disk", workers=4).to_dict()

    def test_derived_seeds_differ(self):
        assert derived_seed(1, 10, 0) != derived_seed(1, 10, 1)
        assert derived_seed(1, 10, 0) == derived_seed(1, 10, 0)


class TestTopology:
    def test_two_nodes(self):
        nodes = generate_topology(2, 100.0, seed=1)
        assert [n.is_sink for n in nodes] == [True, False]
        assert nodes[0].Q == -1.0

    def test_rates_balance(self):
        nodes = generate_topology(12, 100.0, seed=3)
        assert sum(n.Q for n in nodes) == 0.0
        assert all(n.E_init == 1.0 for n in nodes)
        assert all(0.0 <= n.x <= 100.0 and 0.0 <= n.y <= 100.0 for n in nodes)

    def test_seeded(self):
        a = [(n.x, n.y) for n in generate_topology(10, 100.0, seed=42)]
        b = [(n.x, n.y) for n in generate_topology(10, 100.0, seed=42)]
        assert a == b

    def test_too_small(self):
        with pytest.raises(InvalidParameterError):
            generate_topology(1, 100.0, seed=1)


class TestResultTable:
    def test_csv_carries_config(self, tmp_path):
        config = ExperimentConfig(kind="disk", seed=9)
        table = ResultTable(pd.DataFrame({"a": [1.0, 2.5]}), {"config": config.to_dict(), "version": "x"})
        path = tmp_path / "out.csv"
        text = table.to_csv(path)
        assert path.read_text() == text
        header = read_header(text)
        assert header["config"]["seed"] == 9
        assert text.splitlines()[1:] == ["a", "1", "2.5"]


class TestGainSweep:
    def test_single_node_cluster_is_one(self):
        config = ExperimentConfig(kind="gain-ct", cluster_size=1, radii=(10, 50), trials=200)
        frame = run_gain(config).frame
        assert np.all(frame["closed_form"] == 1.0)
        assert np.all(frame["monte_carlo"] == 1.0)
        assert np.all(frame["exact"] == 1.0)

    def test_seed_repeat_is_identical(self):
        config = ExperimentConfig(kind="gain-ct", radii=(20, 60), trials=2000, with_exact=False)
        assert run_gain(config).to_csv() == run_gain(config).to_csv()

    def test_worker_count_does_not_change_table(self):
        one = ExperimentConfig(kind="gain-ct", radii=(40,), trials=3000, with_exact=False, workers=1)
        many = ExperimentConfig(kind="gain-ct", radii=(40,), trials=3000, with_exact=False, workers=3)
        assert run_gain(one).to_csv() == run_gain(many).to_csv()

    def test_closed_form_outside_domain_is_nan(self):
        config = ExperimentConfig(kind="gain-ct", radii=(150,), trials=100, with_exact=False)
        assert np.isnan(run_gain(config).frame.loc[0, "closed_form"])

    def test_beamforming_columns(self):
        config = ExperimentConfig(kind="gain-cb", cluster_size=8, radii=(1,), trials=20)
        frame = run_gain(config).frame
        assert list(frame.columns) == ["R", "N", "A", "closed_form", "monte_carlo", "stderr"]
        assert frame.loc[0, "monte_carlo"] >= 1.0


@pytest.fixture(scope="module")
def tables():
    return run_disk(ExperimentConfig(kind="disk", b0_over_a0=(2, 4), grid_count=50))


class TestDisk:
    def test_forwarding_curve_is_npf(self, tables):
        curves, _ = tables
        config = ExperimentConfig(kind="disk", grid_count=50)
        rows = curves.frame[curves.frame["b0_over_a0"] == 4]
        scenario = _disk_scenario(config, 4)
        assert np.allclose(rows["forwarding"], [npf(B, scenario) for B in rows["ring_radius"]], rtol=1e-12)

    def test_joint_never_worse_than_forwarding(self, tables):
        curves, _ = tables
        for _, rows in curves.frame.groupby("b0_over_a0"):
            assert rows["joint"].max() <= rows["forwarding"].max()

    def test_summary_has_saving(self, tables):
        _, summary = tables
        assert list(summary.frame["b0_over_a0"]) == [2, 4]
        assert np.all(summary.frame["saving_percent"] > 80.0)

    def test_summary_has_pure_maximum(self, tables):
        _, summary = tables
        frame = summary.frame.set_index("b0_over_a0")
        # ideal pure CB/CT: the edge ring needs (B0/A0)^4 cluster members
        assert frame.loc[2, "max_pure"] == pytest.approx(16.0)
        assert frame.loc[4, "max_pure"] == pytest.approx(256.0)
        assert np.all(frame["max_njoint"] <= frame["max_pure"])


@pytest.fixture(scope="module")
def compare_config():
    return ExperimentConfig(kind="compare", field_size=60.0, n_nodes=(6, 8), n_instances=3, seed=5)


class TestCompare:
    def test_dominance(self, compare_config):
        frame = run_compare(compare_config).frame
        assert len(frame) > 0
        assert np.all(frame["lp_coop"] >= frame["lp_direct"] - 1e-9)
        assert np.all(frame["lp_direct"] >= frame["shortest_path"] - 1e-9)

    def test_deterministic_under_workers(self, compare_config):
        parallel = ExperimentConfig(kind="compare", field_size=60.0, n_nodes=(6, 8), n_instances=3, seed=5,
                                    workers=2)
        assert run_compare(compare_config).to_csv() == run_compare(parallel).to_csv()

    def test_dynamic_column(self):
        config = ExperimentConfig(kind="compare", field_size=60.0, n_nodes=(6,), n_instances=2,
                                  with_dynamic=True, packet_energy=0.05)
        frame = run_compare(config).frame
        assert "dynamic" in frame.columns
        # the heuristic realises a feasible flow, so it cannot beat the LP by more than one packet
        assert np.all(frame["dynamic"] <= frame["lp_coop"] + 0.05 + 1e-9)

    def test_summary(self, compare_config):
        table = run_compare(compare_config)
        summary = summarize_compare(table).frame
        assert list(summary["n_nodes"]) == sorted(set(table.frame["n_nodes"]))
        assert summary["instances"].sum() == len(table.frame)

    @pytest.mark.slow
    def test_cooperation_gain_band(self):
        """L = 100 m, 10 dB threshold, 10..30 users, 50 instances each."""
        config = ExperimentConfig(kind="compare", n_nodes=(10, 15, 20, 25, 30), n_instances=50, seed=2024)
        summary = summarize_compare(run_compare(config)).frame
        improvement = summary["lp_coop"].mean() / summary["lp_direct"].mean() - 1.0
        assert 0.03 <= improvement <= 0.25
        assert summary["shortest_path"].is_monotonic_decreasing


class TestSnapshot:
    def test_all_algorithms(self, snapshot_nodes):
        frame = run_snapshot(snapshot_nodes, ExperimentConfig(kind="snapshot")).frame.set_index("algorithm")
        assert frame.loc["shortest_path", "lifetime"] == pytest.approx(0.2)
        assert frame.loc["lp_direct", "lifetime"] == pytest.approx(0.2, abs=1e-6)
        assert frame.loc["lp_coop", "lifetime"] == pytest.approx(1.0 / 3.0, abs=1e-6)
        assert frame.loc["dynamic", "lifetime"] >= 0.2 - 1e-9
