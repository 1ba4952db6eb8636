import numpy as np
import pandas as pd
import pytest

from diskanalysis import (
    BypassProfile,
    DiskScenario,
    cluster_size_for_ring,
    cluster_sizes,
    forwarding_profile,
    hop_count,
    njoint_profile,
    npf,
    optimize_bypass,
    pure_profile,
    saving_percent,
    saving_table,
)
from errors import InvalidParameterError
from gainmodels import PhyParams

# lifetime saving table, ideal mode, alpha = 4, 100 rings
SAVING_TABLE = {
    2: (2.82, 94.56, 52.0),
    4: (10.25, 93.33, 154.0),
    6: (23.4, 90.86, 256.0),
    8: (42.5, 88.13, 358.0),
    10: (64.5, 85.98, 460.0),
}


def unit_disk(b0, grid=100, mode="ideal", **kw):
    return DiskScenario(B0=b0, A0=1.0, grid_count=grid, mode=mode, **kw)


class TestScenario:
    def test_ring_radii(self):
        assert np.allclose(unit_disk(2.0, grid=4).ring_radii(), [0.5, 1.0, 1.5, 2.0])

    def test_ring_index_rounds_to_nearest(self):
        scenario = unit_disk(2.0, grid=4)
        assert scenario.ring_index(1.0) == 1
        assert scenario.ring_index(1.2) == 1
        assert scenario.ring_index(1.3) == 2

    def test_hop_range_from_link_budget(self):
        scenario = DiskScenario(B0=200.0)
        assert scenario.hop_range == pytest.approx(56.2341325190, rel=1e-9)

    @pytest.mark.parametrize("kwargs", [{"B0": 0.0}, {"B0": 1.0, "A0": -1.0}, {"B0": 1.0, "grid_count": 1},
                                        {"B0": 1.0, "mode": "mimo"}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            DiskScenario(**kwargs)


class TestForwardingLoad:
    def test_outer_band_forwards_nothing(self):
        scenario = unit_disk(3.0)
        for B in (2.01, 2.5, 3.0):
            assert npf(B, scenario) == 1.0

    def test_two_term_sum(self):
        assert npf(1.0, unit_disk(2.0)) == 3.0

    def test_innermost_ring_of_large_disk(self):
        assert npf(0.1, unit_disk(10.0)) == pytest.approx(460.0, rel=1e-12)

    def test_hop_count_exact_multiple(self):
        assert hop_count(0.2, unit_disk(2.0)) == 1
        assert hop_count(1.0, unit_disk(3.0)) == 2

    def test_radius_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            npf(0.0, unit_disk(2.0))
        with pytest.raises(InvalidParameterError):
            npf(2.5, unit_disk(2.0))


class TestClusterSize:
    def test_within_single_hop(self):
        assert cluster_size_for_ring(0.8, unit_disk(2.0)) == 1

    def test_ideal_double_range(self):
        assert cluster_size_for_ring(2.0, unit_disk(2.0)) == 16

    def test_ideal_one_and_a_half_range(self):
        assert cluster_size_for_ring(1.5, unit_disk(2.0)) == 6

    def test_direct_mode_never_clusters(self):
        assert cluster_size_for_ring(2.0, unit_disk(2.0, mode="direct")) == 1

    def test_beamforming_needs_at_least_ideal(self):
        ideal = cluster_sizes(unit_disk(3.0, grid=30))
        cb = cluster_sizes(unit_disk(3.0, grid=30, mode="cb"))
        ct = cluster_sizes(unit_disk(3.0, grid=30, mode="ct"))
        assert np.all(cb >= ideal)
        assert np.all(ct >= ideal)


class TestJointProfile:
    def test_no_bypass_is_forwarding(self):
        scenario = unit_disk(4.0)
        profile = njoint_profile(np.zeros(100), scenario)
        expected = [npf(B, scenario) for B in scenario.ring_radii()]
        assert np.allclose(profile, expected, rtol=1e-12)

    def test_full_bypass_sends_own_packet_only(self):
        scenario = unit_disk(4.0)
        profile = njoint_profile(np.ones(100), scenario)
        assert np.array_equal(profile, cluster_sizes(scenario).astype(float))

    def test_outer_bypass_cuts_inner_forwarding(self):
        scenario = unit_disk(2.0, grid=4)
        # rings 0.5, 1.0, 1.5, 2.0; only the outer ring bypasses
        profile = njoint_profile([0.0, 0.0, 0.0, 1.0], scenario)
        assert np.allclose(profile, [4.0, 1.0, 1.0, 16.0])

    def test_rejects_bad_probabilities(self):
        with pytest.raises(InvalidParameterError):
            njoint_profile(np.full(100, 1.5), unit_disk(2.0))
        with pytest.raises(InvalidParameterError):
            njoint_profile(np.zeros(3), unit_disk(2.0))


class TestOptimizeBypass:
    def test_small_disk_needs_no_forwarding(self):
        profile = optimize_bypass(unit_disk(1.0))
        assert profile.kappa == 1.0
        assert np.all(profile.p_r == 0.0)
        assert np.allclose(profile.n_joint, 1.0)

    @pytest.mark.parametrize("ratio", sorted(SAVING_TABLE))
    def test_profile_invariants(self, ratio):
        profile = optimize_bypass(unit_disk(float(ratio)))
        assert np.all((profile.p_r >= 0) & (profile.p_r <= 1))
        assert np.all(profile.n_joint <= profile.kappa * (1 + 1e-6))
        assert np.all(profile.n_cluster >= 1)
        assert profile.max_njoint <= forwarding_profile(unit_disk(float(ratio))).max_njoint

    def test_direct_mode_cannot_bypass(self):
        profile = optimize_bypass(unit_disk(4.0, grid=50, mode="direct"))
        assert np.all(profile.p_r == 0.0)
        assert np.all(profile.n_cluster == 1)
        assert saving_percent(profile) == pytest.approx(0.0, abs=1e-9)

    def test_deterministic(self):
        a = optimize_bypass(unit_disk(6.0))
        b = optimize_bypass(unit_disk(6.0))
        assert a.kappa == b.kappa
        assert np.array_equal(a.p_r, b.p_r)

    def test_frame_columns(self):
        frame = optimize_bypass(unit_disk(2.0, grid=10)).to_frame()
        assert list(frame.columns) == ["ring_radius", "p_r", "n_pf", "n_joint", "n_cluster"]
        assert len(frame) == 10


class TestFixedProfiles:
    def test_forwarding_saves_nothing(self):
        assert saving_percent(forwarding_profile(unit_disk(4.0))) == pytest.approx(0.0, abs=1e-12)

    def test_pure_uses_outer_cluster_size(self):
        profile = pure_profile(unit_disk(2.0))
        assert profile.max_njoint == 16.0
        assert np.all(profile.p_r == 1.0)

    def test_saving_definition(self):
        profile = BypassProfile(ring_radii=np.array([1.0]), p_r=np.array([0.5]), n_joint=np.array([2.0]),
                                n_pf=np.array([8.0]), n_cluster=np.array([3]), kappa=2.0)
        assert saving_percent(profile) == 75.0


@pytest.fixture(scope="module")
def table():
    return saving_table()


class TestSavingTable:
    def test_rows(self, table):
        assert isinstance(table, pd.DataFrame)
        assert list(table["b0_over_a0"]) == [2, 4, 6, 8, 10]

    def test_forwarding_baseline_is_exact(self, table):
        for _, row in table.iterrows():
            assert row["max_npf"] == pytest.approx(SAVING_TABLE[int(row["b0_over_a0"])][2], rel=1e-9)

    def test_worst_ring_load_within_band(self, table):
        for _, row in table.iterrows():
            expected = SAVING_TABLE[int(row["b0_over_a0"])][0]
            assert row["max_njoint"] == pytest.approx(expected, rel=0.15)

    def test_saving_within_band(self, table):
        for _, row in table.iterrows():
            expected = SAVING_TABLE[int(row["b0_over_a0"])][1]
            assert abs(row["saving_percent"] - expected) <= 3.0

    def test_saving_shrinks_with_disk_size(self, table):
        assert table["saving_percent"].is_monotonic_decreasing

    def test_worst_ring_load_grows_with_disk_size(self, table):
        assert table["max_njoint"].is_monotonic_increasing

    def test_custom_phy(self):
        table = saving_table(ratios=(2,), phy=PhyParams(alpha=3.0))
        # c0 = 2^3 at the edge
        assert table.loc[0, "max_njoint"] <= 8.0 + 1e-3
