"""
Lifetime analysis of a disk network with one sink at the center.

Nodes at distance B from the sink either forward hop by hop (range A0) or,
with probability P_r(B), form a CB/CT cluster that reaches the sink in one
shot. The per-ring transmission load is balanced by a bisection on the
temperature kappa, the common upper bound on every ring's load.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from errors import InvalidParameterError
from gainmodels import DEFAULT_MAX_CLUSTER, PhyParams, invert_cluster_size
from numerics import Tolerance, bisect_threshold

log = logging.getLogger(__name__)

MODES = ("cb", "ct", "ideal", "direct")
SAVING_TABLE_RATIOS = (2, 4, 6, 8, 10)

_HOP_SLACK = 1e-9


@dataclass(frozen=True)
class DiskScenario:
    B0: float
    A0: float | None = None
    grid_count: int = 100
    mode: str = "ideal"
    phy: PhyParams = field(default_factory=PhyParams)
    n_max: int = DEFAULT_MAX_CLUSTER

    def __post_init__(self):
        if not self.B0 > 0:
            raise InvalidParameterError(f"B0 must be > 0, got {self.B0}")
        if self.A0 is not None and not self.A0 > 0:
            raise InvalidParameterError(f"A0 must be > 0, got {self.A0}")
        if int(self.grid_count) != self.grid_count or self.grid_count < 2:
            raise InvalidParameterError(f"grid_count must be an integer >= 2, got {self.grid_count}")
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got '{self.mode}'")

    @property
    def hop_range(self):
        """A0, given explicitly or derived from the link budget."""
        return self.A0 if self.A0 is not None else self.phy.single_hop_range()

    def ring_radii(self):
        return self.B0 * np.arange(1, self.grid_count + 1) / self.grid_count

    def ring_index(self, radius):
        """0-based index of the grid ring nearest to radius."""
        return int(math.floor(radius * self.grid_count / self.B0 + 0.5)) - 1


@dataclass
class BypassProfile:
    ring_radii: np.ndarray
    p_r: np.ndarray
    n_joint: np.ndarray
    n_pf: np.ndarray
    n_cluster: np.ndarray
    kappa: float

    @property
    def max_njoint(self):
        return float(self.n_joint.max())

    @property
    def max_npf(self):
        return float(self.n_pf.max())

    def to_frame(self):
        return pd.DataFrame({
            "ring_radius": self.ring_radii,
            "p_r": self.p_r,
            "n_pf": self.n_pf,
            "n_joint": self.n_joint,
            "n_cluster": self.n_cluster,
        })


def _check_radius(B, scenario: DiskScenario):
    if not 0 < B <= scenario.B0 * (1 + _HOP_SLACK):
        raise InvalidParameterError(f"ring radius must lie in (0, B0={scenario.B0}], got {B}")


def hop_count(B, scenario: DiskScenario):
    """floor((B0 - B) / A0): how many rings further out forward through B."""
    return int(math.floor((scenario.B0 - B) / scenario.hop_range + _HOP_SLACK))


def npf(B, scenario: DiskScenario):
    """Packets a node at distance B transmits under pure packet forwarding."""
    _check_radius(B, scenario)
    a0 = scenario.hop_range
    return math.fsum(1.0 + n * a0 / B for n in range(hop_count(B, scenario) + 1))


def cluster_size_for_ring(B, scenario: DiskScenario):
    """Cluster size that stretches a single hop from A0 to B."""
    _check_radius(B, scenario)
    if scenario.mode == "direct":
        return 1
    c0 = max(B / scenario.hop_range, 1.0) ** scenario.phy.alpha
    return invert_cluster_size(c0, scenario.mode, scenario.phy, scenario.n_max)


def _ring_load(k, radii, p_r, scenario: DiskScenario):
    """Packets ring k must carry: its own plus what outer rings forward."""
    B = radii[k]
    a0 = scenario.hop_range
    load = 0.0
    survive = 1.0
    for n in range(hop_count(B, scenario) + 1):
        if n:
            j = scenario.ring_index(B + n * a0)
            survive *= 1.0 - (p_r[j] if j < len(p_r) else 0.0)
        load += (1.0 + n * a0 / B) * survive
    return load


def njoint_profile(p_r, scenario: DiskScenario, n_cluster=None):
    """Per-node transmissions on every ring for a given bypass probability profile."""
    radii = scenario.ring_radii()
    p_r = np.asarray(p_r, dtype=float)
    if p_r.shape != radii.shape:
        raise InvalidParameterError(f"P_r needs {len(radii)} entries, got {p_r.shape}")
    if np.any(p_r < 0) or np.any(p_r > 1):
        raise InvalidParameterError("P_r entries must lie in [0, 1]")
    if n_cluster is None:
        n_cluster = cluster_sizes(scenario)

    loads = np.array([_ring_load(k, radii, p_r, scenario) for k in range(len(radii))])
    return (1.0 - p_r + n_cluster * p_r) * loads


def cluster_sizes(scenario: DiskScenario):
    return np.array([cluster_size_for_ring(B, scenario) for B in scenario.ring_radii()])


def _sweep(kappa, scenario: DiskScenario, radii, n_cluster, rel):
    """Greedy outer-to-inner sweep: the largest P_r that keeps each ring at kappa.

    Returns (feasible, p_r, n_joint).
    """
    G = len(radii)
    p_r = np.zeros(G)
    n_joint = np.zeros(G)
    feasible = True
    for k in range(G - 1, -1, -1):
        load = _ring_load(k, radii, p_r, scenario)
        if n_cluster[k] > 1:
            p = (kappa / load - 1.0) / (n_cluster[k] - 1.0)
            p_r[k] = min(max(p, 0.0), 1.0)
        n_joint[k] = (1.0 - p_r[k] + n_cluster[k] * p_r[k]) * load
        if load > kappa * (1.0 + rel):
            feasible = False
    return feasible, p_r, n_joint


def optimize_bypass(scenario: DiskScenario, tol: Tolerance | None = None) -> BypassProfile:
    """min over P_r of max_B N_joint(B), by bisection on kappa in [1, max N_pf]."""
    tol = tol or Tolerance(rel=1e-9, abs=0.0, max_iters=200)
    radii = scenario.ring_radii()
    n_cluster = cluster_sizes(scenario)
    n_pf = np.array([npf(B, scenario) for B in radii])
    kappa_hi = float(n_pf.max())

    def feasible(kappa):
        return _sweep(kappa, scenario, radii, n_cluster, tol.rel)[0]

    # bracket width 1e-6 * kappa_hi
    kappa = bisect_threshold(feasible, 1.0, kappa_hi, Tolerance(rel=1e-6, abs=0.0, max_iters=tol.max_iters))
    _, p_r, n_joint = _sweep(kappa, scenario, radii, n_cluster, tol.rel)
    log.debug(f"optimize_bypass B0={scenario.B0} mode={scenario.mode}: kappa={kappa:.6g}")

    return BypassProfile(ring_radii=radii, p_r=p_r, n_joint=n_joint, n_pf=n_pf,
                         n_cluster=n_cluster, kappa=kappa)


def _fixed_profile(scenario: DiskScenario, probability):
    radii = scenario.ring_radii()
    n_cluster = cluster_sizes(scenario)
    p_r = np.full(len(radii), float(probability))
    n_joint = njoint_profile(p_r, scenario, n_cluster)
    n_pf = np.array([npf(B, scenario) for B in radii])
    return BypassProfile(ring_radii=radii, p_r=p_r, n_joint=n_joint, n_pf=n_pf,
                         n_cluster=n_cluster, kappa=float(n_joint.max()))


def forwarding_profile(scenario: DiskScenario) -> BypassProfile:
    """Pure packet forwarding, P_r = 0 everywhere."""
    return _fixed_profile(scenario, 0.0)


def pure_profile(scenario: DiskScenario) -> BypassProfile:
    """Pure CB/CT: every node reaches the sink in one cluster shot, P_r = 1."""
    return _fixed_profile(scenario, 1.0)


def saving_percent(profile: BypassProfile):
    return 100.0 * (1.0 - profile.max_njoint / profile.max_npf)


def saving_table(ratios=SAVING_TABLE_RATIOS, alpha=4.0, grid_count=100, mode="ideal", phy=None):
    """Worst-ring load and saving against forwarding for B0/A0 in ratios."""
    phy = phy or PhyParams(alpha=alpha)
    rows = []
    for ratio in ratios:
        scenario = DiskScenario(B0=float(ratio), A0=1.0, grid_count=grid_count, mode=mode, phy=phy)
        profile = optimize_bypass(scenario)
        rows.append({
            "b0_over_a0": ratio,
            "kappa": profile.kappa,
            "max_njoint": profile.max_njoint,
            "max_npf": profile.max_npf,
            "saving_percent": saving_percent(profile),
        })
    return pd.DataFrame(rows)
