"""
Experiment drivers: random topologies, the cluster gain sweep, the disk
curves and the routing comparison. Every driver returns a ResultTable
whose metadata carries the full config, so a table can be regenerated
from its own header.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from config_helper import DEFAULT_SEED, DEFAULT_WORKERS, VERSION
from diskanalysis import (
    SAVING_TABLE_RATIOS,
    DiskScenario,
    forwarding_profile,
    optimize_bypass,
    pure_profile,
    saving_percent,
)
from errors import ApproximationDomainError, InvalidParameterError
from gainmodels import (
    ClusterGeometry,
    PhyParams,
    cb_gain_bound,
    cb_gain_monte_carlo,
    ct_gain_closed_form,
    ct_gain_exact,
    ct_gain_monte_carlo,
)
from routing import (
    CostParams,
    SensorNode,
    TrafficSpec,
    build_links,
    shortest_path_lifetime,
    simulate_dynamic,
    solve_lifetime_lp,
    stranded_origins,
)

log = logging.getLogger(__name__)

KINDS = ("gain-ct", "gain-cb", "disk", "snapshot", "compare")
COMPARE_COLUMNS = ("shortest_path", "lp_direct", "lp_coop")


@dataclass
class ExperimentConfig:
    kind: str
    phy: PhyParams = field(default_factory=PhyParams)
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    output: str | None = None

    # gain sweep
    cluster_size: int = 10
    distance: float = 1000.0
    radii: tuple = tuple(range(10, 101, 10))
    trials: int = 100_000
    with_exact: bool = True

    # disk
    b0_over_a0: tuple = SAVING_TABLE_RATIOS
    a0: float | None = 1.0
    grid_count: int = 100
    mode: str = "ideal"

    # compare
    field_size: float = 100.0
    n_nodes: tuple = (10, 15, 20, 25, 30)
    n_instances: int = 50
    with_dynamic: bool = False
    beta1: float = 2.0
    beta2: float = 2.0
    packet_energy: float = 0.01

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"kind must be one of {KINDS}, got '{self.kind}'")
        if self.n_instances < 1:
            raise InvalidParameterError(f"n_instances must be >= 1, got {self.n_instances}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")
        if any(n < 2 for n in self.n_nodes):
            raise InvalidParameterError(f"every user count needs n >= 2, got {self.n_nodes}")

    def to_dict(self):
        data = asdict(self)
        # the worker count never changes a table
        data.pop("workers")
        data.pop("output")
        return data


@dataclass
class ResultTable:
    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self):
        return list(self.frame.columns)

    def to_csv(self, path=None):
        """CSV preceded by one '# config: {...}' comment line."""
        header = "# config: " + json.dumps(self.metadata, sort_keys=True, default=_jsonable) + "\n"
        body = header + self.frame.to_csv(index=False, float_format="%.10g", lineterminator="\n")
        if path is None:
            return body
        with open(path, 'w') as f:
            f.write(body)
        return body


def _jsonable(value):
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    return str(value)


def _metadata(config: ExperimentConfig, **extra):
    return {"version": VERSION, "config": config.to_dict(), **extra}


def derived_seed(seed, *key):
    """Independent integer seed for one sub-experiment."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])


# ---------------------------------------------------------------- topologies

def generate_topology(n, field_size, seed):
    """n - 1 unit-rate sensors and one sink (node 1), uniform in the square."""
    if n < 2:
        raise InvalidParameterError(f"a topology needs n >= 2 nodes, got {n}")
    if not field_size > 0:
        raise InvalidParameterError(f"field size must be > 0, got {field_size}")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, field_size, size=(n, 2))
    return [
        SensorNode(id=k + 1, x=float(xy[k, 0]), y=float(xy[k, 1]), E_init=1.0,
                   Q=-(n - 1.0) if k == 0 else 1.0)
        for k in range(n)
    ]


# ---------------------------------------------------------------- gain sweep

def run_gain(config: ExperimentConfig) -> ResultTable:
    """Closed form against Monte Carlo (and quadrature for CT) over config.radii."""
    phy = config.phy
    cooperative = config.kind == "gain-ct"
    rows = []
    for k, R in enumerate(config.radii):
        geom = ClusterGeometry(N=config.cluster_size, R=float(R), A=config.distance)
        seed = derived_seed(config.seed, k)
        row = {"R": float(R), "N": geom.N, "A": geom.A}

        if cooperative:
            row["z"] = phy.good_channel_argument(geom.R)
            try:
                row["closed_form"] = ct_gain_closed_form(geom, phy).value
            except ApproximationDomainError as e:
                log.warning(f"R={R}: {e}")
                row["closed_form"] = math.nan
            mc = ct_gain_monte_carlo(geom, phy, config.trials, seed, config.workers)
        else:
            row["closed_form"] = cb_gain_bound(geom, phy).value
            mc = cb_gain_monte_carlo(geom, phy, config.trials, seed, config.workers)

        row["monte_carlo"] = mc.value
        row["stderr"] = mc.stderr
        if cooperative and config.with_exact:
            row["exact"] = ct_gain_exact(geom, phy).value
        rows.append(row)
        log.info(f"{config.kind} R={R}: closed={row['closed_form']:.6g} mc={mc.value:.6g}±{mc.stderr:.2g}")

    return ResultTable(pd.DataFrame(rows), _metadata(config))


# ---------------------------------------------------------------- disk curves

def _disk_scenario(config: ExperimentConfig, ratio):
    a0 = config.a0 if config.a0 is not None else config.phy.single_hop_range()
    return DiskScenario(B0=ratio * a0, A0=a0, grid_count=config.grid_count, mode=config.mode, phy=config.phy)


def run_disk(config: ExperimentConfig):
    """Forwarding, pure CB/CT and jointly optimized curves per disk size.

    Returns (curves, summary); summary has one saving row per B0/A0.
    """
    curves, summary = [], []
    for ratio in config.b0_over_a0:
        scenario = _disk_scenario(config, ratio)
        forwarding = forwarding_profile(scenario)
        pure = pure_profile(scenario)
        joint = optimize_bypass(scenario)

        curves.append(pd.DataFrame({
            "b0_over_a0": ratio,
            "ring_radius": joint.ring_radii,
            "forwarding": forwarding.n_joint,
            "pure": pure.n_joint,
            "joint": joint.n_joint,
            "p_r": joint.p_r,
            "n_cluster": joint.n_cluster,
        }))
        summary.append({
            "b0_over_a0": ratio,
            "kappa": joint.kappa,
            "max_njoint": joint.max_njoint,
            "max_npf": joint.max_npf,
            "max_pure": pure.max_njoint,
            "saving_percent": saving_percent(joint),
        })
        log.info(f"disk B0/A0={ratio}: max N_joint={joint.max_njoint:.4g}, saving={saving_percent(joint):.2f}%")

    metadata = _metadata(config)
    return ResultTable(pd.concat(curves, ignore_index=True), metadata), ResultTable(pd.DataFrame(summary), metadata)


# ---------------------------------------------------------------- routing comparison

def run_snapshot(nodes, config: ExperimentConfig) -> ResultTable:
    """Every routing algorithm on one fixed topology."""
    links = build_links(nodes, config.phy)
    direct = solve_lifetime_lp(nodes, links, with_coop=False)
    coop = solve_lifetime_lp(nodes, links, with_coop=True)
    dynamic = simulate_dynamic(nodes, links, CostParams(config.beta1, config.beta2),
                               TrafficSpec(packet_energy=config.packet_energy), seed=config.seed)
    rows = [
        {"algorithm": "shortest_path", "lifetime": shortest_path_lifetime(nodes, links)},
        {"algorithm": "lp_direct", "lifetime": direct.T},
        {"algorithm": "lp_coop", "lifetime": coop.T},
        {"algorithm": "dynamic", "lifetime": dynamic.lifetime},
    ]
    return ResultTable(pd.DataFrame(rows), _metadata(config, n_direct=len(links.direct),
                                                     n_cooperative=len(links.cooperative)))


def _compare_instance(task):
    """One random instance; None when some sensor cannot reach the sink."""
    config, n, index = task
    seed = derived_seed(config.seed, n, index)
    nodes = generate_topology(n, config.field_size, seed)
    links = build_links(nodes, config.phy)
    if stranded_origins(nodes, links, with_coop=False):
        return None

    row = {
        "n_nodes": n,
        "instance": index,
        "seed": seed,
        "shortest_path": shortest_path_lifetime(nodes, links),
        "lp_direct": solve_lifetime_lp(nodes, links, with_coop=False).T,
        "lp_coop": solve_lifetime_lp(nodes, links, with_coop=True).T,
    }
    if config.with_dynamic:
        traffic = TrafficSpec(packet_energy=config.packet_energy)
        row["dynamic"] = simulate_dynamic(nodes, links, CostParams(config.beta1, config.beta2),
                                          traffic, seed=seed).lifetime
    return row


def run_compare(config: ExperimentConfig) -> ResultTable:
    """Per-instance lifetimes of shortest path, the direct-link LP and the cooperative LP."""
    tasks = [(config, n, index) for n in config.n_nodes for index in range(config.n_instances)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_compare_instance, tasks))
    else:
        results = [_compare_instance(task) for task in tasks]

    rows = []
    for (_, n, index), row in zip(tasks, results):
        if row is None:
            log.warning(f"compare: instance {index} with {n} nodes is disconnected, skipped")
            continue
        rows.append(row)

    columns = ["n_nodes", "instance", "seed", *COMPARE_COLUMNS] + (["dynamic"] if config.with_dynamic else [])
    frame = pd.DataFrame(rows, columns=columns)
    frame["improvement"] = frame["lp_coop"] / frame["lp_direct"] - 1.0
    log.info(f"compare: {len(frame)} of {len(tasks)} instances connected")
    return ResultTable(frame, _metadata(config, skipped=len(tasks) - len(frame)))


def summarize_compare(table: ResultTable) -> ResultTable:
    """Per user count means, plus the mean improvement of the cooperative LP."""
    frame = table.frame
    value_columns = [c for c in frame.columns if c not in ("n_nodes", "instance", "seed")]
    grouped = frame.groupby("n_nodes", sort=True)
    summary = grouped[value_columns].mean().reset_index()
    summary.insert(1, "instances", grouped.size().values)
    return ResultTable(summary, table.metadata)
