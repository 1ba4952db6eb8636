import os

import pytest

from gainmodels import PhyParams
from routing import SensorNode, build_links, load_topology

HERE = os.path.dirname(os.path.abspath(__file__))
SNAPSHOT = os.path.join(HERE, "snapshot_topology.json")


@pytest.fixture
def phy():
    """10 dBm, -70 dBm noise, alpha 4, 10 dB threshold: A0 = 56.23 m."""
    return PhyParams()


@pytest.fixture
def snapshot_path():
    return SNAPSHOT


@pytest.fixture
def snapshot_nodes():
    return load_topology(SNAPSHOT)


@pytest.fixture
def snapshot_links(snapshot_nodes, phy):
    return build_links(snapshot_nodes, phy)


@pytest.fixture
def one_hop_nodes():
    """One origin 30 m from the sink."""
    return [SensorNode(id=1, x=0.0, y=0.0, Q=-1.0), SensorNode(id=2, x=30.0, y=0.0, Q=1.0)]


@pytest.fixture
def chain_nodes():
    """a -> b -> sink on a line, only a generates traffic."""
    return [
        SensorNode(id=1, x=0.0, y=0.0, Q=-1.0),
        SensorNode(id=2, x=40.0, y=0.0, Q=0.0),
        SensorNode(id=3, x=80.0, y=0.0, Q=1.0),
    ]
