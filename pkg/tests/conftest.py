from __future__ import annotations

from importlib import resources

import pytest

from ponfog.rwa import load_table1
from ponfog.sim import SimConfig
from ponfog.topology import build_fog_topology


@pytest.fixture(scope="session")
def topo():
    return build_fog_topology()


@pytest.fixture(scope="session")
def table1():
    return load_table1()


@pytest.fixture(scope="session")
def sim_cfg(topo, table1):
    return SimConfig(topo, table1)


def data_file(*parts: str) -> str:
    path = resources.files("ponfog.data")
    for p in parts:
        path = path.joinpath(p)
    return str(path)
