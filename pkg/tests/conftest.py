"""
Shared fixtures: bundled fixture networks, scenario configs and random networks
"""

from pathlib import Path
from typing import Sequence, Tuple

import numpy as np
import pytest

from app.core.config import PlanningModel, ScenarioConfig, get_settings
from app.network.loader import load_network
from app.network.schemas import Bus, Line, Network, Snapshot

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "data" / "fixtures"
CONFIGS = ROOT / "config"

TRIANGLE_DIR = FIXTURES / "triangle"
TWO_ZONE_DIR = FIXTURES / "two_zone"
GAS_ONLY_DIR = FIXTURES / "gas_only"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are cached per process; tests start from defaults"""
    monkeypatch.delenv("SLACK_BUS", raising=False)
    monkeypatch.delenv("SOLVER_BACKEND", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def triangle() -> Network:
    return load_network(TRIANGLE_DIR)


@pytest.fixture
def two_zone() -> Network:
    return load_network(TWO_ZONE_DIR)


@pytest.fixture
def gas_only() -> Network:
    return load_network(GAS_ONLY_DIR)


@pytest.fixture
def two_zone_config() -> ScenarioConfig:
    return ScenarioConfig.from_toml(CONFIGS / "two_zone.toml")


@pytest.fixture
def triangle_config() -> ScenarioConfig:
    return ScenarioConfig(name="triangle", model=PlanningModel.PREVENTIVE)


def make_network(buses: Sequence[str], lines: Sequence[Tuple[str, str, str, float]],
                 patl: float = 100.0) -> Network:
    """Network with one snapshot, no generators and no loads"""
    return Network(
        buses=tuple(Bus(id=b) for b in buses),
        lines=tuple(Line(id=i, from_bus=f, to_bus=t, reactance=x, patl=patl) for i, f, t, x in lines),
        generators=(),
        loads=(),
        snapshots=(Snapshot(label="h0", weight=8760.0),),
    )


def triangle_network(orientation_bc: Tuple[str, str] = ("B", "C")) -> Network:
    return make_network(
        ["A", "B", "C"],
        [("AB", "A", "B", 0.1), ("BC", *orientation_bc, 0.1), ("AC", "A", "C", 0.1)],
    )


def random_connected_network(rng: np.random.Generator, n_min: int = 5, n_max: int = 20) -> Network:
    """Random spanning tree plus random extra lines (parallel lines allowed)"""
    n = int(rng.integers(n_min, n_max + 1))
    buses = [f"b{i}" for i in range(n)]
    lines = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        lines.append((f"t{i}", buses[j], buses[i], float(rng.uniform(0.1, 2.0))))
    for e in range(int(rng.integers(0, n))):
        i, j = rng.choice(n, size=2, replace=False)
        lines.append((f"e{e}", buses[int(i)], buses[int(j)], float(rng.uniform(0.1, 2.0))))
    return make_network(buses, lines)


def balanced_injections(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.uniform(-100.0, 100.0, size=n)
    return p - p.mean()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)

