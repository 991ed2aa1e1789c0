import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from afdm_shaping import AfdmConfig, LazSpec, build_quadform_cache, design_from_symbols  # noqa: E402
from afdm_shaping.baselines import random_symbols  # noqa: E402


def random_unit_energy(rng, n):
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return u * np.sqrt(n) / np.linalg.norm(u)


def random_design(cfg, seed):
    """Design vector with random 8PSK data, random pre-chirp indices and random R entries."""
    rng = np.random.default_rng(seed)
    part = cfg.partition
    x = random_symbols(cfg, seed)[: part.n_data]
    r = rng.standard_normal(part.n_reserved) + 1j * rng.standard_normal(part.n_reserved)
    idx = rng.integers(0, cfg.prechirp_size, cfg.n_subcarriers)
    return design_from_symbols(cfg, x, r if part.n_reserved else None, idx)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_setup():
    cfg = AfdmConfig.create(16, 0.5)
    laz = LazSpec(tau_max=2, mu_min=-1, mu_max=1, n_mu=3)
    design = random_design(cfg, 3)
    return cfg, laz, design, build_quadform_cache(cfg, laz, design.b)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
