from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from liftns import harness, spectral
from liftns.config import ExperimentConfig, parse_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# Shipped n=32 configs share grid, viscosity, step and horizon, so one physical
# run serves all of their validations.
SHIPPED_N32 = ("tg_constant", "tg_identity", "tg_affine_free", "tg_affine_locked")

_acceptance_lines: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return record_acceptance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid8():
    return spectral.make_grid(8)


@pytest.fixture(scope="session")
def grid16():
    return spectral.make_grid(16)


@pytest.fixture(scope="session")
def shipped_configs() -> dict[str, ExperimentConfig]:
    return {p.stem: parse_config(p) for p in sorted(CONFIG_DIR.glob("*.cfg"))}


@pytest.fixture(scope="session")
def physical_n32(shipped_configs) -> harness.PhysicalRun:
    cfgs = [shipped_configs[name] for name in SHIPPED_N32]
    base = cfgs[0]
    for c in cfgs[1:]:
        assert (c.grid_n, c.period, c.nu, c.dt, c.T, c.tg_amplitude, c.pq, c.sample_every) == (
            base.grid_n, base.period, base.nu, base.dt, base.T, base.tg_amplitude, base.pq,
            base.sample_every,
        )
    return harness.physical_run(base)


@pytest.fixture(scope="session")
def validation_reports(shipped_configs, physical_n32):
    """Lazily computed ``run_validation`` reports for every shipped config."""
    cache: dict[str, harness.RunReport] = {}

    def get(name: str) -> harness.RunReport:
        if name not in cache:
            cfg = shipped_configs[name]
            shared = physical_n32 if name in SHIPPED_N32 else None
            cache[name] = harness.run_validation(cfg, physical=shared)
        return cache[name]

    return get
