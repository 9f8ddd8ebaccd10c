"""Shared fixtures and the acceptance summary printed after the run."""

from __future__ import annotations

import math

import pytest
from hypothesis import settings

from asyncmdi.channel import ChannelConfig, SourceConfig
from asyncmdi.drift import DriftConfig
from asyncmdi.keyrate import SecurityConfig
from asyncmdi.matching import MatchingConfig
from asyncmdi.scenario import Scenario

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

#: Lines "CRITERION n: PASS|FAIL ..." collected by the acceptance tests.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def table1_channel() -> ChannelConfig:
    return ChannelConfig(l_a=150.0, l_b=150.0)


@pytest.fixture
def source() -> SourceConfig:
    return SourceConfig(mu=0.45, nu=0.03, p_mu=0.25, p_nu=0.2, p_o=0.5, p_ohat=0.05)


@pytest.fixture
def arbitrary_scenario(source) -> Scenario:
    return Scenario(
        source_a=source,
        source_b=source,
        channel=ChannelConfig(150.0, 150.0),
        matching=MatchingConfig(mode="arbitrary", sigma=math.pi / 36),
        N=1e12,
    )


@pytest.fixture
def short_scenario(source) -> Scenario:
    return Scenario(
        source_a=source,
        source_b=source,
        channel=ChannelConfig(125.0, 125.0),
        matching=MatchingConfig(mode="short", F=1e9, T_c=50e-6, sigma=math.pi / 10),
        drift=DriftConfig(),
        security=SecurityConfig(),
        N=1e12,
    )
