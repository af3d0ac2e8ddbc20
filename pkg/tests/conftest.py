import pytest

from ehankle.gait import cylinder_load_from_ankle, default_profile
from ehankle.hydraulics import HydraulicConfig, simulate_cycle


@pytest.fixture(scope="session")
def table1_config():
    return HydraulicConfig.table1()


@pytest.fixture(scope="session")
def default_load(table1_config):
    return cylinder_load_from_ankle(default_profile(table1_config.cadence_s), table1_config.linkage)


@pytest.fixture(scope="session")
def cycle_result(table1_config, default_load):
    return simulate_cycle(table1_config, default_load, n_steps=20000)
