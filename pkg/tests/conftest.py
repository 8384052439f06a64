import math

import pytest

from singvar.gauge import default_gauge
from singvar.mollifier import build_mollifier
from singvar.dynamics import SystemName, SystemSpec


@pytest.fixture(scope="session")
def gauge():
    return default_gauge()


@pytest.fixture(scope="session")
def mol4():
    return build_mollifier(4)


@pytest.fixture(scope="session")
def pendulum_spec(gauge, mol4):
    return SystemSpec(SystemName.PENDULUM,
                      dict(L1=0.4, L2=0.2, g=9.8, theta0=math.pi / 40, m=1.0),
                      mol4, gauge)


@pytest.fixture(scope="session")
def damped_spec(gauge, mol4):
    return SystemSpec(SystemName.DAMPED_TWO_MEDIA,
                      dict(Lambda=0.6, g=9.8, theta0=math.pi / 40,
                           beta1=0.0064, beta2=0.3859, m=1.0),
                      mol4, gauge)


@pytest.fixture(scope="session")
def pu_spec(gauge, mol4):
    return SystemSpec(SystemName.PAIS_UHLENBECK,
                      dict(m=1.0, ts=15.0, w1=0.5, w1hat=0.7, w2=1.0,
                           w2hat=1.2),
                      mol4, gauge)
