import numpy as np
import pytest

from phri.chain import JointState, default_chain
from phri.environment import EndToolGeometry, EnvParams, SurfaceModel
from phri.scenarios import frictionless_config, plane_under_tool
from phri.simulator import run_scenario


@pytest.fixture(scope="session")
def chain():
    return default_chain()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)


def short_contact_config(duration=2.0, **overrides):
    """Frictionless config with a 2 mm approach gap so contact happens fast."""
    cfg = frictionless_config()
    surface = plane_under_tool(cfg.chain, cfg.initial_state.q, cfg.tool, gap=0.002)
    kw = dict(duration=duration, surface=surface, metrics_window=None,
              velocity_segments=())
    kw.update(overrides)
    return cfg.with_overrides(**kw)


@pytest.fixture(scope="session")
def contact_log():
    """Shared 3 s frictionless contact run for consistency oracles."""
    cfg = short_contact_config(duration=3.0)
    log = run_scenario(cfg)
    assert "abort" not in log.meta
    return cfg, log
