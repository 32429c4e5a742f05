import numpy as np
import pytest

from mlpaths.core import SolverConfig
from mlpaths.errors import BadCrossingPointError, NotInBasinError
from mlpaths.oracle import find_nonuniform_fixed_point
from mlpaths.spde import ac_energy
from mlpaths.systems import ac1d, exact_action, sde2d
from mlpaths.updown import downhill_trajectory, updown_gmam


@pytest.fixture(scope="module")
def sde2d_updown():
    s = sde2d()
    rep = updown_gmam(s, s.sinks[0], [1.0, 0.0], s.sinks[1], 100, 10, 1, SolverConfig(n=100, h=0.1))
    return s, rep


# -- downhill integration ----------------------------------------------------

def test_downhill_from_target_is_empty():
    s = sde2d()
    assert downhill_trajectory(s, s.sinks[1], 0.01, s.sinks[1]).shape == (0, 2)


def test_downhill_sde2d_monotone():
    s = sde2d()
    traj = downhill_trajectory(s, [1.0, 0.01], 0.01, s.sinks[1])
    assert np.array_equal(traj[0], [1.0, 0.01])
    assert np.linalg.norm(traj[-1] - s.sinks[1]) <= 0.01
    assert np.linalg.norm(traj[-2] - s.sinks[1]) > 0.01
    assert np.all(np.diff(traj[:, 1]) > 0)


def test_downhill_not_in_basin():
    s = sde2d()
    with pytest.raises(NotInBasinError):
        downhill_trajectory(s, [0.5, -0.3], 0.01, s.sinks[1], max_steps=5000)


def test_downhill_ac1d_lyapunov():
    kappa, N = 0.005, 64
    s = ac1d(kappa=kappa, c=0.1, N=N)
    u0 = find_nonuniform_fixed_point(kappa, 1)(np.arange(N) / N) + 0.05
    traj = downhill_trajectory(s, u0, 0.01, s.sinks[1])
    assert s.norm(traj[-1] - 1.0) <= 0.01
    V = np.array([ac_energy(u, kappa) for u in traj])
    assert np.all(np.diff(V) < 0)


# -- composite solve ---------------------------------------------------------

def test_sde2d_updown_action(sde2d_updown):
    s, rep = sde2d_updown
    assert rep.action == pytest.approx(0.50008, abs=5e-4)
    assert rep.crossing_index == 100
    assert np.array_equal(rep.path.points[0], s.sinks[0])
    assert np.array_equal(rep.path.points[100], [1.0, 0.0])
    assert np.array_equal(rep.path.points[-1], s.sinks[1])


def test_downhill_block_is_free(sde2d_updown):
    s, rep = sde2d_updown
    assert rep.meta["action_down"] < 1e-3
    assert rep.action == pytest.approx(rep.meta["action_up"] + rep.meta["action_down"], abs=1e-15)


def test_composite_bounded_below_by_barrier(sde2d_updown):
    s, rep = sde2d_updown
    assert rep.action >= exact_action(s, [1.0, 0.0]) - 0.01


def test_junction_gap(sde2d_updown):
    s, rep = sde2d_updown
    pts = rep.path.points
    gap = np.linalg.norm(pts[101] - pts[100])
    # x+ is the second node of the coarse downhill path, one segment from x_s
    assert gap <= rep.meta["coarse_spacing"]
    assert np.all(np.linalg.norm(np.diff(pts[101:], axis=0), axis=1) <= 0.1 * 1.01)


def test_downsampling_delta():
    s = sde2d()
    cfg = SolverConfig(n=40, h=0.1)
    a = updown_gmam(s, s.sinks[0], [1.0, 0.0], s.sinks[1], 40, 10, 1, cfg)
    b = updown_gmam(s, s.sinks[0], [1.0, 0.0], s.sinks[1], 40, 10, 5, cfg)
    n_a, n_b = a.meta["n2_effective"], b.meta["n2_effective"]
    assert n_b == pytest.approx(n_a / 5, abs=1)
    assert b.action == pytest.approx(a.action, abs=1e-3)


def test_bad_crossing_point():
    s = sde2d()
    with pytest.raises(BadCrossingPointError):
        updown_gmam(s, s.sinks[0], [0.0, -0.5], s.sinks[1], 20, 10, 1, SolverConfig(n=20, h=0.1, max_steps=500))


def test_bad_delta():
    s = sde2d()
    with pytest.raises(ValueError):
        updown_gmam(s, s.sinks[0], [1.0, 0.0], s.sinks[1], 20, 10, 0)
