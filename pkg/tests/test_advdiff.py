import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mprkimex import advdiff
from mprkimex.advdiff import (
    BenchmarkConfig,
    ConfigError,
    Grid1D,
    SchemeKind,
    SpeedProfile,
    advective_rhs,
    build_partition,
    diffusive_rhs,
    discrete_mass,
    make_system,
)
from mprkimex.stepper import integrate
from mprkimex.system import PartitionMap, Region, SplitSystem, validate_partition
from mprkimex.tableau import heun, make_scheme

GRID = Grid1D(81)


def flat(omega=1.0):
    return SpeedProfile(omega_slow=omega, ratio=1.0)


def stencil_oracle(q, dx):
    """du_k/dt from (-1/6, 1, -1/2, -1/3) on q_{k-2}, q_{k-1}, q_k, q_{k+1}."""
    n = len(q)
    w = {-2: -1 / 6, -1: 1.0, 0: -1 / 2, 1: -1 / 3}
    return np.array([sum(c * q[(k + o) % n] for o, c in w.items()) / dx for k in range(n)])


def test_constant_state_is_steady():
    assert np.allclose(advective_rhs(np.full(81, 3.0), GRID, flat(2.0)), 0, atol=1e-12)
    assert np.allclose(diffusive_rhs(np.full(81, 3.0), GRID, 0.7), 0, atol=1e-12)


def test_single_mode_matches_stencil():
    u = np.sin(2 * np.pi * GRID.x)
    np.testing.assert_allclose(advective_rhs(u, GRID, flat()), stencil_oracle(u, GRID.dx),
                               rtol=0, atol=1e-12)


def test_variable_speed_matches_stencil():
    prof = SpeedProfile(omega_slow=1.3, ratio=1.9)
    u = np.cos(4 * np.pi * GRID.x) + 0.3
    q = prof.omega(GRID.x, GRID.dx) * u
    np.testing.assert_allclose(advective_rhs(u, GRID, prof), stencil_oracle(q, GRID.dx),
                               rtol=0, atol=1e-12 * np.abs(q).max() / GRID.dx)


def test_diffusion_impulse():
    j = 40
    u = np.zeros(81)
    u[j] = 1.0
    out = diffusive_rhs(u, GRID, 1.0)
    expected = np.zeros(81)
    expected[[j - 1, j, j + 1]] = np.array([1.0, -2.0, 1.0]) / GRID.dx**2
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12 * GRID.dx**-2)


def test_diffusion_impulse_wraps():
    u = np.zeros(81)
    u[0] = 1.0
    out = diffusive_rhs(u, GRID, 1.0) * GRID.dx**2
    assert out[-1] == pytest.approx(1.0) and out[1] == pytest.approx(1.0)


@given(arrays(float, 81, elements=st.floats(-1e3, 1e3)))
def test_discrete_conservation(u):
    bound = 1e-13 * np.abs(u).max() * 81
    prof = BenchmarkConfig().profile()
    assert abs(advective_rhs(u, GRID, prof).sum()) <= bound
    assert abs(diffusive_rhs(u, GRID, 0.05).sum()) <= bound


@given(arrays(float, 81, elements=st.floats(-10, 10)), arrays(float, 81, elements=st.floats(-10, 10)),
       st.floats(-3, 3), st.floats(-3, 3))
def test_advection_linear(u, v, a, b):
    prof = SpeedProfile(omega_slow=0.8, ratio=2.0)
    lhs = advective_rhs(a * u + b * v, GRID, prof)
    rhs = a * advective_rhs(u, GRID, prof) + b * advective_rhs(v, GRID, prof)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_diffusion_matrix_matches_rhs():
    u = np.random.default_rng(3).normal(size=81)
    D = advdiff.diffusion_matrix(GRID, 0.05)
    np.testing.assert_allclose(D @ u, diffusive_rhs(u, GRID, 0.05), rtol=1e-12, atol=1e-9)


def test_profile_levels_and_ramp():
    cfg = BenchmarkConfig()
    prof = cfg.profile()
    cfl = prof.omega(GRID.x, GRID.dx) * cfg.dt / GRID.dx
    assert cfl.min() == pytest.approx(1.01)
    assert cfl.max() == pytest.approx(1.92)
    assert np.all(cfl > 0)
    # monotone rise into the fast zone
    left = cfl[: 81 // 2]
    assert np.all(np.diff(left) >= -1e-15)


def test_m4_profile_ratio():
    prof = BenchmarkConfig(m=4).profile()
    w = prof.omega(GRID.x, GRID.dx)
    assert w.max() / w.min() == pytest.approx(4.0)


def test_profile_validation():
    with pytest.raises(ConfigError):
        SpeedProfile(omega_slow=-1)
    with pytest.raises(ConfigError):
        SpeedProfile(omega_slow=1, ratio=0.5)
    with pytest.raises(ConfigError):
        SpeedProfile(omega_slow=1, fast_interval=(0.6, 0.2))


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid1D(4)
    assert Grid1D(81).dx == 1 / 81


def test_fig2_partition():
    cfg = BenchmarkConfig()
    pm = build_partition(cfg.grid, cfg.profile(), cfg.dt)
    fast = np.flatnonzero(pm.fast_mask)
    assert np.array_equal(fast, np.arange(fast[0], fast[-1] + 1))
    buf = np.flatnonzero(pm.labels == Region.BUFFER)
    assert list(buf) == [fast[0] - 2, fast[0] - 1, fast[-1] + 1, fast[-1] + 2]
    assert validate_partition(pm, advdiff.STENCIL_REACH).valid
    # fast block sits around the middle third
    assert abs(fast[0] - 27) <= 2 and abs(fast[-1] - 53) <= 2


def test_partition_all_slow():
    pm = build_partition(GRID, flat(0.5 * GRID.dx / 0.01), 0.01)
    assert pm.count(Region.SLOW) == 81


def test_partition_all_fast():
    pm = build_partition(GRID, flat(1.5 * GRID.dx / 0.01), 0.01)
    assert pm.count(Region.FAST) == 81 and pm.count(Region.BUFFER) == 0


def test_discrete_mass():
    assert discrete_mass(np.zeros(81), GRID.dx) == 0
    assert discrete_mass(np.ones(81), GRID.dx) == pytest.approx(81 * GRID.dx)
    assert advdiff.mass_loss(np.ones(3), np.array([1, 1, 2.0]), 0.5) == 0.5


def test_system_without_diffusion():
    sys = make_system(BenchmarkConfig(delta=0.0))
    assert not sys.has_g


def test_system_full_mask_sum():
    cfg = BenchmarkConfig()
    sys = make_system(cfg)
    u = np.random.default_rng(1).normal(size=81)
    got = sys.eval_f(u) + sys.eval_g(u)
    want = advective_rhs(u, cfg.grid, cfg.profile()) + diffusive_rhs(u, cfg.grid, cfg.delta)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)


def test_explicit_system_folds_diffusion_into_f():
    cfg = BenchmarkConfig(scheme=SchemeKind.EXPLICIT_MPRK)
    sys = make_system(cfg)
    u = np.random.default_rng(2).normal(size=81)
    assert not sys.has_g
    want = advective_rhs(u, cfg.grid, cfg.profile()) + diffusive_rhs(u, cfg.grid, cfg.delta)
    np.testing.assert_allclose(sys.eval_f(u), want, rtol=0, atol=1e-10)


def test_jacobian_vs_finite_differences():
    sys = make_system(BenchmarkConfig(delta=0.05))
    u = np.random.default_rng(4).normal(size=81)
    h = 1e-4
    fd = np.column_stack([(sys.eval_g(u + h * e) - sys.eval_g(u - h * e)) / (2 * h)
                          for e in np.eye(81)])
    assert np.max(np.abs(fd - sys.jacobian_g(u))) <= 1e-6


def test_advection_space_time_order():
    # delta = 0, omega = 1, smooth data, CFL 0.4: exact solution is a translate
    errors = []
    Ms = [20, 40, 80, 160]
    T = 0.25
    for M in Ms:
        grid = Grid1D(M)
        prof = flat(1.0)
        n = math.ceil(T / (0.4 * grid.dx))
        dt = T / n
        sys = SplitSystem(M, lambda u, g=grid: advective_rhs(u, g, prof))
        u0 = np.sin(2 * np.pi * grid.x)
        rep = integrate(make_scheme(heun(), 1), sys, PartitionMap.uniform(M), u0, 0.0, T, dt)
        errors.append(np.abs(rep.y_final - np.sin(2 * np.pi * (grid.x - T))).max())
    rates = np.log2(np.array(errors[:-1]) / errors[1:])
    assert np.all(rates >= 2.0), rates


def test_initial_conditions():
    x = GRID.x
    assert advdiff.initial_condition("gaussian", x).max() == pytest.approx(1.0, abs=1e-2)
    assert advdiff.initial_condition("sine:2", x).mean() == pytest.approx(1.0)
    top = advdiff.initial_condition("tophat:0.2:0.4", x)
    assert set(np.unique(top)) == {0.0, 1.0}
    with pytest.raises(ConfigError):
        advdiff.initial_condition("wiggle", x)
    with pytest.raises(ConfigError):
        advdiff.initial_condition("gaussian:a", x)


CONFIG_TEXT = """
# every documented key
M = 81
dt = 0.0125
t_final = 0.3
delta = 100
m = 2
scheme = multirate_lstable
omega_ratio = 1.9
fast_interval = 0.3 0.6
ramp_cells = 3
ic = gaussian:0.4:0.05
"""


def test_parse_config_all_keys():
    cfg = advdiff.parse_config(CONFIG_TEXT)
    assert cfg.scheme is SchemeKind.MULTIRATE_LSTABLE
    assert cfg.delta == 100.0 and cfg.M == 81 and cfg.m == 2
    assert cfg.fast_interval == (0.3, 0.6) and cfg.ramp_cells == 3.0
    assert cfg.ratio == 1.9 and cfg.ic == "gaussian:0.4:0.05"


@pytest.mark.parametrize("text", [
    "dt = 0", "dt = -0.1", "bogus = 1", "M", "m = two", "scheme = rk4", "delta = -1", "M = 3",
    "omega_ratio = 0.5",
])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        advdiff.parse_config(text)


def test_load_config_names_from_file(tmp_path):
    p = tmp_path / "mycase.cfg"
    p.write_text("delta = 1\n")
    assert advdiff.load_config(p).name == "mycase"
