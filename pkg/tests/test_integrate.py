import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab.density import DensityField
from densitylab.dyncore import IntegratorConfig, TimeSignal, Trajectory, integrate, rk4_step
from densitylab.dyncore.systems import DensitySystem
from densitylab.errors import ConfigError
from densitylab.harness import load_scenario, run


def test_rk4_single_step_matches_exponential():
    x = rk4_step(lambda x, t: -x, np.array([1.0]), 0.0, 0.1)
    assert x[0] == pytest.approx(0.90483742, abs=1e-6)
    assert abs(x[0] - math.exp(-0.1)) < 1e-7


def test_zero_field_gives_constant_trajectory():
    tr = integrate(lambda x, t: np.zeros_like(x), [4.0], IntegratorConfig(step=0.37, duration=5.0))
    assert tr.stop_reason == "completed"
    assert np.all(tr.states == 4.0)
    assert len(tr) == IntegratorConfig(step=0.37, duration=5.0).nsteps + 1


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"step": 0.0, "duration": 1.0}, "step"),
        ({"step": 1e-3, "duration": -1.0}, "duration"),
        ({"step": 1e-3, "duration": 1.0, "clamp": 0.5}, "clamp"),
        ({"step": 1e-3, "duration": 1.0, "eps_sing": 1.0}, "eps_sing"),
        ({"step": 1e-3, "duration": 1.0, "method": "rk45"}, "method"),
    ],
)
def test_integrator_config_invariants(kwargs, field):
    with pytest.raises(ConfigError) as err:
        IntegratorConfig(**kwargs)
    assert field in err.value.field


def _forced_decay_error(h: float) -> float:
    """Max error of x' = -x + sin t, x(0) = 1 against the closed form on [0, 4]."""
    tr = integrate(lambda x, t: -x + math.sin(t), [1.0], IntegratorConfig(step=h, duration=4.0))
    t = tr.times
    exact = 1.5 * np.exp(-t) + 0.5 * (np.sin(t) - np.cos(t))
    return float(np.max(np.abs(tr.states[:, 0] - exact)))


def test_rk4_is_fourth_order():
    errs = [_forced_decay_error(h) for h in (0.1, 0.05, 0.025)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(12.0 < r < 20.0 for r in ratios), ratios


def test_euler_is_first_order():
    def err(h):
        tr = integrate(lambda x, t: -x, [1.0], IntegratorConfig(step=h, duration=1.0, method="euler"))
        return abs(tr.states[-1, 0] - math.exp(-1.0))
    assert err(1e-2) / err(5e-3) == pytest.approx(2.0, rel=0.05)


def test_blowup_truncates_at_last_finite_sample():
    tr = integrate(lambda x, t: x * x, [1.0], IntegratorConfig(step=1e-2, duration=2.0))
    assert tr.stop_reason == "numerical-blowup"
    assert np.all(np.isfinite(tr.states))
    assert tr.stop_time < 1.2


def test_forbidden_entry_truncates_before_the_set():
    tr = integrate(lambda x, t: np.ones_like(x), [0.0], IntegratorConfig(step=0.01, duration=1.0),
                   forbidden=lambda x, t: x[0] > 0.505)
    assert tr.stop_reason == "forbidden-entry"
    assert tr.states[-1, 0] <= 0.505
    assert tr.stop_time == pytest.approx(0.51)


def test_singular_approach_flag():
    tr = integrate(lambda x, t: np.ones_like(x), [0.0], IntegratorConfig(step=0.01, duration=1.0, eps_sing=0.05),
                   singular_distance=lambda x, t: abs(0.5 - x[0]))
    assert tr.stop_reason == "singular-approach"
    assert abs(0.5 - tr.states[-1, 0]) >= 0.05


def test_initial_state_in_forbidden_set_rejected():
    with pytest.raises(ValueError):
        integrate(lambda x, t: x, [1.0], IntegratorConfig(step=0.1, duration=1.0), forbidden=lambda x, t: True)


@pytest.mark.parametrize("h", [1e-3, 1e-4])
def test_sign_chattering_stays_at_step_scale(h):
    """x' = -sign(x) reaches 0 and then chatters inside a band of width ~h|f|."""
    tr = integrate(lambda x, t: -np.sign(x), [1.0], IntegratorConfig(step=h, duration=2.0, method="euler"))
    tail = tr.states[tr.times > 1.0 + 10 * h, 0]
    assert np.max(np.abs(tail)) <= 10 * h * 1.0


def test_record_every_subsamples_the_fine_grid():
    cfg = IntegratorConfig(step=1e-3, duration=1.0)
    fine = integrate(lambda x, t: -x, [1.0], cfg)
    coarse = integrate(lambda x, t: -x, [1.0], cfg.replace(record_every=10))
    assert coarse.h == pytest.approx(1e-2)
    np.testing.assert_array_equal(coarse.states, fine.states[::10])


# ---- compiled kernel vs. the Python reference path -------------------------

SYSTEMS = [
    DensitySystem("scalar-ex1", DensityField.constant(10.0), (TimeSignal.atan_chatter(0.5, 100.0, 0.8),)),
    DensitySystem("scalar-ex1", DensityField.funnel(1.0, TimeSignal.exp_plus_sin(2.0, 1.0, offset=0.1)),
                  (TimeSignal.atan_chatter(0.5, 100.0, 0.8),)),
    DensitySystem("planar-ex2", DensityField.norm_log(1.0, 1.0),
                  (TimeSignal.sinusoid_sum(0.0, [[0.2, 1.0]]), TimeSignal.zero()), rho2="zero"),
    DensitySystem("planar-ex3", DensityField.exp_barrier(-1.0),
                  (TimeSignal.sinusoid_sum(0.0, [[1.0, 1.0]]), TimeSignal.sinusoid_sum(0.0, [[0.8, 1.0, math.pi / 2]]))),
    DensitySystem("pendulum", DensityField.constant(0.5), (TimeSignal.zero(), TimeSignal.zero())),
]
X0 = [[1.5], [1.5], [0.0, 2.5], [1.2, 0.0], [2.0, 0.0]]


@pytest.mark.parametrize("system, x0", list(zip(SYSTEMS, X0)), ids=lambda v: getattr(v, "family", None))
def test_kernel_matches_python_integrator(system, x0):
    cfg = IntegratorConfig(step=1e-3, duration=2.0)
    fast = system.simulate(x0, cfg)
    ref = integrate(lambda x, t: system.rhs(x, t, cfg.clamp), x0, cfg)
    assert fast.stop_reason == ref.stop_reason == "completed"
    np.testing.assert_allclose(fast.states, ref.states, rtol=1e-11, atol=1e-12)


def test_simulation_is_bit_deterministic():
    sys_, x0 = SYSTEMS[3], X0[3]
    cfg = IntegratorConfig(step=1e-4, duration=3.0)
    a, b = sys_.simulate(x0, cfg), sys_.simulate(x0, cfg)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.to_csv() == b.to_csv()


def test_wall_jump_stops_with_forbidden_entry():
    report = run("ex1-remark-wall-jump")
    assert report.stops == ["forbidden-entry"]
    assert report.passed


def test_ultimate_bound_against_half_step_rerun(report_of):
    sc = load_scenario("ex1-case1-constant")
    coarse = report_of("ex1-case1-constant").runs[0].trajectory
    fine = sc.system().simulate(sc.initial_conditions[0], IntegratorConfig(step=5e-5, duration=5.0,
                                                                          record_every=2))
    np.testing.assert_allclose(coarse.states, fine.states, atol=1e-9)
    assert np.max(np.abs(fine.states[fine.times >= 2.0])) <= 0.1


# ---- trajectory type -------------------------------------------------------

def test_trajectory_csv_format_and_round_trip():
    tr = Trajectory(t0=0.0, h=0.5, states=np.array([[1.0, 2.0], [1.5, 2.5], [2.0, 3.25]]),
                    rho=np.array([0.1, 0.2, 1 / 3]), V=np.array([2.5, 4.25, 7.28125]),
                    in_DS=np.array([True, False, True]), stop_reason="forbidden-entry")
    text = tr.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,x1,x2,u,rho,V,Vdot,in_DS,in_DU,in_forbidden,stop_reason"
    assert lines[1] == "0,1,2,,0.1,2.5,,1,,,"
    assert lines[2] == "0.5,1.5,2.5,,0.2,4.25,4.78125,0,,,"
    assert lines[3].endswith(",forbidden-entry") and "0.333333333" in lines[3]
    back = Trajectory.from_csv(text)
    assert back.stop_reason == "forbidden-entry"
    np.testing.assert_allclose(back.states, tr.states)
    np.testing.assert_allclose(back.rho, tr.rho, rtol=1e-9)
    assert back.u is None and back.in_DU is None
    np.testing.assert_array_equal(back.in_DS, tr.in_DS)


def test_trajectory_rejects_non_finite_states():
    with pytest.raises(ValueError):
        Trajectory(t0=0.0, h=0.1, states=np.array([[0.0], [math.inf]]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.floats(1e-4, 1.0))
def test_vdot_is_central_difference(values, h):
    V = np.array(values)
    tr = Trajectory(t0=0.0, h=h, states=np.zeros((len(V), 1)), V=V)
    vd = tr.vdot
    assert math.isnan(vd[0]) and math.isnan(vd[-1])
    np.testing.assert_allclose(vd[1:-1], (V[2:] - V[:-2]) / (2 * h))
