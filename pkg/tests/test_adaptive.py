import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab.adaptive import (ClosedLoopState, ControllerConfig, ControllerState, adapt_derivative,
                                 closed_loop_rhs, closed_loop_step, control, filter_derivatives,
                                 filter_matrix_hurwitz, simulate)
from densitylab.density import DensityField
from densitylab.dyncore import IntegratorConfig, TimeSignal
from densitylab.errors import ConfigError, ControllerFault
from densitylab.plant import PolyPlant, Polynomial, decompose, realize

RM = Polynomial.from_roots([-1.0, -1.0])  # lam^2 + 2 lam + 1
PLANT = PolyPlant(Polynomial.from_roots([1.0, 1.0, 1.0]), RM, 1.0, (4.0, 0.0, 0.0))
D = TimeSignal.sinusoid_sum(5.0, [[10.0, 7.0]])


def cfg_with(rho, **kw):
    base = {"tau": 1.0, "beta": 0.1, "gamma": 0.01, "Rm": RM, "rho": rho}
    base.update(kw)
    return ControllerConfig(**base)


LINEAR = cfg_with(DensityField.linear(4.0))


@pytest.mark.parametrize(
    "Vy, y, u, expected_y, expected_u",
    [
        ((0.0, 0.0), 4.0, 0.0, (0.0, 4.0), (0.0, 0.0)),
        ((0.0, 0.0), 0.0, -1.0, (0.0, 0.0), (0.0, -1.0)),
        ((1.0, 1.0), 0.0, 0.0, (1.0, -3.0), (0.0, 0.0)),
    ],
)
def test_filter_derivatives_examples(Vy, y, u, expected_y, expected_u):
    st_ = ControllerState(np.zeros(5), np.array(Vy), np.zeros(2))
    dvy, dvu = filter_derivatives(st_, y, u, LINEAR)
    assert dvy.tolist() == list(expected_y)
    assert dvu.tolist() == list(expected_u)


@pytest.mark.parametrize(
    "c, Vy, y, expected",
    [
        ((0, 0, 0, 0, 0), (0, 0), 0.0, 0.0),
        ((0, 0, 0, 0, 0), (0, 0), -1.25, 5.0),    # tau * rho = -4 * (-1.25)
        ((1, 0, 0, 0, 2), (3, 0), 1.0, 1.0),  # c^T w = 3 + 2, tau * rho = -4
        ((0, 0, 0, 0, 4), (0, 0), 2.0, 0.0),       # c_y cancels the linear density
    ],
)
def test_control_examples(c, Vy, y, expected):
    st_ = ControllerState(np.array(c, float), np.array(Vy, float), np.zeros(2))
    assert control(st_, y, 0.0, LINEAR) == pytest.approx(expected)


def test_adapt_examples():
    zero = ControllerState(np.zeros(5), np.zeros(2), np.zeros(2))
    # c = 0: pure gradient term -beta y w with w = (0, 0, 0, 0, y)
    np.testing.assert_allclose(adapt_derivative(zero, 1.0, 0.0, LINEAR), [0, 0, 0, 0, -0.1])
    np.testing.assert_allclose(adapt_derivative(zero, 0.0, 0.0, LINEAR), np.zeros(5))
    # leakage: rho y < 0 for the linear density, so sign = -1 and the term is +gamma c |y|
    st_ = ControllerState(np.array([10.0, 0, 0, 0, 0]), np.array([1.0, 0.0]), np.zeros(2))
    np.testing.assert_allclose(adapt_derivative(st_, 1.0, 0.0, LINEAR), [-0.1 + 0.1, 0, 0, 0, -0.1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=12, max_size=12), st.floats(0, 3))
def test_closed_loop_rhs_matches_formulas(z, t):
    z = np.array(z)
    real = realize(PLANT)
    dz = closed_loop_rhs(z, t, real, D, LINEAR)
    xp, Vy, Vu, c = z[:3], z[3:5], z[5:7], z[7:]
    y = xp[0]
    w = np.concatenate([Vy, Vu, [y]])
    rho = -4.0 * y
    u = c @ w + rho
    F, b = LINEAR.F, LINEAR.b
    np.testing.assert_allclose(dz[:3], real.A @ xp + real.Bu * u + real.Bd * D(t), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(dz[3:5], F @ Vy + b * y, atol=1e-12)
    np.testing.assert_allclose(dz[5:7], F @ Vu + b * u, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(dz[7:], -0.1 * y * w - 0.01 * c * abs(y) * np.sign(rho * y), atol=1e-12)


def test_step_loop_matches_compiled_simulation():
    integ = IntegratorConfig(step=1e-3, duration=0.2)
    run = simulate(PLANT, LINEAR, D, integ)
    real = realize(PLANT)
    state = ClosedLoopState(real.x0.copy(), ControllerState.zeros(3))
    for i in range(integ.nsteps):
        state = closed_loop_step(state, i * integ.step, integ.step, real, D, LINEAR)
    np.testing.assert_allclose(state.stacked(), run.trajectory.states[-1], rtol=1e-10, atol=1e-10)


def test_origin_is_an_equilibrium_without_disturbance():
    plant = PolyPlant(PLANT.Q, PLANT.R)
    run = simulate(plant, LINEAR, TimeSignal.zero(), IntegratorConfig(step=1e-3, duration=2.0))
    assert np.all(run.trajectory.states == 0.0)
    assert np.all(run.trajectory.u == 0.0)


def test_closed_loop_blocks_and_lyapunov():
    run = simulate(PLANT, LINEAR, D, IntegratorConfig(step=1e-3, duration=0.5))
    assert run.block("c").shape[1] == 5 and run.block("Vy").shape[1] == 2
    np.testing.assert_array_equal(run.block("y"), run.trajectory.states[:, 0])
    c_err = run.block("c") - run.decomposition.c0
    V = 0.5 * run.block("y") ** 2 + np.sum(c_err ** 2, axis=1) / (2 * 0.1)
    np.testing.assert_allclose(run.trajectory.V, V, rtol=1e-12)
    assert run.trajectory.V[0] == pytest.approx(8.0 + 185 / 0.2)


def test_gain_is_divided_out():
    """Scaling the plant gain leaves the closed-loop output unchanged."""
    integ = IntegratorConfig(step=1e-3, duration=1.0)
    a = simulate(PLANT, LINEAR, D, integ)
    scaled = PolyPlant(PLANT.Q, PLANT.R, 2.5, PLANT.y_derivs)
    b = simulate(scaled, LINEAR, D, integ)
    np.testing.assert_allclose(b.block("y"), a.block("y"), rtol=1e-9, atol=1e-9)


def test_filter_matrix_is_hurwitz_with_spectrum_of_R():
    R = Polynomial.from_roots([-0.5, -3.0])
    plant = PolyPlant(PLANT.Q, R)
    dec = decompose(plant, RM)
    assert filter_matrix_hurwitz(LINEAR, dec)
    eig = np.sort(np.linalg.eigvals(LINEAR.F + np.outer(LINEAR.b, dec.c0u)).real)
    np.testing.assert_allclose(eig, [-3.0, -0.5], atol=1e-9)


def test_sign_hypothesis():
    ys, ts = np.linspace(-3, 3, 61), np.linspace(0, 5, 11)
    ok, bad, checked = LINEAR.sign_hypothesis(ys, ts)
    assert ok and bad == 0 and checked == 60 * 11
    ok, bad, _ = cfg_with(DensityField.linear(-4.0)).sign_hypothesis(ys, ts)
    assert not ok and bad == 60 * 11
    tube = cfg_with(DensityField.log_sym(4.0, TimeSignal.constant(1.0)))
    ok, _, checked = tube.sign_hypothesis(ys, ts)
    assert ok and checked < 60 * 11  # the singular set is skipped


def test_density_singularity_raises_controller_fault():
    tube = cfg_with(DensityField.log_sym(4.0, TimeSignal.constant(1.0)))
    with pytest.raises(ControllerFault, match="controller-fault"):
        control(ControllerState.zeros(3), 1.5, 0.0, tube)


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"tau": 0.0}, "controller.tau"),
        ({"beta": -1.0}, "controller.beta"),
        ({"Rm": Polynomial.from_roots([1.0, -1.0])}, "controller.Rm"),
        ({"rho": DensityField.norm_log(1.0, 1.0)}, "controller.rho"),
        ({"c_init": (1.0, 2.0)}, "controller.c0_init"),
    ],
)
def test_controller_config_validation(kw, field):
    with pytest.raises(ConfigError) as err:
        cfg_with(kw.pop("rho", DensityField.linear(4.0)), **kw)
    assert err.value.field == field


def test_controller_dict_round_trip():
    cfg = cfg_with(DensityField.log_sym(4.0, TimeSignal.constant(1.0)), c_init=(1, 2, 3, 4, 5))
    again = ControllerConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        ControllerConfig.from_dict({**cfg.to_dict(), "bogus": 1})


def _mismatched_scenario():
    import copy

    from densitylab.harness.scenario import preset_document, scenario_from_dict
    doc = copy.deepcopy(preset_document("adaptive-case1-linear"))
    doc.pop("content_hash")
    doc["plant"]["R"] = list(Polynomial.from_roots([-0.5, -3.0]).coeffs)  # R != R_m, so dR != 0
    doc["integrator"]["duration"] = 3.0
    doc["checks"] = [{"check": "emergent-dynamics"}]
    return scenario_from_dict(doc)


def test_emergent_dynamics_with_model_mismatch():
    """y' = u - c0^T w + (1/R_m)[d] holds with c0u = -coeffs(dR) when R differs from R_m."""
    from densitylab.harness import run
    sc = _mismatched_scenario()
    assert np.any(decompose(PolyPlant(sc.plant.Q, sc.plant.R), RM).dR.coeffs)
    assert run(sc).passed


def test_emergent_dynamics_rejects_the_opposite_c0u_sign():
    from densitylab.harness import run
    from densitylab.harness.checks import emergent_residual
    sc = _mismatched_scenario()
    item = run(sc).runs[0]
    _, ok = emergent_residual(sc, item)
    dec = item.loop.decomposition
    flipped = dec.c0.copy()
    flipped[dec.n - 1: 2 * dec.n - 2] *= -1
    object.__setattr__(dec, "c0", flipped)
    _, bad = emergent_residual(sc, item)
    assert np.nanmax(np.abs(bad)) > 1e3 * np.nanmax(np.abs(ok))
