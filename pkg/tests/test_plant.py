import math

import numpy as np
import pytest

from traction_sim.forceps import ForcepsGeometry, SpringModel, TissueModel, coupling_gain
from traction_sim.plant import (
    FAILURE_NONE,
    Plant,
    PlantInput,
    SimConfig,
    output_matrices,
    rank_checks,
)

GEOM = ForcepsGeometry(
    l1=1.0, l2=2.0, l3=1.5, alpha0=math.radians(20.0), theta=math.radians(10.0)
)
SPRING = SpringModel(ks=1.0, ts_max=5.0)
SOFT = TissueModel(kt=0.1, ct=0.01)
BENCH = TissueModel(
    kt=0.1, ct=0.01, grip_limit_ratio=1000.0, split_force=1000.0, break_grasp_force=1000.0
)
MS_CONFIG = SimConfig(dt_plant=0.001, dt_sensor=0.033)


def make_plant(tissue=BENCH, engaged=True, config=MS_CONFIG, **kwargs):
    return Plant(GEOM, SPRING, tissue, config, engaged=engaged, **kwargs)


# ----------------------------------------------------------------------
# stepping
# ----------------------------------------------------------------------


def test_rest_stays_at_rest():
    plant = make_plant()
    r = plant.step(PlantInput(0.0, 0.0), 0.5)
    assert plant.state.d_p == 0.0 and plant.state.d_s == 0.0
    assert r.Fp == 0.0 and r.Fg == 0.0


def test_lower_driver_step_closed_form():
    # Both states integrate the lower driver: after 1 s at 1 mm/s the spring
    # stays undeformed and Fp = kt*d_p + ct*dp_dot = 0.11 N.
    plant = make_plant()
    for _ in range(1000):
        r = plant.step(PlantInput(1.0, 0.0), 0.001)
    assert r.Fp == pytest.approx(0.11, abs=1e-9)
    assert r.Fg == pytest.approx(coupling_gain(GEOM) * 0.11, abs=1e-9)
    assert plant.state.d_p == pytest.approx(1.0, abs=1e-12)
    assert plant.state.d_s == pytest.approx(1.0, abs=1e-12)


def test_upper_driver_step_closed_form():
    # Only d_p integrates the upper driver, so the spring deforms 1 mm and
    # the drive force picks up the spring term.
    plant = make_plant()
    for _ in range(1000):
        r = plant.step(PlantInput(0.0, 1.0), 0.001)
    assert r.Fp == pytest.approx(0.11, abs=1e-9)
    assert r.Fg == pytest.approx(coupling_gain(GEOM) * 1.11, abs=1e-9)
    assert plant.state.d_s == 0.0


def test_readings_match_output_matrices():
    # In the taut-cable regime the step outputs are exactly the static
    # output map of the state-space model.
    plant = make_plant()
    u = PlantInput(0.7, 0.3)
    for _ in range(321):
        truth = plant.step(u, 0.001)
    _, _, C, D = output_matrices(BENCH, SPRING, GEOM)
    x = np.array([plant.state.d_p, plant.state.d_s])
    y = C @ x + D @ np.array([u.u1, u.u2])
    assert truth.Fg == pytest.approx(y[0], abs=1e-12)
    assert truth.Fp == pytest.approx(y[1], abs=1e-12)


def test_pure_integrator_is_exact():
    # With no damping and a locked upper driver, Fp equals kt times the
    # commanded travel: Euler introduces no discretization error here.
    tissue = TissueModel(kt=0.25, ct=0.0, grip_limit_ratio=1e3, split_force=1e3, break_grasp_force=1e3)
    plant = Plant(GEOM, SPRING, tissue, MS_CONFIG, engaged=True)
    for _ in range(730):
        r = plant.step(PlantInput(0.8, 0.0), 0.001)
    assert r.Fp == pytest.approx(0.25 * 0.8 * 0.730, rel=1e-12)


def test_input_limits_enforced():
    plant = make_plant()
    with pytest.raises(ValueError):
        plant.step(PlantInput(6.0, 0.0), 0.001)


# ----------------------------------------------------------------------
# engagement
# ----------------------------------------------------------------------


def test_contact_engages_on_forward_motion():
    plant = make_plant(engaged=False)
    r = plant.step(PlantInput(-1.0, 0.0), 0.001)
    assert plant.state.engaged
    assert r.Fp < 0.0  # pushing
    assert "contact_engaged" in plant.drain_events()


def test_disengaged_outputs_are_zero():
    plant = make_plant(engaged=False)
    r = plant.step(PlantInput(1.0, 0.0), 0.5)  # moving away: no contact
    assert not plant.state.engaged
    assert r.Fp == 0.0 and r.Fg == 0.0 and r.Fd == 0.0
    assert plant.state.d_p == pytest.approx(0.5)


# ----------------------------------------------------------------------
# cuts
# ----------------------------------------------------------------------


def test_cut_composes_multiplicatively():
    plant = make_plant()
    plant.apply_cut(0.5)
    plant.apply_cut(0.5)
    assert plant.state.kt_eff == pytest.approx(0.025)


def test_cut_rejects_bad_fraction():
    plant = make_plant()
    with pytest.raises(ValueError):
        plant.apply_cut(1.0)


def test_cut_drops_force_at_same_pose():
    plant = make_plant(grip_release=0.0)
    for _ in range(1000):
        plant.step(PlantInput(1.0, 0.0), 0.001)
    before = plant.step(PlantInput(0.0, 0.0), 0.001)
    d_p = plant.state.d_p
    plant.apply_cut(0.6)
    plant.state.disturb_left = 0.0  # look past the scissor transient
    after = plant.step(PlantInput(0.0, 0.0), 0.001)
    assert plant.state.d_p == pytest.approx(d_p)
    assert after.Fp < before.Fp
    assert after.Fp == pytest.approx(0.4 * before.Fp, rel=1e-6)


def test_cut_to_nothing_leaves_damping_only():
    plant = make_plant(grip_release=0.0, disturbance_amplitude=0.0)
    for _ in range(1000):
        plant.step(PlantInput(1.0, 0.0), 0.001)
    plant.apply_cut(1.0 - 1e-12)
    r = plant.step(PlantInput(1.0, 0.0), 0.001)
    assert r.Fp == pytest.approx(BENCH.ct * 1.0, rel=1e-6)


def test_cut_on_disengaged_tissue_warns():
    plant = make_plant(engaged=False)
    kt_before = plant.state.kt_eff
    plant.apply_cut(0.5)
    assert plant.state.kt_eff == kt_before
    assert "cut_ignored_disengaged" in plant.drain_events()


def test_cut_transient_swings_both_ways_and_decays():
    plant = make_plant(disturbance_amplitude=0.1, disturbance_duration=0.5, grip_release=0.0)
    for _ in range(1000):
        plant.step(PlantInput(1.0, 0.0), 0.001)
    plant.apply_cut(0.5)
    base = plant.state.kt_eff * plant.state.d_p
    deviations = []
    for _ in range(500):
        r = plant.step(PlantInput(0.0, 0.0), 0.001)
        deviations.append(r.Fp - base)
    assert max(deviations) > 0.02 and min(deviations) < -0.02
    assert abs(deviations[-1]) < 1e-6  # fully decayed
    assert plant.state.failure == FAILURE_NONE


# ----------------------------------------------------------------------
# failure
# ----------------------------------------------------------------------


def test_split_failure_latches_and_silences_outputs():
    # Preload the grasp so the grip holds (no slide, no break) while the
    # pull crosses the tensile limit.
    plant = make_plant(tissue=SOFT)
    plant.state.d_p = 0.9
    plant.state.d_u = 0.9  # spring preload 0.9 N
    r = None
    for _ in range(5000):
        r = plant.step(PlantInput(2.0, 0.0), 0.001)
        if plant.state.failure != FAILURE_NONE:
            break
    assert plant.state.failure == "split"
    assert r.Fp == 0.0 and r.Fg == 0.0
    d_p = plant.state.d_p
    plant.step(PlantInput(0.0, 1.0), 0.5)
    assert plant.state.d_p == d_p  # upper driver no longer moves the jaws
    assert plant.truth.Fp == 0.0


def test_slide_failure_needs_established_grip():
    # A pull against a real grip beyond the friction ratio slides off.
    plant = make_plant(tissue=TissueModel(kt=0.1, ct=0.01, grip_limit_ratio=0.5))
    plant.state.d_u = 1.0
    plant.state.d_p = 1.0  # spring preloaded: Fg > 0, Fp = kt*d_p
    for _ in range(2000):
        plant.step(PlantInput(1.0, 0.0), 0.001)
        if plant.state.failure != FAILURE_NONE:
            break
    assert plant.state.failure == "slide"


def test_break_failure_on_grasp_overload():
    plant = make_plant(tissue=TissueModel(kt=0.1, ct=0.01, break_grasp_force=0.2))
    for _ in range(3000):
        plant.step(PlantInput(0.0, 1.0), 0.001)
        if plant.state.failure != FAILURE_NONE:
            break
    assert plant.state.failure == "break"


# ----------------------------------------------------------------------
# sensing
# ----------------------------------------------------------------------


def test_noiseless_sample_equals_truth():
    plant = make_plant()
    for _ in range(100):
        truth = plant.step(PlantInput(0.5, 0.5), 0.001)
    sensed = plant.sample()
    assert sensed == truth


def test_sample_noise_is_reproducible():
    def trace(seed):
        plant = make_plant(config=SimConfig(dt_plant=0.001, dt_sensor=0.033, noise_sd=0.01, seed=seed))
        out = []
        for _ in range(50):
            plant.advance(PlantInput(0.5, 0.1), 33)
            out.append(plant.sample())
        return out

    assert trace(42) == trace(42)
    assert trace(42) != trace(43)


def test_sensed_spring_force_saturates_before_pull_derivation():
    stiff_spring = SpringModel(ks=2.0, ts_max=5.0)
    plant = Plant(GEOM, stiff_spring, BENCH, MS_CONFIG, engaged=True)
    plant.state.d_u = 3.0  # true Fs = 6 N, beyond the 5 N sensing range
    plant.state.d_p = 3.0
    plant.step(PlantInput(0.0, 0.0), 0.001)
    assert plant.truth.Fs == pytest.approx(6.0)
    sensed = plant.sample()
    assert sensed.Fs == pytest.approx(5.0)
    assert sensed.fs_saturated
    assert sensed.Fp == pytest.approx(sensed.Fd - 5.0)


def test_determinism_bit_identical():
    def run():
        plant = make_plant(config=SimConfig(noise_sd=0.02, seed=9))
        rows = []
        for k in range(200):
            plant.advance(PlantInput(0.3, 0.05 if k % 2 else -0.05))
            s = plant.sample()
            rows.append((s.Fd, s.Fs, s.Fp, s.Fg, plant.state.d_p))
        return rows

    assert run() == run()


# ----------------------------------------------------------------------
# rank tests
# ----------------------------------------------------------------------


def test_rank_checks_nominal():
    result = rank_checks(SOFT, SPRING, GEOM)
    assert result == {"controllable": True, "observable": True}


def test_rank_checks_zero_tissue_stiffness():
    result = rank_checks(TissueModel(kt=0.0, ct=0.01), SPRING, GEOM)
    assert result["controllable"] is True
    assert result["observable"] is False


def test_controllability_is_parameter_free():
    # B = [[1,1],[1,0]] has det -1 regardless of any physical parameter.
    for kt in (0.0, 0.5, 3.0):
        result = rank_checks(TissueModel(kt=kt, ct=0.0), SPRING, GEOM)
        assert result["controllable"] is True


# ----------------------------------------------------------------------
# config validation
# ----------------------------------------------------------------------


def test_sensor_period_must_be_integer_multiple():
    with pytest.raises(ValueError):
        SimConfig(dt_plant=0.001, dt_sensor=1.0 / 30.0)


def test_default_config_is_consistent():
    cfg = SimConfig()
    assert cfg.steps_per_sample == 100
