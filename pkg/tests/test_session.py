import pytest

from traction_sim.forceps import ForceReadings
from traction_sim.session import (
    CMD_ABORT,
    CMD_ADJUST_TARGETS,
    CMD_CONFIRM_CUTOFF,
    CMD_CUT,
    CMD_REQUEST_ANOTHER_CUT,
    OperatorCommand,
    PHASE_APPROACH,
    PHASE_AWAIT_CUT,
    PHASE_DONE,
    PHASE_FAILED,
    PHASE_GRASPING,
    PHASE_INITIAL_PULL,
    PHASE_MOVE_OUT,
    PHASE_OPERATOR_CHECK,
    PHASE_POST_CUT_PULL,
    TractionParams,
    TractionSession,
    hold_static,
)

DT = 1.0 / 30.0


def sensed(fp=0.0, fg=0.0):
    return ForceReadings(Fd=fp, Fs=0.0, Fp=fp, Fg=fg)


def make_session(**params):
    return TractionSession(TractionParams(**params), settle_time=0.1)


def tick(session, fp=0.0, fg=0.0, d_p=0.0, failure="none", t=0.0):
    return session.tick(sensed(fp, fg), d_p, failure, t, DT)


def drive_to_await_cut(session):
    tick(session, fp=-0.06)          # touch
    tick(session, fg=0.35)           # grasp established
    tick(session, fp=0.26, d_p=5.0)  # initial pull target reached
    assert session.phase == PHASE_AWAIT_CUT


# ----------------------------------------------------------------------
# phase walk
# ----------------------------------------------------------------------


def test_approach_until_touch():
    session = make_session()
    d = tick(session, fp=-0.04)
    assert d.phase == PHASE_APPROACH and d.mode == "approach"
    d = tick(session, fp=-0.05)
    assert d.phase == PHASE_GRASPING
    assert "touch_detected" in d.events


def test_grasp_until_target():
    session = make_session()
    tick(session, fp=-0.06)
    d = tick(session, fg=0.29)
    assert d.phase == PHASE_GRASPING and d.mode == "grasp"
    d = tick(session, fg=0.30)
    assert d.phase == PHASE_INITIAL_PULL


def test_initial_pull_to_await_cut_on_target():
    session = make_session()
    tick(session, fp=-0.06)
    tick(session, fg=0.35)
    d = tick(session, fp=0.24)
    assert d.phase == PHASE_INITIAL_PULL and d.mode == "decoupled"
    d = tick(session, fp=0.25)
    assert d.phase == PHASE_AWAIT_CUT
    assert "pull_target_reached" in d.events


def test_pull_respects_distance_guards():
    session = make_session()
    tick(session, fp=-0.06)
    tick(session, fg=0.35, d_p=1.0)  # pull baseline = 1.0
    d = tick(session, fp=0.1, d_p=21.0)
    assert d.phase == PHASE_AWAIT_CUT
    assert "incr_limit_reached" in d.events


def test_total_distance_guard():
    session = make_session(d_incr_limit=100.0)
    tick(session, fp=-0.06)
    tick(session, fg=0.35, d_p=1.0)
    d = tick(session, fp=0.1, d_p=30.0)
    assert "total_limit_reached" in d.events


def test_pull_only_mode_when_decoupling_disabled():
    session = make_session(decouple_during_pull=False)
    tick(session, fp=-0.06)
    tick(session, fg=0.35)
    d = tick(session, fp=0.1)
    assert d.mode == "pull"


# ----------------------------------------------------------------------
# cut handling
# ----------------------------------------------------------------------


def test_cut_reduces_target_and_enters_post_cut_pull():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT, cut_fraction=0.55))
    d = tick(session, fp=0.25, d_p=5.0)
    assert d.phase == PHASE_POST_CUT_PULL
    assert d.cut == pytest.approx(0.55)
    assert session.fp_target == pytest.approx(0.20)
    assert d.acks == [(OperatorCommand(CMD_CUT, cut_fraction=0.55), True, "")]


def test_target_schedule_geometric():
    session = make_session()
    drive_to_await_cut(session)
    for k in range(4):
        session.submit(OperatorCommand(CMD_CUT, cut_fraction=0.5))
        tick(session, fp=0.3, d_p=5.0, t=1.0 * k)          # cut tick (settle starts)
        for j in range(10):                                 # settle out, then re-reach
            tick(session, fp=0.3, d_p=5.0, t=1.0 * k + 0.1 * j)
        assert session.phase == PHASE_AWAIT_CUT
    assert session.target_schedule == pytest.approx(
        [0.25, 0.20, 0.16, 0.128, 0.1024], abs=1e-12
    )


def test_rho_one_keeps_targets_constant():
    session = make_session(rho=1.0)
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    tick(session, fp=0.3)
    assert session.fp_target == pytest.approx(0.25)


def test_settle_holds_before_cutoff_check():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    d = tick(session, fp=0.25)
    assert d.mode == "hold"  # observing the cut transient
    # settle_time=0.1 s at 30 Hz: the next few ticks stay held
    d = tick(session, fp=0.02)
    assert d.mode == "hold"
    d = tick(session, fp=0.02)
    d = tick(session, fp=0.02)
    assert session.phase == PHASE_OPERATOR_CHECK  # cutoff: 0.02 < 0.05


def test_zero_settle_still_checks_cutoff_on_post_cut_sample():
    # Even with the settle window disabled, the cutoff comparison must see
    # a sample taken after the cut landed, never the pre-cut force.
    session = TractionSession(TractionParams(), settle_time=0.0)
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    d = tick(session, fp=0.26)  # cut tick: pre-cut reading, held
    assert d.mode == "hold"
    assert session.phase == PHASE_POST_CUT_PULL
    d = tick(session, fp=0.01)  # first post-cut reading
    assert session.phase == PHASE_OPERATOR_CHECK


def test_post_cut_pull_resumes_when_force_remains():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    tick(session, fp=0.25)
    for _ in range(5):
        d = tick(session, fp=0.11)
    assert session.phase == PHASE_POST_CUT_PULL
    assert d.mode == "decoupled"


def test_no_pull_mode_in_operator_check():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    tick(session, fp=0.25)
    for _ in range(5):
        tick(session, fp=0.01)
    assert session.phase == PHASE_OPERATOR_CHECK
    d = tick(session, fp=0.01)
    assert d.mode == "grasp_guarded"
    assert d.dp_speed_cap == 0.0


def drive_to_operator_check(session):
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    tick(session, fp=0.26)
    for _ in range(5):
        tick(session, fp=0.01)
    assert session.phase == PHASE_OPERATOR_CHECK


def test_request_another_cut_returns_to_await():
    session = make_session()
    drive_to_operator_check(session)
    session.submit(OperatorCommand(CMD_REQUEST_ANOTHER_CUT))
    d = tick(session, fp=0.01)
    assert d.phase == PHASE_AWAIT_CUT
    assert d.acks[0][1] is True


def test_extra_cut_allowed_from_operator_check():
    # the final check may order more cuts, without bound
    session = make_session()
    drive_to_operator_check(session)
    session.submit(OperatorCommand(CMD_CUT, cut_fraction=0.5))
    d = tick(session, fp=0.01)
    assert d.phase == PHASE_POST_CUT_PULL
    assert d.cut == pytest.approx(0.5)
    assert session.cut_index == 2


def test_confirm_cutoff_moves_out_then_done():
    session = TractionSession(TractionParams(), settle_time=0.1, move_out_hold=2 * DT)
    tick(session, fp=-0.06)
    tick(session, fg=0.35)
    tick(session, fp=0.26)
    session.submit(OperatorCommand(CMD_CUT))
    tick(session, fp=0.26)
    for _ in range(5):
        tick(session, fp=0.01)
    session.submit(OperatorCommand(CMD_CONFIRM_CUTOFF))
    d = tick(session, fp=0.01)
    assert d.phase == PHASE_MOVE_OUT
    tick(session)
    d = tick(session)
    assert d.phase == PHASE_DONE


# ----------------------------------------------------------------------
# command legality
# ----------------------------------------------------------------------


def test_cut_rejected_outside_await_phases():
    session = make_session()
    tick(session, fp=-0.06)  # now Grasping
    session.submit(OperatorCommand(CMD_CUT))
    d = tick(session, fg=0.1)
    assert d.acks[0][1] is False
    assert "not accepted in phase Grasping" in d.acks[0][2]
    assert any(e.startswith("command_rejected") for e in d.events)
    assert session.phase == PHASE_GRASPING
    assert session.cut_index == 0


def test_one_command_consumed_per_tick():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_CUT))
    session.submit(OperatorCommand(CMD_CUT))
    d = tick(session, fp=0.25)
    assert len(d.acks) == 1


def test_adjust_targets():
    session = make_session()
    drive_to_await_cut(session)
    session.submit(OperatorCommand(CMD_ADJUST_TARGETS, d_fg=0.05, d_fp=-0.05))
    d = tick(session, fp=0.25)
    assert d.acks[0][1] is True
    assert session.fg_target == pytest.approx(0.35)
    assert session.fp_target == pytest.approx(0.20)


def test_abort_from_any_phase():
    session = make_session()
    session.submit(OperatorCommand(CMD_ABORT))
    d = tick(session)
    assert d.phase == PHASE_FAILED
    assert session.failure_reason == "operator_abort"


def test_plant_failure_fails_session():
    session = make_session()
    d = tick(session, failure="slide")
    assert d.phase == PHASE_FAILED
    assert session.failure_reason == "slide"


def test_non_finite_estimate_fails_session():
    session = make_session()
    d = tick(session, fp=float("nan"))
    assert d.phase == PHASE_FAILED
    assert session.failure_reason == "sensor"


def test_unknown_command_kind_rejected_at_construction():
    with pytest.raises(ValueError):
        OperatorCommand("chop")
    with pytest.raises(ValueError):
        OperatorCommand(CMD_CUT, cut_fraction=1.5)


# ----------------------------------------------------------------------
# hold_static
# ----------------------------------------------------------------------


def test_hold_static_zeros():
    assert hold_static(PHASE_AWAIT_CUT) == (0.0, 0.0)


def test_hold_static_wrong_phase():
    with pytest.raises(ValueError):
        hold_static(PHASE_GRASPING)


# ----------------------------------------------------------------------
# params validation
# ----------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        TractionParams(rho=0.0)
    with pytest.raises(ValueError):
        TractionParams(rho=1.2)
    with pytest.raises(ValueError):
        TractionParams(Fp_touch=0.01)
    with pytest.raises(ValueError):
        TractionParams(Fp_cutoff=-0.1)
