import io
import math

import numpy as np
import pytest

from frameref_sim.corpus import FramingType, Label
from frameref_sim.environment import SamplerBranch, Trajectory, TrajectoryStep
from frameref_sim.errors import EmptyInput
from frameref_sim.metrics import (
    CURVE_COLUMNS,
    DIAGNOSTIC_COLUMNS,
    DiagnosticRow,
    TrajectorySummary,
    curve_to_csv,
    diagnostic_eval,
    diagnostic_to_csv,
    per_step_curve,
    summary_to_csv,
    trajectory_summary,
)
from frameref_sim.personas import Judgment

from synth import CoinFlipPersona, FixedPersona, make_pool


def judgment(action, confidence):
    p_supports = confidence if action is Label.SUPPORTS else 1.0 - confidence
    p = min(max(p_supports, 1e-12), 1 - 1e-12)
    return Judgment(
        action=action,
        confidence=confidence,
        logprob_supports=math.log(p),
        logprob_refutes=math.log1p(-p),
        p_supports_pair=p_supports,
    )


def fixture_trajectory(rewards, h0=0.0, persona="fx", seed=0):
    steps = []
    health = h0
    for t, reward in enumerate(rewards, start=1):
        health += reward
        action = Label.SUPPORTS if reward >= 0 else Label.SUPPORTS
        steps.append(
            TrajectoryStep(
                t=t,
                variant_id=f"v{t}",
                judgment=judgment(action, abs(reward)),
                correct=reward >= 0,
                reward=reward,
                health_after=health,
                sampler_branch=SamplerBranch.SIMILAR,
            )
        )
    return Trajectory(
        persona=persona,
        seed=seed,
        h0=h0,
        steps=steps,
        terminal_health=health,
        terminated_early=False,
    )


class TestDiagnosticEval:
    def test_oracle_persona_perfect(self):
        pool = make_pool(50, seed=0)
        claims = list(pool.variants())
        rows = {r.framing: r for r in diagnostic_eval(FixedPersona(True, 1.0), claims)}
        overall = rows["OVERALL"]
        assert overall.bacc == pytest.approx(1.0)
        assert overall.mspr == pytest.approx(0.0, abs=1e-9)
        assert overall.n == len(claims)

    def test_coinflip_near_half_bacc(self):
        pool = make_pool(2500, refuted_share=0.5, framings=(FramingType.ORIGINAL,), seed=1)
        claims = list(pool.variants())
        rng = np.random.default_rng(2)
        rows = {r.framing: r for r in diagnostic_eval(CoinFlipPersona(), claims, rng)}
        assert rows["OVERALL"].bacc == pytest.approx(0.5, abs=0.03)

    def test_rows_per_framing_plus_overall(self):
        pool = make_pool(6, seed=3)
        claims = list(pool.variants())
        rows = diagnostic_eval(FixedPersona(True, 0.9), claims)
        names = [r.framing for r in rows]
        assert names == [f.value for f in FramingType] + ["OVERALL"]

    def test_empty_stratum_omitted(self):
        pool = make_pool(4, framings=(FramingType.ORIGINAL, FramingType.EMOTIONAL), seed=4)
        rows = diagnostic_eval(FixedPersona(True, 0.9), list(pool.variants()))
        names = {r.framing for r in rows}
        assert names == {"ORIGINAL", "EMOTIONAL", "OVERALL"}

    def test_mspr_absent_without_refuted_claims(self):
        pool = make_pool(4, refuted_share=0.0, seed=5)
        rows = {r.framing: r for r in diagnostic_eval(FixedPersona(True, 0.9), list(pool.variants()))}
        assert rows["OVERALL"].mspr is None
        assert rows["OVERALL"].tnr is None
        assert rows["OVERALL"].bacc is None
        assert rows["OVERALL"].tpr == pytest.approx(1.0)

    def test_pct_supp(self):
        pool = make_pool(10, refuted_share=0.3, framings=(FramingType.ORIGINAL,), seed=6)
        rows = {r.framing: r for r in diagnostic_eval(FixedPersona(True, 0.9), list(pool.variants()))}
        assert rows["OVERALL"].pct_supp == pytest.approx(0.7)

    def test_order_invariance_for_deterministic_persona(self):
        pool = make_pool(30, seed=7)
        claims = list(pool.variants())
        rows_fwd = diagnostic_eval(FixedPersona(False, 0.8), claims)
        rows_rev = diagnostic_eval(FixedPersona(False, 0.8), list(reversed(claims)))
        assert rows_fwd == rows_rev

    def test_empty_claims(self):
        with pytest.raises(EmptyInput):
            diagnostic_eval(FixedPersona(True, 0.9), [])


class TestTrajectorySummary:
    def test_single_trajectory_closed_form(self):
        trajectory = fixture_trajectory([0.8] * 10, h0=1.0)
        summary = trajectory_summary([trajectory])
        assert summary.correct_frac == pytest.approx(1.0)
        assert summary.incorrect_frac == pytest.approx(0.0)
        assert summary.avg_conf_correct == pytest.approx(0.8)
        assert summary.avg_conf_incorrect is None
        assert summary.avg_info_health == pytest.approx(1.0 + 8.0)

    def test_mean_of_terminal_healths(self):
        a = fixture_trajectory([1.0, 1.0])
        b = fixture_trajectory([1.0, 1.0, 1.0, 1.0])
        summary = trajectory_summary([a, b])
        assert summary.avg_info_health == pytest.approx(3.0)

    def test_fractions_sum_to_one(self):
        trajectory = fixture_trajectory([0.5, -0.5, 0.7, -0.1])
        summary = trajectory_summary([trajectory])
        assert summary.correct_frac + summary.incorrect_frac == pytest.approx(1.0, abs=1e-9)
        assert summary.n_steps == 4

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            trajectory_summary([])
        with pytest.raises(EmptyInput):
            trajectory_summary([Trajectory(persona="x", seed=0, h0=0.0)])

    def test_published_format_fixture(self):
        # Serialization check with published-scale magnitudes.
        summary = TrajectorySummary(
            correct_frac=0.541,
            incorrect_frac=0.459,
            avg_conf_correct=0.842,
            avg_conf_incorrect=0.821,
            avg_info_health=4.106,
            n_trajectories=100,
            n_steps=10_000,
        )
        buffer = io.StringIO()
        summary_to_csv(summary, buffer)
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0].startswith("correct_frac,")
        assert "4.106" in lines[1]


class TestPerStepCurve:
    def test_identical_trajectories_zero_std(self):
        rewards = [0.5, -0.2, 0.9]
        points = per_step_curve([fixture_trajectory(rewards), fixture_trajectory(rewards)])
        assert all(p.std_health == pytest.approx(0.0) for p in points)
        assert all(p.n_alive == 2 for p in points)

    def test_always_correct_unit_confidence_ramp(self):
        trajectory = fixture_trajectory([1.0] * 20)
        points = per_step_curve([trajectory])
        for point in points:
            assert point.mean_health == point.t  # exact

    def test_hand_built_two_trajectory_oracle(self):
        rewards_a = [0.5, 0.5, -0.5, 0.2, 0.1, -0.9, 0.3, 0.3, 0.3, 0.3]
        rewards_b = [-0.1, 0.4, 0.4, -0.2, 0.6, 0.6, -0.3, 0.1, 0.2, 0.5]
        points = per_step_curve(
            [fixture_trajectory(rewards_a), fixture_trajectory(rewards_b)]
        )
        # Oracle: plain running sums and literal mean/std.
        health_a, health_b = 0.0, 0.0
        for t in range(10):
            health_a += rewards_a[t]
            health_b += rewards_b[t]
            mean = (health_a + health_b) / 2
            var = ((health_a - mean) ** 2 + (health_b - mean) ** 2) / 2
            assert points[t].mean_health == pytest.approx(mean, abs=1e-12)
            assert points[t].std_health == pytest.approx(math.sqrt(var), abs=1e-12)

    def test_early_termination_tracked_by_n_alive(self):
        long = fixture_trajectory([0.1] * 8)
        short = fixture_trajectory([0.1] * 3)
        points = per_step_curve([long, short])
        assert [p.n_alive for p in points] == [2, 2, 2, 1, 1, 1, 1, 1]

    def test_final_point_matches_summary_without_early_termination(self):
        a = fixture_trajectory([0.4] * 6)
        b = fixture_trajectory([-0.2] * 6)
        points = per_step_curve([a, b])
        summary = trajectory_summary([a, b])
        assert points[-1].mean_health == pytest.approx(summary.avg_info_health, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            per_step_curve([])


class TestCsv:
    def test_diagnostic_csv_columns_and_none_cells(self):
        rows = [
            DiagnosticRow(
                framing="OVERALL", n=10, bacc=0.536, tnr=0.4, pct_supp=0.6, mspr=0.532, tpr=0.672
            ),
            DiagnosticRow(
                framing="ORIGINAL", n=5, bacc=None, tnr=None, pct_supp=1.0, mspr=None, tpr=1.0
            ),
        ]
        buffer = io.StringIO()
        diagnostic_to_csv(rows, buffer)
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == ",".join(DIAGNOSTIC_COLUMNS)
        assert lines[1].startswith("OVERALL,0.536,")
        assert ",,," in lines[2]  # absent metrics serialize as empty cells

    def test_curve_csv(self):
        points = per_step_curve([fixture_trajectory([1.0, -1.0])])
        buffer = io.StringIO()
        curve_to_csv(points, buffer)
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == ",".join(CURVE_COLUMNS)
        assert lines[1] == "1,1.0,0.0,1"
        assert lines[2] == "2,0.0,0.0,1"
