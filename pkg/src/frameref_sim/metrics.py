"""Diagnostic classification metrics and trajectory-level summaries.

Positives are SUPPORTS throughout: TPR is recall on supported claims,
TNR is the correct-rejection rate on refuted claims, and balanced
accuracy is their mean. MSPR (mean probability assigned to SUPPORTS on
refuted claims) uses the pair-normalized probability so numbers are
comparable across backends. Undefined values (empty strata) are
reported as absent, never as zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .corpus import ClaimVariant, FramingType, Label
from .environment import Trajectory
from .errors import EmptyInput
from .personas import Judgment, PersonaBackend

OVERALL = "OVERALL"


@dataclass
class DiagnosticRow:
    framing: str
    n: int
    bacc: Optional[float]
    tnr: Optional[float]
    pct_supp: Optional[float]
    mspr: Optional[float]
    tpr: Optional[float]


@dataclass
class TrajectorySummary:
    correct_frac: float
    incorrect_frac: float
    avg_conf_correct: Optional[float]
    avg_conf_incorrect: Optional[float]
    avg_info_health: float
    n_trajectories: int
    n_steps: int


@dataclass
class CurvePoint:
    t: int
    mean_health: float
    std_health: float
    n_alive: int


def _stratum_row(name: str, records: Sequence[tuple[ClaimVariant, Judgment]]) -> DiagnosticRow:
    n = len(records)
    supports = [(c, j) for c, j in records if c.true_label is Label.SUPPORTS]
    refutes = [(c, j) for c, j in records if c.true_label is Label.REFUTES]
    tpr = (
        sum(j.action is Label.SUPPORTS for _, j in supports) / len(supports)
        if supports
        else None
    )
    tnr = (
        sum(j.action is Label.REFUTES for _, j in refutes) / len(refutes)
        if refutes
        else None
    )
    bacc = (tpr + tnr) / 2.0 if tpr is not None and tnr is not None else None
    pct_supp = sum(j.action is Label.SUPPORTS for _, j in records) / n
    mspr = (
        float(np.mean([j.p_supports_pair for _, j in refutes])) if refutes else None
    )
    return DiagnosticRow(
        framing=name, n=n, bacc=bacc, tnr=tnr, pct_supp=pct_supp, mspr=mspr, tpr=tpr
    )


def diagnostic_eval(
    persona: PersonaBackend,
    claims: Sequence[ClaimVariant],
    rng: Optional[np.random.Generator] = None,
) -> list[DiagnosticRow]:
    """Judge every claim once, then aggregate per framing plus overall.

    Empty framing strata are omitted; metrics that are undefined for a
    stratum (e.g. MSPR with no refuted claims) come back as None.
    """
    if not claims:
        raise EmptyInput("diagnostic_eval needs at least one claim")
    records = [(claim, persona.judge(claim, rng)) for claim in claims]
    rows = []
    for framing in FramingType:
        stratum = [(c, j) for c, j in records if c.framing is framing]
        if stratum:
            rows.append(_stratum_row(framing.value, stratum))
    rows.append(_stratum_row(OVERALL, records))
    return rows


def trajectory_summary(trajectories: Sequence[Trajectory]) -> TrajectorySummary:
    """Pool steps across trajectories; health averages over terminal values."""
    steps = [step for trajectory in trajectories for step in trajectory.steps]
    if not trajectories or not steps:
        raise EmptyInput("trajectory_summary needs at least one trajectory with steps")
    correct = [s for s in steps if s.correct]
    incorrect = [s for s in steps if not s.correct]
    return TrajectorySummary(
        correct_frac=len(correct) / len(steps),
        incorrect_frac=len(incorrect) / len(steps),
        avg_conf_correct=(
            float(np.mean([s.judgment.confidence for s in correct])) if correct else None
        ),
        avg_conf_incorrect=(
            float(np.mean([s.judgment.confidence for s in incorrect]))
            if incorrect
            else None
        ),
        avg_info_health=float(np.mean([t.terminal_health for t in trajectories])),
        n_trajectories=len(trajectories),
        n_steps=len(steps),
    )


def per_step_curve(trajectories: Sequence[Trajectory]) -> list[CurvePoint]:
    """Mean/std of running health at each step over still-alive trajectories.

    Early-terminated trajectories contribute only while alive; ``n_alive``
    records how many trajectories reached each step.
    """
    if not trajectories:
        raise EmptyInput("per_step_curve needs at least one trajectory")
    max_t = max((len(t.steps) for t in trajectories), default=0)
    points = []
    for t in range(1, max_t + 1):
        healths = [
            trajectory.steps[t - 1].health_after
            for trajectory in trajectories
            if len(trajectory.steps) >= t
        ]
        points.append(
            CurvePoint(
                t=t,
                mean_health=float(np.mean(healths)),
                std_health=float(np.std(healths)),
                n_alive=len(healths),
            )
        )
    return points


def _cell(value) -> str:
    return "" if value is None else repr(value) if isinstance(value, float) else str(value)


DIAGNOSTIC_COLUMNS = ("framing", "bacc", "tnr", "pct_supp", "mspr", "tpr", "n")
SUMMARY_COLUMNS = (
    "correct_frac",
    "incorrect_frac",
    "avg_conf_correct",
    "avg_conf_incorrect",
    "avg_info_health",
    "n_trajectories",
    "n_steps",
)
CURVE_COLUMNS = ("t", "mean_health", "std_health", "n_alive")


def diagnostic_to_csv(rows: Iterable[DiagnosticRow], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(DIAGNOSTIC_COLUMNS)
    for row in rows:
        writer.writerow(
            [row.framing]
            + [_cell(getattr(row, col)) for col in DIAGNOSTIC_COLUMNS[1:]]
        )


def summary_to_csv(summary: TrajectorySummary, out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(SUMMARY_COLUMNS)
    writer.writerow([_cell(getattr(summary, col)) for col in SUMMARY_COLUMNS])


def curve_to_csv(points: Iterable[CurvePoint], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(CURVE_COLUMNS)
    for point in points:
        writer.writerow([_cell(getattr(point, col)) for col in CURVE_COLUMNS])
