"""Trajectory log serialization: line-delimited JSON, byte-deterministic.

Each trajectory contributes one metadata header record followed by one
record per step. Keys are sorted and separators fixed so identical runs
produce identical bytes.
"""

from __future__ import annotations

import json
from typing import IO, Iterator

from ._jsonl import iter_lines
from .corpus import Label
from .environment import SamplerBranch, Trajectory, TrajectoryStep
from .errors import SchemaViolation
from .personas import FirstTokenAudit, Judgment


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_trajectories(trajectories, out: IO[str]) -> None:
    for index, trajectory in enumerate(trajectories):
        header = {
            "record": "trajectory",
            "index": index,
            "persona": trajectory.persona,
            "seed": trajectory.seed,
            "h0": trajectory.h0,
            "n_steps": len(trajectory.steps),
            "terminal_health": trajectory.terminal_health,
            "terminated_early": trajectory.terminated_early,
        }
        if trajectory.error is not None:
            header["error"] = trajectory.error
        out.write(_dump(header))
        out.write("\n")
        for step in trajectory.steps:
            record = {
                "record": "step",
                "trajectory": index,
                "t": step.t,
                "variant_id": step.variant_id,
                "action": step.judgment.action.value,
                "confidence": step.judgment.confidence,
                "p_supports_pair": step.judgment.p_supports_pair,
                "logprob_supports": step.judgment.logprob_supports,
                "logprob_refutes": step.judgment.logprob_refutes,
                "correct": step.correct,
                "reward": step.reward,
                "health_after": step.health_after,
                "sampler_branch": step.sampler_branch.value,
            }
            if step.judgment.first_token_audit is not None:
                audit = step.judgment.first_token_audit
                record["first_token_audit"] = {
                    "logprob_supports": audit.logprob_supports,
                    "logprob_refutes": audit.logprob_refutes,
                    "agrees": audit.agrees,
                }
            out.write(_dump(record))
            out.write("\n")


def read_trajectories(source) -> list[Trajectory]:
    trajectories: list[Trajectory] = []
    for line in iter_lines(source):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid trajectory log line: {exc}") from exc
        kind = obj.get("record")
        if kind == "trajectory":
            trajectories.append(
                Trajectory(
                    persona=str(obj["persona"]),
                    seed=int(obj["seed"]),
                    h0=float(obj["h0"]),
                    terminal_health=float(obj["terminal_health"]),
                    terminated_early=bool(obj["terminated_early"]),
                    error=obj.get("error"),
                )
            )
        elif kind == "step":
            if not trajectories:
                raise SchemaViolation("step record before any trajectory header")
            audit = None
            if "first_token_audit" in obj:
                raw = obj["first_token_audit"]
                audit = FirstTokenAudit(
                    logprob_supports=float(raw["logprob_supports"]),
                    logprob_refutes=float(raw["logprob_refutes"]),
                    agrees=bool(raw["agrees"]),
                )
            judgment = Judgment(
                action=Label.parse(obj["action"]),
                confidence=float(obj["confidence"]),
                logprob_supports=float(obj["logprob_supports"]),
                logprob_refutes=float(obj["logprob_refutes"]),
                p_supports_pair=float(obj["p_supports_pair"]),
                first_token_audit=audit,
            )
            trajectories[-1].steps.append(
                TrajectoryStep(
                    t=int(obj["t"]),
                    variant_id=str(obj["variant_id"]),
                    judgment=judgment,
                    correct=bool(obj["correct"]),
                    reward=float(obj["reward"]),
                    health_after=float(obj["health_after"]),
                    sampler_branch=SamplerBranch(obj["sampler_branch"]),
                )
            )
        else:
            raise SchemaViolation(f"unknown record type in trajectory log: {kind!r}")
    return trajectories


def iter_step_records(source) -> Iterator[dict]:
    for line in iter_lines(source):
        obj = json.loads(line)
        if obj.get("record") == "step":
            yield obj
