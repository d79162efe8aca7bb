import json
import subprocess
import sys

import numpy as np
import pytest

from frameref_sim.cli import cmd_dispatch, dump_config, load_config
from frameref_sim.corpus import FramingType, RecordSchema, load_pool
from frameref_sim.errors import ConfigParse, DomainError, UnknownKey
from frameref_sim.personas import Policy

from synth import make_pool, split_line


@pytest.fixture
def workdir(tmp_path):
    """Small end-to-end pipeline inputs: claims, embeddings, targets."""
    pool = make_pool(40, seed=0)
    claims = tmp_path / "claims.jsonl"
    with open(claims, "w") as fh:
        from frameref_sim.corpus import write_split_records

        write_split_records(pool.variants(), fh)

    rng = np.random.default_rng(1)
    emb_jsonl = tmp_path / "emb.jsonl"
    with open(emb_jsonl, "w") as fh:
        for variant in pool.variants():
            fh.write(
                json.dumps(
                    {
                        "variant_id": variant.variant_id,
                        "values": rng.normal(size=8).tolist(),
                    }
                )
                + "\n"
            )

    targets = tmp_path / "targets.json"
    targets.write_text(
        json.dumps(
            {
                "name": "demo",
                "framings": {
                    framing.value: {
                        "mspr": 0.55,
                        "tnr": 0.3,
                        "mean_p_supports": 0.8,
                        "tpr": 0.9,
                    }
                    for framing in FramingType
                },
            }
        )
    )
    return tmp_path


def run_pipeline(workdir, seed=7):
    store = workdir / "store.fremb1"
    persona = workdir / "persona.json"
    config = workdir / "run.cfg"
    out = workdir / "traj.jsonl"

    assert (
        cmd_dispatch(
            [
                "embed-import",
                "--in",
                str(workdir / "emb.jsonl"),
                "--out",
                str(store),
                "--format",
                "jsonl",
            ]
        )
        == 0
    )
    assert (
        cmd_dispatch(
            ["fit-persona", "--targets", str(workdir / "targets.json"), "--out", str(persona)]
        )
        == 0
    )
    config.write_text(
        json.dumps(
            {
                "claims": str(workdir / "claims.jsonl"),
                "embeddings": str(store),
                "persona": str(persona),
                "k": 5,
                "window_size": 3,
                "horizon": 20,
                "n_trajectories": 4,
                "master_seed": seed,
            }
        )
    )
    assert cmd_dispatch(["simulate", "--config", str(config), "--out", str(out)]) == 0
    return out


class TestLoadConfig:
    def write(self, tmp_path, payload):
        path = tmp_path / "run.cfg"
        path.write_text(json.dumps(payload))
        return path

    def minimal(self, tmp_path):
        return {
            "claims": str(tmp_path / "c.jsonl"),
            "embeddings": str(tmp_path / "e.fremb1"),
            "persona": str(tmp_path / "p.json"),
        }

    def test_minimal_defaults(self, tmp_path):
        config, paths = load_config(self.write(tmp_path, self.minimal(tmp_path)))
        assert (config.k, config.window_size, config.horizon) == (5, 3, 100)
        assert config.softmax_temperature == 1.0
        assert config.policy is Policy.GREEDY
        assert paths["claims"].endswith("c.jsonl")

    def test_zero_temperature_rejected(self, tmp_path):
        payload = {**self.minimal(tmp_path), "softmax_temperature": 0}
        with pytest.raises(DomainError):
            load_config(self.write(tmp_path, payload))

    def test_unknown_key_rejected(self, tmp_path):
        payload = {**self.minimal(tmp_path), "sofmax_temperature": 2.0}
        with pytest.raises(UnknownKey):
            load_config(self.write(tmp_path, payload))

    def test_missing_required_key(self, tmp_path):
        payload = self.minimal(tmp_path)
        del payload["claims"]
        with pytest.raises(ConfigParse):
            load_config(self.write(tmp_path, payload))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("{nope")
        with pytest.raises(ConfigParse):
            load_config(path)

    def test_boolean_rejected_for_numeric_knob(self, tmp_path):
        payload = {**self.minimal(tmp_path), "k": True}
        with pytest.raises(ConfigParse):
            load_config(self.write(tmp_path, payload))

    def test_round_trip_fixed_point(self, tmp_path):
        payload = {
            **self.minimal(tmp_path),
            "k": 7,
            "horizon": 50,
            "policy": "SAMPLE",
            "window_aggregate": "CENTROID",
            "refuted_sticky": True,
            "master_seed": 99,
        }
        config, paths = load_config(self.write(tmp_path, payload))
        rewritten = self.write(tmp_path, dump_config(config, paths))
        config2, paths2 = load_config(rewritten)
        assert config == config2
        assert paths == paths2


class TestSubcommands:
    def test_unknown_command_exits_1(self, capsys):
        assert cmd_dispatch(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_no_command_exits_1(self, capsys):
        assert cmd_dispatch([]) == 1

    def test_split_invalid_ratios_exit_1(self, tmp_path, capsys):
        evidence = tmp_path / "evidence.jsonl"
        evidence.write_text('{"group_id": "g1", "pages": ["P1"]}\n')
        code = cmd_dispatch(
            [
                "split",
                "--evidence",
                str(evidence),
                "--out",
                str(tmp_path / "a.jsonl"),
                "--ratios",
                "0.5,0.5,0.1",
            ]
        )
        assert code == 1
        assert "ratios" in capsys.readouterr().err

    def test_split_writes_assignment(self, tmp_path, capsys):
        evidence = tmp_path / "evidence.jsonl"
        evidence.write_text(
            "\n".join(
                json.dumps({"group_id": f"g{i}", "pages": [f"P{i}"]}) for i in range(20)
            )
        )
        out = tmp_path / "assign.jsonl"
        assert (
            cmd_dispatch(["split", "--evidence", str(evidence), "--out", str(out), "--seed", "3"])
            == 0
        )
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 20

    def test_ingest_raw_with_summary(self, tmp_path):
        from synth import raw_line

        raw = tmp_path / "raw.jsonl"
        raw.write_text(
            "\n".join(
                raw_line(claim_id=f"c{i}", verification_passed=i % 4 != 0)
                for i in range(8)
            )
        )
        out = tmp_path / "claims.jsonl"
        summary = tmp_path / "summary.csv"
        code = cmd_dispatch(
            [
                "ingest",
                "--schema",
                "raw",
                "--in",
                str(raw),
                "--out",
                str(out),
                "--summary-out",
                str(summary),
            ]
        )
        assert code == 0
        pool = load_pool(out, RecordSchema.SPLIT)
        assert len(pool) == 6  # 2 of 8 failed verification
        text = summary.read_text()
        assert text.startswith("framing,failed,passed,")
        assert "CONSENSUS,2,6," in text

    def test_ingest_with_assignment_filter(self, tmp_path):
        claims = tmp_path / "claims.jsonl"
        claims.write_text(
            "\n".join(split_line(claim_id=f"g{i}") for i in range(10))
        )
        assignment = tmp_path / "assign.jsonl"
        assignment.write_text(
            "\n".join(
                json.dumps({"group_id": f"g{i}", "split": "TEST" if i < 3 else "TRAIN"})
                for i in range(10)
            )
        )
        out = tmp_path / "test_claims.jsonl"
        code = cmd_dispatch(
            [
                "ingest",
                "--schema",
                "split",
                "--in",
                str(claims),
                "--out",
                str(out),
                "--assignment",
                str(assignment),
                "--only-split",
                "test",
            ]
        )
        assert code == 0
        pool = load_pool(out, RecordSchema.SPLIT)
        assert pool.group_count == 3

    def test_pipeline_and_report(self, workdir, capsys):
        out = run_pipeline(workdir)
        assert (workdir / "traj.jsonl.manifest.json").exists()

        code = cmd_dispatch(["report", "--curves", str(out)])
        assert code == 0
        captured = capsys.readouterr()
        lines = captured.out.strip().splitlines()
        assert lines[0] == "t,mean_health,std_health,n_alive"
        assert len(lines) == 21  # header + horizon rows

        code = cmd_dispatch(["report", "--summary", str(out)])
        assert code == 0
        assert capsys.readouterr().out.startswith("correct_frac,")

    def test_report_matches_library_curve(self, workdir, capsys):
        import io

        from frameref_sim.metrics import curve_to_csv, per_step_curve
        from frameref_sim.trajlog import read_trajectories

        out = run_pipeline(workdir)
        cmd_dispatch(["report", "--curves", str(out)])
        cli_text = capsys.readouterr().out
        buffer = io.StringIO()
        curve_to_csv(per_step_curve(read_trajectories(out)), buffer)
        assert cli_text == buffer.getvalue()

    def test_simulate_deterministic_and_manifest(self, workdir):
        out1 = run_pipeline(workdir, seed=5)
        bytes1 = out1.read_bytes()
        manifest1 = json.loads((workdir / "traj.jsonl.manifest.json").read_text())
        out2 = run_pipeline(workdir, seed=5)
        assert out2.read_bytes() == bytes1
        manifest2 = json.loads((workdir / "traj.jsonl.manifest.json").read_text())
        for manifest in (manifest1, manifest2):
            manifest.pop("created_unix")
        assert manifest1 == manifest2
        digests = manifest1["input_digests"]
        assert set(digests) == {"claims", "embeddings", "persona"}
        assert all(len(d) == 64 for d in digests.values())

    def test_simulate_seed_changes_log(self, workdir):
        bytes1 = run_pipeline(workdir, seed=5).read_bytes()
        bytes2 = run_pipeline(workdir, seed=6).read_bytes()
        assert bytes1 != bytes2

    def test_missing_input_file_is_runtime_error(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            json.dumps(
                {
                    "claims": str(tmp_path / "absent.jsonl"),
                    "embeddings": str(tmp_path / "absent.fremb1"),
                    "persona": str(tmp_path / "absent.json"),
                }
            )
        )
        code = cmd_dispatch(
            ["simulate", "--config", str(config), "--out", str(tmp_path / "t.jsonl")]
        )
        assert code == 2

    def test_console_entry_point(self):
        result = subprocess.run(
            [sys.executable, "-m", "frameref_sim.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
