import json

import pytest

from stripscot.cli import main
from stripscot.datagen import make_problem_pool, write_jsonl, GeneratorSizes
from stripscot.domains import BLOCKSWORLD_PDDL
from stripscot.pddl import print_problem

from loop_helpers import bad_text


@pytest.fixture
def files(tmp_path, two_blocks, sussman):
    (tmp_path / "d.pddl").write_text(BLOCKSWORLD_PDDL)
    (tmp_path / "p.pddl").write_text(print_problem(sussman))
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_then_validate(files, capsys):
    code, _, _ = run(capsys, "plan", files / "d.pddl", files / "p.pddl", "-o", files / "plan")
    assert code == 0
    assert len((files / "plan").read_text().splitlines()) == 6
    code, out, _ = run(capsys, "validate", files / "d.pddl", files / "p.pddl", files / "plan",
                       "--feedback", "binary")
    assert (code, out) == (0, "valid\n")


def test_validate_corrupted_trace(files, capsys, bw, sussman):
    from stripscot.datagen import Instance
    text = bad_text(Instance("s", "blocksworld", bw, sussman))
    (files / "bad.txt").write_text(text)
    code, out, _ = run(capsys, "validate", files / "d.pddl", files / "p.pddl", files / "bad.txt",
                       "--feedback", "detailed")
    assert code == 1
    assert out.startswith("invalid\nstep ")


def test_unknown_action_is_invalid_not_a_crash(files, capsys):
    (files / "plan").write_text("(teleport a)\n")
    code, out, _ = run(capsys, "validate", files / "d.pddl", files / "p.pddl", files / "plan")
    assert code == 1 and "invalid sequence" in out


def test_usage_errors(files, capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    (files / "broken").write_text("(pick-up a")
    code, _, err = run(capsys, "validate", files / "d.pddl", files / "p.pddl", files / "broken")
    assert code == 2 and "parse error" in err
    assert run(capsys, "plan", files / "missing.pddl", files / "p.pddl")[0] == 2


def test_data_pipeline(tmp_path, capsys):
    pool = tmp_path / "pool.jsonl"
    assert run(capsys, "--seed", 4, "gen-data", "problems", "--count", 4, "-o", pool)[0] == 0
    assert len(pool.read_text().splitlines()) == 12
    assert run(capsys, "split", pool, "--output", tmp_path / "s")[0] == 0
    assert sum(len((tmp_path / "s" / f"{n}.jsonl").read_text().splitlines())
               for n in ("d1", "d2", "test")) == 12
    p1 = tmp_path / "p1.jsonl"
    assert run(capsys, "gen-data", "phase1", "--kinds", "blocksworld", "--count", 8,
               "-o", p1)[0] == 0
    assert len(p1.read_text().splitlines()) == 8


def test_run_loop_evaluate_losses(tmp_path, capsys):
    pool = tmp_path / "pool.jsonl"
    write_jsonl(pool, make_problem_pool(["blocksworld"], 3, sizes=GeneratorSizes(blocks=3)))
    code, out, _ = run(capsys, "run-loop", pool, "--backend", "oracle", "--eta", 2,
                       "--mode", "binary", "-o", tmp_path / "camp")
    assert code == 0 and "solved 3/3" in out
    report = json.loads((tmp_path / "camp" / "report.json").read_text())
    assert report["accuracy"] == 100.0
    code, out, _ = run(capsys, "losses", "--reasoning",
                       tmp_path / "camp" / "iter_01" / "reasoning.jsonl",
                       "--final", tmp_path / "camp" / "iter_01" / "final.jsonl")
    assert code == 0 and json.loads(out)["loss_reasoning"] == 0.0
    (tmp_path / "s.json").write_text(json.dumps({"default": ""}))
    code, out, _ = run(capsys, "evaluate", pool, "--backend", "scripted", "--script",
                       tmp_path / "s.json", "-o", tmp_path / "ev.json")
    assert code == 0 and "100.0" in out
    assert json.loads((tmp_path / "ev.json").read_text())[0]["accuracy"] == 0.0
    assert run(capsys, "losses")[0] == 2
    assert run(capsys, "run-loop", pool, "--backend", "oracle", "--eta", 0)[0] == 2


def test_config_flag(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("loop:\n  eta: nope\n")
    pool = tmp_path / "pool.jsonl"
    write_jsonl(pool, make_problem_pool(["blocksworld"], 1))
    code, _, err = run(capsys, "--config", cfg, "run-loop", pool, "--backend", "oracle")
    assert code == 2 and "loop.eta" in err
