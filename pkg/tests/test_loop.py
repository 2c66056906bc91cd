import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from stripscot.backends import OracleBackend, ScriptedBackend
from stripscot.config import LoopConfig
from stripscot.datagen import FinalRecord, ReasoningRecord, read_jsonl, verdict_to_dict
from stripscot.errors import BackendHTTPError, BackendTimeout
from stripscot.loop import as_task, run_campaign, run_feedback_loop
from stripscot.validator import ErrorClass

from loop_helpers import bad_text, good_text, instances


def oracle_for(insts):
    return OracleBackend({i.problem_id: (i.domain, i.problem) for i in insts})


def test_oracle_valid_first_try():
    inst = instances(1)[0]
    res = run_feedback_loop(oracle_for([inst]), inst.domain, inst.problem, LoopConfig(eta=5),
                            problem_id=inst.problem_id)
    verdict, reports = res
    assert verdict.valid and len(reports) == 1
    assert res.solved_at == 1


def test_valid_at_third_iteration():
    inst = instances(1)[0]
    pid = inst.problem_id
    b = ScriptedBackend({(pid, 1): bad_text(inst), (pid, 2): bad_text(inst, seed=1),
                         (pid, 3): good_text(inst)})
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(eta=10), problem_id=pid)
    assert res.valid and res.iterations == 3
    assert [r.final[0].v for r in res.reports] == [0, 0, 1]
    assert [o.error_class for o in res.outcomes] == ["precondition_violation",
                                                     "precondition_violation", None]
    # later prompts carry the previous completion and the feedback
    assert bad_text(inst, seed=1) in b.calls[2][2]
    assert "missing preconditions" in b.calls[1][2]


def test_iteration_bound():
    inst = instances(1)[0]
    b = ScriptedBackend({}, default=bad_text(inst))
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(eta=2))
    assert not res.valid and res.iterations == 2 and len(b.calls) == 2


def test_unparseable_output_consumes_an_iteration():
    inst = instances(1)[0]
    pid = inst.problem_id
    b = ScriptedBackend({(pid, 1): "STATE: {(on a\n", (pid, 2): "", (pid, 3): good_text(inst)})
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(eta=3), problem_id=pid)
    assert [o.error_class for o in res.outcomes] == ["invalid_sequence", "invalid_sequence", None]
    assert res.reports[0].final[0].trace is None
    assert res.reports[0].reasoning == []


class Flaky:
    deterministic, serial, identity = True, False, "flaky"

    def __init__(self, failures, exc, text=""):
        self.failures, self.exc, self.text, self.calls = failures, exc, text, 0

    def generate(self, prompt, params=None, *, problem_id="", iteration=0):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.exc
        return self.text


def test_transient_failures_are_retried():
    inst = instances(1)[0]
    b = Flaky(2, BackendTimeout("slow"), good_text(inst))
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(max_retries=2))
    assert res.valid and b.calls == 3


def test_backend_failure_recorded():
    inst = instances(1)[0]
    b = Flaky(100, BackendTimeout("slow"))
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(eta=5, max_retries=1))
    assert not res.valid and b.calls == 2
    assert res.backend_failure.startswith("BackendTimeout")
    assert res.verdict.error_class is ErrorClass.INVALID_SEQUENCE
    # client errors are not retried
    b = Flaky(100, BackendHTTPError(401, "no"))
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(eta=5, max_retries=3))
    assert b.calls == 1 and res.backend_failure


def test_binary_mode_hides_details():
    inst = instances(1)[0]
    pid = inst.problem_id
    bad = bad_text(inst)
    b = ScriptedBackend({(pid, 1): bad, (pid, 2): good_text(inst)})
    res = run_feedback_loop(b, inst.domain, inst.problem, LoopConfig(feedback_mode="binary"),
                            problem_id=pid)
    prompt = b.calls[1][2]
    task = as_task(inst)
    rest = prompt.replace(task.domain_text, "").replace(task.problem_text, "").replace(bad, "")
    step = res.attempts[0].verdict.per_step[-1]
    for a in step.missing_preconditions:
        assert str(a) not in rest
    assert "invalid" in rest and "missing" not in rest


def test_campaign_oracle_accuracy():
    insts = instances(10)
    rep = run_campaign(oracle_for(insts), insts, LoopConfig(eta=3))
    assert rep.accuracy == 100.0
    assert len(rep.iterations) == 1


def test_campaign_mixed_backend():
    insts = instances(10)
    script = {(inst.problem_id, 1): good_text(inst) if k % 2 == 0 else bad_text(inst)
              for k, inst in enumerate(insts)}
    rep = run_campaign(ScriptedBackend(script), insts, LoopConfig(eta=1))
    assert rep.accuracy == 50.0


def test_campaign_files_and_determinism(tmp_path):
    insts = instances(6)
    script = {}
    for k, inst in enumerate(insts):
        for t in range(1, k % 3 + 1):
            script[(inst.problem_id, t)] = bad_text(inst, seed=t)
        script[(inst.problem_id, k % 3 + 1)] = good_text(inst)
    cfg = LoopConfig(eta=4)
    rep = run_campaign(ScriptedBackend(script), insts, cfg, tmp_path / "a")
    n_final = sum(len(read_jsonl(p, FinalRecord)) for p in (tmp_path / "a").glob("*/final.jsonl"))
    n_steps = sum(len(read_jsonl(p, ReasoningRecord))
                  for p in (tmp_path / "a").glob("*/reasoning.jsonl"))
    assert n_final == sum(r.iterations for r in rep.results)
    assert n_steps == sum(len(a.trace) for r in rep.results for a in r.attempts)
    for p in (tmp_path / "a").glob("*/reasoning.jsonl"):
        for rec in read_jsonl(p, ReasoningRecord):
            assert verdict_to_dict(rec.revalidate()) == rec.feedback
    for p in (tmp_path / "a").glob("*/final.jsonl"):
        for rec in read_jsonl(p, FinalRecord):
            assert rec.revalidate() == rec.v
    run_campaign(ScriptedBackend(script), insts, cfg, tmp_path / "b")
    run_campaign(ScriptedBackend(script), insts, LoopConfig(eta=4, concurrency=4), tmp_path / "c")
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    assert first == (tmp_path / "c" / "report.json").read_bytes()
    data = json.loads(first)
    assert [it["attempted"] for it in data["iterations"]] == [6, 4, 2]


def test_campaign_rejects_bad_input():
    with pytest.raises(ValueError):
        run_campaign(ScriptedBackend({}), [], LoopConfig())
    inst = instances(1)[0]
    with pytest.raises(ValueError):
        run_campaign(ScriptedBackend({}), [inst, inst], LoopConfig())


def test_trainer_hook(tmp_path):
    got = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            got.append(json.loads(self.rfile.read(int(self.headers["Content-Length"]))))
            self.send_response(204)
            self.end_headers()

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        insts = instances(3)
        cfg = LoopConfig(eta=2, trainer_hook_url=f"http://127.0.0.1:{server.server_port}/",
                         epochs_reasoning=3)
        run_campaign(oracle_for(insts), insts, cfg, tmp_path)
    finally:
        server.shutdown()
        server.server_close()
    assert len(got) == 1
    assert got[0]["iteration"] == 1 and got[0]["final_records"] == 3
    assert got[0]["epochs_reasoning"] == 3
