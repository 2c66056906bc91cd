"""Generate / validate / re-prompt loop and multi-problem campaigns.

Each problem runs its own loop: the first prompt asks for a reasoning
trace, later prompts carry the previous completion plus validator
feedback. A valid trace ends the loop early; otherwise it stops after
``eta`` attempts. Every attempt yields step-level records (the reasoning
dataset) and one whole-plan record (the final dataset) for its iteration.

Weight updates are not performed here. A campaign writes each iteration's
datasets to disk and can POST a manifest to an external trainer.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .backends import GenerationParams
from .config import LoopConfig
from .core import Domain, Problem, satisfies_goal
from .datagen import (
    TraceAttempt,
    final_record,
    reasoning_records,
    write_jsonl,
)
from .errors import (
    BackendError,
    BackendHTTPError,
    BackendTimeout,
    BackendTransportError,
    ParseError,
)
from .losses import DEFAULT_WEIGHTS, LossWeights, loss_report
from .pddl import print_domain, print_problem
from .prompts import render_prompt
from .trace import parse_trace, predicted_validity
from .validator import PlanVerdict, classify_error, render_feedback, sequence_failure, validate_trace

log = logging.getLogger(__name__)

BACKEND_FAILURE = "backend_failure"


@dataclass(frozen=True)
class LoopTask:
    problem_id: str
    domain: Domain
    problem: Problem
    domain_text: str = ""
    problem_text: str = ""

    def __post_init__(self):
        if not self.domain_text:
            object.__setattr__(self, "domain_text", print_domain(self.domain))
        if not self.problem_text:
            object.__setattr__(self, "problem_text", print_problem(self.problem))


def as_task(item) -> LoopTask:
    """Accept a LoopTask, a generated Instance, a ProblemRecord or a
    ``(problem_id, domain, problem)`` tuple."""
    if isinstance(item, LoopTask):
        return item
    if isinstance(item, tuple):
        pid, d, p = item
        return LoopTask(pid, d, p)
    if hasattr(item, "load"):
        d, p = item.load()
        return LoopTask(item.problem_id, d, p, item.domain, item.problem)
    return LoopTask(item.problem_id, item.domain, item.problem,
                    item.domain_text, item.problem_text)


def assess_completion(domain: Domain, problem: Problem, text: str) -> tuple:
    """Parse and validate one model completion: ``(trace | None, verdict)``.

    Unreadable output, and output with no reasoning steps for a problem
    whose goal is not already true, count as an invalid sequence.
    """
    try:
        trace = parse_trace(text, domain)
    except ParseError as exc:
        return None, sequence_failure(problem, f"unparseable output: {exc.message}")
    if not trace.steps and not satisfies_goal(problem.init, problem.goal):
        return trace, sequence_failure(problem, "output contains no reasoning steps")
    return trace, validate_trace(domain, problem, trace)


@dataclass(frozen=True)
class ProblemOutcome:
    problem_id: str
    iteration: int
    valid: bool
    error_class: Optional[str]
    completion: str
    backend_failure: Optional[str] = None

    def to_dict(self) -> dict:
        return {"problem_id": self.problem_id, "iteration": self.iteration,
                "valid": self.valid, "error_class": self.error_class,
                "completion": self.completion, "backend_failure": self.backend_failure}


@dataclass
class IterationReport:
    iteration: int
    outcomes: list = field(default_factory=list)
    reasoning: list = field(default_factory=list)
    final: list = field(default_factory=list)
    loss_reasoning: Optional[float] = None
    loss_final: Optional[float] = None
    step_status_counts: dict = field(default_factory=dict)
    error_class_counts: dict = field(default_factory=dict)

    @property
    def attempted(self) -> int:
        return len(self.outcomes)

    @property
    def valid(self) -> int:
        return sum(o.valid for o in self.outcomes)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "attempted": self.attempted,
            "valid": self.valid,
            "loss_reasoning": self.loss_reasoning,
            "loss_final": self.loss_final,
            "reasoning_records": len(self.reasoning),
            "final_records": len(self.final),
            "step_status_counts": self.step_status_counts,
            "error_class_counts": self.error_class_counts,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


def _iteration_report(t: int, outcomes, reasoning, final, w: LossWeights) -> IterationReport:
    outcomes = sorted(outcomes, key=lambda o: o.problem_id)
    reasoning = sorted(reasoning, key=lambda r: (r.problem_id, r.step))
    final = sorted(final, key=lambda r: r.problem_id)
    lr = loss_report(reasoning, final, w)
    classes = Counter(o.error_class for o in outcomes if not o.valid)
    return IterationReport(t, outcomes, reasoning, final, lr.loss_reasoning, lr.loss_final,
                           lr.step_status_counts, dict(sorted(classes.items())))


@dataclass
class LoopResult:
    problem_id: str
    verdict: PlanVerdict
    attempts: list
    outcomes: list
    reports: list
    backend_failure: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.verdict.valid

    @property
    def iterations(self) -> int:
        return len(self.outcomes)

    @property
    def solved_at(self) -> Optional[int]:
        return self.outcomes[-1].iteration if self.valid else None

    def __iter__(self):
        # allows ``verdict, reports = run_feedback_loop(...)``
        return iter((self.verdict, self.reports))


_TRANSIENT = (BackendTimeout, BackendTransportError)


def _transient(exc: BackendError) -> bool:
    if isinstance(exc, BackendHTTPError):
        return exc.status == 429 or exc.status >= 500
    return isinstance(exc, _TRANSIENT)


def call_backend(backend, prompt: str, params: GenerationParams, task: LoopTask, t: int,
          retries: int) -> str:
    attempt = 0
    while True:
        try:
            return backend.generate(prompt, params, problem_id=task.problem_id, iteration=t)
        except BackendError as exc:
            if attempt >= retries or not _transient(exc):
                raise
            attempt += 1
            log.warning("backend call for %s iteration %d failed (%s); retry %d/%d",
                        task.problem_id, t, type(exc).__name__, attempt, retries)


def _prompt(task: LoopTask, t: int, prior: Optional[tuple], mode: str) -> str:
    bindings = {"domain": task.domain_text, "problem": task.problem_text}
    if t == 1 or prior is None:
        return render_prompt("cot_generate", bindings)
    completion, verdict = prior
    bindings["prior_trace"] = completion
    bindings["feedback"] = render_feedback(verdict, mode).text
    return render_prompt(f"cot_feedback_{mode}", bindings)


def run_feedback_loop(backend, domain: Domain, problem: Problem,
                      cfg: LoopConfig = LoopConfig(), problem_id: Optional[str] = None,
                      weights: LossWeights = DEFAULT_WEIGHTS,
                      task: Optional[LoopTask] = None) -> LoopResult:
    task = task or LoopTask(problem_id or problem.name, domain, problem)
    params = GenerationParams(cfg.temperature)
    attempts, outcomes, reports = [], [], []
    prior = None
    verdict: Optional[PlanVerdict] = None
    failure = None
    for t in range(1, cfg.eta + 1):
        prompt = _prompt(task, t, prior, cfg.feedback_mode)
        try:
            text = call_backend(backend, prompt, params, task, t, cfg.max_retries)
        except BackendError as exc:
            failure = f"{type(exc).__name__}: {exc}"
            verdict = sequence_failure(task.problem, f"{BACKEND_FAILURE}: {failure}")
            outcomes.append(ProblemOutcome(task.problem_id, t, False,
                                           classify_error(verdict).value, "", failure))
            reports.append(_iteration_report(t, outcomes[-1:], [], [], weights))
            break
        trace, verdict = assess_completion(task.domain, task.problem, text)
        attempt = TraceAttempt(task.problem_id, t, task.domain, task.problem, trace, verdict,
                               predicted_validity(trace), task.domain_text, task.problem_text,
                               text)
        attempts.append(attempt)
        outcome = ProblemOutcome(task.problem_id, t, verdict.valid,
                                 None if verdict.valid else classify_error(verdict).value, text)
        outcomes.append(outcome)
        reports.append(_iteration_report(t, [outcome], reasoning_records(attempt),
                                         [final_record(attempt)], weights))
        if verdict.valid:
            break
        prior = (text, verdict)
    return LoopResult(task.problem_id, verdict, attempts, outcomes, reports, failure)


@dataclass
class CampaignReport:
    problems: int
    solved: int
    iterations: list
    results: list = field(default_factory=list, repr=False)
    backend_failures: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return 100.0 * self.solved / self.problems

    def to_dict(self) -> dict:
        return {
            "problems": self.problems,
            "solved": self.solved,
            "accuracy": self.accuracy,
            "backend_failures": self.backend_failures,
            "solved_at": {r.problem_id: r.solved_at for r in self.results},
            "iterations": [it.to_dict() for it in self.iterations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _post_manifest(url: str, manifest: dict) -> None:
    import httpx

    try:
        resp = httpx.post(url, json=manifest, timeout=10.0)
        log.info("trainer hook for iteration %d: HTTP %d", manifest["iteration"],
                 resp.status_code)
    except httpx.HTTPError as exc:
        log.warning("trainer hook for iteration %d failed: %s", manifest["iteration"],
                    type(exc).__name__)


def run_campaign(backend, problems: Sequence, cfg: LoopConfig = LoopConfig(),
                 output_dir=None, weights: LossWeights = DEFAULT_WEIGHTS) -> CampaignReport:
    """Run one feedback loop per problem and aggregate by iteration.

    Loops run on up to ``cfg.concurrency`` threads (one if the backend
    declares itself serial). Aggregation sorts by problem id, so output is
    independent of completion order.
    """
    tasks = [as_task(p) for p in problems]
    if not tasks:
        raise ValueError("run_campaign needs at least one problem")
    ids = [t.problem_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("problem ids must be unique")
    workers = 1 if getattr(backend, "serial", False) else min(cfg.concurrency, len(tasks))

    def one(task):
        return run_feedback_loop(backend, task.domain, task.problem, cfg, weights=weights,
                                 task=task)

    if workers == 1:
        results = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, tasks))
    results.sort(key=lambda r: r.problem_id)

    by_t: dict = {}
    for r in results:
        for rep in r.reports:
            acc = by_t.setdefault(rep.iteration, ([], [], []))
            acc[0].extend(rep.outcomes)
            acc[1].extend(rep.reasoning)
            acc[2].extend(rep.final)
    iterations = [_iteration_report(t, *by_t[t], weights) for t in sorted(by_t)]
    report = CampaignReport(len(tasks), sum(r.valid for r in results), iterations, results,
                            {r.problem_id: r.backend_failure for r in results
                             if r.backend_failure})
    if output_dir is not None:
        report.files = write_campaign(report, output_dir, cfg)
    return report


def write_campaign(report: CampaignReport, output_dir, cfg: LoopConfig = LoopConfig()) -> list:
    """Write per-iteration datasets and ``report.json``; returns written paths."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for it in report.iterations:
        d = out / f"iter_{it.iteration:02d}"
        reasoning, final = d / "reasoning.jsonl", d / "final.jsonl"
        write_jsonl(reasoning, it.reasoning)
        write_jsonl(final, it.final)
        files += [reasoning, final]
        if cfg.trainer_hook_url:
            _post_manifest(cfg.trainer_hook_url, {
                "iteration": it.iteration,
                "reasoning": str(reasoning), "reasoning_records": len(it.reasoning),
                "final": str(final), "final_records": len(it.final),
                "loss_reasoning": it.loss_reasoning, "loss_final": it.loss_final,
                "epochs_reasoning": cfg.epochs_reasoning, "epochs_final": cfg.epochs_final,
            })
    path = out / "report.json"
    path.write_text(report.to_json(), encoding="utf-8")
    files.append(path)
    return files

