"""Episode runtime: planner cursor, executor, checker and the replanning loop.

The planner serves the current plan one action at a time, the executor is
``apply_action`` and the checker compares the action's declared effect with
the scene, optionally flipping its verdict. A failed verdict either triggers
the replanner, whose plan replaces the remaining one, or with no replanner
the failed action is skipped.
"""
import json
import random
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Union

from leraBench.errors import ConfigurationError
from leraBench.plan import Plan, remaining, serialize_plan
from leraBench.replanner import Observation, ReplanRequest, ReplanVariant, run_variant
from leraBench.tools import derive_seed, get_logger
from leraBench.world.actions import DROPPED, EXECUTED, REJECTED, FailureModel, apply_action, declared_effect, perturb
from leraBench.world.scene import check_goals

logger = get_logger(__name__)

CHECKER_PRESETS = {
    "oracle": 0.0,
    "learned": 0.025,
    "flip05": 0.05,
    "flip10": 0.10,
    "flip15": 0.15,
}
NO_REPLAN_POLICIES = ("skip_failed",)


@dataclass(frozen=True)
class CheckerConfig:
    p_flip: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_flip <= 1.0:
            raise ConfigurationError(f"p_flip must lie in [0, 1], got {self.p_flip}")

    @classmethod
    def preset(cls, name):
        if name not in CHECKER_PRESETS:
            raise ConfigurationError(f"unknown checker preset {name!r}")
        return cls(CHECKER_PRESETS[name])


@dataclass(frozen=True)
class AgentConfig:
    replanner: Optional[ReplanVariant] = None
    checker: CheckerConfig = field(default_factory=CheckerConfig)
    max_actions: int = 50
    max_replans: int = 25
    no_replan_policy: str = "skip_failed"
    p_drop: Optional[float] = None

    def __post_init__(self):
        if self.max_actions < 1 or self.max_replans < 1:
            raise ConfigurationError("budgets must be positive")
        if self.no_replan_policy not in NO_REPLAN_POLICIES:
            raise ConfigurationError(f"unknown no-replan policy {self.no_replan_policy!r}")

    def failure_for(self, task):
        return task.failure if self.p_drop is None else FailureModel(self.p_drop)


class EpisodeStreams(object):
    """Independent random streams of one episode, each derived from its seed by label."""

    LABELS = ("drops", "flips", "placements")

    def __init__(self, seed):
        self.seed = seed
        for label in self.LABELS:
            setattr(self, label, random.Random(derive_seed(seed, label)))


@dataclass(frozen=True)
class CheckerVerdict:
    passed: bool
    evidence: str

    def __post_init__(self):
        if not self.passed and not self.evidence:
            raise ValueError("a failing verdict needs evidence")


@dataclass
class ActionEvent:
    action: str
    status: str
    message: str
    passed: bool
    evidence: str
    ground_truth: bool
    type: str = "action"


@dataclass
class ReplanEvent:
    trigger: str
    variant: str
    look: Optional[str]
    explain: Optional[str]
    raw: str
    plan: Optional[str]
    parsed_ok: bool
    calls_made: int
    error: Optional[str] = None
    success: bool = False
    false_positive: bool = False
    restored: bool = False
    prompts: List[dict] = field(default_factory=list)
    type: str = "replan"


Event = Union[ActionEvent, ReplanEvent]


@dataclass
class EpisodeTrace:
    task_id: str
    seed: int
    agent: str = ""
    index: int = 0
    events: List[Event] = field(default_factory=list)
    satisfied: int = 0
    total: int = 0
    success: bool = False
    budget_exhausted: bool = False
    error: Optional[str] = None

    @property
    def key(self):
        return f"{self.agent}|{self.task_id}|{self.index}"

    def replan_events(self):
        return [e for e in self.events if isinstance(e, ReplanEvent)]

    def action_events(self):
        return [e for e in self.events if isinstance(e, ActionEvent)]

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line):
        doc = json.loads(line)
        events = []
        for raw in doc.pop("events"):
            kind = raw.get("type")
            if kind == "action":
                events.append(ActionEvent(**raw))
            elif kind == "replan":
                events.append(ReplanEvent(**raw))
            else:
                raise ValueError(f"unknown event type {kind!r}")
        return cls(events=events, **doc)


def ground_truth_verdict(pre, action, outcome, post):
    """Executed without a drop and the declared effect holds."""
    return outcome.status == EXECUTED and declared_effect(post, action, held=pre.gripper_holding)


def _failure_evidence(pre, action, outcome):
    if outcome.status == REJECTED:
        return f"{action} could not be executed"
    if outcome.status == DROPPED:
        if action.verb == "pick":
            return f"{action} completed but the gripper is empty"
        held = action.args[0] if action.verb == "put" else pre.gripper_holding
        return f"{action} completed but {held} did not reach {action.target}"
    return f"{action} completed but its effect is missing"


def checker_verify(pre, action, outcome, post, cfg, rng):
    """Verdict on one executed action; one draw from rng per call."""
    truth = ground_truth_verdict(pre, action, outcome, post)
    flipped = rng.random() < cfg.p_flip
    passed = truth != flipped
    if passed:
        return CheckerVerdict(True, f"{action} succeeded")
    if truth:
        return CheckerVerdict(False, f"{action} may have failed")
    return CheckerVerdict(False, _failure_evidence(pre, action, outcome))


def replan_success(window, goals_met):
    """Whether a ReplanEvent resolved its failure.

    window is the event itself followed by the events up to the next replan.
    A parsed plan succeeds when its first action passes the ground-truth check;
    an empty plan succeeds when the episode ends with every goal met."""
    event = window[0]
    if not event.parsed_ok:
        return False
    for later in window[1:]:
        if isinstance(later, ActionEvent):
            return later.ground_truth
    return event.plan == serialize_plan(Plan()) and goals_met


def _settle(trace):
    goals_met = trace.satisfied == trace.total
    events = trace.events
    for i, event in enumerate(events):
        if isinstance(event, ReplanEvent):
            end = next((j for j in range(i + 1, len(events)) if isinstance(events[j], ReplanEvent)), len(events))
            event.success = replan_success(events[i:end], goals_met)


def run_episode(task, agent, backend, seed, streams=None, label="", index=0):
    if agent.replanner is not None and backend is None:
        raise ConfigurationError("a replanning agent needs a backend")
    if backend is not None:
        backend = backend.for_episode()
    streams = streams or EpisodeStreams(seed)
    failure = agent.failure_for(task)
    scene = perturb(task.sceneFor(seed), task.perturbations)
    vocabulary = task.vocabulary
    wants_raster = backend is not None and backend.is_http and backend.attach_raster
    plan = task.gt_plan
    trace = EpisodeTrace(task.id, seed, agent=label, index=index)
    executed = replans = 0

    while not plan.done:
        if executed >= agent.max_actions:
            trace.budget_exhausted = True
            break
        action = plan.current()
        pre = scene.copy()
        outcome = apply_action(scene, action, failure, streams.drops, streams.placements)
        executed += 1
        truth = ground_truth_verdict(pre, action, outcome, scene)
        verdict = checker_verify(pre, action, outcome, scene, agent.checker, streams.flips)
        trace.events.append(ActionEvent(
            str(action), outcome.status, outcome.message, verdict.passed, verdict.evidence, truth,
        ))
        if check_goals(scene, task.goals)[0] == len(task.goals):
            break
        if verdict.passed or agent.replanner is None:
            plan = plan.advance()
        else:
            if replans >= agent.max_replans:
                trace.budget_exhausted = True
                break
            replans += 1
            request = ReplanRequest(
                instruction=task.instruction,
                observation=Observation.capture(scene, raster=wants_raster),
                evidence=verdict.evidence,
                failed_action=action,
                remaining_plan=remaining(plan),
                vocabulary=vocabulary,
            )
            result = run_variant(agent.replanner, backend, request)
            trace.events.append(ReplanEvent(
                trigger=str(action),
                variant=result.variant,
                look=result.look_text,
                explain=result.explain_text,
                raw=result.raw_replan_text,
                plan=serialize_plan(result.plan) if result.parsed_ok else None,
                parsed_ok=result.parsed_ok,
                calls_made=result.calls_made,
                error=result.error,
                false_positive=truth,
                restored=result.parsed_ok and result.plan == request.remaining_plan,
                prompts=result.prompts,
            ))
            if result.parsed_ok:
                plan = result.plan
            else:
                plan = plan.advance()

    trace.satisfied, trace.total = check_goals(scene, task.goals)
    trace.success = trace.satisfied == trace.total and not trace.budget_exhausted
    _settle(trace)
    logger.debug("%s seed %s: %d/%d goals, %d replans", task.id, seed, trace.satisfied, trace.total, replans)
    return trace


def failed_trace(task, seed, label, index, error):
    """Trace for an episode that raised instead of finishing."""
    trace = EpisodeTrace(task.id, seed, agent=label, index=index, total=len(task.goals))
    trace.error = error
    return trace

