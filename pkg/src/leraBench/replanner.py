"""Look, Explain, Replan and the ablation variants built from them.

LERa             look -> explain -> replan
LRa              look -> replan (the Look answer fills the analysis slot)
ERa              explain (from the failure report) -> replan
Ra               replan from instruction, failed action, report and plan
OneShotBaseline  one replan call with the observation attached

Every variant gets one retry in total: a transport failure in any step or a
plan that fails to parse or validate. A parse failure is retried with the
error appended to the prompt.
"""
from dataclasses import dataclass, field
from typing import List, Optional

from leraBench.api import Attachment, BackendRequest, complete
from leraBench.errors import ConfigurationError, TransportError
from leraBench.plan import DONE_MARKER, Plan, PlanError, Vocabulary, parse_plan, serialize_plan, validate
from leraBench.prompts import NONE_GIVEN, NOT_AVAILABLE, default_bundle
from leraBench.tools import get_logger
from leraBench.world.render import describe, rasterize
from leraBench.world.scene import serialize_scene

logger = get_logger(__name__)

VARIANT_STEPS = {
    "LERa": ("look", "explain", "replan"),
    "LRa": ("look", "replan"),
    "ERa": ("explain", "replan"),
    "Ra": ("replan",),
    "OneShotBaseline": ("replan",),
}


@dataclass(frozen=True)
class ReplanVariant:
    kind: str

    def __post_init__(self):
        if self.kind not in VARIANT_STEPS:
            raise ConfigurationError(f"unknown replanner variant {self.kind!r}")

    @property
    def steps(self):
        return VARIANT_STEPS[self.kind]

    @property
    def attach_observation(self):
        return self.kind == "OneShotBaseline"

    def __str__(self):
        return self.kind


@dataclass(frozen=True)
class Observation:
    snapshot: str
    text: str
    raster: Optional[bytes] = None

    @classmethod
    def capture(cls, scene, raster=False):
        return cls(serialize_scene(scene), describe(scene), rasterize(scene) if raster else None)


@dataclass(frozen=True)
class ReplanRequest:
    instruction: str
    observation: Observation
    evidence: str
    failed_action: object
    remaining_plan: Plan
    vocabulary: Vocabulary

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("a replan request needs failure evidence")
        if self.remaining_plan.cursor != 0:
            raise ValueError("the remaining plan must start at cursor 0")


@dataclass
class ReplanResult:
    variant: str
    look_text: Optional[str] = None
    explain_text: Optional[str] = None
    raw_replan_text: str = ""
    plan: Optional[Plan] = None
    parsed_ok: bool = False
    calls_made: int = 0
    error: Optional[str] = None
    prompts: List[dict] = field(default_factory=list)


def _vocabulary_text(vocab):
    return "Verbs: {}\nObjects: {}".format(", ".join(sorted(vocab.verbs)), ", ".join(sorted(vocab.objects)))


def _attachment(backend, request):
    if backend.is_http:
        if backend.attach_raster and request.observation.raster is not None:
            return Attachment.raster(request.observation.raster)
        return None
    return Attachment.snapshot(request.observation.snapshot)


def _call(backend, step, system, user, attachment, log):
    if log is not None:
        log.append({"step": step, "system": system, "user": user,
                    "attachment": attachment.kind if attachment else None})
    return complete(backend, BackendRequest(system, user, attachment, max_tokens=backend.max_tokens))


def look(backend, request, bundle=None, log=None):
    """Describe the scene and name the failure cause; sees only the first plan step."""
    bundle = bundle or default_bundle()
    system, user = bundle.look_template.render(
        evidence=request.evidence,
        first_plan_step=str(request.remaining_plan.actions[0]) if len(request.remaining_plan) else DONE_MARKER,
        observation=request.observation.text,
    )
    return _call(backend, "look", system, user, _attachment(backend, request), log)


def explain(backend, request, L=None, bundle=None, log=None):
    """Free-form explanation; reads L when there is one, the failure report otherwise."""
    bundle = bundle or default_bundle()
    system, user = bundle.explain_template.render(
        instruction=request.instruction,
        plan=serialize_plan(request.remaining_plan),
        look_output=L if L is not None else request.evidence,
    )
    return _call(backend, "explain", system, user, None, log)


def replan(backend, request, E=None, attach_observation=False, bundle=None, log=None, feedback=None):
    """Ask for P'; returns (raw text, Plan or the PlanError that rejected it)."""
    bundle = bundle or default_bundle()
    system, user = bundle.replan_template.render(
        instruction=request.instruction,
        failed_action=str(request.failed_action),
        evidence=request.evidence,
        explain_output=E if E is not None else NONE_GIVEN,
        observation=request.observation.text if attach_observation else NOT_AVAILABLE,
        action_vocabulary=_vocabulary_text(request.vocabulary),
        few_shots=bundle.few_shots_for(request.vocabulary.family),
        plan=serialize_plan(request.remaining_plan),
    )
    if feedback:
        user += f"\n\n### Rejected answer\n{feedback}\nAnswer again with the corrected plan only."
    attachment = _attachment(backend, request) if attach_observation else None
    raw = _call(backend, "replan", system, user, attachment, log)
    try:
        return raw, validate(parse_plan(raw), request.vocabulary)
    except PlanError as ex:
        return raw, ex


class _Retry(object):
    """One retry shared by every step of a variant run."""

    def __init__(self):
        self.available = True

    def call(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TransportError as ex:
            if not self.available:
                raise
            self.available = False
            logger.warning("%s failed (%s); retrying once", fn.__name__, ex)
            return fn(*args, **kwargs)


def run_variant(variant, backend, request, bundle=None):
    bundle = bundle or default_bundle()
    result = ReplanResult(variant=variant.kind)
    log = result.prompts
    retry = _Retry()
    try:
        if "look" in variant.steps:
            result.look_text = retry.call(look, backend, request, bundle=bundle, log=log)
        if "explain" in variant.steps:
            result.explain_text = retry.call(explain, backend, request, result.look_text, bundle=bundle, log=log)
        analysis = result.explain_text if result.explain_text is not None else result.look_text
        raw, parsed = retry.call(replan, backend, request, analysis, variant.attach_observation,
                                 bundle=bundle, log=log)
        if isinstance(parsed, PlanError) and retry.available:
            retry.available = False
            logger.info("replan output rejected (%s); retrying once", parsed)
            raw, parsed = replan(backend, request, analysis, variant.attach_observation,
                                 bundle=bundle, log=log, feedback=str(parsed))
        result.raw_replan_text = raw
        if isinstance(parsed, PlanError):
            result.error = f"unusable plan: {parsed}"
        else:
            result.plan = parsed
            result.parsed_ok = True
    except TransportError as ex:
        result.error = f"transport: {ex}"
        logger.warning("%s replanning gave up: %s", variant.kind, ex)
    result.calls_made = len(log)
    return result
