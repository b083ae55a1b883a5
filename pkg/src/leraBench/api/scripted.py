"""Deterministic rule engine standing in for a vision-language model.

The calling step is read from the ``[[lera-step: ...]]`` marker in the system
text, the inputs from the ``### Heading`` sections of the user text and the
scene from the snapshot attachment. Look diagnoses the failed step, Explain
turns a diagnosis into a recipe and Replan applies the recipe to the current
plan. Each answer ends with a machine-readable ``Cause:`` or ``Recipe:`` line
so the next step can pick it up.
"""
import re
from dataclasses import dataclass
from typing import Optional, Tuple

from leraBench.errors import ConfigurationError
from leraBench.plan import DONE_MARKER, Action, PlanError, parse_plan
from leraBench.prompts import sections
from leraBench.tools import get_logger
from leraBench.world.actions import declared_effect
from leraBench.world.scene import parse_snapshot

logger = get_logger(__name__)

MARKER = re.compile(r"\[\[lera-step:\s*(look|explain|replan)\s*\]\]")

EMPTY_GRIPPER = "completed but the gripper is empty"
REJECTED = "could not be executed"
_MISSED = re.compile(r"completed but (?P<obj>[a-z][a-z0-9_]*) did not reach")
_ACTION = re.compile(r"[a-z_]+\([^()]*\)")

_CAUSE = re.compile(r"^Cause:\s*(?P<body>.*)$", re.MULTILINE)
_RECIPE = re.compile(r"^Recipe:\s*(?P<body>.*)$", re.MULTILINE)

_SURFACE = {"tabletop": "table", "household": "counter"}


def _actions(text):
    return tuple(parse_plan(m).actions[0] for m in _ACTION.findall(text))


@dataclass(frozen=True)
class Diagnosis:
    cause: str
    subject: Optional[str] = None
    cell: Optional[int] = None
    enablers: Tuple[Action, ...] = ()

    def encode(self):
        if self.cause == "drop":
            return f"drop {self.subject}" + ("" if self.cell is None else f" {self.cell}")
        if self.cause == "blocked":
            return "blocked " + "; ".join(str(a) for a in self.enablers)
        return self.cause

    @classmethod
    def decode(cls, text):
        """Diagnosis from the Cause line of a Look answer; None when there is none."""
        m = _CAUSE.search(text or "")
        if m is None:
            return None
        words = m.group("body").split(None, 1)
        if not words:
            return cls("unknown")
        head = words[0]
        rest = words[1] if len(words) > 1 else ""
        if head == "drop" and rest:
            parts = rest.split()
            cell = int(parts[1]) if len(parts) > 1 and parts[1].isdigit() else None
            return cls("drop", parts[0], cell)
        if head == "blocked":
            try:
                return cls("blocked", enablers=_actions(rest))
            except PlanError:
                return cls("unknown")
        if head in ("redundant", "none"):
            return cls(head)
        return cls("unknown")


@dataclass(frozen=True)
class Recipe:
    kind: str
    subject: Optional[str] = None
    enablers: Tuple[Action, ...] = ()

    @classmethod
    def of(cls, diagnosis):
        if diagnosis.cause == "drop":
            return cls("regrasp", diagnosis.subject)
        if diagnosis.cause == "redundant":
            return cls("delete")
        if diagnosis.cause == "blocked" and diagnosis.enablers:
            return cls("insert", enablers=diagnosis.enablers)
        return cls("keep")

    def encode(self):
        if self.kind == "regrasp":
            return f"regrasp {self.subject}"
        if self.kind == "insert":
            return "insert " + "; ".join(str(a) for a in self.enablers)
        return self.kind

    @classmethod
    def decode(cls, text):
        m = _RECIPE.search(text or "")
        if m is None:
            return None
        words = m.group("body").split(None, 1)
        head = words[0] if words else "keep"
        rest = words[1] if len(words) > 1 else ""
        if head == "regrasp" and rest:
            return cls("regrasp", rest.split()[0])
        if head == "insert":
            try:
                return cls("insert", enablers=_actions(rest))
            except PlanError:
                return cls("keep")
        if head == "delete":
            return cls("delete")
        return cls("keep")

    def apply(self, actions, nav):
        """Rewrite the current plan (a list of actions, failed step first)."""
        if self.kind == "delete":
            return actions[1:]
        if self.kind == "insert":
            return list(self.enablers) + actions
        if self.kind == "regrasp" and actions:
            h = self.subject
            first = actions[0]
            if first.verb == "pick":
                head = [Action.of(nav, h), Action.of("pick", h)]
            elif first.verb == "place":
                y = first.args[0]
                head = [Action.of(nav, h), Action.of("pick", h), Action.of(nav, y), first]
            elif first.verb == "put":
                y = first.args[1]
                head = [Action.of(nav, h), Action.of("pick", h), Action.of(nav, y), Action.of("put", h, y)]
            else:
                return actions
            return head + actions[1:]
        return actions


def _carried(action, evidence):
    """The object a carry action moved, when it can be known."""
    if action.verb in ("pick", "put"):
        return action.args[0]
    m = _MISSED.search(evidence)
    return m.group("obj") if m else None


def _evidence_diagnosis(evidence, action):
    """What the failure report alone says; drops are the only readable symptom."""
    if action is None:
        return Diagnosis("unknown")
    if EMPTY_GRIPPER in evidence and action.verb == "pick":
        return Diagnosis("drop", action.args[0])
    m = _MISSED.search(evidence)
    if m:
        return Diagnosis("drop", m.group("obj"))
    return Diagnosis("unknown")


def _effect_holds(scene, action, held):
    if action.verb == "place" and held is None:
        return scene.gripper_holding is None and bool(scene.childrenOf(action.args[0]))
    return declared_effect(scene, action, held=held)


def _enablers(scene, action):
    nav = "goto" if scene.family == "household" else "locate"
    x = action.target
    obj = scene.objects[x]
    steps = []
    if action.verb not in ("locate", "goto") and scene.located_target != x:
        steps.append(Action.of(nav, x))
    if action.verb == "put" and obj.flags.get("open") is False:
        steps.append(Action.of("open", x))
    if action.verb == "pick":
        holder = scene.container(x)
        if holder is not None and scene.objects[holder].flags.get("open") is False:
            steps = [Action.of(nav, holder), Action.of("open", holder), Action.of(nav, x)]
    if action.verb == "toggle_on":
        if obj.flags.get("open"):
            steps.append(Action.of("close", x))
        if obj.flags.get("powered"):
            steps.append(Action.of("toggle_off", x))
    return tuple(steps)


def diagnose(scene, action, evidence):
    """Compare the scene with what action should have achieved."""
    if any(arg not in scene.objects for arg in action.args):
        return Diagnosis("unknown")
    if action.verb == "place" and REJECTED in evidence and scene.gripper_holding is None:
        # nothing in hand to place: a drop the checker let through earlier
        lost = scene.last_released
        if lost in scene.objects and scene.objects[lost].placement.site == "on_table":
            return Diagnosis("drop", lost, scene.objects[lost].placement.cell)
    held = _carried(action, evidence)
    if "completed but" in evidence and held in scene.objects and scene.gripper_holding != held:
        placement = scene.objects[held].placement
        if placement.site == "on_table":
            return Diagnosis("drop", held, placement.cell)
    if _effect_holds(scene, action, held):
        return Diagnosis("redundant" if REJECTED in evidence else "none")
    if REJECTED in evidence:
        enablers = _enablers(scene, action)
        if enablers:
            return Diagnosis("blocked", enablers=enablers)
    return Diagnosis("unknown")


def _flagWord(scene, oid, flag):
    value = scene.objects[oid].flags.get(flag)
    words = {"open": ("open", "closed"), "powered": ("switched on", "switched off")}
    return words[flag][0 if value else 1]


def _look_text(scene, action, diagnosis):
    surface = _SURFACE.get(scene.family, "table")
    x = action.target
    if diagnosis.cause == "drop":
        lines = [
            f"The gripper is empty. {diagnosis.subject} lies on the {surface} at cell {diagnosis.cell}, "
            f"so it was dropped before {action} could finish."
        ]
    elif diagnosis.cause == "redundant":
        lines = [f"{action} was not needed: its result already holds in the scene."]
        if "open" in scene.objects[x].flags:
            lines.append(f"{x} is {_flagWord(scene, x, 'open')}.")
    elif diagnosis.cause == "none":
        lines = [f"No discrepancy found: the scene matches the expected result of {action}."]
    elif diagnosis.cause == "blocked":
        reasons = []
        flags = scene.objects[x].flags
        if scene.located_target != x:
            reasons.append(f"the robot is not at {x}")
        if "open" in flags:
            reasons.append(f"{x} is {_flagWord(scene, x, 'open')}")
        if "powered" in flags:
            reasons.append(f"{x} is {_flagWord(scene, x, 'powered')}")
        lines = [f"{action} is blocked: " + ", ".join(reasons) + "."]
    else:
        lines = [f"The scene does not show why {action} failed."]
    holding = scene.gripper_holding
    lines.append(f"The gripper holds {holding}." if holding else "The gripper holds nothing.")
    lines.append(f"Cause: {diagnosis.encode()}")
    return "\n".join(lines)


def look(parts, scene):
    try:
        action = _actions(parts.get("Plan step", ""))[0]
    except (PlanError, IndexError):
        return "The plan step could not be read.\nCause: unknown"
    if scene is None:
        return "No observation was attached.\nCause: unknown"
    return _look_text(scene, action, diagnose(scene, action, parts.get("Failure report", "")))


def _first_step(parts):
    try:
        actions = parse_plan(parts.get("Current plan", "")).actions
    except PlanError:
        return None
    return actions[0] if actions else None


def explain(parts):
    report = parts.get("Failure report", "")
    first = _first_step(parts)
    diagnosis = Diagnosis.decode(report) or _evidence_diagnosis(report, first)
    recipe = Recipe.of(diagnosis)
    step = str(first) if first else "the failed step"
    if recipe.kind == "regrasp":
        text = (f"{recipe.subject} was dropped, so {step} did not achieve its goal. "
                f"Go back to {recipe.subject}, pick it up again and repeat the carry; "
                "the rest of the plan stays valid.")
    elif recipe.kind == "delete":
        text = f"The result of {step} already holds in the scene. Remove it and continue with the next step."
    elif recipe.kind == "insert":
        todo = ", then ".join(str(a) for a in recipe.enablers)
        text = f"{step} cannot run in the current state. First {todo}; after that {step} can be retried."
    elif diagnosis.cause == "none":
        text = "No error is visible, so the current plan should be kept as it is."
    else:
        text = "The report does not say what changed in the scene, so there is no basis for changing the plan."
    return f"{text}\nRecipe: {recipe.encode()}"


def replan(parts, scene):
    try:
        actions = list(parse_plan(parts.get("Current plan", "")).actions)
    except PlanError:
        actions = []
    vocabulary = parts.get("Available actions", "")
    nav = "goto" if re.search(r"\bgoto\b", vocabulary) else "locate"
    analysis = parts.get("Analysis", "")
    evidence = parts.get("Error report", "")
    recipe = Recipe.decode(analysis)
    if recipe is None:
        try:
            failed = _actions(parts.get("Failed action", ""))[0]
        except (PlanError, IndexError):
            failed = actions[0] if actions else None
        diagnosis = Diagnosis.decode(analysis)
        if diagnosis is None and scene is not None and failed is not None:
            diagnosis = diagnose(scene, failed, evidence)
        if diagnosis is None:
            diagnosis = _evidence_diagnosis(evidence, failed)
        recipe = Recipe.of(diagnosis)
    new = recipe.apply(actions, nav)
    if not new:
        return DONE_MARKER
    return "\n".join(str(a) for a in new)


def scripted_rules(step, user_text, snapshot=None):
    """Answer one pipeline step; snapshot is the ground-truth document or None."""
    parts = sections(user_text)
    scene = parse_snapshot(snapshot) if snapshot else None
    if step == "look":
        return look(parts, scene)
    if step == "explain":
        return explain(parts)
    if step == "replan":
        return replan(parts, scene)
    raise ConfigurationError(f"unknown pipeline step {step!r}")


class ScriptedBackend(object):
    """Stateless; safe to share between threads."""

    def complete(self, request):
        m = MARKER.search(request.system_text)
        if m is None:
            raise ConfigurationError("request carries no pipeline step marker")
        snapshot = None
        if request.attachment is not None and request.attachment.kind == "snapshot":
            snapshot = request.attachment.data
        text = scripted_rules(m.group(1), request.user_text, snapshot)
        logger.debug("scripted %s -> %r", m.group(1), text)
        return text
