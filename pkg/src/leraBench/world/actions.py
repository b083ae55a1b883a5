"""Transition rules for both scenario families.

Each verb has a precondition check returning the reason it cannot run (or
None) and an effect that mutates the scene. Rejections never touch the scene
beyond the step counter. pick, place and put may drop the carried object with
probability p_drop; a dropped object lands on a free table cell.
"""
from dataclasses import dataclass
from typing import Optional

from leraBench.errors import ConfigurationError
from leraBench.tools import get_logger
from leraBench.world.scene import MAX_STACK, Placement

logger = get_logger(__name__)

FAMILY_VERBS = {
    "tabletop": frozenset({"locate", "pick", "place"}),
    "household": frozenset({"goto", "pick", "put", "open", "close", "toggle_on", "toggle_off"}),
}

# what switching an appliance on does to the items inside it
APPLIANCE_EFFECTS = {"microwave": "hot", "dishwasher": "clean"}

EXECUTED = "executed"
DROPPED = "executed_with_drop"
REJECTED = "rejected_precondition"

CARRY_VERBS = ("pick", "place", "put")


@dataclass(frozen=True)
class FailureModel:
    p_drop: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ConfigurationError(f"p_drop must lie in [0, 1], got {self.p_drop}")


@dataclass(frozen=True)
class ActionOutcome:
    status: str
    message: str
    drop_destination: Optional[Placement] = None

    @property
    def executed(self):
        return self.status != REJECTED


@dataclass(frozen=True)
class Perturbation:
    target: str
    flag: str
    value: bool

    def __str__(self):
        return f"{self.target}.{self.flag} = {str(self.value).lower()}"


def _rejected(message):
    return ActionOutcome(REJECTED, message)


def _appliance_effect(oid):
    for name, flag in APPLIANCE_EFFECTS.items():
        if oid == name or oid.startswith(name + "_"):
            return flag
    return None


def _contents(scene, oid):
    return [o for o in scene.ids() if scene.objects[o].kind == "item" and scene.container(o) == oid]


def _check_locate(scene, action):
    return None


def _check_pick(scene, action):
    x = action.args[0]
    obj = scene.objects[x]
    if scene.gripper_holding is not None:
        return f"gripper already holds {scene.gripper_holding}"
    if scene.located_target != x:
        return f"{x} is not located"
    if scene.family == "tabletop":
        if obj.kind != "block":
            return f"{x} cannot be picked"
        if not scene.isClear(x):
            return f"something is stacked on {x}"
    else:
        if obj.kind != "item":
            return f"{x} cannot be picked"
        holder = scene.container(x)
        if holder is not None and scene.objects[holder].flags.get("open") is False:
            return f"{holder} is closed"
    return None


def _check_place(scene, action):
    y = action.args[0]
    target = scene.objects[y]
    held = scene.gripper_holding
    if held is None:
        return "gripper is empty"
    if scene.located_target != y:
        return f"{y} is not located"
    if target.kind not in ("bowl", "block") or y == held:
        return f"cannot place onto {y}"
    if target.kind == "block":
        if target.placement.site == "held":
            return f"cannot place onto {y}"
        if not scene.isClear(y):
            return f"something is stacked on {y}"
        if scene.stackHeight(y) >= MAX_STACK:
            return f"tower on {y} is already {MAX_STACK} blocks tall"
    return None


def _check_put(scene, action):
    x, y = action.args
    target = scene.objects[y]
    if scene.gripper_holding != x:
        return f"gripper does not hold {x}"
    if scene.located_target != y:
        return f"{y} is not located"
    if target.kind not in ("container", "appliance"):
        return f"cannot put into {y}"
    if target.flags.get("open") is False:
        return f"{y} is closed"
    return None


def _check_open(scene, action):
    x = action.args[0]
    flags = scene.objects[x].flags
    if scene.located_target != x:
        return f"{x} is not located"
    if "open" not in flags:
        return f"{x} cannot be opened"
    if flags["open"]:
        return f"{x} is already open"
    return None


def _check_close(scene, action):
    x = action.args[0]
    flags = scene.objects[x].flags
    if scene.located_target != x:
        return f"{x} is not located"
    if "open" not in flags:
        return f"{x} cannot be closed"
    if not flags["open"]:
        return f"{x} is already closed"
    return None


def _check_toggle_on(scene, action):
    x = action.args[0]
    obj = scene.objects[x]
    if scene.located_target != x:
        return f"{x} is not located"
    if obj.kind != "appliance":
        return f"{x} cannot be switched on"
    if obj.flags["open"]:
        return f"{x} is open"
    if obj.flags["powered"]:
        return f"{x} is already running"
    return None


def _check_toggle_off(scene, action):
    x = action.args[0]
    obj = scene.objects[x]
    if scene.located_target != x:
        return f"{x} is not located"
    if obj.kind != "appliance":
        return f"{x} cannot be switched off"
    if not obj.flags["powered"]:
        return f"{x} is already off"
    return None


def _effect_locate(scene, action):
    scene.located_target = action.args[0]


def _effect_pick(scene, action):
    x = action.args[0]
    scene.objects[x].placement = Placement.held()
    scene.gripper_holding = x


def _effect_place(scene, action):
    y = action.args[0]
    held = scene.gripper_holding
    if scene.objects[y].kind == "bowl":
        scene.objects[held].placement = Placement.inside(y)
    else:
        scene.objects[held].placement = Placement.onTop(y)
    scene.gripper_holding = None
    scene.last_released = held


def _effect_put(scene, action):
    x, y = action.args
    scene.objects[x].placement = Placement.inside(y)
    scene.gripper_holding = None
    scene.last_released = x


def _effect_open(scene, action):
    scene.objects[action.args[0]].flags["open"] = True


def _effect_close(scene, action):
    scene.objects[action.args[0]].flags["open"] = False


def _effect_toggle_on(scene, action):
    x = action.args[0]
    scene.objects[x].flags["powered"] = True
    flag = _appliance_effect(x)
    if flag is not None:
        for item in _contents(scene, x):
            scene.objects[item].flags[flag] = True


def _effect_toggle_off(scene, action):
    scene.objects[action.args[0]].flags["powered"] = False


_TRANSITIONS = {
    "locate": (_check_locate, _effect_locate),
    "goto": (_check_locate, _effect_locate),
    "pick": (_check_pick, _effect_pick),
    "place": (_check_place, _effect_place),
    "put": (_check_put, _effect_put),
    "open": (_check_open, _effect_open),
    "close": (_check_close, _effect_close),
    "toggle_on": (_check_toggle_on, _effect_toggle_on),
    "toggle_off": (_check_toggle_off, _effect_toggle_off),
}


def _drop(scene, action, placementRng):
    """Send the carried object to a free table cell; None when the table is full."""
    oid = action.args[0] if action.verb == "pick" else scene.gripper_holding
    cells = scene.freeCells(exclude=oid)
    if not cells:
        return None
    cell = placementRng.choice(cells)
    destination = Placement.onTable(cell)
    scene.objects[oid].placement = destination
    scene.gripper_holding = None
    scene.last_released = oid
    return oid, destination


def apply_action(scene, action, failure, rng, placementRng=None):
    """Execute action in scene, mutating it, and report what happened.

    rng decides drops; placementRng (defaults to rng) picks the landing cell."""
    scene.step_counter += 1
    if action.verb not in FAMILY_VERBS[scene.family]:
        return _rejected(f"{action.verb} is not available in the {scene.family} family")
    for arg in action.args:
        if arg not in scene.objects:
            return _rejected("no such object")
    check, effect = _TRANSITIONS[action.verb]
    problem = check(scene, action)
    if problem is not None:
        logger.debug("rejected %s: %s", action, problem)
        return _rejected(problem)
    if action.verb in CARRY_VERBS and rng.random() < failure.p_drop:
        dropped = _drop(scene, action, placementRng or rng)
        if dropped is not None:
            oid, destination = dropped
            logger.debug("%s dropped %s at cell %s", action, oid, destination.cell)
            return ActionOutcome(DROPPED, f"{oid} dropped at cell {destination.cell}", destination)
    effect(scene, action)
    return ActionOutcome(EXECUTED, f"{action} executed")


def declared_effect(scene, action, held=None):
    """Whether the intended effect of action holds in scene.

    held names the object that was carried before a place; it is needed because
    place names only its destination."""
    verb = action.verb
    x = action.args[0]
    if any(arg not in scene.objects for arg in action.args):
        return False
    if verb in ("locate", "goto"):
        return scene.located_target == x
    if verb == "pick":
        return scene.gripper_holding == x
    if verb == "place":
        if held is None or held not in scene.objects or scene.gripper_holding == held:
            return False
        return scene.objects[held].placement.target == x
    if verb == "put":
        y = action.args[1]
        return scene.gripper_holding != x and scene.objects[x].placement == Placement.inside(y)
    flags = scene.objects[x].flags
    if verb == "open":
        return flags.get("open") is True
    if verb == "close":
        return flags.get("open") is False
    if verb == "toggle_on":
        flag = _appliance_effect(x)
        contents = _contents(scene, x) if flag else []
        return flags.get("powered") is True and all(scene.objects[i].flags[flag] for i in contents)
    if verb == "toggle_off":
        return flags.get("powered") is False
    return False


def perturb(scene, perturbations):
    """Return a copy of scene with every perturbation applied; only valid at t = 0."""
    if scene.step_counter != 0:
        raise ConfigurationError("perturbations apply only before the first action")
    seen = set()
    changed = scene.copy()
    for p in perturbations:
        if (p.target, p.flag) in seen:
            raise ConfigurationError(f"duplicate perturbation of {p.target}.{p.flag}")
        seen.add((p.target, p.flag))
        obj = changed.get(p.target)
        if obj is None:
            raise ConfigurationError(f"perturbation names unknown object {p.target}")
        if p.flag not in obj.flags:
            raise ConfigurationError(f"{p.target} has no {p.flag} flag")
        obj.flags[p.flag] = bool(p.value)
    return changed
