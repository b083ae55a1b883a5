"""Ground-truth world state and its canonical snapshot document.

A Scene is plain mutable data; the transition rules live in actions.py. The
snapshot is a TOML document with a stable key order, used both as the
scripted backend's view of the world and as the golden format in tests.
"""
import copy
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import toml

from leraBench.errors import ConfigurationError

TOKEN = re.compile(r"[a-z][a-z0-9_]*\Z")

KINDS = ("block", "bowl", "container", "item", "appliance")
COLORS = ("red", "green", "blue", "yellow", "none")
FLAGS_BY_KIND = {
    "block": (),
    "bowl": (),
    "container": ("open",),
    "appliance": ("open", "powered"),
    "item": ("clean", "hot"),
}
FAMILIES = ("tabletop", "household")

# stacking depth limit counts blocks only; bowls do not add height
MAX_STACK = 2


def is_token(name):
    return isinstance(name, str) and TOKEN.match(name) is not None


@dataclass(frozen=True)
class ObjectDescriptor:
    id: str
    kind: str
    color: str = "none"

    def __post_init__(self):
        if not is_token(self.id):
            raise ConfigurationError(f"bad object id {self.id!r}")
        if self.kind not in KINDS:
            raise ConfigurationError(f"{self.id}: unknown kind {self.kind!r}")
        if self.color not in COLORS:
            raise ConfigurationError(f"{self.id}: unknown color {self.color!r}")
        if self.kind in ("block", "bowl") and self.color == "none":
            raise ConfigurationError(f"{self.id}: {self.kind}s need a color")
        if self.kind in ("container", "appliance") and self.color != "none":
            raise ConfigurationError(f"{self.id}: {self.kind}s are colorless")


@dataclass(frozen=True)
class Placement:
    site: str
    cell: Optional[int] = None
    target: Optional[str] = None

    @classmethod
    def onTable(cls, cell):
        return cls("on_table", cell=cell)

    @classmethod
    def inside(cls, target):
        return cls("in", target=target)

    @classmethod
    def onTop(cls, target):
        return cls("on", target=target)

    @classmethod
    def held(cls):
        return cls("held")

    def __str__(self):
        if self.site == "on_table":
            return f"on_table({self.cell})"
        if self.site == "held":
            return "held"
        return f"{self.site}({self.target})"

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text == "held":
            return cls.held()
        m = re.match(r"(on_table|in|on)\(([a-z0-9_]+)\)\Z", text)
        if not m:
            raise ConfigurationError(f"bad placement {text!r}")
        site, arg = m.groups()
        if site == "on_table":
            if not arg.isdigit():
                raise ConfigurationError(f"bad table cell in {text!r}")
            return cls.onTable(int(arg))
        return cls(site, target=arg)


@dataclass
class SceneObject:
    descriptor: ObjectDescriptor
    flags: Dict[str, bool] = field(default_factory=dict)
    placement: Placement = field(default_factory=lambda: Placement.onTable(0))

    @property
    def kind(self):
        return self.descriptor.kind


@dataclass
class Scene:
    family: str
    objects: Dict[str, SceneObject]
    gripper_holding: Optional[str] = None
    located_target: Optional[str] = None
    last_released: Optional[str] = None
    table_cells: int = 16
    step_counter: int = 0

    def copy(self):
        return copy.deepcopy(self)

    def get(self, oid):
        return self.objects.get(oid)

    def ids(self):
        return sorted(self.objects)

    def ground(self):
        """Objects standing directly on the table."""
        return [oid for oid in self.ids() if self.objects[oid].placement.site == "on_table"]

    def freeCells(self, exclude=None):
        taken = {
            obj.placement.cell
            for oid, obj in self.objects.items()
            if obj.placement.site == "on_table" and oid != exclude
        }
        return [c for c in range(self.table_cells) if c not in taken]

    def childrenOf(self, target):
        return [
            oid for oid in self.ids()
            if self.objects[oid].placement.target == target
        ]

    def isClear(self, oid):
        return not any(
            self.objects[o].placement.site == "on" for o in self.childrenOf(oid)
        )

    def stackHeight(self, oid):
        """Number of blocks from oid down to its support, oid included."""
        height = 1
        placement = self.objects[oid].placement
        while placement.site == "on":
            height += 1
            placement = self.objects[placement.target].placement
        return height

    def container(self, oid):
        """The object oid is in, looking through stacks; None when not contained."""
        seen = set()
        placement = self.objects[oid].placement
        while placement.site in ("in", "on") and placement.target not in seen:
            seen.add(placement.target)
            if placement.site == "in":
                return placement.target
            placement = self.objects[placement.target].placement
        return None

    def relations(self):
        rows = []
        for oid in self.ids():
            placement = self.objects[oid].placement
            if placement.site == "on_table":
                rows.append(f"on_table({oid}, {placement.cell})")
            elif placement.site == "held":
                rows.append(f"held({oid})")
            else:
                rows.append(f"{placement.site}({oid}, {placement.target})")
        return rows

    def validate(self):
        """Raise ConfigurationError when the structural invariants are broken."""
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown scenario family {self.family!r}")
        held = [oid for oid, obj in self.objects.items() if obj.placement.site == "held"]
        if len(held) > 1:
            raise ConfigurationError(f"several objects held: {', '.join(sorted(held))}")
        if (held[0] if held else None) != self.gripper_holding:
            raise ConfigurationError("gripper_holding disagrees with the held placement")
        if self.located_target is not None and self.located_target not in self.objects:
            raise ConfigurationError(f"located target {self.located_target} does not exist")
        if self.last_released is not None and self.last_released not in self.objects:
            raise ConfigurationError(f"released object {self.last_released} does not exist")
        if len(self.ground()) > self.table_cells:
            raise ConfigurationError("more ground objects than table cells")
        cells = [self.objects[oid].placement.cell for oid in self.ground()]
        if len(cells) != len(set(cells)) or any(c < 0 or c >= self.table_cells for c in cells):
            raise ConfigurationError("table cells overlap or fall off the table")
        for oid, obj in self.objects.items():
            if oid != obj.descriptor.id:
                raise ConfigurationError(f"object keyed {oid} carries id {obj.descriptor.id}")
            expected = set(FLAGS_BY_KIND[obj.kind])
            if set(obj.flags) != expected:
                raise ConfigurationError(f"{oid}: flags {sorted(obj.flags)} do not match kind {obj.kind}")
            if any(not isinstance(v, bool) for v in obj.flags.values()):
                raise ConfigurationError(f"{oid}: flags must be booleans")
            placement = obj.placement
            if placement.site in ("in", "on"):
                if placement.target not in self.objects:
                    raise ConfigurationError(f"{oid} rests on missing {placement.target}")
                self._checkAcyclic(oid)
        return self

    def _checkAcyclic(self, oid):
        seen = {oid}
        placement = self.objects[oid].placement
        while placement.site in ("in", "on"):
            if placement.target in seen:
                raise ConfigurationError(f"containment cycle through {oid}")
            seen.add(placement.target)
            placement = self.objects[placement.target].placement


def make_object(oid, kind, color="none", placement=None, **flags):
    """Build a SceneObject with every flag its kind supports (default False)."""
    values = {name: bool(flags.get(name, False)) for name in FLAGS_BY_KIND[kind]}
    unknown = set(flags) - set(values)
    if unknown:
        raise ConfigurationError(f"{oid}: {kind} has no flag {sorted(unknown)[0]}")
    return SceneObject(
        ObjectDescriptor(oid, kind, color),
        values,
        placement if placement is not None else Placement.onTable(0),
    )


@dataclass(frozen=True)
class GoalCondition:
    predicate: str
    a: str
    b: Optional[str] = None
    flag: Optional[str] = None
    value: bool = True

    @classmethod
    def on(cls, a, b):
        return cls("on", a, b)

    @classmethod
    def inside(cls, a, b):
        return cls("in", a, b)

    @classmethod
    def flagged(cls, a, flag, value=True):
        return cls("flag", a, flag=flag, value=value)

    def objects(self):
        return [o for o in (self.a, self.b) if o is not None]

    def holds(self, scene):
        obj = scene.get(self.a)
        if obj is None:
            return False
        if self.predicate == "on":
            return obj.placement == Placement.onTop(self.b)
        if self.predicate == "in":
            if obj.placement.site == "held":
                return False
            return scene.container(self.a) == self.b
        return obj.flags.get(self.flag) is self.value

    def __str__(self):
        if self.predicate == "flag":
            return f"{self.a}.{self.flag} = {str(self.value).lower()}"
        return f"{self.predicate}({self.a}, {self.b})"


def serialize_scene(scene, clock=True):
    """Canonical snapshot document; clock=False drops the step counter."""
    doc = {"family": scene.family, "table_cells": scene.table_cells}
    if clock:
        doc["step_counter"] = scene.step_counter
    doc["gripper_holding"] = scene.gripper_holding or ""
    doc["located_target"] = scene.located_target or ""
    doc["last_released"] = scene.last_released or ""
    doc["relations"] = scene.relations()
    objects = {}
    for oid in scene.ids():
        obj = scene.objects[oid]
        entry = {
            "kind": obj.kind,
            "color": obj.descriptor.color,
            "placement": str(obj.placement),
        }
        for name in sorted(obj.flags):
            entry[name] = obj.flags[name]
        objects[oid] = entry
    doc["objects"] = objects
    return toml.dumps(doc)


def parse_snapshot(text):
    """Inverse of serialize_scene. Raises ConfigurationError on bad documents."""
    try:
        doc = toml.loads(text)
    except toml.TomlDecodeError as ex:
        raise ConfigurationError(f"snapshot is not valid TOML: {ex.msg}", line=ex.lineno) from ex
    try:
        objects = {}
        for oid, entry in doc["objects"].items():
            entry = dict(entry)
            kind = entry.pop("kind")
            color = entry.pop("color")
            placement = Placement.parse(entry.pop("placement"))
            objects[oid] = make_object(oid, kind, color, placement, **entry)
        scene = Scene(
            family=doc["family"],
            objects=objects,
            gripper_holding=doc.get("gripper_holding") or None,
            located_target=doc.get("located_target") or None,
            last_released=doc.get("last_released") or None,
            table_cells=int(doc["table_cells"]),
            step_counter=int(doc.get("step_counter", 0)),
        )
    except KeyError as ex:
        raise ConfigurationError(f"snapshot lacks key {ex.args[0]!r}") from ex
    return scene.validate()


def check_goals(scene, goals) -> Tuple[int, int]:
    """Count the goal conditions that hold in scene."""
    if not goals:
        raise ConfigurationError("a task needs at least one goal condition")
    satisfied = sum(1 for goal in goals if goal.holds(scene))
    return satisfied, len(goals)


def check_goal_objects(scene, goals: List[GoalCondition]):
    for goal in goals:
        for oid in goal.objects():
            if oid not in scene.objects:
                raise ConfigurationError(f"goal {goal} names unknown object {oid}")
        if goal.predicate == "flag" and goal.flag not in scene.objects[goal.a].flags:
            raise ConfigurationError(f"goal {goal} names a flag {goal.a} lacks")
