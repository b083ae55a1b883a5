"""Deterministic world model: scenes, transition rules, observations and the task catalog."""
from leraBench.world.actions import (
    DROPPED,
    EXECUTED,
    FAMILY_VERBS,
    REJECTED,
    ActionOutcome,
    FailureModel,
    Perturbation,
    apply_action,
    declared_effect,
    perturb,
)
from leraBench.world.render import FORMATS, describe, observe, raster_png, rasterize
from leraBench.world.scene import (
    GoalCondition,
    ObjectDescriptor,
    Placement,
    Scene,
    check_goals,
    parse_snapshot,
    serialize_scene,
)
from leraBench.world.tasks import TaskSpec, get_task, task_library

__all__ = [
    "DROPPED", "EXECUTED", "FAMILY_VERBS", "REJECTED", "ActionOutcome", "FailureModel",
    "Perturbation", "apply_action", "declared_effect", "perturb", "FORMATS", "describe",
    "observe", "raster_png", "rasterize", "GoalCondition", "ObjectDescriptor", "Placement",
    "Scene", "check_goals", "parse_snapshot", "serialize_scene", "TaskSpec", "get_task",
    "task_library",
]
