"""The built-in task catalog.

Ten tabletop tasks move one to four blocks; six household tasks (heat, store,
wash; two of each) start from a changed object state that blocks their
ground-truth plan; each of those also has an unperturbed twin whose id ends
in -original. Every task is replayed without failures when the library is
built, so a broken definition fails loudly at import of the catalog.
"""
import dataclasses
import functools
import random
from dataclasses import dataclass, field
from typing import List, Tuple

from leraBench.errors import ConfigurationError
from leraBench.plan import Action, Plan, Vocabulary, validate
from leraBench.tools import derive_seed
from leraBench.world.actions import FAMILY_VERBS, FailureModel, Perturbation, apply_action, perturb
from leraBench.world.scene import GoalCondition, Placement, Scene, check_goal_objects, check_goals, make_object

DEFAULT_P_DROP = 0.2
ORIGINAL_SUFFIX = "-original"
COLORS = ("red", "green", "blue", "yellow")


@dataclass
class TaskSpec:
    id: str
    family: str
    instruction: str
    gt_plan: Plan
    goals: Tuple[GoalCondition, ...]
    initial_scene: Scene
    perturbations: Tuple[Perturbation, ...] = ()
    failure: FailureModel = field(default_factory=FailureModel)

    @property
    def vocabulary(self):
        return Vocabulary(self.family, FAMILY_VERBS[self.family], self.initial_scene.ids())

    def sceneFor(self, seed, shuffle=True):
        """Unperturbed starting scene for one episode.

        Tabletop layouts are reshuffled per seed; household layouts are fixed."""
        scene = self.initial_scene.copy()
        if shuffle and self.family == "tabletop":
            rng = random.Random(derive_seed(seed, "layout"))
            ground = scene.ground()
            cells = rng.sample(range(scene.table_cells), len(ground))
            for oid, cell in zip(ground, cells):
                scene.objects[oid].placement = Placement.onTable(cell)
        return scene

    def verify(self):
        """Raise ConfigurationError unless the GT plan solves the task without failures."""
        try:
            validate(self.gt_plan, self.vocabulary)
        except Exception as ex:
            raise ConfigurationError(f"{self.id}: ground-truth plan invalid: {ex}") from ex
        check_goal_objects(self.initial_scene, self.goals)
        perturb(self.initial_scene, self.perturbations)
        scene = self.initial_scene.copy().validate()
        rng = random.Random(0)
        for action in self.gt_plan:
            outcome = apply_action(scene, action, FailureModel(0.0), rng)
            if not outcome.executed:
                raise ConfigurationError(f"{self.id}: {action} rejected: {outcome.message}")
        satisfied, total = check_goals(scene, self.goals)
        if satisfied != total:
            raise ConfigurationError(f"{self.id}: ground-truth plan meets {satisfied}/{total} goals")
        return self


def tabletop_scene():
    objects = {}
    for i, color in enumerate(COLORS):
        objects[f"{color}_block"] = make_object(f"{color}_block", "block", color, Placement.onTable(i))
        objects[f"{color}_bowl"] = make_object(f"{color}_bowl", "bowl", color, Placement.onTable(12 + i))
    return Scene("tabletop", objects).validate()


def household_scene(**flags):
    """Kitchen with three appliances/containers and six items.

    flags like fridge_open=True override initial states."""
    objects = {
        "microwave": make_object("microwave", "appliance", placement=Placement.onTable(0)),
        "fridge": make_object("fridge", "container", placement=Placement.onTable(1)),
        "dishwasher": make_object("dishwasher", "appliance", placement=Placement.onTable(2)),
    }
    for cell, item in enumerate(("pizza", "potato", "apple", "milk", "plate", "mug"), start=5):
        objects[item] = make_object(item, "item", placement=Placement.onTable(cell))
    for key, value in flags.items():
        oid, flag = key.rsplit("_", 1)
        objects[oid].flags[flag] = value
    return Scene("household", objects).validate()


def move(block, destination):
    return [
        Action.of("locate", block),
        Action.of("pick", block),
        Action.of("locate", destination),
        Action.of("place", destination),
    ]


def _tabletop(tid, instruction, moves, goals):
    actions = [a for block, dest in moves for a in move(block, dest)]
    return TaskSpec(
        id=tid,
        family="tabletop",
        instruction=instruction,
        gt_plan=Plan(tuple(actions)),
        goals=tuple(goals),
        initial_scene=tabletop_scene(),
        failure=FailureModel(DEFAULT_P_DROP),
    )


def _household(tid, instruction, steps, goals, perturbations, **flags):
    return TaskSpec(
        id=tid,
        family="household",
        instruction=instruction,
        gt_plan=Plan(tuple(Action.of(verb, *args) for verb, *args in steps)),
        goals=tuple(goals),
        initial_scene=household_scene(**flags),
        perturbations=tuple(Perturbation(*p) for p in perturbations),
    )


def _heat(item, appliance="microwave"):
    return [
        ("goto", item), ("pick", item), ("goto", appliance), ("open", appliance),
        ("put", item, appliance), ("close", appliance), ("toggle_on", appliance),
    ]


def _store(item, container="fridge"):
    # the fridge door starts ajar in these scenes, so the plan has no open step
    return [
        ("goto", item), ("pick", item), ("goto", container),
        ("put", item, container), ("close", container),
    ]


def _wash(item, appliance="dishwasher"):
    return [
        ("goto", appliance), ("open", appliance), ("goto", item), ("pick", item),
        ("goto", appliance), ("put", item, appliance), ("close", appliance), ("toggle_on", appliance),
    ]


In = GoalCondition.inside
On = GoalCondition.on
Flag = GoalCondition.flagged


def _build():
    tasks = [
        _tabletop("tabletop-01", "Place red block in red bowl",
                  [("red_block", "red_bowl")],
                  [In("red_block", "red_bowl")]),
        _tabletop("tabletop-02", "Put yellow block on green block",
                  [("yellow_block", "green_block")],
                  [On("yellow_block", "green_block")]),
        _tabletop("tabletop-03", "Place blue block in green bowl",
                  [("blue_block", "green_bowl")],
                  [In("blue_block", "green_bowl")]),
        _tabletop("tabletop-04", "Place red block in blue bowl and green block in yellow bowl",
                  [("red_block", "blue_bowl"), ("green_block", "yellow_bowl")],
                  [In("red_block", "blue_bowl"), In("green_block", "yellow_bowl")]),
        _tabletop("tabletop-05", "Build a tower in blue bowl: yellow on blue",
                  [("blue_block", "blue_bowl"), ("yellow_block", "blue_block")],
                  [In("blue_block", "blue_bowl"), On("yellow_block", "blue_block")]),
        _tabletop("tabletop-06", "Place green block and blue block in red bowl",
                  [("green_block", "red_bowl"), ("blue_block", "red_bowl")],
                  [In("green_block", "red_bowl"), In("blue_block", "red_bowl")]),
        _tabletop("tabletop-07", "Put red, green and blue blocks in the bowls of the same color",
                  [("red_block", "red_bowl"), ("green_block", "green_bowl"), ("blue_block", "blue_bowl")],
                  [In("red_block", "red_bowl"), In("green_block", "green_bowl"), In("blue_block", "blue_bowl")]),
        _tabletop("tabletop-08", "Build a tower in yellow bowl: green on red, then place blue block in blue bowl",
                  [("red_block", "yellow_bowl"), ("green_block", "red_block"), ("blue_block", "blue_bowl")],
                  [In("red_block", "yellow_bowl"), On("green_block", "red_block"), In("blue_block", "blue_bowl")]),
        _tabletop("tabletop-09", "Put every block in the bowl of the same color",
                  [(f"{c}_block", f"{c}_bowl") for c in COLORS],
                  [In(f"{c}_block", f"{c}_bowl") for c in COLORS]),
        _tabletop("tabletop-10", "Build two towers in bowls: blue on red, yellow on green",
                  [("red_block", "red_bowl"), ("blue_block", "red_block"),
                   ("green_block", "green_bowl"), ("yellow_block", "green_block")],
                  [In("red_block", "red_bowl"), On("blue_block", "red_block"),
                   In("green_block", "green_bowl"), On("yellow_block", "green_block")]),
        _household("household-heat-01", "Heat a slice of pizza in the microwave",
                   _heat("pizza"),
                   [In("pizza", "microwave"), Flag("pizza", "hot")],
                   [("microwave", "open", True), ("microwave", "powered", True)]),
        _household("household-heat-02", "Heat the potato in the microwave",
                   _heat("potato"),
                   [In("potato", "microwave"), Flag("potato", "hot")],
                   [("microwave", "powered", True)]),
        _household("household-fridge-01", "Put the apple in the refrigerator",
                   _store("apple"),
                   [In("apple", "fridge"), Flag("fridge", "open", False)],
                   [("fridge", "open", False)],
                   fridge_open=True),
        _household("household-fridge-02", "Put the milk in the refrigerator",
                   _store("milk"),
                   [In("milk", "fridge"), Flag("fridge", "open", False)],
                   [("fridge", "open", False)],
                   fridge_open=True),
        _household("household-wash-01", "Wash the plate in the dishwasher",
                   _wash("plate"),
                   [In("plate", "dishwasher"), Flag("plate", "clean")],
                   [("dishwasher", "powered", True)]),
        _household("household-wash-02", "Wash the mug in the dishwasher",
                   _wash("mug"),
                   [In("mug", "dishwasher"), Flag("mug", "clean")],
                   [("dishwasher", "open", True), ("dishwasher", "powered", True)]),
    ]
    ids = [t.id for t in tasks]
    if len(ids) != len(set(ids)):
        raise ConfigurationError("duplicate task ids in the catalog")
    return tuple(task.verify() for task in tasks)


@functools.lru_cache(maxsize=1)
def _catalog():
    return _build()


def task_library() -> List[TaskSpec]:
    return list(_catalog())


def original_tasks() -> List[TaskSpec]:
    """Unperturbed twins of the perturbed tasks, ids ending in -original."""
    return [
        dataclasses.replace(task, id=task.id + ORIGINAL_SUFFIX, perturbations=())
        for task in _catalog()
        if task.perturbations
    ]


def get_task(tid):
    for task in _catalog():
        if task.id == tid:
            return task
    for task in original_tasks():
        if task.id == tid:
            return task
    raise KeyError(tid)
