"""Shared builders for the test modules."""
import random

from leraBench.plan import Action, Plan, parse_plan
from leraBench.replanner import Observation, ReplanRequest
from leraBench.world.actions import FAMILY_VERBS, FailureModel, apply_action, perturb
from leraBench.world.tasks import get_task


class ScriptedDraws(object):
    """Stand-in for a random stream: the hit-th call returns 0.0, every other call 0.99."""

    def __init__(self, hit):
        self.hit = hit
        self.calls = 0

    def random(self):
        self.calls += 1
        return 0.0 if self.calls == self.hit else 0.99


def act(text):
    return parse_plan(text).actions[0]


def random_action(scene, rng):
    """A family verb, aimed at the located object most of the time so that many draws can run."""
    verb = rng.choice(sorted(FAMILY_VERBS[scene.family]))
    ids = scene.ids()
    if verb in ("locate", "goto"):
        return Action.of(verb, rng.choice(ids))
    target = scene.located_target if scene.located_target and rng.random() < 0.8 else rng.choice(ids)
    if verb == "put":
        return Action.of(verb, scene.gripper_holding or rng.choice(ids), target)
    return Action.of(verb, target)


def play(scene, *texts, p_drop=0.0, seed=0):
    """Apply each action text to scene in order; returns the outcomes."""
    rng = random.Random(seed)
    return [apply_action(scene, act(t), FailureModel(p_drop), rng) for t in texts]


def request_after(task_id, executed, failed, evidence, p_drop_on_failed=0.0, seed=0):
    """ReplanRequest for task_id once the first `executed` GT actions ran and `failed` went wrong."""
    task = get_task(task_id)
    scene = perturb(task.sceneFor(seed), task.perturbations)
    actions = task.gt_plan.actions
    play(scene, *(str(a) for a in actions[:executed]))
    failed_action = act(failed)
    apply_action(scene, failed_action, FailureModel(p_drop_on_failed), random.Random(seed))
    request = ReplanRequest(
        instruction=task.instruction,
        observation=Observation.capture(scene),
        evidence=evidence,
        failed_action=failed_action,
        remaining_plan=Plan(actions[executed:]),
        vocabulary=task.vocabulary,
    )
    return request, scene


def drop_request():
    """tabletop-01 with red_block dropped by its pick."""
    request, _ = request_after(
        "tabletop-01", 1, "pick(red_block)",
        "pick(red_block) completed but the gripper is empty", p_drop_on_failed=1.0,
    )
    return request


def open_request():
    """household-heat-01 with open(microwave) rejected because the door is already open."""
    request, _ = request_after(
        "household-heat-01", 3, "open(microwave)", "open(microwave) could not be executed",
    )
    return request

