import dataclasses
import random

import pytest

from helpers import ScriptedDraws, act, random_action
from leraBench.agent import (
    ActionEvent,
    AgentConfig,
    CheckerConfig,
    EpisodeStreams,
    EpisodeTrace,
    ReplanEvent,
    checker_verify,
    run_episode,
)
from leraBench.api import BackendHandle, FaultSchedule
from leraBench.errors import ConfigurationError
from leraBench.replanner import ReplanVariant
from leraBench.world.actions import (
    CARRY_VERBS,
    DROPPED,
    EXECUTED,
    FAMILY_VERBS,
    REJECTED,
    FailureModel,
    apply_action,
    perturb,
)
from leraBench.world.tasks import get_task, tabletop_scene, task_library

HOUSEHOLD = [t for t in task_library() if t.family == "household"]
TABLETOP = [t for t in task_library() if t.family == "tabletop"]


def lera(**kwargs):
    return AgentConfig(replanner=ReplanVariant("LERa"), **kwargs)


def test_checker_passes_a_clean_pick():
    scene = tabletop_scene()
    apply_action(scene, act("locate(red_block)"), FailureModel(), random.Random(0))
    pre = scene.copy()
    outcome = apply_action(scene, act("pick(red_block)"), FailureModel(), random.Random(0))
    verdict = checker_verify(pre, act("pick(red_block)"), outcome, scene, CheckerConfig(), random.Random(0))
    assert verdict.passed
    flipped = checker_verify(pre, act("pick(red_block)"), outcome, scene, CheckerConfig(1.0), random.Random(0))
    assert not flipped.passed
    assert flipped.evidence == "pick(red_block) may have failed"


def test_checker_reports_an_empty_gripper():
    scene = tabletop_scene()
    apply_action(scene, act("locate(red_block)"), FailureModel(), random.Random(0))
    pre = scene.copy()
    outcome = apply_action(scene, act("pick(red_block)"), FailureModel(1.0), random.Random(0))
    verdict = checker_verify(pre, act("pick(red_block)"), outcome, scene, CheckerConfig(), random.Random(0))
    assert not verdict.passed
    assert verdict.evidence == "pick(red_block) completed but the gripper is empty"
    missed = checker_verify(pre, act("pick(red_block)"), outcome, scene, CheckerConfig(1.0), random.Random(0))
    assert missed.passed


def test_checker_presets():
    assert CheckerConfig.preset("oracle").p_flip == 0.0
    assert CheckerConfig.preset("learned").p_flip == 0.025
    assert CheckerConfig.preset("flip15").p_flip == 0.15
    with pytest.raises(ConfigurationError):
        CheckerConfig.preset("flip20")
    with pytest.raises(ConfigurationError):
        CheckerConfig(1.5)


def test_budgets_must_be_positive():
    with pytest.raises(ConfigurationError):
        AgentConfig(max_actions=0)
    with pytest.raises(ConfigurationError):
        AgentConfig(no_replan_policy="retry")


def test_replanner_needs_a_backend():
    with pytest.raises(ConfigurationError):
        run_episode(get_task("tabletop-01"), lera(), None, 0)


def test_streams_are_independent_of_each_other():
    a, b = EpisodeStreams(5), EpisodeStreams(5)
    assert [a.drops.random() for _ in range(3)] == [b.drops.random() for _ in range(3)]
    assert EpisodeStreams(5).drops.random() != EpisodeStreams(5).flips.random()


def test_gt_plan_succeeds_without_failures():
    for task in task_library():
        clean = dataclasses.replace(task, perturbations=())
        trace = run_episode(clean, AgentConfig(p_drop=0.0), None, 11)
        assert trace.success, task.id
        assert trace.satisfied == trace.total
        assert trace.replan_events() == []


@pytest.mark.parametrize("task", HOUSEHOLD, ids=lambda t: t.id)
def test_perturbations_defeat_the_plain_agent(task):
    trace = run_episode(task, AgentConfig(), None, 0)
    assert not trace.success
    assert any(e.status == "rejected_precondition" for e in trace.action_events())


@pytest.mark.parametrize("task", HOUSEHOLD, ids=lambda t: t.id)
@pytest.mark.parametrize("kind", ["LERa", "LRa"])
def test_visual_replanners_recover_from_perturbations(task, kind):
    trace = run_episode(task, AgentConfig(replanner=ReplanVariant(kind)), BackendHandle(), 0)
    assert trace.success
    assert trace.replan_events()
    assert all(e.success for e in trace.replan_events())


@pytest.mark.parametrize("task", HOUSEHOLD, ids=lambda t: t.id)
@pytest.mark.parametrize("kind", ["ERa", "Ra"])
def test_blind_replanners_run_out_of_replans(task, kind):
    agent = AgentConfig(replanner=ReplanVariant(kind), max_replans=3)
    trace = run_episode(task, agent, BackendHandle(), 0)
    assert not trace.success
    assert trace.budget_exhausted
    assert len(trace.replan_events()) == 3
    assert not any(e.success for e in trace.replan_events())


def test_action_budget_ends_the_episode():
    trace = run_episode(get_task("tabletop-04"), AgentConfig(max_actions=3, p_drop=0.0), None, 0)
    assert trace.budget_exhausted
    assert not trace.success
    assert len(trace.action_events()) == 3


@pytest.mark.parametrize("task", TABLETOP, ids=lambda t: t.id)
def test_lera_recovers_from_any_single_drop(task):
    carries = sum(1 for a in task.gt_plan if a.verb in CARRY_VERBS)
    for hit in range(1, carries + 1):
        streams = EpisodeStreams(hit)
        streams.drops = ScriptedDraws(hit)
        trace = run_episode(task, lera(p_drop=0.5), BackendHandle(), hit, streams=streams)
        assert trace.success, f"{task.id}: drop on carry {hit}"
        events = trace.replan_events()
        assert len(events) == 1
        assert events[0].success
        assert events[0].calls_made == 3


def test_false_positive_keeps_the_plan():
    streams = EpisodeStreams(0)
    streams.flips = ScriptedDraws(1)
    agent = lera(checker=CheckerConfig(0.5), p_drop=0.0)
    trace = run_episode(get_task("tabletop-01"), agent, BackendHandle(), 0, streams=streams)
    assert trace.success
    event, = trace.replan_events()
    assert event.false_positive
    assert event.restored
    assert event.success
    first = trace.events[0]
    assert first.ground_truth and not first.passed


def test_faults_inside_one_replan_are_one_event():
    schedule = FaultSchedule((
        "ok", "ok", "malformed_plan", "malformed_plan",
        "ok", "ok", "malformed_plan", "ok",
    ))
    handle = BackendHandle(kind="scripted_faulty", schedule=schedule)
    trace = run_episode(get_task("household-heat-01"), lera(), handle, 0)
    first, second = trace.replan_events()
    assert not first.parsed_ok and not first.success
    assert first.calls_made == 4
    assert second.parsed_ok and second.success
    assert second.calls_made == 4
    assert trace.success


def test_unparsed_replan_skips_the_failed_action():
    schedule = FaultSchedule(("transport_error", "transport_error"))
    handle = BackendHandle(kind="scripted_faulty", schedule=schedule)
    trace = run_episode(get_task("household-heat-01"), lera(), handle, 0)
    first = trace.replan_events()[0]
    assert first.error.startswith("transport")
    after = trace.events[trace.events.index(first) + 1]
    assert isinstance(after, ActionEvent)
    assert after.action == "put(pizza, microwave)"


def test_trace_json_is_stable():
    task = get_task("household-wash-02")
    trace = run_episode(task, lera(), BackendHandle(), 4)
    again = run_episode(task, lera(), BackendHandle(), 4)
    assert trace.to_json() == again.to_json()
    loaded = EpisodeTrace.from_json(trace.to_json())
    assert loaded == trace
    assert isinstance(loaded.events[-1], ActionEvent)
    assert any(isinstance(e, ReplanEvent) for e in loaded.events)


def test_unknown_event_types_are_rejected():
    with pytest.raises(ValueError):
        EpisodeTrace.from_json('{"task_id": "t", "seed": 0, "events": [{"type": "teleport"}]}')


@pytest.mark.parametrize("family,seed", [("tabletop", 21), ("household", 22)])
def test_exact_checker_passes_exactly_the_clean_executions(family, seed):
    rng, flips = random.Random(seed), random.Random(seed + 1)
    tasks = [t for t in task_library() if t.family == family]
    executed, statuses = set(), set()
    for episode in range(150):
        task = tasks[episode % len(tasks)]
        scene = perturb(task.sceneFor(episode), task.perturbations)
        for _ in range(40):
            action = random_action(scene, rng)
            pre = scene.copy()
            outcome = apply_action(scene, action, FailureModel(0.3), rng)
            verdict = checker_verify(pre, action, outcome, scene, CheckerConfig(), flips)
            assert verdict.passed == (outcome.status == EXECUTED), str(action)
            statuses.add(outcome.status)
            if outcome.status == EXECUTED:
                executed.add(action.verb)
    assert executed == FAMILY_VERBS[family]
    assert statuses == {EXECUTED, DROPPED, REJECTED}


def test_lera_finds_a_drop_the_checker_missed():
    streams = EpisodeStreams(0)
    streams.drops = ScriptedDraws(1)
    streams.flips = ScriptedDraws(2)
    agent = lera(p_drop=0.5, checker=CheckerConfig(0.5))
    trace = run_episode(get_task("tabletop-01"), agent, BackendHandle(), 0, streams=streams)
    missed = trace.events[1]
    assert missed.action == "pick(red_block)"
    assert missed.passed and not missed.ground_truth
    event, = trace.replan_events()
    assert event.trigger == "place(red_bowl)"
    assert "Cause: drop red_block" in event.look
    assert event.success
    assert not event.false_positive
    assert event.calls_made == 3
    assert trace.success


def test_fault_schedule_restarts_for_every_episode():
    schedule = FaultSchedule(("transport_error", "transport_error"))
    handle = BackendHandle(kind="scripted_faulty", schedule=schedule)
    task = get_task("household-heat-01")
    first = run_episode(task, lera(), handle, 0)
    second = run_episode(task, lera(), handle, 0)
    assert first.to_json() == second.to_json()
    assert second.replan_events()[0].error.startswith("transport")
