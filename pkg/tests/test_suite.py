"""Whole-suite runs on the scripted backend."""
import dataclasses
import json
import math
import os

import pytest

from leraBench import DATA_PATH
from leraBench.agent import AgentConfig, CheckerConfig, run_episode
from leraBench.api import BackendHandle
from leraBench.commands.replay_command import load_traces
from leraBench.config import SuiteConfig
from leraBench.metrics import replanning_success, success_rate
from leraBench.replanner import ReplanVariant
from leraBench.suite import episode_seed, run_suite
from leraBench.tools import derive_seed
from leraBench.world.tasks import get_task, task_library

HOUSEHOLD = [t for t in task_library() if t.family == "household"]
TABLETOP = [t for t in task_library() if t.family == "tabletop"]


def _default_suite():
    return SuiteConfig.load(os.path.join(DATA_PATH, "suites", "default.toml"))


def test_default_suite_is_reproducible(tmp_path):
    first = run_suite(_default_suite(), out=str(tmp_path / "a"), jobs=4)
    second = run_suite(_default_suite(), out=str(tmp_path / "b"), jobs=1)
    logs = [(tmp_path / d / "traces.log").read_bytes() for d in ("a", "b")]
    assert logs[0] == logs[1]
    assert len(logs[0].splitlines()) == 160
    assert first.fingerprint == second.fingerprint
    for name in ("report.csv", "report.md", "report.json"):
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()


def test_trace_log_is_in_matrix_order(tmp_path):
    suite = SuiteConfig.loads("""
[suite]
id = "order"
seed = 3
tasks = ["tabletop-01", "household-heat-01"]
seeds = [0, 1]

[[agents]]
label = "O"

[[agents]]
label = "O-LERa"
variant = "LERa"
""")
    run_suite(suite, out=str(tmp_path), jobs=3)
    traces = load_traces(str(tmp_path / "traces.log"))
    assert [(t.agent, t.task_id, t.index) for t in traces] == [
        (agent, task, seed)
        for agent in ("O", "O-LERa")
        for task in ("tabletop-01", "household-heat-01")
        for seed in (0, 1)
    ]
    assert traces[0].seed == episode_seed(3, "tabletop-01", 0, "O")
    report = json.loads((tmp_path / "report.json").read_text())
    assert [row["agent"] for row in report["rows"]] == ["O", "O-LERa"]


def test_no_failures_means_every_episode_succeeds():
    for task in task_library():
        clean = dataclasses.replace(task, perturbations=())
        for seed in range(10):
            trace = run_episode(clean, AgentConfig(p_drop=0.0), None, derive_seed("clean", seed))
            assert trace.success, (task.id, seed)


def test_drops_without_replanning_match_the_binomial_rate():
    task = get_task("tabletop-01")
    n = 2000
    wins = sum(run_episode(task, AgentConfig(), None, derive_seed("binomial", i)).success for i in range(n))
    sigma = math.sqrt(0.64 * 0.36 / n)
    assert abs(wins / n - 0.64) <= 3 * sigma


def test_lera_recovers_tabletop_drops():
    agent = AgentConfig(replanner=ReplanVariant("LERa"))
    backend = BackendHandle()
    traces = [
        run_episode(task, agent, backend, derive_seed("drops", task.id, seed))
        for task in TABLETOP
        for seed in range(100)
    ]
    assert success_rate(traces) >= 0.99


def test_household_separates_the_variants():
    backend = BackendHandle()
    plain = [run_episode(t, AgentConfig(), None, 0) for t in HOUSEHOLD]
    assert success_rate(plain) == 0.0
    for kind in ("LERa", "LRa"):
        traces = [run_episode(t, AgentConfig(replanner=ReplanVariant(kind)), backend, 0) for t in HOUSEHOLD]
        assert success_rate(traces) == 1.0, kind
    for kind in ("ERa", "Ra"):
        traces = [run_episode(t, AgentConfig(replanner=ReplanVariant(kind)), backend, 0) for t in HOUSEHOLD]
        assert success_rate(traces) == 0.0, kind
        assert replanning_success(traces) == 0.0, kind


@pytest.mark.parametrize("task", HOUSEHOLD, ids=lambda t: t.id)
def test_lera_handles_each_perturbation_alone(task):
    for perturbation in task.perturbations:
        single = dataclasses.replace(task, perturbations=(perturbation,))
        trace = run_episode(single, AgentConfig(replanner=ReplanVariant("LERa")), BackendHandle(), 0)
        assert trace.success, str(perturbation)


def test_noisier_checkers_never_help():
    backend = BackendHandle()
    rates = []
    for p_flip in (0.0, 0.05, 0.10, 0.15):
        agent = AgentConfig(replanner=ReplanVariant("LERa"), checker=CheckerConfig(p_flip))
        traces = [
            run_episode(task, agent, backend, derive_seed("noise", task.id, seed))
            for task in task_library()
            for seed in range(40)
        ]
        false_positives = [e for t in traces for e in t.replan_events() if e.false_positive]
        assert all(e.restored for e in false_positives)
        if p_flip:
            assert false_positives
        rates.append(success_rate(traces))
    assert rates == sorted(rates, reverse=True)


FAULTY_SUITE = """
[suite]
id = "faulty"
seed = 9
tasks = ["all-household"]
seeds = [0, 1, 2]

[backend]
kind = "scripted_faulty"
schedule = ["transport_error", "transport_error", "malformed_plan"]

[[agents]]
label = "O-LERa"
variant = "LERa"
"""


def test_fault_schedules_do_not_depend_on_jobs(tmp_path):
    for jobs, out in ((8, "a"), (1, "b"), (4, "c")):
        run_suite(SuiteConfig.loads(FAULTY_SUITE), out=str(tmp_path / out), jobs=jobs)
    logs = [(tmp_path / d / "traces.log").read_bytes() for d in ("a", "b", "c")]
    assert logs[0] == logs[1] == logs[2]
    for trace in load_traces(str(tmp_path / "a" / "traces.log")):
        first = trace.replan_events()[0]
        assert first.error.startswith("transport"), trace.task_id
        assert not first.parsed_ok


def test_oracle_solves_every_original_task(tmp_path):
    suite = SuiteConfig.loads("""
[suite]
id = "originals"
tasks = ["all-original"]
seeds = [0, 1, 2]

[[agents]]
label = "Oracle"
""")
    result = run_suite(suite, out=str(tmp_path), jobs=2)
    traces = result.traces["Oracle"]
    assert len({t.task_id for t in traces}) == 6
    assert all(t.task_id.endswith("-original") for t in traces)
    assert success_rate(traces) == 1.0
