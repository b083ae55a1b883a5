import json
import random

import pytest

from leraBench.agent import ActionEvent, EpisodeTrace, ReplanEvent
from leraBench.errors import UndefinedMetricError
from leraBench.metrics import (
    SuiteResult,
    emit_report,
    goal_condition_success,
    replanning_success,
    restored_ratio,
    success_rate,
)


def _action(ok=True):
    return ActionEvent("pick(red_block)", "executed", "", ok, "" if ok else "failed", ok)


def _replan(success, false_positive=False, restored=False):
    return ReplanEvent(
        trigger="pick(red_block)", variant="LERa", look="", explain="", raw="<done>",
        plan="<done>", parsed_ok=True, calls_made=3, success=success,
        false_positive=false_positive, restored=restored,
    )


def _trace(task="tabletop-01", satisfied=1, total=1, replans=(), index=0):
    events = [_action()]
    for success in replans:
        events.append(_replan(success))
    return EpisodeTrace(task, index, agent="A", index=index, events=events,
                        satisfied=satisfied, total=total, success=satisfied == total)


def test_metrics_refuse_empty_input():
    with pytest.raises(UndefinedMetricError):
        success_rate([])
    with pytest.raises(UndefinedMetricError):
        goal_condition_success([])
    with pytest.raises(UndefinedMetricError):
        replanning_success([_trace()])


def test_goal_condition_success_averages_fractions():
    traces = [_trace(satisfied=1, total=2), _trace(satisfied=3, total=3)]
    assert goal_condition_success(traces) == pytest.approx(0.75)
    assert success_rate(traces) == 0.5


def test_replanning_success_averages_per_episode():
    traces = [_trace(replans=(True, False)), _trace(replans=(True,)), _trace()]
    assert replanning_success(traces) == pytest.approx(0.75)


def test_restored_ratio_counts_false_positives_only():
    trace = _trace()
    trace.events += [_replan(True, True, True), _replan(True, True, False), _replan(False)]
    assert restored_ratio([trace]) == 0.5
    assert restored_ratio([_trace(replans=(True,))]) is None


def _naive(traces):
    n = 0
    wins = 0
    gcs = 0.0
    per_episode = []
    for t in traces:
        n += 1
        if t.satisfied == t.total and not t.budget_exhausted:
            wins += 1
        gcs += t.satisfied / t.total
        flags = [e.success for e in t.events if isinstance(e, ReplanEvent)]
        if flags:
            per_episode.append(sum(flags) / len(flags))
    srep = sum(per_episode) / len(per_episode) if per_episode else None
    return wins / n, gcs / n, srep


def test_metrics_match_a_naive_recount():
    rng = random.Random(20250101)
    for _ in range(1000):
        traces = []
        for i in range(rng.randint(1, 12)):
            total = rng.randint(1, 4)
            satisfied = rng.randint(0, total)
            replans = tuple(rng.random() < 0.5 for _ in range(rng.choice([0, 0, 1, 2, 5])))
            trace = _trace(satisfied=satisfied, total=total, replans=replans, index=i)
            trace.budget_exhausted = satisfied == total and rng.random() < 0.1
            trace.success = satisfied == total and not trace.budget_exhausted
            traces.append(trace)
        sr, gcs, srep = _naive(traces)
        assert success_rate(traces) == sr
        assert goal_condition_success(traces) == pytest.approx(gcs, abs=1e-12)
        if srep is None:
            with pytest.raises(UndefinedMetricError):
                replanning_success(traces)
        else:
            assert replanning_success(traces) == pytest.approx(srep, abs=1e-12)


def _suite(traces_by_agent):
    return SuiteResult(
        suite_id="demo",
        traces=traces_by_agent,
        fingerprint="0123456789abcdef",
        families={"tabletop-01": "tabletop", "household-heat-01": "household"},
    )


def test_nineteen_of_a_hundred_prints_as_19_00():
    traces = [_trace(satisfied=1 if i < 19 else 0, index=i) for i in range(100)]
    report = emit_report(_suite({"Oracle": traces}), "csv")
    lines = report.splitlines()
    assert lines[0] == "agent,SR,GCR,SRep,episodes,replans"
    assert lines[1] == "Oracle,19.00,19.00,—,100,0"
    assert lines[-1] == "# fingerprint 0123456789abcdef"


def test_markdown_report_lists_every_agent():
    suite = _suite({"O": [_trace()], "O-LERa": [_trace(replans=(True, False))]})
    report = emit_report(suite, "markdown")
    assert report.startswith("## demo\n")
    assert "| Agent | SR | GCR | SRep | Episodes | Replans |" in report
    assert "| O | 100.00 | 100.00 | — | 1 | 0 |" in report
    assert "| O-LERa | 100.00 | 100.00 | 50.00 | 1 | 2 |" in report
    assert "fingerprint: `0123456789abcdef`" in report


def test_structured_report_groups_by_family():
    traces = [_trace("tabletop-01"), _trace("household-heat-01", satisfied=0, total=2)]
    doc = json.loads(emit_report(_suite({"A": traces}), "structured", group="family"))
    assert doc["group"] == "family"
    rows = {row["group"]: row for row in doc["rows"]}
    assert rows["household"]["SR"] == 0.0
    assert rows["tabletop"]["SR"] == 100.0
    assert rows["tabletop"]["SRep"] is None


def test_grouped_csv_has_the_group_column():
    traces = [_trace("tabletop-01"), _trace("household-heat-01")]
    lines = emit_report(_suite({"A": traces}), "csv", group="task").splitlines()
    assert lines[0] == "agent,task,SR,GCR,SRep,episodes,replans"
    assert lines[1].startswith("A,household-heat-01,")


def test_unknown_report_options():
    with pytest.raises(ValueError):
        emit_report(_suite({"A": [_trace()]}), "html")
    with pytest.raises(ValueError):
        emit_report(_suite({"A": [_trace()]}), "csv", group="seed")
