"""SR, GCS and SRep over episode traces, and the suite report tables.

Reports print every metric multiplied by 100 with two decimals. SRep averages
per-episode replanning success over the episodes that replanned at least
once; with no replans anywhere it is undefined and printed as an em dash.
"""
import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from leraBench.errors import UndefinedMetricError

REPORT_FORMATS = ("csv", "markdown", "structured")
GROUP_KEYS = ("task", "family")
COLUMNS = ("agent", "SR", "GCR", "SRep", "episodes", "replans")
UNDEFINED = "—"


def success_rate(traces):
    traces = list(traces)
    if not traces:
        raise UndefinedMetricError("success rate over no episodes")
    return sum(1 for t in traces if t.success) / len(traces)


def goal_condition_success(traces):
    traces = list(traces)
    if not traces:
        raise UndefinedMetricError("goal-condition success over no episodes")
    for t in traces:
        if t.total <= 0:
            raise UndefinedMetricError(f"{t.task_id} has no goal conditions")
    return sum(t.satisfied / t.total for t in traces) / len(traces)


def replanning_success(traces):
    ratios = []
    for t in traces:
        events = t.replan_events()
        if events:
            ratios.append(sum(1 for e in events if e.success) / len(events))
    if not ratios:
        raise UndefinedMetricError("no episode replanned")
    return sum(ratios) / len(ratios)


def restored_ratio(traces):
    """Share of false-positive replans whose plan equals the plan they replaced."""
    false_positives = [e for t in traces for e in t.replan_events() if e.false_positive]
    if not false_positives:
        return None
    return sum(1 for e in false_positives if e.restored) / len(false_positives)


@dataclass
class AgentRow:
    agent: str
    SR: float
    GCS: float
    SRep: Optional[float]
    episodes: int
    replans: int
    restored: Optional[float] = None
    group: Optional[str] = None

    @classmethod
    def of(cls, agent, traces, group=None):
        try:
            srep = replanning_success(traces)
        except UndefinedMetricError:
            srep = None
        return cls(
            agent=agent,
            SR=success_rate(traces),
            GCS=goal_condition_success(traces),
            SRep=srep,
            episodes=len(traces),
            replans=sum(len(t.replan_events()) for t in traces),
            restored=restored_ratio(traces),
            group=group,
        )


@dataclass
class SuiteResult:
    suite_id: str
    traces: Dict[str, List] = field(default_factory=dict)
    fingerprint: str = ""
    families: Dict[str, str] = field(default_factory=dict)

    def rows(self, group=None):
        if group is not None and group not in GROUP_KEYS:
            raise ValueError(f"unknown grouping key {group!r}")
        rows = []
        for agent, traces in self.traces.items():
            if group is None:
                rows.append(AgentRow.of(agent, traces))
                continue
            buckets = {}
            for t in traces:
                name = t.task_id if group == "task" else self.families.get(t.task_id, "unknown")
                buckets.setdefault(name, []).append(t)
            for name in sorted(buckets):
                rows.append(AgentRow.of(agent, buckets[name], group=name))
        return rows


def _pct(value):
    return UNDEFINED if value is None else f"{value * 100:.2f}"


def _cells(row):
    return [_pct(row.SR), _pct(row.GCS), _pct(row.SRep), str(row.episodes), str(row.replans)]


def emit_report(suite, format="markdown", group=None):
    rows = suite.rows(group)
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        header = list(COLUMNS)
        if group:
            header.insert(1, group)
        writer.writerow(header)
        for row in rows:
            lead = [row.agent] + ([row.group] if group else [])
            writer.writerow(lead + _cells(row))
        out.write(f"# fingerprint {suite.fingerprint}\n")
        return out.getvalue()
    if format == "markdown":
        header = ["Agent"] + ([group.capitalize()] if group else []) + ["SR", "GCR", "SRep", "Episodes", "Replans"]
        lines = [
            f"## {suite.suite_id}",
            "",
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
        ]
        for row in rows:
            lead = [row.agent] + ([row.group] if group else [])
            lines.append("| " + " | ".join(lead + _cells(row)) + " |")
        lines += ["", f"fingerprint: `{suite.fingerprint}`", ""]
        return "\n".join(lines)
    if format == "structured":
        doc = {
            "suite": suite.suite_id,
            "fingerprint": suite.fingerprint,
            "group": group,
            "rows": [
                {
                    "agent": row.agent,
                    "group": row.group,
                    "SR": round(row.SR * 100, 2),
                    "GCR": round(row.GCS * 100, 2),
                    "SRep": None if row.SRep is None else round(row.SRep * 100, 2),
                    "restored": None if row.restored is None else round(row.restored * 100, 2),
                    "episodes": row.episodes,
                    "replans": row.replans,
                }
                for row in rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown report format {format!r}")
