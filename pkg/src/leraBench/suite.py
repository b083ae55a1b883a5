"""Runs the episode matrix of a suite: tasks x seeds x agents.

Episodes run on a thread pool. Each finished trace is appended to the trace
log as one JSON line in completion order; when the suite ends the log is
rewritten in matrix order so reruns produce identical files.
"""
import os
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed

from leraBench.agent import failed_trace, run_episode
from leraBench.metrics import REPORT_FORMATS, SuiteResult, emit_report
from leraBench.tools import derive_seed, get_logger
from leraBench.world.tasks import get_task

logger = get_logger(__name__)

REPORT_FILES = {"csv": "report.csv", "markdown": "report.md", "structured": "report.json"}


def episode_seed(suite_seed, task_id, seed, label):
    return derive_seed(suite_seed, task_id, seed, label)


class TraceAppender(object):
    """Serializes trace writes from worker threads into one file."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        with open(self.path, "w", encoding="utf-8"):
            pass

    def append(self, trace):
        line = trace.to_json()
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def rewrite(self, traces):
        with self._lock:
            with open(self.path, "w", encoding="utf-8") as f:
                for trace in traces:
                    f.write(trace.to_json() + "\n")


def default_jobs(config):
    jobs = config.jobs or os.cpu_count() or 1
    if config.backend.is_http:
        jobs = min(jobs, config.backend.max_concurrency)
    return max(1, jobs)


def _runOne(task, agentConfig, backend, suiteSeed, label, seed):
    eseed = episode_seed(suiteSeed, task.id, seed, label)
    try:
        return run_episode(task, agentConfig, backend, eseed, label=label, index=seed)
    except Exception as ex:
        logger.error("episode %s/%s/%s crashed: %s", label, task.id, seed, ex)
        logger.debug(traceback.format_exc())
        return failed_trace(task, eseed, label, seed, f"{type(ex).__name__}: {ex}")


def run_suite(config, out=None, jobs=None, traceFile="traces.log", onTrace=None):
    """Run every episode of config and write traces and reports under out.

    Returns the SuiteResult. onTrace is called with each trace as it finishes."""
    out = out or config.out
    os.makedirs(out, exist_ok=True)
    jobs = jobs or default_jobs(config)
    agents = config.agentConfigs()
    tasks = [get_task(tid) for tid in config.tasks]
    if any(a.replanner is not None for a in agents.values()):
        config.backend.open()

    matrix = [
        (ai, ti, si, task, spec.label, seed)
        for ai, spec in enumerate(config.agents)
        for ti, task in enumerate(tasks)
        for si, seed in enumerate(config.seeds)
    ]
    appender = TraceAppender(os.path.join(out, traceFile))
    finished = {}
    logger.info("running %d episodes on %d worker(s)", len(matrix), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {
            pool.submit(_runOne, task, agents[label], config.backend, config.seed, label, seed): (ai, ti, si)
            for ai, ti, si, task, label, seed in matrix
        }
        for future in as_completed(futures):
            trace = future.result()
            finished[futures[future]] = trace
            appender.append(trace)
            if onTrace is not None:
                onTrace(trace)

    ordered = [finished[k] for k in sorted(finished)]
    appender.rewrite(ordered)
    result = SuiteResult(
        suite_id=config.id,
        traces={spec.label: [] for spec in config.agents},
        fingerprint=config.fingerprint(),
        families={t.id: t.family for t in tasks},
    )
    for trace in ordered:
        result.traces[trace.agent].append(trace)
    for fmt in REPORT_FORMATS:
        with open(os.path.join(out, REPORT_FILES[fmt]), "w", encoding="utf-8") as f:
            f.write(emit_report(result, fmt))
    return result
