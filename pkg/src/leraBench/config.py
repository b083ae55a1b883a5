"""Program defaults and suite configuration files.

Program settings come from ``~/.leraBench/config.toml`` (``[default]`` table,
``LERA_HOME`` moves the directory) on top of built-in defaults. A suite file
is TOML with ``[suite]``, ``[budgets]``, ``[backend]`` and ``[[agents]]``;
unknown keys are errors reported with their line number.
"""
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from typing import List, Optional

import toml

from leraBench.agent import AgentConfig, CheckerConfig
from leraBench.api import BackendHandle, FaultSchedule
from leraBench.errors import ConfigurationError
from leraBench.replanner import ReplanVariant
from leraBench.tools import strToValue
from leraBench.world.tasks import original_tasks, task_library

TASK_GROUPS = {"all": None, "all-tabletop": "tabletop", "all-household": "household"}
ORIGINAL_GROUP = "all-original"

SUITE_KEYS = {"id", "seed", "tasks", "seeds", "out", "jobs"}
BUDGET_KEYS = {"max_actions", "max_replans"}
BACKEND_KEYS = {
    "kind", "endpoint", "model", "timeout_s", "max_retries", "backoff_base",
    "max_concurrency", "raster_size", "attach_raster", "schedule",
}
AGENT_KEYS = {"label", "variant", "checker", "p_flip", "p_drop"}
TABLES = {"suite": SUITE_KEYS, "budgets": BUDGET_KEYS, "backend": BACKEND_KEYS, "agents": AGENT_KEYS}


class Config(object):
    def __init__(self):
        self.settingsPath = os.getenv("LERA_HOME") or os.path.join(os.path.expanduser("~"), ".leraBench")
        self.progConfig = dict()
        self.loadDefaults()
        self.loadProgConfig()

    def loadDefaults(self):
        self.progConfig["jobs"] = self.progConfig.get("jobs", 0)
        self.progConfig["rasterSize"] = self.progConfig.get("rasterSize", 256)
        self.progConfig["attachRaster"] = self.progConfig.get("attachRaster", True)
        self.progConfig["maxTokens"] = self.progConfig.get("maxTokens", 512)
        self.progConfig["verbose"] = self.progConfig.get("verbose", False)
        self.progConfig["debug"] = self.progConfig.get("debug", False)
        self.progConfig["traceFile"] = self.progConfig.get("traceFile", "traces.log")

    def loadProgConfig(self):
        path = os.path.join(self.settingsPath, "config.toml")
        if os.path.isfile(path):
            try:
                tomlConfig = toml.load(path)
            except toml.TomlDecodeError as ex:
                raise ConfigurationError(f"{path}: {ex.msg}", line=ex.lineno) from ex
            self.progConfig.update(tomlConfig.get("default", {}))

    def updateParameter(self, key, val):
        if key not in self.progConfig:
            raise ConfigurationError(f"unknown setting {key}")
        self.progConfig[key] = strToValue(val) if isinstance(val, str) else val


@dataclass
class AgentSpec:
    label: str
    variant: Optional[str] = None
    p_flip: float = 0.0
    p_drop: Optional[float] = None

    def agentConfig(self, max_actions=50, max_replans=25):
        return AgentConfig(
            replanner=ReplanVariant(self.variant) if self.variant else None,
            checker=CheckerConfig(self.p_flip),
            max_actions=max_actions,
            max_replans=max_replans,
            p_drop=self.p_drop,
        )


@dataclass
class SuiteConfig:
    id: str
    tasks: List[str]
    seeds: List[int]
    agents: List[AgentSpec]
    backend: BackendHandle = field(default_factory=BackendHandle)
    seed: int = 0
    max_actions: int = 50
    max_replans: int = 25
    out: str = "runs"
    jobs: Optional[int] = None

    @classmethod
    def load(cls, path, defaults=None):
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as ex:
            raise ConfigurationError(f"cannot read {path}: {ex.strerror}") from ex
        return cls.loads(text, defaults)

    @classmethod
    def loads(cls, text, defaults=None):
        """Parse a suite document; defaults is a progConfig supplying backend fallbacks."""
        defaults = defaults or {}
        try:
            doc = toml.loads(text)
        except toml.TomlDecodeError as ex:
            raise ConfigurationError(ex.msg, line=ex.lineno) from ex
        locate = _KeyLocator(text)
        for name, value in doc.items():
            if name not in TABLES:
                raise ConfigurationError(f"unknown table [{name}]", line=locate.table(name))
        for name in ("suite", "agents"):
            if name not in doc:
                raise ConfigurationError(f"missing [{name}] table")
        suite = _table(doc, "suite", locate)
        budgets = _table(doc, "budgets", locate)
        backendDoc = _table(doc, "backend", locate)
        agentsDoc = doc["agents"]
        if not isinstance(agentsDoc, list):
            raise ConfigurationError("agents must be an array of tables: [[agents]]", line=locate.table("agents"))
        for i, entry in enumerate(agentsDoc):
            _checkKeys(entry, AGENT_KEYS, "agents", locate, i)

        def fail(table, key, message, index=0):
            raise ConfigurationError(message, line=locate.key(table, key, index))

        if "id" not in suite:
            fail("suite", "id", "suite.id is required")
        tasks = _expandTasks(suite.get("tasks", ["all"]), lambda m: fail("suite", "tasks", m))
        seeds = _expandSeeds(suite.get("seeds", {"start": 0, "count": 10}), lambda m: fail("suite", "seeds", m))

        agents = []
        for i, entry in enumerate(agentsDoc):
            label = entry.get("label")
            if not label:
                fail("agents", "label", "every agent needs a label", i)
            if any(a.label == label for a in agents):
                fail("agents", "label", f"duplicate agent label {label!r}", i)
            variant = entry.get("variant", "none")
            try:
                if variant in ("none", "", None):
                    variant = None
                else:
                    ReplanVariant(variant)
                if "checker" in entry and "p_flip" in entry:
                    raise ConfigurationError("give either checker or p_flip, not both")
                p_flip = CheckerConfig.preset(entry["checker"]).p_flip if "checker" in entry \
                    else CheckerConfig(float(entry.get("p_flip", 0.0))).p_flip
                p_drop = entry.get("p_drop")
                if p_drop is not None and not 0.0 <= float(p_drop) <= 1.0:
                    raise ConfigurationError(f"p_drop must lie in [0, 1], got {p_drop}")
            except (ConfigurationError, TypeError, ValueError) as ex:
                key = next((k for k in ("variant", "checker", "p_flip", "p_drop") if k in entry), "label")
                fail("agents", key, f"agent {label}: {ex}", i)
            agents.append(AgentSpec(label, variant, p_flip, None if p_drop is None else float(p_drop)))
        if not agents:
            raise ConfigurationError("at least one agent is required")

        try:
            backend = _backend(backendDoc, defaults)
        except (ConfigurationError, TypeError, ValueError) as ex:
            raise ConfigurationError(f"backend: {ex}", line=locate.table("backend")) from ex

        try:
            config = cls(
                id=str(suite["id"]),
                tasks=tasks,
                seeds=seeds,
                agents=agents,
                backend=backend,
                seed=int(suite.get("seed", 0)),
                max_actions=int(budgets.get("max_actions", 50)),
                max_replans=int(budgets.get("max_replans", 25)),
                out=str(suite.get("out", "runs")),
                jobs=int(suite["jobs"]) if "jobs" in suite else None,
            )
            config.agentConfigs()
        except (ConfigurationError, TypeError, ValueError) as ex:
            raise ConfigurationError(str(ex), line=locate.table("budgets") or locate.table("suite")) from ex
        return config

    def agentConfigs(self):
        return {a.label: a.agentConfig(self.max_actions, self.max_replans) for a in self.agents}

    def describe(self):
        return {
            "id": self.id,
            "seed": self.seed,
            "tasks": self.tasks,
            "seeds": self.seeds,
            "agents": [vars(a) for a in self.agents],
            "budgets": {"max_actions": self.max_actions, "max_replans": self.max_replans},
            "backend": self.backend.describe(),
        }

    def fingerprint(self):
        """Hash of everything that determines the results; output paths and jobs excluded."""
        canonical = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class _KeyLocator(object):
    """Finds the line on which a table or key is written."""

    _HEADER = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.-]+)\s*\]\]?")
    _KEY = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")

    def __init__(self, text):
        self._rows = []
        table, count = None, {}
        for number, line in enumerate(text.splitlines(), start=1):
            header = self._HEADER.match(line)
            if header:
                table = header.group(1)
                count[table] = count.get(table, -1) + 1
                self._rows.append((number, table, count[table], None))
                continue
            key = self._KEY.match(line)
            if key:
                self._rows.append((number, table, count.get(table, 0), key.group(1)))

    def table(self, name):
        for number, table, _, key in self._rows:
            if table == name and key is None:
                return number
        return None

    def key(self, name, key, index=0):
        for number, table, i, k in self._rows:
            if table == name and i == index and k == key:
                return number
        return self.table(name)


def _table(doc, name, locate):
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"{name} must be a table", line=locate.table(name))
    _checkKeys(value, TABLES[name], name, locate)
    return value


def _checkKeys(table, allowed, name, locate, index=0):
    for key in table:
        if key not in allowed:
            raise ConfigurationError(f"unknown key {name}.{key}", line=locate.key(name, key, index))


def _expandTasks(entries, fail):
    if isinstance(entries, str):
        entries = [entries]
    if not isinstance(entries, list) or not entries:
        fail("tasks must be a non-empty list")
    library = task_library()
    originals = [t.id for t in original_tasks()]
    known = [t.id for t in library] + originals
    tasks = []
    for entry in entries:
        if entry in TASK_GROUPS:
            family = TASK_GROUPS[entry]
            chosen = [t.id for t in library if family is None or t.family == family]
        elif entry == ORIGINAL_GROUP:
            chosen = originals
        elif entry in known:
            chosen = [entry]
        else:
            fail(f"unknown task {entry!r}")
        tasks.extend(t for t in chosen if t not in tasks)
    return tasks


def _expandSeeds(value, fail):
    if isinstance(value, dict):
        extra = set(value) - {"start", "count"}
        if extra:
            fail(f"unknown key seeds.{sorted(extra)[0]}")
        start, count = value.get("start", 0), value.get("count", 0)
        if not isinstance(start, int) or not isinstance(count, int) or count < 1:
            fail("seeds needs an integer start and a positive count")
        return list(range(start, start + count))
    if isinstance(value, list) and value and all(isinstance(v, int) for v in value):
        if len(set(value)) != len(value):
            fail("seeds must be unique")
        return list(value)
    fail("seeds must be a list of integers or {start, count}")


def _backend(doc, defaults):
    kind = doc.get("kind", "scripted")
    schedule = doc.get("schedule", [])
    if schedule and kind != "scripted_faulty":
        raise ConfigurationError("schedule is only valid for scripted_faulty backends")
    return BackendHandle(
        kind=kind,
        endpoint=doc.get("endpoint"),
        model=doc.get("model"),
        timeout_s=float(doc.get("timeout_s", 60.0)),
        max_retries=int(doc.get("max_retries", 3)),
        backoff_base=float(doc.get("backoff_base", 1.0)),
        max_concurrency=int(doc.get("max_concurrency", 4)),
        raster_size=int(doc.get("raster_size", defaults.get("rasterSize", 256))),
        attach_raster=bool(doc.get("attach_raster", defaults.get("attachRaster", True))),
        max_tokens=int(defaults.get("maxTokens", 512)),
        schedule=FaultSchedule(tuple(schedule)),
    )
