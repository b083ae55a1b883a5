"""Versioned prompt templates for the Look, Explain and Replan steps.

A template file holds the system text, a line ``=== user ===`` and the user
text. Slots are written ``{{name}}``; rendering fails if any slot is left
unfilled. The user text is split into ``### Heading`` sections, which is also
how the scripted backend reads it back.
"""
import os
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet

from leraBench import DATA_PATH
from leraBench.errors import ConfigurationError

DEFAULT_VERSION = "v1"
STEPS = ("look", "explain", "replan")
USER_SEPARATOR = "=== user ==="
NOT_AVAILABLE = "(not available)"
NONE_GIVEN = "(none)"

_SLOT = re.compile(r"\{\{\s*([a-z_]+)\s*\}\}")
_SECTION = re.compile(r"^### (.+?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class Template:
    name: str
    system: str
    user: str

    @property
    def slots(self) -> FrozenSet[str]:
        return frozenset(_SLOT.findall(self.system) + _SLOT.findall(self.user))

    @classmethod
    def parse(cls, name, text):
        if USER_SEPARATOR not in text:
            raise ConfigurationError(f"template {name} lacks the {USER_SEPARATOR!r} line")
        system, user = text.split(USER_SEPARATOR, 1)
        return cls(name, system.strip(), user.strip())

    def render(self, **values):
        """Return (system, user) with every slot filled."""
        missing = sorted(self.slots - set(values))
        if missing:
            raise ConfigurationError(f"template {self.name} leaves slot {missing[0]} unfilled")

        def fill(text):
            return _SLOT.sub(lambda m: str(values[m.group(1)]), text)

        return fill(self.system), fill(self.user)


@dataclass(frozen=True)
class PromptBundle:
    look_template: Template
    explain_template: Template
    replan_template: Template
    few_shots: Dict[str, str]
    version: str = DEFAULT_VERSION

    @classmethod
    def load(cls, version=DEFAULT_VERSION, path=None):
        base = path or os.path.join(DATA_PATH, "prompts", version)
        if not os.path.isdir(base):
            raise ConfigurationError(f"no prompt templates for version {version!r}")
        templates = {}
        for step in STEPS:
            with open(os.path.join(base, f"{step}.txt"), "r", encoding="utf-8") as f:
                templates[step] = Template.parse(step, f.read())
        shots = {}
        for entry in sorted(os.listdir(base)):
            if entry.startswith("few_shots_") and entry.endswith(".txt"):
                family = entry[len("few_shots_"):-len(".txt")]
                with open(os.path.join(base, entry), "r", encoding="utf-8") as f:
                    shots[family] = f.read().strip()
        bundle = cls(templates["look"], templates["explain"], templates["replan"], shots, version)
        bundle.check()
        return bundle

    def few_shots_for(self, family):
        try:
            return self.few_shots[family]
        except KeyError:
            raise ConfigurationError(f"no few-shot examples for the {family} family") from None

    def check(self):
        for family, text in self.few_shots.items():
            if text.count("New plan:") < 2:
                raise ConfigurationError(f"{family} few-shots need at least two examples")
        if "few_shots" not in self.replan_template.slots:
            raise ConfigurationError("the replan template must include the few_shots slot")


def sections(text):
    """Map each ``### Heading`` of a rendered user text to its body."""
    found = {}
    matches = list(_SECTION.finditer(text))
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        found[m.group(1)] = text[m.end():end].strip()
    return found


_default = None


def default_bundle():
    global _default
    if _default is None:
        _default = PromptBundle.load()
    return _default
