"""Plans, actions and the line-oriented plan grammar.

One action per line, ``verb(arg)`` or ``verb(arg1, arg2)``. Blank lines,
surrounding whitespace and one numeric prefix per line ("1. ", "2) ") are
tolerated. A plan with nothing left to do is written as the single line
``<done>``.
"""
import re
from dataclasses import dataclass
from typing import FrozenSet, Tuple

from leraBench.errors import LeraError

VERBS = ("locate", "pick", "place", "goto", "open", "close", "put", "toggle_on", "toggle_off")
ARITY = {verb: 1 for verb in VERBS}
ARITY["put"] = 2

MAX_PLAN_LENGTH = 64
DONE_MARKER = "<done>"

_TOKEN = re.compile(r"[a-z][a-z0-9_]*\Z")
_NUMBER_PREFIX = re.compile(r"\d+[.)]\s*")
_CALL = re.compile(r"(?P<verb>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<args>[^()]*)\)\Z")


class PlanError(LeraError):
    pass


class ParseError(PlanError):
    def __init__(self, reason, line):
        self.reason = reason
        self.line = line
        super().__init__(f"line {line}: {reason}")


class ValidationError(PlanError):
    def __init__(self, reason, index):
        self.reason = reason
        self.index = index
        super().__init__(f"action {index}: {reason}")


@dataclass(frozen=True)
class Action:
    verb: str
    args: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if self.verb not in ARITY:
            raise ValueError(f"unknown verb {self.verb!r}")
        if len(self.args) != ARITY[self.verb]:
            raise ValueError(f"{self.verb} takes {ARITY[self.verb]} argument(s)")
        for arg in self.args:
            if not _TOKEN.match(arg):
                raise ValueError(f"bad object id {arg!r}")

    @classmethod
    def of(cls, verb, *args):
        return cls(verb, args)

    @property
    def target(self):
        """The object the action is aimed at: the destination for put."""
        return self.args[-1]

    def __str__(self):
        return f"{self.verb}({', '.join(self.args)})"


@dataclass(frozen=True)
class Plan:
    actions: Tuple[Action, ...] = ()
    cursor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if len(self.actions) > MAX_PLAN_LENGTH:
            raise ValueError(f"plans are capped at {MAX_PLAN_LENGTH} actions")
        if not 0 <= self.cursor <= len(self.actions):
            raise ValueError(f"cursor {self.cursor} outside plan of {len(self.actions)}")

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    @property
    def done(self):
        return self.cursor >= len(self.actions)

    def current(self):
        return None if self.done else self.actions[self.cursor]

    def advance(self):
        return Plan(self.actions, min(self.cursor + 1, len(self.actions)))


@dataclass(frozen=True)
class Vocabulary:
    family: str
    verbs: FrozenSet[str]
    objects: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "verbs", frozenset(self.verbs))
        object.__setattr__(self, "objects", frozenset(self.objects))
        if not self.verbs:
            raise ValueError("a vocabulary needs at least one verb")


def _parseAction(text, line):
    m = _CALL.match(text)
    if m is None:
        raise ParseError(f"malformed token {text!r}", line)
    verb = m.group("verb")
    if verb not in ARITY:
        raise ParseError(f'unknown verb "{verb}"', line)
    raw = m.group("args").strip()
    args = [a.strip() for a in raw.split(",")] if raw else []
    if len(args) != ARITY[verb]:
        raise ParseError(f"wrong arity: {verb} takes {ARITY[verb]} argument(s), got {len(args)}", line)
    for arg in args:
        if not _TOKEN.match(arg):
            raise ParseError(f"malformed token {arg!r}", line)
    return Action(verb, tuple(args))


def parse_plan(text):
    """Parse model or file text into a Plan; raises ParseError naming the line."""
    lines = text.split("\n")
    actions = []
    doneLine = None
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        prefix = _NUMBER_PREFIX.match(line)
        if prefix:
            line = line[prefix.end():]
        if line == DONE_MARKER:
            doneLine = number
            continue
        if doneLine is not None:
            raise ParseError(f"action after {DONE_MARKER}", number)
        if len(actions) == MAX_PLAN_LENGTH:
            raise ParseError(f"plan longer than {MAX_PLAN_LENGTH} actions", number)
        actions.append(_parseAction(line, number))
    if doneLine is not None:
        if actions:
            raise ParseError(f"{DONE_MARKER} mixed with actions", doneLine)
        return Plan()
    if not actions:
        raise ParseError("empty plan", len(lines))
    return Plan(tuple(actions))


def validate(plan, vocab):
    """Check every verb and object against vocab; returns plan or raises ValidationError."""
    for index, action in enumerate(plan.actions):
        if action.verb not in vocab.verbs:
            raise ValidationError(f"verb {action.verb} not in the {vocab.family} family", index)
        for arg in action.args:
            if arg not in vocab.objects:
                raise ValidationError(f"unknown object {arg}", index)
    return plan


def serialize_plan(plan):
    """Canonical text for the unexecuted part of plan."""
    rest = plan.actions[plan.cursor:]
    if not rest:
        return DONE_MARKER
    return "\n".join(str(action) for action in rest)


def remaining(plan):
    return Plan(plan.actions[plan.cursor:], 0)
