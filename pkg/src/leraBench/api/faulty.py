"""Scripted backend wrapped by a FaultSchedule.

Each call consumes the next scheduled behavior in call order. Every episode
opens its own FaultyBackend (see BackendHandle.for_episode), so the schedule
restarts per episode; once it runs out every call is ``ok``.
"""
import threading

from leraBench.api.scripted import ScriptedBackend
from leraBench.errors import TransportError
from leraBench.tools import get_logger

logger = get_logger(__name__)

MALFORMED_TEXT = "I think the robot should fly(red_block) and then see what happens."


class FaultyBackend(object):
    def __init__(self, schedule):
        self._pending = list(schedule.behaviors)
        self._lock = threading.Lock()
        self._inner = ScriptedBackend()
        self.calls = 0

    def _next(self):
        with self._lock:
            self.calls += 1
            return self._pending.pop(0) if self._pending else "ok"

    def complete(self, request):
        behavior = self._next()
        if behavior != "ok":
            logger.info("injecting %s on call %d", behavior, self.calls)
        if behavior == "transport_error":
            raise TransportError("injected transport failure")
        if behavior == "empty":
            return ""
        if behavior == "malformed_plan":
            return MALFORMED_TEXT
        return self._inner.complete(request)
