"""Model backends behind one call: complete(handle, request) -> text.

scripted        deterministic rule engine reading the ground-truth snapshot
scripted_faulty the scripted engine wrapped by a FaultSchedule
http            chat-completions endpoint (openai client), key from LERA_API_KEY
"""
import dataclasses
import threading
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from leraBench.errors import ConfigurationError

KINDS = ("scripted", "scripted_faulty", "http")
BEHAVIORS = ("ok", "malformed_plan", "transport_error", "empty")
API_KEY_ENV = "LERA_API_KEY"

SNAPSHOT_MEDIA_TYPE = "application/toml"
RASTER_MEDIA_TYPE = "image/x-portable-pixmap"


@dataclass(frozen=True)
class Attachment:
    kind: str
    data: Union[str, bytes]
    media_type: str

    @classmethod
    def snapshot(cls, text):
        return cls("snapshot", text, SNAPSHOT_MEDIA_TYPE)

    @classmethod
    def raster(cls, ppm):
        return cls("raster", ppm, RASTER_MEDIA_TYPE)


@dataclass(frozen=True)
class BackendRequest:
    system_text: str
    user_text: str
    attachment: Optional[Attachment] = None
    max_tokens: int = 512
    temperature: float = 0.0

    def __post_init__(self):
        if self.temperature != 0.0:
            raise ValueError("decoding is pinned to temperature 0")


@dataclass(frozen=True)
class FaultSchedule:
    behaviors: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "behaviors", tuple(self.behaviors))
        for behavior in self.behaviors:
            if behavior not in BEHAVIORS:
                raise ConfigurationError(f"unknown fault behavior {behavior!r}")


@dataclass
class BackendHandle:
    kind: str = "scripted"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    max_concurrency: int = 4
    raster_size: int = 256
    attach_raster: bool = True
    max_tokens: int = 512
    schedule: FaultSchedule = field(default_factory=FaultSchedule)
    _session: object = field(default=None, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not (self.endpoint and self.model):
            raise ConfigurationError("http backends need both endpoint and model")
        if self.max_retries < 0 or self.max_concurrency < 1 or self.timeout_s <= 0:
            raise ConfigurationError("backend limits must be positive")

    @property
    def is_http(self):
        return self.kind == "http"

    def describe(self):
        """Settings safe to print or hash; never includes credentials."""
        info = {"kind": self.kind}
        if self.is_http:
            info.update(
                endpoint=self.endpoint, model=self.model, timeout_s=self.timeout_s,
                max_retries=self.max_retries, backoff_base=self.backoff_base,
                max_concurrency=self.max_concurrency, raster_size=self.raster_size,
                attach_raster=self.attach_raster,
            )
        if self.kind == "scripted_faulty":
            info["schedule"] = list(self.schedule.behaviors)
        return info

    def for_episode(self):
        """Handle for one episode. Fault schedules restart at every episode, so
        which call fails never depends on how episodes interleave."""
        if self.kind != "scripted_faulty":
            return self
        return dataclasses.replace(self)

    def open(self):
        """Create the backend session once; raises ConfigurationError when misconfigured."""
        with self._lock:
            if self._session is None:
                if self.kind == "scripted":
                    from leraBench.api.scripted import ScriptedBackend
                    self._session = ScriptedBackend()
                elif self.kind == "scripted_faulty":
                    from leraBench.api.faulty import FaultyBackend
                    self._session = FaultyBackend(self.schedule)
                else:
                    from leraBench.api.openai import ChatBackend
                    self._session = ChatBackend(self)
            return self._session


def complete(handle, request):
    """Send request through handle's backend; TransportError when no text can be had."""
    return handle.open().complete(request)
