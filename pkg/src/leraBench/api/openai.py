import base64
import os
import threading

import backoff
import openai

from leraBench.api import API_KEY_ENV
from leraBench.errors import ConfigurationError, TransportError
from leraBench.tools import get_logger
from leraBench.world.render import raster_png

logger = get_logger(__name__)

RETRYABLE = (
    openai.RateLimitError,
    openai.InternalServerError,
    openai.APITimeoutError,
    openai.APIConnectionError,
)
MAX_WAIT_S = 30
PNG_MEDIA_TYPE = "image/png"


def _logRetry(details):
    ex = details.get("exception")
    logger.warning(
        "attempt %d failed (%s), retrying in %.2fs",
        details["tries"], type(ex).__name__ if ex else "unknown", details["wait"],
    )


def _logSuccess(details):
    logger.info("completed after %d attempt(s)", details["tries"])


def _logGiveUp(details):
    logger.error("giving up after %d attempt(s)", details["tries"])


class ChatBackend(object):
    """Chat-completions client for real models. One instance per BackendHandle; the
    semaphore caps in-flight requests, backoff retries 429/5xx/timeouts."""

    def __init__(self, handle) -> None:
        key = os.getenv(API_KEY_ENV)
        if not key:
            raise ConfigurationError(f"set {API_KEY_ENV} to use the http backend")
        self._handle = handle
        self._client = openai.OpenAI(
            base_url=handle.endpoint,
            api_key=key,
            timeout=handle.timeout_s,
            max_retries=0,
        )
        self._gate = threading.BoundedSemaphore(handle.max_concurrency)
        self._send = backoff.on_exception(
            backoff.expo,
            RETRYABLE,
            max_tries=handle.max_retries + 1,
            factor=handle.backoff_base,
            max_value=MAX_WAIT_S,
            on_backoff=_logRetry,
            on_success=_logSuccess,
            on_giveup=_logGiveUp,
        )(self._create)

    def __repr__(self):
        return f"ChatBackend(endpoint={self._handle.endpoint!r}, model={self._handle.model!r})"

    def _create(self, **kwargs):
        return self._client.chat.completions.create(**kwargs)

    def messages(self, request):
        """System and user messages; an attachment rides on the user message as a data URI."""
        user = request.user_text
        attachment = request.attachment
        if attachment is not None:
            data = attachment.data
            media_type = attachment.media_type
            if attachment.kind == "raster":
                data = raster_png(data, self._handle.raster_size)
                media_type = PNG_MEDIA_TYPE
            if isinstance(data, str):
                data = data.encode("utf-8")
            encoded = base64.b64encode(data).decode("ascii")
            user = [
                {"type": "text", "text": request.user_text},
                {"type": "image_url", "image_url": {"url": f"data:{media_type};base64,{encoded}"}},
            ]
        return [
            {"role": "system", "content": request.system_text},
            {"role": "user", "content": user},
        ]

    def complete(self, request):
        with self._gate:
            try:
                response = self._send(
                    model=self._handle.model,
                    messages=self.messages(request),
                    temperature=request.temperature,
                    max_tokens=request.max_tokens,
                )
            except RETRYABLE as ex:
                raise TransportError(f"backend unavailable: {type(ex).__name__}") from ex
            except openai.APIError as ex:
                raise TransportError(f"backend error: {type(ex).__name__}") from ex
        if not response.choices:
            raise TransportError("backend returned no choices")
        return response.choices[0].message.content or ""
