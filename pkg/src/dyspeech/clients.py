"""Clients for external ASR and TTS inference services.

Wire schema (normative, one JSON object per line):

  request:   {"schema_version": 1, "kind": "asr.transcribe" | "tts.synthesize",
              "payload": {...}}
  response:  {"schema_version": 1, "status": "ok", "payload": {...}}
             {"schema_version": 1, "status": "error",
              "error": {"code": "bad_request" | "internal" | "unavailable",
                        "message": "..."}}

ASR payloads: request {audio_path, engine} -> response {transcript, confidence}.
TTS payloads: request {utterance_id, text, reference_id, checkpoint,
severity_weights, temperature, repetition_penalty} -> response
{audio_path, duration_s}.

Clients never look inside transcripts; normalization is the metrics layer's
job. Transport problems, timeouts, malformed responses and remote errors are
raised as distinct exception types so callers can retry or abort sensibly.
"""

from __future__ import annotations

import json
import select
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Protocol

__all__ = [
    "WIRE_SCHEMA_VERSION",
    "AsrRequest",
    "AsrResponse",
    "TtsRequest",
    "TtsResponse",
    "ServiceError",
    "TransportError",
    "ServiceTimeout",
    "MalformedResponse",
    "RemoteError",
    "AsrService",
    "TtsService",
    "InProcessClient",
    "PipeClient",
    "encode_request",
    "decode_request",
    "encode_ok",
    "encode_error",
    "decode_response",
]

WIRE_SCHEMA_VERSION = 1

KIND_ASR = "asr.transcribe"
KIND_TTS = "tts.synthesize"


class ServiceError(Exception):
    """Base class for anything that goes wrong talking to a service."""


class TransportError(ServiceError):
    pass


class ServiceTimeout(ServiceError):
    pass


class MalformedResponse(ServiceError):
    pass


class RemoteError(ServiceError):
    """The service answered with an error envelope."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class AsrRequest:
    audio_path: str
    engine: str = "default"


@dataclass(frozen=True)
class AsrResponse:
    transcript: str
    confidence: float | None = None


@dataclass(frozen=True)
class TtsRequest:
    utterance_id: str
    text: str
    reference_id: str
    checkpoint: str
    severity_weights: tuple[float, ...] | None = None
    temperature: float = 0.9
    repetition_penalty: float = 6.0


@dataclass(frozen=True)
class TtsResponse:
    audio_path: str
    duration_s: float

    def __post_init__(self) -> None:
        if not (self.duration_s > 0):
            raise ValueError(f"duration_s must be positive, got {self.duration_s!r}")


class AsrService(Protocol):
    def transcribe(self, req: AsrRequest) -> AsrResponse: ...


class TtsService(Protocol):
    def synthesize(self, req: TtsRequest) -> TtsResponse: ...


def _asr_payload(req: AsrRequest) -> dict:
    return {"audio_path": req.audio_path, "engine": req.engine}


def _tts_payload(req: TtsRequest) -> dict:
    return {
        "utterance_id": req.utterance_id,
        "text": req.text,
        "reference_id": req.reference_id,
        "checkpoint": req.checkpoint,
        "severity_weights": list(req.severity_weights) if req.severity_weights is not None else None,
        "temperature": req.temperature,
        "repetition_penalty": req.repetition_penalty,
    }


def encode_request(kind: str, payload: dict) -> str:
    return json.dumps(
        {"schema_version": WIRE_SCHEMA_VERSION, "kind": kind, "payload": payload},
        ensure_ascii=False,
    )


def decode_request(line: str) -> tuple[str, dict]:
    """Server side: parse a request line into (kind, payload)."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RemoteError("bad_request", f"invalid JSON request: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise RemoteError("bad_request", "request must be an object")
    if obj.get("schema_version") != WIRE_SCHEMA_VERSION:
        raise RemoteError("bad_request", f"unsupported schema_version {obj.get('schema_version')!r}")
    kind = obj.get("kind")
    if kind not in (KIND_ASR, KIND_TTS):
        raise RemoteError("bad_request", f"unknown kind {kind!r}")
    payload = obj.get("payload")
    if not isinstance(payload, dict):
        raise RemoteError("bad_request", "payload must be an object")
    return kind, payload


def encode_ok(payload: dict) -> str:
    return json.dumps(
        {"schema_version": WIRE_SCHEMA_VERSION, "status": "ok", "payload": payload},
        ensure_ascii=False,
    )


def encode_error(code: str, message: str) -> str:
    return json.dumps(
        {
            "schema_version": WIRE_SCHEMA_VERSION,
            "status": "error",
            "error": {"code": code, "message": message},
        },
        ensure_ascii=False,
    )


def decode_response(line: str) -> dict:
    """Client side: return the ok-payload or raise the remote error."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"invalid JSON response: {exc.msg}") from exc
    if not isinstance(obj, dict) or obj.get("schema_version") != WIRE_SCHEMA_VERSION:
        raise MalformedResponse(f"unexpected response envelope: {line[:200]}")
    status = obj.get("status")
    if status == "ok":
        payload = obj.get("payload")
        if not isinstance(payload, dict):
            raise MalformedResponse("ok response without payload object")
        return payload
    if status == "error":
        err = obj.get("error") or {}
        raise RemoteError(str(err.get("code", "internal")), str(err.get("message", "")))
    raise MalformedResponse(f"unknown status {status!r}")


def _asr_response_from_payload(payload: dict) -> AsrResponse:
    if "transcript" not in payload:
        raise MalformedResponse("ASR response missing transcript")
    conf = payload.get("confidence")
    return AsrResponse(transcript=str(payload["transcript"]), confidence=None if conf is None else float(conf))


def _tts_response_from_payload(payload: dict) -> TtsResponse:
    try:
        return TtsResponse(audio_path=str(payload["audio_path"]), duration_s=float(payload["duration_s"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponse(f"bad TTS response payload: {exc}") from exc


class InProcessClient:
    """Client over in-process service objects.

    Requests and responses still pass through the wire codec, so this path
    exercises exactly the schema a subprocess server speaks.
    """

    def __init__(self, asr: AsrService | None = None, tts: TtsService | None = None):
        # imported here to avoid a module cycle (serve builds on this module)
        from .serve import handle_request_line

        self._asr = asr
        self._tts = tts
        self._handle = handle_request_line

    def transcribe(self, req: AsrRequest) -> AsrResponse:
        if self._asr is None:
            raise TransportError("no ASR service configured")
        line = self._handle(encode_request(KIND_ASR, _asr_payload(req)), asr=self._asr, tts=self._tts)
        return _asr_response_from_payload(decode_response(line))

    def synthesize(self, req: TtsRequest) -> TtsResponse:
        if self._tts is None:
            raise TransportError("no TTS service configured")
        line = self._handle(encode_request(KIND_TTS, _tts_payload(req)), asr=self._asr, tts=self._tts)
        return _tts_response_from_payload(decode_response(line))

    def close(self) -> None:
        pass

    def __enter__(self) -> "InProcessClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class PipeClient:
    """Client speaking the line protocol to a subprocess over stdin/stdout.

    One request is in flight at a time (an internal lock serializes callers,
    so the client may be shared across worker threads). Transport failures
    and timeouts are retried with exponential backoff against a freshly
    spawned subprocess; remote errors are never retried.
    """

    def __init__(
        self,
        cmd: list[str],
        timeout_s: float = 30.0,
        attempts: int = 3,
        backoff_s: float = 0.2,
    ):
        if attempts < 1:
            raise ValueError("attempts must be at least 1")
        self._cmd = list(cmd)
        self._timeout_s = timeout_s
        self._attempts = attempts
        self._backoff_s = backoff_s
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._cmd,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise TransportError(f"cannot start service {self._cmd!r}: {exc}") from exc
        return self._proc

    def _kill_proc(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
            self._proc = None

    def _roundtrip_once(self, line: str) -> str:
        proc = self._ensure_proc()
        assert proc.stdin is not None and proc.stdout is not None
        try:
            proc.stdin.write(line + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"service pipe closed: {exc}") from exc
        ready, _, _ = select.select([proc.stdout], [], [], self._timeout_s)
        if not ready:
            raise ServiceTimeout(f"no response within {self._timeout_s}s")
        reply = proc.stdout.readline()
        if reply == "":
            raise TransportError("service closed its output stream")
        return reply.rstrip("\n")

    def _roundtrip(self, line: str) -> str:
        with self._lock:
            last: ServiceError | None = None
            for attempt in range(self._attempts):
                try:
                    return self._roundtrip_once(line)
                except (TransportError, ServiceTimeout) as exc:
                    last = exc
                    self._kill_proc()
                    if attempt + 1 < self._attempts:
                        time.sleep(self._backoff_s * (2**attempt))
            assert last is not None
            raise last

    def transcribe(self, req: AsrRequest) -> AsrResponse:
        reply = self._roundtrip(encode_request(KIND_ASR, _asr_payload(req)))
        return _asr_response_from_payload(decode_response(reply))

    def synthesize(self, req: TtsRequest) -> TtsResponse:
        reply = self._roundtrip(encode_request(KIND_TTS, _tts_payload(req)))
        return _tts_response_from_payload(decode_response(reply))

    def close(self) -> None:
        with self._lock:
            if self._proc is not None and self._proc.poll() is None:
                try:
                    assert self._proc.stdin is not None
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except Exception:
                    self._kill_proc()
            self._proc = None

    def __enter__(self) -> "PipeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
