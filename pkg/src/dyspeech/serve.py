"""Line-protocol server: runs the mock services as a subprocess.

Reads one request per line on stdin, writes one response per line on stdout
(schema in :mod:`dyspeech.clients`). Intended for exercising the pipe
transport end to end:

    python -m dyspeech.serve --mock-config world.json --out-dir synth/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .clients import (
    KIND_ASR,
    KIND_TTS,
    AsrRequest,
    RemoteError,
    TtsRequest,
    encode_error,
    encode_ok,
    decode_request,
)
from .mockworld import MockAsrService, MockTtsService, MockWorldConfig


def _asr_request_from_payload(payload: dict) -> AsrRequest:
    try:
        return AsrRequest(audio_path=str(payload["audio_path"]), engine=str(payload.get("engine", "default")))
    except KeyError as exc:
        raise RemoteError("bad_request", f"missing ASR field {exc}") from exc


def _tts_request_from_payload(payload: dict) -> TtsRequest:
    try:
        weights = payload.get("severity_weights")
        return TtsRequest(
            utterance_id=str(payload["utterance_id"]),
            text=str(payload["text"]),
            reference_id=str(payload["reference_id"]),
            checkpoint=str(payload["checkpoint"]),
            severity_weights=None if weights is None else tuple(float(w) for w in weights),
            temperature=float(payload.get("temperature", 0.9)),
            repetition_penalty=float(payload.get("repetition_penalty", 6.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RemoteError("bad_request", f"bad TTS payload: {exc}") from exc


def handle_request_line(line: str, asr=None, tts=None) -> str:
    """Dispatch one request line to the given services; never raises."""
    try:
        kind, payload = decode_request(line)
        if kind == KIND_ASR:
            if asr is None:
                raise RemoteError("unavailable", "no ASR service behind this endpoint")
            resp = asr.transcribe(_asr_request_from_payload(payload))
            return encode_ok({"transcript": resp.transcript, "confidence": resp.confidence})
        if kind == KIND_TTS:
            if tts is None:
                raise RemoteError("unavailable", "no TTS service behind this endpoint")
            out = tts.synthesize(_tts_request_from_payload(payload))
            return encode_ok({"audio_path": out.audio_path, "duration_s": out.duration_s})
        raise RemoteError("bad_request", f"unknown kind {kind!r}")
    except RemoteError as exc:
        return encode_error(exc.code, exc.message)
    except Exception as exc:  # noqa: BLE001 - server must answer, not die
        return encode_error("internal", f"{type(exc).__name__}: {exc}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dyspeech.serve", description=__doc__)
    parser.add_argument("--mock-config", type=Path, default=None,
                        help="JSON file with MockWorldConfig fields")
    parser.add_argument("--out-dir", type=Path, default=Path("mock_synth"),
                        help="directory the mock TTS writes into")
    args = parser.parse_args(argv)

    cfg_fields = {}
    if args.mock_config is not None:
        cfg_fields = json.loads(args.mock_config.read_text(encoding="utf-8"))
    config = MockWorldConfig(**cfg_fields)
    asr = MockAsrService(config)
    tts = MockTtsService(config, args.out_dir)

    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line:
            continue
        sys.stdout.write(handle_request_line(line, asr=asr, tts=tts) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
