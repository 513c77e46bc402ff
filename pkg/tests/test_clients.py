"""Wire schema, mock world behavior, and the pipe transport."""

import json
import sys

import pytest

from dyspeech.clients import (
    AsrRequest,
    InProcessClient,
    MalformedResponse,
    PipeClient,
    RemoteError,
    ServiceTimeout,
    TransportError,
    TtsRequest,
    TtsResponse,
    decode_response,
    encode_request,
)
from dyspeech.metrics import char_score, corpus_rate
from dyspeech.mockworld import (
    MockAsrService,
    MockTtsService,
    MockWorldConfig,
    mock_audio_path,
    severity_distance,
)
from dyspeech.serve import handle_request_line


def _tts_req(uid, text, weights=None):
    return TtsRequest(
        utterance_id=uid,
        text=text,
        reference_id="ref-1",
        checkpoint="FT-Dys-Best" if weights is None else "FT-Dys-Co-trained",
        severity_weights=weights,
    )


# --- mock TTS -------------------------------------------------------------------


def test_mock_tts_duration_proportional_to_length(tmp_path):
    config = MockWorldConfig(seconds_per_char=0.05)
    tts = MockTtsService(config, tmp_path)
    resp = tts.synthesize(_tts_req("u1", "húsz karakter hossz"))  # 19 chars
    assert resp.duration_s == pytest.approx(19 * 0.05)
    assert mock_audio_path(tmp_path, "u1").exists()


def test_mock_tts_rejects_bad_requests(tmp_path):
    tts = MockTtsService(MockWorldConfig(), tmp_path)
    with pytest.raises(RemoteError, match="empty"):
        tts.synthesize(_tts_req("u1", ""))


def test_severity_distance_scalars():
    assert severity_distance(None) == 0.0
    assert severity_distance((1.0, 0.0)) == 0.0
    assert severity_distance((0.2, 0.8)) == pytest.approx(0.8)
    assert severity_distance((0.0, 1.0)) == pytest.approx(1.0)
    assert severity_distance((-0.5, 1.5)) == pytest.approx(1.5)
    assert severity_distance((-1.5, 2.5)) == pytest.approx(2.5)


# --- mock ASR -------------------------------------------------------------------


def test_noiseless_round_trip_is_exact(tmp_path):
    config = MockWorldConfig(base_char_error_rate=0.0)
    tts = MockTtsService(config, tmp_path)
    asr = MockAsrService(config)
    tts.synthesize(_tts_req("u1", "alma"))
    out = asr.transcribe(AsrRequest(str(mock_audio_path(tmp_path, "u1"))))
    assert out.transcript == "alma"


def test_corruption_is_deterministic(tmp_path):
    config = MockWorldConfig(base_char_error_rate=0.5, seed=9)
    tts = MockTtsService(config, tmp_path)
    asr = MockAsrService(config)
    tts.synthesize(_tts_req("u1", "egy hosszabb mondat a zajnak"))
    path = str(mock_audio_path(tmp_path, "u1"))
    first = asr.transcribe(AsrRequest(path)).transcript
    second = asr.transcribe(AsrRequest(path)).transcript
    assert first == second
    assert first != "egy hosszabb mondat a zajnak"


def test_engines_decode_differently(tmp_path):
    config = MockWorldConfig(base_char_error_rate=0.3, seed=4)
    tts = MockTtsService(config, tmp_path)
    asr = MockAsrService(config)
    tts.synthesize(_tts_req("u1", "két motor két átirat ugyanarra a hangra"))
    path = str(mock_audio_path(tmp_path, "u1"))
    a = asr.transcribe(AsrRequest(path, engine="engine_a")).transcript
    b = asr.transcribe(AsrRequest(path, engine="engine_b")).transcript
    assert a != b


def test_mock_asr_refuses_non_mock_audio(tmp_path):
    stray = tmp_path / "real.wav"
    stray.write_bytes(b"RIFF....")
    with pytest.raises(RemoteError, match="mock audio"):
        MockAsrService(MockWorldConfig()).transcribe(AsrRequest(str(stray)))


def test_mock_cer_approximates_configured_noise(tmp_path):
    """Corpus CER of the mock ASR over 500 utterances lands within 0.03 of
    the configured corruption rate."""
    rate = 0.2
    config = MockWorldConfig(base_char_error_rate=rate, seed=1)
    tts = MockTtsService(config, tmp_path)
    asr = MockAsrService(config)
    import random

    rng = random.Random(6)
    words = ["alma", "körte", "szilva", "barack", "eper", "meggy", "dió"]
    scores = []
    for i in range(500):
        uid = f"u{i:03d}"
        text = " ".join(rng.choice(words) for _ in range(rng.randint(4, 9)))
        tts.synthesize(_tts_req(uid, text))
        hyp = asr.transcribe(AsrRequest(str(mock_audio_path(tmp_path, uid)))).transcript
        scores.append(char_score(uid, text, hyp))
    assert corpus_rate(scores) == pytest.approx(rate, abs=0.03)


def test_severity_raises_decoded_noise(tmp_path):
    """Same text, same seed: setting D must decode worse than setting A."""
    config = MockWorldConfig(base_char_error_rate=0.02, severity_slope=0.08, seed=2)
    asr = MockAsrService(config)
    text = "ez a mondat mindig ugyanaz marad minden súlyossági szinten"
    cers = {}
    for name, weights in {"A": (0.2, 0.8), "D": (-1.5, 2.5)}.items():
        out = tmp_path / name
        tts = MockTtsService(config, out)
        scores = []
        for i in range(60):
            uid = f"u{i}"
            tts.synthesize(_tts_req(uid, text, weights=weights))
            hyp = asr.transcribe(AsrRequest(str(mock_audio_path(out, uid)))).transcript
            scores.append(char_score(uid, text, hyp))
        cers[name] = corpus_rate(scores)
    assert cers["A"] < cers["D"]


# --- wire schema ------------------------------------------------------------------


def test_request_line_round_trip(tmp_path):
    tts = MockTtsService(MockWorldConfig(), tmp_path)
    line = encode_request(
        "tts.synthesize",
        {
            "utterance_id": "u1",
            "text": "alma",
            "reference_id": "r1",
            "checkpoint": "FT-Dys-Best",
            "severity_weights": None,
            "temperature": 0.9,
            "repetition_penalty": 6.0,
        },
    )
    reply = handle_request_line(line, tts=tts)
    payload = decode_response(reply)
    assert payload["duration_s"] > 0


def test_error_envelope_fields(tmp_path):
    reply = handle_request_line("definitely not json", tts=MockTtsService(MockWorldConfig(), tmp_path))
    obj = json.loads(reply)
    assert obj["status"] == "error"
    assert obj["error"]["code"] == "bad_request"
    with pytest.raises(RemoteError, match="bad_request"):
        decode_response(reply)


def test_unknown_kind_rejected():
    reply = handle_request_line(json.dumps({"schema_version": 1, "kind": "asr.translate", "payload": {}}))
    assert json.loads(reply)["error"]["code"] == "bad_request"


def test_wrong_schema_version_rejected():
    reply = handle_request_line(json.dumps({"schema_version": 99, "kind": "asr.transcribe", "payload": {}}))
    assert "schema_version" in json.loads(reply)["error"]["message"]


def test_missing_service_is_unavailable(tmp_path):
    line = encode_request("asr.transcribe", {"audio_path": "x", "engine": "default"})
    reply = handle_request_line(line, asr=None, tts=None)
    assert json.loads(reply)["error"]["code"] == "unavailable"


def test_decode_response_rejects_garbage():
    with pytest.raises(MalformedResponse):
        decode_response("not json at all")
    with pytest.raises(MalformedResponse):
        decode_response(json.dumps({"schema_version": 1, "status": "weird"}))


def test_tts_response_requires_positive_duration():
    with pytest.raises(ValueError):
        TtsResponse(audio_path="x", duration_s=0.0)


# --- in-process client ---------------------------------------------------------------


def test_in_process_client_round_trip(tmp_path):
    config = MockWorldConfig()
    client = InProcessClient(asr=MockAsrService(config), tts=MockTtsService(config, tmp_path))
    resp = client.synthesize(_tts_req("u1", "jó napot"))
    out = client.transcribe(AsrRequest(resp.audio_path))
    assert out.transcript == "jó napot"


def test_in_process_client_raises_remote_errors(tmp_path):
    client = InProcessClient(tts=MockTtsService(MockWorldConfig(), tmp_path))
    with pytest.raises(RemoteError):
        client.synthesize(_tts_req("u1", ""))
    with pytest.raises(TransportError):
        client.transcribe(AsrRequest("x"))


# --- pipe transport --------------------------------------------------------------------


def _serve_cmd(tmp_path, **config):
    cfg = tmp_path / "world.json"
    cfg.write_text(json.dumps(config), encoding="utf-8")
    return [
        sys.executable, "-m", "dyspeech.serve",
        "--mock-config", str(cfg),
        "--out-dir", str(tmp_path / "synth"),
    ]


def test_pipe_client_against_subprocess_server(tmp_path):
    cmd = _serve_cmd(tmp_path, base_char_error_rate=0.0, seed=0)
    with PipeClient(cmd, timeout_s=20.0) as client:
        resp = client.synthesize(_tts_req("u1", "hello alma"))
        assert resp.duration_s > 0
        out = client.transcribe(AsrRequest(resp.audio_path))
        assert out.transcript == "hello alma"


def test_pipe_client_surfaces_remote_errors(tmp_path):
    cmd = _serve_cmd(tmp_path)
    with PipeClient(cmd, timeout_s=20.0) as client:
        with pytest.raises(RemoteError, match="empty"):
            client.synthesize(_tts_req("u1", ""))


def test_pipe_client_transport_failure(tmp_path):
    client = PipeClient([sys.executable, "-c", "pass"], timeout_s=5.0, attempts=2, backoff_s=0.01)
    with pytest.raises(TransportError):
        client.transcribe(AsrRequest("x"))
    client.close()


def test_pipe_client_timeout(tmp_path):
    slow = [sys.executable, "-c", "import time; time.sleep(60)"]
    client = PipeClient(slow, timeout_s=0.2, attempts=2, backoff_s=0.01)
    with pytest.raises(ServiceTimeout):
        client.transcribe(AsrRequest("x"))
    client.close()
