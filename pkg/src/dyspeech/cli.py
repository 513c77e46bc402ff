"""Command-line pipeline driver.

Every subcommand takes a JSON config file plus ``--set dotted.key=value``
overrides, so a whole experiment is reproducible from its config snapshots.

Exit codes: 0 success, 2 config error, 3 service error, 4 verdict failure
(rank-severity found a non-monotonic ordering), so CI scripts can tell a
broken setup from a failing experiment.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import agreement, harness, mixer, scheduler, textselect
from .clients import InProcessClient, PipeClient, ServiceError
from .embeddings import SEVERITY_PRESETS, SeveritySetting, read_severity_settings
from .manifest import ManifestError, read_manifest, stats, write_manifest
from .metrics import NormalizationPolicy
from .mockworld import MockAsrService, MockTtsService, MockWorldConfig
from .scheduler import ExecutionAborted
from .harness import EvaluationAborted

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SERVICE = 3
EXIT_VERDICT = 4


class ConfigError(ValueError):
    pass


def _load_config(path: str, overrides: list[str]) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return cfg


def _require(cfg: dict, *names: str) -> None:
    missing = [n for n in names if n not in cfg]
    if missing:
        raise ConfigError(f"config is missing required keys: {missing}")


def _policy_from(cfg: dict | None) -> NormalizationPolicy:
    cfg = cfg or {}
    return NormalizationPolicy(
        lowercase=bool(cfg.get("lowercase", True)),
        strip_punctuation=bool(cfg.get("strip_punctuation", True)),
        collapse_whitespace=bool(cfg.get("collapse_whitespace", True)),
    )


def build_asr_client(backend: dict):
    kind = backend.get("kind")
    if kind == "mock":
        return InProcessClient(asr=MockAsrService(_mock_config_from(backend)))
    if kind == "pipe":
        return PipeClient(
            cmd=list(backend["cmd"]),
            timeout_s=float(backend.get("timeout_s", 30.0)),
            attempts=int(backend.get("attempts", 3)),
            backoff_s=float(backend.get("backoff_s", 0.2)),
        )
    raise ConfigError(f"backend.kind must be 'mock' or 'pipe', got {kind!r}")


def build_tts_client(backend: dict, out_dir: Path):
    kind = backend.get("kind")
    if kind == "mock":
        return InProcessClient(tts=MockTtsService(_mock_config_from(backend), out_dir))
    if kind == "pipe":
        return PipeClient(
            cmd=list(backend["cmd"]),
            timeout_s=float(backend.get("timeout_s", 30.0)),
            attempts=int(backend.get("attempts", 3)),
            backoff_s=float(backend.get("backoff_s", 0.2)),
        )
    raise ConfigError(f"backend.kind must be 'mock' or 'pipe', got {kind!r}")


def _mock_config_from(backend: dict) -> MockWorldConfig:
    return MockWorldConfig(
        base_char_error_rate=float(backend.get("base_char_error_rate", 0.0)),
        severity_slope=float(backend.get("severity_slope", 0.0)),
        seed=int(backend.get("seed", 0)),
        seconds_per_char=float(backend.get("seconds_per_char", 0.08)),
    )


def _severity_from(cfg, settings_file: str | None) -> SeveritySetting | None:
    if cfg is None:
        return None
    if isinstance(cfg, str):
        table = read_severity_settings(settings_file) if settings_file else SEVERITY_PRESETS
        if cfg not in table:
            raise ConfigError(f"unknown severity setting {cfg!r}; known: {sorted(table)}")
        return table[cfg]
    if isinstance(cfg, dict):
        try:
            return SeveritySetting(cfg["name"], tuple(float(w) for w in cfg["weights"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad severity object: {exc}") from exc
    raise ConfigError("severity must be a preset name or {name, weights}")


# --- subcommands --------------------------------------------------------------


def cmd_filter_ensemble(cfg: dict) -> int:
    _require(cfg, "source_manifest", "transcripts_a", "transcripts_b", "out_manifest")
    source = read_manifest(cfg["source_manifest"])
    pairs = agreement.pair_transcripts(
        agreement.read_transcripts(cfg["transcripts_a"]),
        agreement.read_transcripts(cfg["transcripts_b"]),
    )
    policy = _policy_from(cfg.get("normalization"))
    max_edit = int(cfg.get("max_edit", 4))
    kept = agreement.agreement_filter(
        pairs, source, max_edit=max_edit, policy=policy,
        label_source=cfg.get("label_source", "engine_a"),
    )
    write_manifest(kept, cfg["out_manifest"])
    report = agreement.filter_report(pairs, source, max_edit=max_edit, policy=policy)
    if "out_report" in cfg:
        Path(cfg["out_report"]).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    print(
        f"kept {report.kept}/{report.total} utterances "
        f"({report.retention:.1%}, {report.kept_duration_s / 3600:.2f} h) -> {cfg['out_manifest']}"
    )
    return EXIT_OK


def cmd_select_text(cfg: dict) -> int:
    _require(cfg, "corpus", "out_sentences")
    pcfg = cfg.get("policy", {})
    charset = pcfg.get("allowed_charset")
    policy = textselect.SelectionPolicy(
        min_words=int(pcfg.get("min_words", 9)),
        max_words=int(pcfg.get("max_words", 11)),
        allowed_charset=frozenset(charset) if charset else textselect.DEFAULT_ALLOWED_CHARSET,
        reject_abbreviations=bool(pcfg.get("reject_abbreviations", True)),
        sample_size=int(pcfg.get("sample_size", 5000)),
        seed=int(pcfg.get("seed", 0)),
    )
    with open(cfg["corpus"], encoding="utf-8") as f:
        candidates = textselect.filter_sentences(f, policy)
    selected = textselect.sample_sentences(candidates, policy)
    textselect.write_sentences(selected, cfg["out_sentences"])
    print(f"{len(candidates)} candidates, sampled {len(selected)} -> {cfg['out_sentences']}")
    return EXIT_OK


def cmd_plan_synth(cfg: dict) -> int:
    _require(cfg, "sentences", "reference_manifest", "checkpoint", "out_plan")
    sentences = textselect.read_sentences(cfg["sentences"])
    references = [u.id for u in read_manifest(cfg["reference_manifest"])]
    ck = cfg["checkpoint"]
    if isinstance(ck, str):
        ck = {"name": ck}
    checkpoint = scheduler.CheckpointRef(
        name=ck["name"],
        training_note=ck.get("training_note", scheduler.DEFAULT_TRAINING_NOTES.get(ck["name"], "")),
    )
    severity = _severity_from(cfg.get("severity"), cfg.get("settings_file"))
    try:
        plan = scheduler.build_plan(
            sentences,
            references,
            checkpoint,
            severity=severity,
            temperature=float(cfg.get("temperature", scheduler.DEFAULT_TEMPERATURE)),
            repetition_penalty=float(cfg.get("repetition_penalty", scheduler.DEFAULT_REPETITION_PENALTY)),
        )
    except (scheduler.PlanError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    scheduler.write_plan(plan, cfg["out_plan"])
    usage = plan.reference_usage().values()
    print(
        f"planned {len(plan.jobs)} jobs over {len(plan.reference_pool)} references "
        f"(usage {min(usage)}..{max(usage)}) -> {cfg['out_plan']}"
    )
    return EXIT_OK


def cmd_synthesize(cfg: dict) -> int:
    _require(cfg, "plan", "out_dir", "backend", "out_manifest")
    plan = scheduler.read_plan(cfg["plan"])
    out_dir = Path(cfg["out_dir"])
    client = build_tts_client(cfg["backend"], out_dir)
    result = scheduler.execute_plan(
        plan,
        client,
        out_dir,
        manifest_name=cfg.get("manifest_name", Path(cfg["out_manifest"]).stem),
        failure_tolerance=float(cfg.get("failure_tolerance", 0.05)),
        workers=int(cfg.get("workers", 1)),
    )
    write_manifest(result.manifest, cfg["out_manifest"])
    if "out_failures" in cfg:
        Path(cfg["out_failures"]).write_text(
            json.dumps([{"sentence_id": f.sentence_id, "reason": f.reason} for f in result.failures], indent=2)
            + "\n",
            encoding="utf-8",
        )
    s = stats(result.manifest)
    print(
        f"synthesized {len(result.manifest)} utterances "
        f"({s.total_duration_s / 3600:.2f} h, {result.skipped} reused, "
        f"{len(result.failures)} failed) -> {cfg['out_manifest']}"
    )
    return EXIT_OK


def cmd_mix(cfg: dict) -> int:
    _require(cfg, "real_manifest", "out_manifest")
    spec = mixer.MixSpec(
        real=read_manifest(cfg["real_manifest"]),
        synthetic=tuple(read_manifest(p) for p in cfg.get("synthetic_manifests", [])),
        target_ratio=float(cfg.get("target_ratio", 1.0)),
        balance_mode=cfg.get("balance_mode", "repeat_real"),
        seed=int(cfg.get("seed", 0)),
    )
    mixed = mixer.mix(spec)
    write_manifest(mixed, cfg["out_manifest"])
    report = mixer.describe(mixed)
    if "out_report" in cfg:
        Path(cfg["out_report"]).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(
        f"mixed {report.total_count} utterances, {report.total_duration_s / 3600:.2f} h "
        f"-> {cfg['out_manifest']}"
    )
    return EXIT_OK


def cmd_evaluate(cfg: dict) -> int:
    _require(cfg, "name", "eval_manifests", "backend", "out_report")
    manifests = cfg["eval_manifests"]
    if isinstance(manifests, dict):
        pairs = tuple(sorted(manifests.items()))
    else:
        pairs = tuple((Path(p).stem, p) for p in manifests)
    ci_cfg = cfg.get("ci", {})
    config = harness.ExperimentConfig(
        name=cfg["name"],
        eval_manifests=pairs,
        asr_backend=cfg["backend"],
        engine=cfg.get("engine", "default"),
        normalization=_policy_from(cfg.get("normalization")),
        ci=harness.CiSettings(
            replicates=int(ci_cfg.get("replicates", 1000)),
            alpha=float(ci_cfg.get("alpha", 0.05)),
            seed=int(ci_cfg.get("seed", 0)),
        ),
        failure_tolerance=float(cfg.get("failure_tolerance", 0.05)),
        metadata=cfg.get("metadata", {}),
    )
    client = build_asr_client(cfg["backend"])
    try:
        report = harness.evaluate(config, client)
    except EvaluationAborted as exc:
        dump = Path(cfg["out_report"]).with_suffix(".partial.json")
        partial = harness.MetricReport(
            name=config.name, rows=exc.partial_rows,
            config_snapshot=config.snapshot(), config_hash=harness.config_hash(config.snapshot()),
        )
        harness.write_report(partial, dump)
        print(f"evaluation aborted: {exc} (partial report in {dump})", file=sys.stderr)
        return EXIT_SERVICE
    harness.write_report(report, cfg["out_report"])
    for row in report.rows:
        print(
            f"{row.set_name}: WER {100 * row.wer:.2f}%  CER {100 * row.cer:.2f}% "
            f"[{100 * row.cer_ci.low:.2f}, {100 * row.cer_ci.high:.2f}] ({row.n_utterances} utts)"
        )
    print(f"report -> {cfg['out_report']}")
    return EXIT_OK


def cmd_compare(cfg: dict) -> int:
    _require(cfg, "baseline", "candidate")
    result = harness.compare(harness.read_report(cfg["baseline"]), harness.read_report(cfg["candidate"]))
    if "out" in cfg:
        Path(cfg["out"]).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    for row in result.rows:
        rel = "n/a" if row.cer_relative is None else f"{100 * row.cer_relative:+.1f}%"
        marker = " [outside baseline CI]" if row.cer_outside_baseline_ci else ""
        print(f"{row.set_name}: CER delta {100 * row.cer_delta:+.2f}pp ({rel}){marker}")
    return EXIT_OK


def cmd_rank_severity(cfg: dict) -> int:
    _require(cfg, "reports")
    reports = [(name, harness.read_report(path)) for name, path in sorted(cfg["reports"].items())]
    result = harness.severity_rank(reports, expected_order=cfg.get("expected_order"))
    if "out" in cfg:
        payload = {
            "ranking": [[n, c] for n, c in result.ranking],
            "verdict": result.verdict,
            "violations": [list(v) for v in result.violations],
        }
        Path(cfg["out"]).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    for name, cer in result.ranking:
        print(f"{name}: CER {100 * cer:.2f}%")
    print(f"verdict: {result.verdict}"
          + (f" (violated pairs: {list(result.violations)})" if result.violations else ""))
    return EXIT_OK if result.verdict == "monotonic" else EXIT_VERDICT


def cmd_report(cfg: dict) -> int:
    _require(cfg, "report", "format")
    rendered = harness.report_render(
        harness.read_report(cfg["report"]),
        format=cfg["format"],
        metric=cfg.get("metric", "cer"),
    )
    if "out" in cfg:
        Path(cfg["out"]).write_text(rendered, encoding="utf-8")
        print(f"rendered {cfg['format']} -> {cfg['out']}")
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


_COMMANDS = {
    "filter-ensemble": cmd_filter_ensemble,
    "select-text": cmd_select_text,
    "plan-synth": cmd_plan_synth,
    "synthesize": cmd_synthesize,
    "mix": cmd_mix,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "rank-severity": cmd_rank_severity,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dyspeech", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry (dotted keys, JSON values)",
        )
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config, args.overrides)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, ManifestError, textselect.SelectionShortfallError,
            scheduler.PlanError, mixer.MixError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ServiceError, ExecutionAborted, EvaluationAborted) as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
