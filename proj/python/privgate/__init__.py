"""Python access to the privgate native core."""

import json

from ._privgate import (
    ConfigError,
    EmptyInput,
    Error,
    InconsistentUniverse,
    ParseError,
    PreconditionError,
    ProtocolError,
    SchemaError,
    ScriptExhausted,
    StorageError,
    TransportError,
    ValidationError,
    baseline_redact,
    baseline_restore,
    extract_outermost_brackets,
    judge_outcome,
    luhn_valid,
    parse_absolute_rating,
    parse_pairwise_choice,
    parse_paraphraser_output,
    parse_rejector_output,
    persona_shared,
    report_text,
    run_cli,
    scramble_characters,
)
from . import _privgate


def _jsonl(rows):
    if isinstance(rows, str):
        return rows
    return "".join(json.dumps(r) + "\n" for r in rows)


def anonymise(record, seed):
    """Anonymise one corpus record (a dict) with the given seed."""
    return json.loads(_privgate.anonymise_json(json.dumps(record), seed))


def parse_corpus(jsonl):
    """Validate a JSONL corpus and return its records as dicts."""
    return [json.loads(line) for line in _privgate.parse_corpus_jsonl(jsonl)]


def build_report(traces, audits, verdicts, scores=()):
    """Metrics report over traces, audits, verdicts and scores (JSONL text or lists of dicts)."""
    return json.loads(
        _privgate.build_report_json(_jsonl(traces), _jsonl(audits), _jsonl(verdicts), _jsonl(scores))
    )


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
