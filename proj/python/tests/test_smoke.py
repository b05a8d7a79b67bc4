import json

import pytest

import privgate


def _trace(trace_id, delegated):
    return {
        "trace_id": trace_id,
        "query_id": trace_id,
        "query": "Write to Ana about her visa.",
        "profile_text": "Keep names private.",
        "decision": {
            "verdict": "Paraphrase" if delegated else "AnswerLocally",
            "rationale": "",
            "raw": "",
        },
        "pcq": {"text": "Write a note about a visa.", "rationale": "", "raw": ""} if delegated else None,
        "external_answer": "Draft." if delegated else None,
        "final_answer": "Done.",
        "path": "Delegated" if delegated else "LocalOnly",
        "created_at": "2026-01-01T00:00:00.000Z",
    }


def _audit(query_id, disclosure, leaked):
    return {
        "query_id": query_id,
        "owner_id": "PERSON 1",
        "type": "name",
        "value": "Ana",
        "disclosure": disclosure,
        "leaked": leaked,
    }


def _verdict(query_id, r1, r2, outcome):
    return {"query_id": query_id, "round1_winner": r1, "round2_winner": r2, "outcome": outcome}


def test_judge_outcome_table():
    assert privgate.judge_outcome("first", "second") == "Win"
    assert privgate.judge_outcome("second", "first") == "Loss"
    assert privgate.judge_outcome("first", "first") == "Draw"
    assert privgate.judge_outcome("second", "second") == "Draw"


def test_marker_parsers():
    assert privgate.parse_rejector_output("thinking [[no]] then [[yes]]")[0] is True
    assert privgate.parse_rejector_output("[[no]]")[0] is False
    with pytest.raises(privgate.ParseError):
        privgate.parse_rejector_output("no verdict here")
    assert privgate.extract_outermost_brackets("x [[a [[b]] c]] y") == "a [[b]] c"
    with pytest.raises(privgate.Error):
        privgate.parse_paraphraser_output("nothing")


def test_redaction_round_trip():
    text = "Mail ana.b@example.org or call +44 20 7946 0958."
    redacted, mapping = privgate.baseline_redact(text)
    assert "ana.b@example.org" not in redacted
    assert "<EMAIL_1>" in redacted
    assert privgate.baseline_restore(redacted, mapping) == text
    assert privgate.luhn_valid("4111111111111111")
    assert not privgate.luhn_valid("4111111111111112")


def test_persona_shared_sets():
    assert set(privgate.persona_shared("private_user")) == {"languages", "hobbies", "habits"}
    assert "credit card" in privgate.persona_shared("ecommerce")
    assert "health" in privgate.persona_shared("medical")
    with pytest.raises(privgate.Error):
        privgate.persona_shared("nobody")


def test_scramble_keeps_character_classes():
    value = "Ab-12 cd.é"
    for seed in range(20):
        out = privgate.scramble_characters(value, seed)
        assert len(out) == len(value)
        for a, b in zip(out, value):
            if b.isascii() and b.isupper():
                assert a.isascii() and a.isupper()
            elif b.isascii() and b.islower():
                assert a.isascii() and a.islower()
            elif b.isdigit():
                assert a.isdigit()
            else:
                assert a == b
    assert privgate.scramble_characters(value, 3) == privgate.scramble_characters(value, 3)


def test_build_report_counts():
    traces = [_trace("q1", True), _trace("q2", False)]
    audits = [
        _audit("q1", "protected", True),
        _audit("q1", "authorised", True),
        _audit("q2", "protected", False),
        _audit("q2", "authorised", False),
    ]
    verdicts = [_verdict("q1", "first", "second", "Win"), _verdict("q2", "first", "first", "Draw")]
    report = privgate.build_report(traces, audits, verdicts)
    assert report["success_rate"] == pytest.approx(1.0)
    assert report["win_rate"] == pytest.approx(0.5)
    assert report["leak_pro"] == pytest.approx(0.5)
    assert report["leak_aut"] == pytest.approx(0.5)
    assert report["reject_rate"] == pytest.approx(0.5)
    assert "success rate" in privgate.report_text(
        "".join(json.dumps(t) + "\n" for t in traces),
        "".join(json.dumps(a) + "\n" for a in audits),
        "".join(json.dumps(v) + "\n" for v in verdicts),
    )


def test_report_rejects_unknown_query():
    with pytest.raises(privgate.InconsistentUniverse):
        privgate.build_report([_trace("q1", True)], [_audit("q9", "protected", False)], [])


def test_corpus_schema_error_names_line():
    good = {
        "id": "r1",
        "query": "Plan a trip for Ana.",
        "people": [{"id": "PERSON 1", "attributes": [{"type": "name", "value": "Ana", "disclosure": "protected"}]}],
        "profile": {"text": "Keep names private.", "tone": "basic", "source": "synthetic"},
        "provenance": {"source_id": "c1"},
    }
    records = privgate.parse_corpus(json.dumps(good) + "\n")
    assert records[0]["id"] == "r1"
    anonymised = privgate.anonymise(records[0], 7)
    assert anonymised["id"] == "r1"
    with pytest.raises(privgate.SchemaError) as info:
        privgate.parse_corpus(json.dumps(good) + "\n{not json\n")
    assert info.value.line == 2


def test_cli_usage_error():
    code, _, err = privgate.run_cli(["no-such-command"])
    assert code == 2
    assert err
