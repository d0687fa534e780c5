import pytest

from commentart.gateway import Gateway, RetryPolicy, ScriptStep, ScriptedTransport
from commentart.judge import (
    CriterionScores,
    EXPLANATION_WEIGHTS,
    JudgeParseError,
    extract_entities,
    judge_creation,
    judge_explanation,
)


def judge_gateway(steps):
    return Gateway(ScriptedTransport(steps), retry_policy=RetryPolicy(max_attempts=2, sleep=lambda s: None))


def explanation_xml(p, r, c, rel, cl):
    return (
        f"<scores><precision>{p}</precision><reasonableness>{r}</reasonableness>"
        f"<completeness>{c}</completeness><relevance>{rel}</relevance>"
        f"<clarity>{cl}</clarity></scores>"
    )


def creation_xml(c, q, s, i):
    return (
        f"<scores><creativity>{c}</creativity><quality>{q}</quality>"
        f"<style>{s}</style><impact>{i}</impact></scores>"
    )


def test_explanation_max_scores():
    gw = judge_gateway([ScriptStep(explanation_xml(5, 5, 5, 5, 5))])
    scores = judge_explanation(["Humor"], "because funny", ["Humor"], "gold text", gw)
    assert scores.composite_raw == 65.0
    assert scores.composite_norm == 1.0
    assert scores.weights == EXPLANATION_WEIGHTS


def test_explanation_zero_scores():
    gw = judge_gateway([ScriptStep(explanation_xml(0, 0, 0, 0, 0))])
    scores = judge_explanation([], "", ["Humor"], "gold", gw)
    assert scores.composite_raw == 0.0


def test_explanation_weighted_sum():
    gw = judge_gateway([ScriptStep(explanation_xml(4, 3, 5, 2, 1))])
    scores = judge_explanation(["Humor"], "text", ["Humor"], "gold", gw)
    assert scores.composite_raw == 5 * 4 + 3 * 3 + 2 * 5 + 2 * 2 + 1 * 1  # 44


def test_creation_composites():
    gw = judge_gateway([ScriptStep(creation_xml(5, 5, 5, 5))])
    scores = judge_creation("mine", "reference", gw)
    assert scores.composite_norm == 1.0

    gw2 = judge_gateway([ScriptStep(creation_xml(2, 3, 4, 5))])
    scores2 = judge_creation("mine", "reference", gw2)
    assert scores2.composite_raw == 14.0
    assert scores2.composite_norm == pytest.approx(0.7)


def test_out_of_range_scores_clamped_and_flagged():
    gw = judge_gateway([ScriptStep(creation_xml(9, -1, 3, 3))])
    scores = judge_creation("mine", "reference", gw)
    assert scores.clamped
    values = dict(scores.scores)
    assert values["Creativity"] == 5.0 and values["Quality"] == 0.0
    assert scores.composite_norm <= 1.0


def test_malformed_block_repairs_then_errors():
    transport = ScriptedTransport([ScriptStep("not xml at all", times=None)])
    gw = Gateway(transport, retry_policy=RetryPolicy(max_attempts=2, sleep=lambda s: None))
    with pytest.raises(JudgeParseError):
        judge_creation("mine", "reference", gw)
    assert len(transport.requests_seen) == 2  # one repair retry


def test_malformed_then_repaired():
    gw = judge_gateway([ScriptStep("garbage"), ScriptStep(creation_xml(1, 1, 1, 1))])
    scores = judge_creation("mine", "reference", gw)
    assert scores.composite_raw == 4.0


def test_judge_requires_reference():
    gw = judge_gateway([ScriptStep("unused")])
    with pytest.raises(ValueError):
        judge_creation("mine", "", gw)
    with pytest.raises(ValueError):
        judge_explanation([], "", [], "", gw)


def test_composite_recomputed_locally():
    scores = CriterionScores(
        task_kind="creation",
        scores=(("Creativity", 1.0), ("Quality", 2.0), ("Style", 3.0), ("Impact", 4.0)),
        weights=(1.0, 1.0, 1.0, 1.0),
    )
    assert scores.composite_raw == 10.0
    assert scores.composite_norm == 0.5


# --- entity extraction -------------------------------------------------------------


def test_extract_entities_online():
    gw = judge_gateway(
        [ScriptStep("<entities><entity>Moon</entity><entity>ladder</entity><entity>moon</entity></entities>")]
    )
    result = extract_entities("moon ladder comment", gw)
    assert result.mode == "online"
    assert result.entities.entities == frozenset({"moon", "ladder"})


def test_extract_entities_offline_stoplist():
    result = extract_entities("the red fox jumps", stoplist=frozenset({"the"}))
    assert result.mode == "offline"
    assert result.entities.entities == frozenset({"red", "fox", "jumps"})


def test_extract_entities_offline_chinese_runs():
    result = extract_entities("月亮很美 the moon")
    assert "moon" in result.entities.entities
    assert any("月" in e for e in result.entities.entities)


def test_extract_entities_empty_flagged_not_error():
    gw = judge_gateway([ScriptStep("<entities></entities>")])
    result = extract_entities("something", gw)
    assert result.empty and len(result.entities) == 0
    with pytest.raises(ValueError):
        extract_entities("")


def test_extract_entities_idempotent_normalization():
    first = extract_entities("Red FOX!", stoplist=frozenset())
    again = extract_entities(" ".join(sorted(first.entities.entities)), stoplist=frozenset())
    assert first.entities.entities == again.entities.entities
