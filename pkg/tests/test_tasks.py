import pytest

from commentart.dataset import Dataset
from commentart.tasks import (
    CLASSIFICATION_1_3_5,
    SELECTION_1_1_1,
    SELECTION_1_12_0,
    SELECTION_1_3_0,
    TaskConfig,
    TaskSkipped,
    attach_few_shot,
    build_classification,
    build_creation,
    build_explanation,
    build_preference,
    build_ranking,
    build_selection,
    build_tasks,
    load_task_manifest,
    select_few_shot,
    task_bytes,
    write_task_manifest,
)

from conftest import make_record


def tier_of(record, comment_id):
    for c in record.comments:
        if c.comment_id == comment_id:
            return c.tier
    raise KeyError(comment_id)


# --- selection ---------------------------------------------------------------


def test_selection_minimal_composition():
    record = make_record(god_likes=(100,), high_likes=(10,), ordinary_likes=(1,))
    task = build_selection(record, SELECTION_1_1_1, seed=0)
    assert len(task.options) == 3
    assert tier_of(record, dict((o.label, o.comment_id) for o in task.options)[task.answer_key]) == "god"
    tiers = sorted(tier_of(record, o.comment_id) for o in task.options)
    assert tiers == ["god", "high", "ordinary"]


def test_selection_1_12_0_gives_13_options():
    record = make_record(high_likes=tuple(range(100, 88, -1)))
    task = build_selection(record, SELECTION_1_12_0, seed=1)
    assert len(task.options) == 13
    assert task.labels == tuple("ABCDEFGHIJKLM")


def test_selection_deterministic_bytes():
    record = make_record()
    t1 = build_selection(record, SELECTION_1_3_0, seed=42)
    t2 = build_selection(record, SELECTION_1_3_0, seed=42)
    assert task_bytes(t1) == task_bytes(t2)
    t3 = build_selection(record, SELECTION_1_3_0, seed=43)
    assert task_bytes(t1) != task_bytes(t3)


def test_selection_insufficient_tier_skips():
    record = make_record(high_likes=())
    with pytest.raises(TaskSkipped):
        build_selection(record, SELECTION_1_1_1, seed=0)


def test_selection_exactly_one_god_option():
    record = make_record(god_likes=(100, 90))
    for seed in range(20):
        task = build_selection(record, SELECTION_1_3_0, seed=seed)
        gods = [o for o in task.options if tier_of(record, o.comment_id) == "god"]
        assert len(gods) == 1
        assert gods[0].comment_id == "v1-g0"  # the more-liked god is the answer


def test_selection_distractors_from_liked_top():
    # 20 highs, config m=3: distractors must come from the top 6 by likes
    record = make_record(high_likes=tuple(range(200, 180, -1)))
    top_ids = {f"v1-h{i}" for i in range(6)}
    for seed in range(10):
        task = build_selection(record, SELECTION_1_3_0, seed=seed)
        highs = [o.comment_id for o in task.options if tier_of(record, o.comment_id) == "high"]
        assert set(highs) <= top_ids


def test_selection_art_dimensions_recorded():
    task = build_selection(make_record(), SELECTION_1_1_1, seed=0)
    assert task.art_dimensions == ("DA",)


# --- ranking ---------------------------------------------------------------------


def test_ranking_reference_sorted_by_likes():
    record = make_record(god_likes=(100,), high_likes=(40, 30, 20, 10))
    task = build_ranking(record, seed=5)
    by_label = {o.label: o.comment_id for o in task.options}
    ordered_ids = [by_label[label] for label in task.answer_key]
    assert ordered_ids == ["v1-g0", "v1-h0", "v1-h1", "v1-h2", "v1-h3"]


def test_ranking_tie_broken_by_comment_id():
    record = make_record(god_likes=(100,), high_likes=(30, 30, 20, 10))
    task = build_ranking(record, seed=5)
    by_label = {o.label: o.comment_id for o in task.options}
    ordered_ids = [by_label[label] for label in task.answer_key]
    assert ordered_ids[1:3] == ["v1-h0", "v1-h1"]


def test_ranking_skips_when_god_not_top():
    record = make_record(god_likes=(50,), high_likes=(60, 30, 20, 10))
    with pytest.raises(TaskSkipped, match="god not top-liked"):
        build_ranking(record, seed=0)


def test_ranking_requires_four_highs():
    record = make_record(high_likes=(40, 30, 20))
    with pytest.raises(TaskSkipped):
        build_ranking(record, seed=0)


# --- classification -----------------------------------------------------------------


def test_classification_composition_and_key():
    record = make_record()
    task = build_classification(record, seed=9)
    assert len(task.options) == 9
    tiers = sorted(task.answer_key.values())
    assert tiers == ["god"] + ["high"] * 3 + ["ordinary"] * 5
    for option in task.options:
        assert task.answer_key[option.label] == tier_of(record, option.comment_id)


def test_classification_same_seed_same_shuffle():
    record = make_record()
    assert task_bytes(build_classification(record, 3)) == task_bytes(build_classification(record, 3))


def test_classification_needs_five_ordinaries():
    record = make_record(ordinary_likes=(1, 2, 3, 4))
    with pytest.raises(TaskSkipped):
        build_classification(record, seed=0)


# --- explanation and creation ----------------------------------------------------------


def test_explanation_key_has_tags_and_text():
    record = make_record(god_tags=("Role Immersion",))
    task = build_explanation(record)
    assert task.answer_key["tags"] == ["Role Immersion"]
    assert task.answer_key["explanation"]
    assert task.comment_text == record.best_god().text


def test_explanation_requires_tags():
    record = make_record(god_tags=())
    with pytest.raises(TaskSkipped):
        build_explanation(record)


def test_explanation_multi_tag_order_insensitive():
    record = make_record(god_tags=("Poetry", "Humor"))
    task = build_explanation(record)
    assert task.answer_key["tags"] == sorted(["Humor", "Poetry"])


def test_creation_reference_is_more_liked_god():
    record = make_record(god_likes=(100, 900))
    task = build_creation(record)
    assert task.answer_key["reference"] == "god comment 1 of v1"
    assert task.options == ()
    assert build_creation(record).task_id == task.task_id


# --- preference ---------------------------------------------------------------------


def test_preference_anonymizes_sources():
    record = make_record()
    task = build_preference(record, {"model-a": "text a", "god": "text g"}, seed=1)
    assert len(task.options) == 2
    assert set(task.answer_key.values()) == {"model-a", "god"}


# --- few-shot -----------------------------------------------------------------------


def make_train(count, category="Pets", text_len_base=10, prefix="t"):
    records = []
    for i in range(count):
        record = make_record(
            video_id=f"{prefix}{i:03d}",
            category=category,
            god_likes=(50 + i,),
            high_likes=(1,),
            ordinary_likes=(0,),
        )
        records.append(record)
    return records


def test_few_shot_lengths_then_likes(record):
    from dataclasses import replace

    train_records = []
    for i in range(15):
        r = make_record(video_id=f"t{i:03d}", god_likes=(10 + i,), high_likes=(1,), ordinary_likes=(0,))
        god = replace(r.comments[0], text="x" * (5 + i))
        train_records.append(replace(r, comments=(god,) + r.comments[1:]))
    train = Dataset(tuple(train_records), taxonomy_version="1.0")
    result = select_few_shot(record, train, seed=11)
    assert result.pool == "category"
    assert len(result.exemplars) == 5
    lengths = [len(e.text) for e in result.exemplars]
    assert lengths == sorted(lengths, reverse=True)


def test_few_shot_equal_length_likes_break_tie(record):
    from dataclasses import replace

    train_records = []
    for i, likes in enumerate([90, 10] + [5] * 8):
        r = make_record(video_id=f"t{i:03d}", god_likes=(likes,), high_likes=(1,), ordinary_likes=(0,))
        god = replace(r.comments[0], text="same length!")
        train_records.append(replace(r, comments=(god,) + r.comments[1:]))
    train = Dataset(tuple(train_records), taxonomy_version="1.0")
    result = select_few_shot(record, train, seed=2)
    assert result.exemplars[0].likes == 90


def test_few_shot_tag_fallback(record):
    # under 10 same-category records, but >= 10 sharing the god tag
    records = make_train(5, category="Pets", prefix="p") + make_train(12, category="Games", prefix="g")
    train = Dataset(tuple(records), taxonomy_version="1.0")
    result = select_few_shot(record, train, seed=0)
    assert result.pool == "tags"


def test_few_shot_all_fallback_and_empty_train(record):
    from dataclasses import replace

    records = [
        replace(r, comments=tuple(replace(c, tags=()) for c in r.comments))
        for r in make_train(4, category="Games")
    ]
    train = Dataset(tuple(records), taxonomy_version="1.0")
    assert select_few_shot(record, train, seed=0).pool == "all"
    with pytest.raises(ValueError):
        select_few_shot(record, Dataset((), taxonomy_version="1.0"), seed=0)


def test_attach_few_shot_drops_option_collisions(record):
    train = Dataset(tuple(make_train(12)), taxonomy_version="1.0")
    result = select_few_shot(record, train, seed=0)
    task = build_creation(record)
    task = attach_few_shot(task, result)
    assert len(task.fewshot_examples) == 5

    selection = build_selection(record, SELECTION_1_1_1, seed=0)
    option_text = selection.options[0].text
    from dataclasses import replace as dreplace

    collided = dreplace(result, exemplars=(dreplace(result.exemplars[0], text=option_text),) + result.exemplars[1:])
    task2 = attach_few_shot(selection, collided)
    assert option_text not in {e.text for e in task2.fewshot_examples}


# --- batch building and manifests ---------------------------------------------------------


def test_build_tasks_reports_skips():
    records = (make_record(video_id="ok"), make_record(video_id="thin", high_likes=()))
    dataset = Dataset(records, taxonomy_version="1.0")
    tasks, skips = build_tasks(dataset, [SELECTION_1_1_1, CLASSIFICATION_1_3_5], base_seed=0)
    assert {t.video_id for t in tasks} == {"ok"}
    assert {s.video_id for s in skips} == {"thin"}
    assert len(tasks) == 2 and len(skips) == 2


def test_manifest_separates_keys(tmp_path):
    record = make_record()
    tasks, _ = build_tasks(
        Dataset((record,), taxonomy_version="1.0"), [SELECTION_1_1_1], base_seed=1
    )
    tasks_path, keys_path = tmp_path / "tasks.jsonl", tmp_path / "keys.jsonl"
    write_task_manifest(tasks, tasks_path, keys_path)
    assert "answer_key" not in tasks_path.read_text("utf-8")
    assert "answer_key" in keys_path.read_text("utf-8")

    no_keys = load_task_manifest(tasks_path)
    assert no_keys[0].answer_key is None
    with_keys = load_task_manifest(tasks_path, keys_path)
    assert with_keys[0].answer_key == tasks[0].answer_key
    assert with_keys[0].options == tasks[0].options


def test_task_config_validation():
    with pytest.raises(ValueError):
        TaskConfig("selection", god_count=2)
    with pytest.raises(ValueError):
        TaskConfig("quiz")
    assert SELECTION_1_1_1.shape == "[1,1,1]"
