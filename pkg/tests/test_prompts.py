import pytest

from commentart.prompts import TEMPLATE_NAMES, PromptPack


def test_all_templates_ship_in_package():
    pack = PromptPack()
    assert set(pack.templates) == set(TEMPLATE_NAMES)
    for name in TEMPLATE_NAMES:
        assert pack.templates[name].strip()


def test_render_substitutes_placeholders():
    pack = PromptPack()
    text = pack.render("luminous_imprint", comment="hello there", max_chars="60")
    assert "hello there" in text
    assert "60" in text
    assert "$comment" not in text


def test_render_unknown_template():
    with pytest.raises(KeyError):
        PromptPack().render("nope")


def test_override_directory_replaces_template(tmp_path):
    (tmp_path / "luminous_imprint.txt").write_text("custom rewrite of: $comment", "utf-8")
    pack = PromptPack(override_dir=tmp_path)
    assert pack.render("luminous_imprint", comment="x") == "custom rewrite of: x"
    # untouched templates still come from the package
    assert pack.render("ripple_initiation", video_context="ctx").strip()


def test_content_hash_tracks_overrides(tmp_path):
    base = PromptPack().content_hash()
    assert base == PromptPack().content_hash()
    (tmp_path / "generate_comment.txt").write_text("different", "utf-8")
    assert PromptPack(override_dir=tmp_path).content_hash() != base
