from __future__ import annotations

import pytest

from commentart.dataset import Comment, Dataset, VideoRecord
from commentart.gateway import ScriptStep
from commentart.taxonomy import default_taxonomy


def make_comment(cid, text, likes, tier, tags=(), explanation=""):
    tax = default_taxonomy()
    return Comment(
        comment_id=cid,
        text=text,
        likes=likes,
        tier=tier,
        tags=tuple(tax.parse_tag(t) for t in tags),
        explanation=explanation,
    )


def make_record(
    video_id="v1",
    category="Pets",
    god_likes=(100,),
    high_likes=(50, 40, 30, 20, 10, 5),
    ordinary_likes=(5, 4, 3, 2, 1, 0),
    god_tags=("Role Immersion",),
    explanation="role-play from the pet's point of view",
    duration_s=30.0,
    frame_paths=(),
):
    comments = []
    for i, likes in enumerate(god_likes):
        comments.append(
            make_comment(
                f"{video_id}-g{i}",
                f"god comment {i} of {video_id}",
                likes,
                "god",
                tags=god_tags if i == 0 else (),
                explanation=explanation if i == 0 else "",
            )
        )
    for i, likes in enumerate(high_likes):
        comments.append(make_comment(f"{video_id}-h{i}", f"high comment {i} of {video_id}", likes, "high"))
    for i, likes in enumerate(ordinary_likes):
        comments.append(
            make_comment(f"{video_id}-o{i}", f"ordinary comment {i} of {video_id}", likes, "ordinary")
        )
    return VideoRecord(
        video_id=video_id,
        title=f"video {video_id}",
        duration_s=duration_s,
        category=category,
        subcategory="sub",
        ocr_text="caption on screen",
        subtitle_text="someone speaks",
        frame_paths=tuple(frame_paths),
        comments=tuple(comments),
    )


@pytest.fixture
def record():
    return make_record()


@pytest.fixture
def small_dataset():
    records = tuple(make_record(video_id=f"v{i}") for i in range(12))
    return Dataset(records, taxonomy_version="1.0")


# --- scripted pipeline fixtures ------------------------------------------------

ANALYSIS_XML = """
<analysis>
  <basic><ocr>caption on screen</ocr><subtitles>someone speaks</subtitles><caption>a dog chases a ball</caption></basic>
  <intermediate>
    <video_type>pet clip</video_type>
    <characters><character>dog</character><character>owner</character></characters>
    <objects><object>ball</object></objects>
    <event_sequence><event>dog spots ball</event><event>dog chases ball</event></event_sequence>
  </intermediate>
  <advanced><emotional_tone>playful</emotional_tone><cultural_context>pet videos</cultural_context><social_values>companionship</social_values></advanced>
</analysis>
"""

FOCAL_XML = """
<focal>
  <entities>
    <entity><type>animal</type><identity>dog</identity><attributes>small, fast</attributes></entity>
    <entity><type>object</type><identity>ball</identity><attributes>red</attributes></entity>
    <entity><type>person</type><identity>owner</identity><attributes>laughing</attributes></entity>
  </entities>
  <storylines>
    <storyline><action>catches</action><subject>dog</subject><object>ball</object><sequence>2</sequence></storyline>
    <storyline><action>throws</action><subject>owner</subject><object>ball</object><sequence>1</sequence></storyline>
  </storylines>
  <environments>
    <environment><location>park</location><time>afternoon</time><context>sunny day</context><entities>dog, ball, owner</entities></environment>
  </environments>
</focal>
"""


def ext_xml(identity, sequence=3, subject="dog"):
    return f"""
<extension>
  <entity><type>concept</type><identity>{identity}</identity><attributes>new</attributes></entity>
  <storyline><action>imagines</action><subject>{subject}</subject><object>{identity}</object><sequence>{sequence}</sequence></storyline>
  <environment><location>park</location><time>later</time><context>daydream</context><entities>{subject}, {identity}</entities></environment>
</extension>
"""


ELEMENTS_XML = "<elements><element>trending catchphrase</element><element>classic meme</element></elements>"


def scores_xml(rows):
    blocks = []
    dims = ("relevance", "creativity", "engagement", "resonance", "fluency", "safety")
    for i, row in enumerate(rows, start=1):
        cells = "".join(f"<{d}>{v}</{d}>" for d, v in zip(dims, row))
        blocks.append(f'<candidate index="{i}">{cells}</candidate>')
    return "<scores>" + "".join(blocks) + "</scores>"


def full_rot_script(
    final="polished!",
    interference_rows=((5, 5, 5, 5, 5, 5), (8, 8, 8, 8, 8, 8), (4, 4, 4, 4, 4, 4), (6, 6, 6, 6, 6, 6)),
    imprint_reply=None,
):
    """Script for one clean five-phase run keyed by phase markers."""
    steps = [
        ScriptStep(ANALYSIS_XML, match="ripple_initiation"),
        ScriptStep(FOCAL_XML, match="ripple_focalization"),
        ScriptStep(ext_xml("next-event"), match="diffuse_sequential"),
        ScriptStep(ext_xml("far-idea"), match="diffuse_jumping"),
        ScriptStep(ext_xml("side-branch"), match="diffuse_branching"),
        ScriptStep(ELEMENTS_XML, match="diffuse_embedded"),
        ScriptStep(ext_xml("meme-mix"), match="diffuse_embedded"),
        ScriptStep("<comment>the next-event comment</comment>", match="generate_candidates"),
        ScriptStep("<comment>the far-idea comment</comment>", match="generate_candidates"),
        ScriptStep("<comment>the side-branch comment</comment>", match="generate_candidates"),
        ScriptStep("<comment>the meme-mix comment</comment>", match="generate_candidates"),
        ScriptStep(scores_xml(interference_rows), match="wave_interference"),
    ]
    if imprint_reply is None:
        steps.append(ScriptStep(f"<final>{final}</final>", match="luminous_imprint"))
    else:
        steps.extend(imprint_reply)
    return steps


# --- acceptance reporting --------------------------------------------------------


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for status, outcome in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = str(getattr(rep, "nodeid", ""))
            if "test_acceptance" in nodeid and "::" in nodeid:
                lines.append((nodeid.split("::")[-1], outcome))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"  {outcome}  {name}")
