"""Walk through one five-phase pipeline run against a scripted transport.

No network, no credentials: every model reply is canned, so you can see
exactly what each phase consumes and produces.
"""

from commentart.dataset import Comment, VideoRecord
from commentart.gateway import Gateway, RetryPolicy, ScriptStep, ScriptedTransport
from commentart.ripple import run_rot

ANALYSIS = """
<analysis>
  <basic><ocr>lost dog poster</ocr><subtitles>come back, Biscuit!</subtitles><caption>a dog sprints across a park after a frisbee</caption></basic>
  <intermediate>
    <video_type>pet clip</video_type>
    <characters><character>Biscuit</character><character>owner</character></characters>
    <objects><object>frisbee</object></objects>
    <event_sequence><event>owner throws frisbee</event><event>Biscuit leaps and misses</event></event_sequence>
  </intermediate>
  <advanced><emotional_tone>gleeful chaos</emotional_tone><cultural_context>dog-video culture</cultural_context><social_values>loyalty</social_values></advanced>
</analysis>
"""

FOCAL = """
<focal>
  <entities>
    <entity><type>animal</type><identity>Biscuit</identity><attributes>fast, clumsy</attributes></entity>
    <entity><type>person</type><identity>owner</identity><attributes>optimistic</attributes></entity>
    <entity><type>object</type><identity>frisbee</identity><attributes>bright orange</attributes></entity>
  </entities>
  <storylines>
    <storyline><action>throws</action><subject>owner</subject><object>frisbee</object><sequence>1</sequence></storyline>
    <storyline><action>misses</action><subject>Biscuit</subject><object>frisbee</object><sequence>2</sequence></storyline>
  </storylines>
  <environments>
    <environment><location>park</location><time>golden hour</time><context>weekend play</context><entities>Biscuit, owner, frisbee</entities></environment>
  </environments>
</focal>
"""


def ext(identity):
    return f"""
<extension>
  <entity><type>concept</type><identity>{identity}</identity><attributes>imagined</attributes></entity>
  <storyline><action>stars in</action><subject>Biscuit</subject><object>{identity}</object><sequence>3</sequence></storyline>
  <environment><location>park</location><time>later</time><context>what-if</context><entities>Biscuit, {identity}</entities></environment>
</extension>
"""


SCORES = """
<scores>
  <candidate index="1"><relevance>8</relevance><creativity>5</creativity><engagement>6</engagement><resonance>5</resonance><fluency>8</fluency><safety>10</safety></candidate>
  <candidate index="2"><relevance>7</relevance><creativity>9</creativity><engagement>8</engagement><resonance>7</resonance><fluency>8</fluency><safety>10</safety></candidate>
  <candidate index="3"><relevance>6</relevance><creativity>7</creativity><engagement>6</engagement><resonance>6</resonance><fluency>8</fluency><safety>10</safety></candidate>
  <candidate index="4"><relevance>7</relevance><creativity>8</creativity><engagement>8</engagement><resonance>6</resonance><fluency>8</fluency><safety>10</safety></candidate>
</scores>
"""

script = [
    ScriptStep(ANALYSIS, match="ripple_initiation"),
    ScriptStep(FOCAL, match="ripple_focalization"),
    ScriptStep(ext("the rematch"), match="diffuse_sequential"),
    ScriptStep(ext("an olympics for near-misses"), match="diffuse_jumping"),
    ScriptStep(ext("the frisbee's point of view"), match="diffuse_branching"),
    ScriptStep("<elements><element>main character energy</element></elements>", match="diffuse_embedded"),
    ScriptStep(ext("main character energy"), match="diffuse_embedded"),
    ScriptStep("<comment>Biscuit demands a rematch, best of 7.</comment>", match="generate_candidates"),
    ScriptStep("<comment>Silver medal in Synchronized Missing. A legend.</comment>", match="generate_candidates"),
    ScriptStep("<comment>The frisbee has filed a restraining order.</comment>", match="generate_candidates"),
    ScriptStep("<comment>Main character energy, zero hand-eye coordination.</comment>", match="generate_candidates"),
    ScriptStep(SCORES, match="wave_interference"),
    ScriptStep("<final>Silver medal in Synchronized Missing.</final>", match="luminous_imprint"),
]

video = VideoRecord(
    video_id="demo",
    title="Biscuit vs. frisbee",
    duration_s=18.0,
    category="Pets",
    ocr_text="lost dog poster",
    subtitle_text="come back, Biscuit!",
    comments=(Comment("g0", "the reference god comment", 120000, "god"),),
)

gateway = Gateway(ScriptedTransport(script), retry_policy=RetryPolicy(sleep=lambda s: None))
trace = run_rot(video, {"k": 2, "m": 1}, gateway)

print(f"gateway calls: {trace.gateway_calls}")
print(f"focal storylines: {[s.action for s in trace.focal.storylines]}")
print("candidates:")
for i, (candidate, total) in enumerate(zip(trace.candidates, trace.totals)):
    marker = "  <- chosen" if i == trace.chosen_index else ""
    print(f"  [{candidate.source_kind:>10}] {total:4.1f}  {candidate.text}{marker}")
print(f"final comment: {trace.final_text!r}")
print(f"flags: {trace.flags or 'none'}")
