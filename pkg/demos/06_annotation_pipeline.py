"""The database-based annotation pipeline on a hand-built batch of calls.

Demonstrates every decision the pipeline makes: length filtering, role
assignment from the agent's known gender, rejection of single-gender and
speech-free calls, and the cross-call gender-consistency filter.
"""

import tempfile

import numpy as np

from callseg import AudioBuffer, CallMetadata, SegmentAnnotation, prepare_corpus


def tone(seed, seconds, freq):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * 8000)) / 8000
    return AudioBuffer(0.4 * np.sin(2 * np.pi * freq * t) + 0.01 * rng.standard_normal(t.size), 8000)


calls = [
    CallMetadata("too_short", "anna", "female", 30, ""),
    CallMetadata("one_gender", "anna", "female", 90, ""),
    CallMetadata("fine_1", "anna", "female", 120, ""),
    CallMetadata("fine_2", "boris", "male", 90, ""),
    # 'carol' is tagged female here but male below: both her sides get dropped
    CallMetadata("conflict_a", "carol", "female", 80, ""),
    CallMetadata("conflict_b", "carol", "male", 80, ""),
]

S = SegmentAnnotation
segments = {
    "too_short": [S(0, 10, "speech_female"), S(10, 20, "speech_male")],
    "one_gender": [S(0, 40, "speech_female"), S(40, 45, "noise")],
    "fine_1": [S(0, 25, "speech_female"), S(25, 30, "music"), S(30, 55, "speech_male")],
    "fine_2": [S(0, 22, "speech_male"), S(25, 47, "speech_female")],
    "conflict_a": [S(0, 21, "speech_female"), S(25, 46, "speech_male")],
    "conflict_b": [S(0, 21, "speech_male"), S(25, 46, "speech_female")],
}
audio = {c.call_id: tone(i, 60, 150 + 40 * i) for i, c in enumerate(calls)}

out = tempfile.mkdtemp(prefix="callseg_demo_dbas_")
result = prepare_corpus(calls, segments, lambda c: audio[c.call_id], out,
                        val_fraction=0.0, seed=0, utterance_seconds=10.0)

print("rejections:")
for call_id, reason in result.rejections:
    print(f"  {call_id}: {reason}")
print(f"dropped speakers: {sorted(result.dropped_speakers) or 'none'}")

print(f"\ncorpus at {out}:")
for split, node in result.manifest.splits.items():
    print(f"  {split}: {node['speakers']} speakers, {node['utterances']} utterances")
    for role, cls in node["classes"].items():
        for gender, g in cls["genders"].items():
            print(f"    {role}/{gender}: {g['speakers']} speakers, {g['utterances']} utterances")
