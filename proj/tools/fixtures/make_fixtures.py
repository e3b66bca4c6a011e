#!/usr/bin/env python3
"""Regenerates the bundled test fixtures under data/fixtures.

Everything here is deterministic; rerunning it rewrites identical files.
Goldens produced by the CLI live in data/fixtures/golden and are refreshed
separately with regen_goldens.sh.
"""

import json
import math
import os
import sys

FPS = 25
VARIANTS = (3, 6, 9)
LEAD_FRAMES = 5  # 0.2 s of exact rest at each end

JOINTS = ["spine", "neck", "head", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"]
REST = {
    "spine": (0.0, 1.0, 0.0),
    "neck": (0.0, 1.45, 0.0),
    "head": (0.0, 1.6, 0.02),
    "l_shoulder": (-0.18, 1.42, 0.0),
    "l_elbow": (-0.22, 1.15, 0.02),
    "l_wrist": (-0.2, 0.9, 0.06),
    "r_shoulder": (0.18, 1.42, 0.0),
    "r_elbow": (0.22, 1.15, 0.02),
    "r_wrist": (0.2, 0.9, 0.06),
}

# Peak wrist displacement (left, right) per gesture shape.
SHAPES = {
    "welcome": ((-0.25, 0.35, 0.2), (0.25, 0.35, 0.2)),
    "farewell": ((0.0, 0.0, 0.0), (0.15, 0.55, 0.1)),
    "description": ((-0.3, 0.25, 0.3), (0.3, 0.25, 0.3)),
    "explanation": ((-0.1, 0.3, 0.35), (0.1, 0.3, 0.35)),
    "emphasis": ((0.0, 0.0, 0.0), (0.05, 0.2, 0.35)),
    "self_reference": ((0.0, 0.0, 0.0), (-0.15, 0.45, 0.2)),
    "thumbs_up": ((0.0, 0.0, 0.0), (0.1, 0.4, 0.3)),
    "stop": ((-0.05, 0.45, 0.4), (0.05, 0.5, 0.45)),
}


def ease(s):
    """Raised cosine from 0 to 1."""
    return 0.5 - 0.5 * math.cos(math.pi * min(max(s, 0.0), 1.0))


def unit_layout(frames):
    """Key frames k0..k4: prep start, stroke start, stroke end, hold end, retraction end."""
    span = frames - 1 - 2 * LEAD_FRAMES
    prep = round(0.3 * span)
    stroke = round(0.15 * span)
    hold = round(0.25 * span)
    k0 = LEAD_FRAMES
    k1 = k0 + prep
    k2 = k1 + stroke
    k3 = k2 + hold
    k4 = frames - 1 - LEAD_FRAMES
    return k0, k1, k2, k3, k4


def amplitude(f, keys):
    """Fraction of the peak displacement at frame f."""
    k0, k1, k2, k3, k4 = keys
    if f <= k0 or f >= k4:
        return 0.0
    if f <= k1:
        return 0.6 * ease((f - k0) / (k1 - k0))
    if f <= k2:
        return 0.6 + 0.4 * ease((f - k1) / (k2 - k1))
    if f <= k3:
        return 1.0
    return 1.0 - ease((f - k3) / (k4 - k3))


def pose_at(shape, scale, a):
    left, right = SHAPES[shape]
    out = []
    for name in JOINTS:
        x, y, z = REST[name]
        d = (0.0, 0.0, 0.0)
        if name == "l_wrist":
            d = left
        elif name == "r_wrist":
            d = right
        elif name == "l_elbow":
            d = tuple(0.5 * c for c in left)
        elif name == "r_elbow":
            d = tuple(0.5 * c for c in right)
        elif name == "head":
            d = (0.0, -0.02, 0.02)
        k = scale * a
        out.append([round(x + k * d[0], 6), round(y + k * d[1], 6), round(z + k * d[2], 6)])
    return out


def clip_json(frames):
    return {"version": 1, "fps": FPS, "joints": JOINTS, "frames": frames}


def make_unit(shape, scale, variant):
    frames = variant * FPS + 1
    keys = unit_layout(frames)
    data = [pose_at(shape, scale, amplitude(f, keys)) for f in range(frames)]
    k0, k1, k2, k3, k4 = keys
    stages = {
        "preparation": [k0, k1 - 1],
        "stroke": [k1, k2],
        "stroke_apex": (k1 + k2) // 2,
        "hold": [k2 + 1, k3],
        "retraction": [k3 + 1, k4],
    }
    return clip_json(data), stages


def write_json(path, obj, indent=None):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=indent, ensure_ascii=False, separators=None if indent else (",", ":"))
        f.write("\n")


def build_dictionary(root):
    units = []
    intents = ["welcome", "farewell", "description", "explanation", "emphasis", "self_reference"]
    for variant in VARIANTS:
        for intent in intents:
            for suffix, scale in (("a", 1.0), ("b", 0.75)):
                uid = f"{intent}_{suffix}_{variant}"
                clip, stages = make_unit(intent, scale, variant)
                write_json(os.path.join(root, "units", uid + ".json"), clip)
                units.append({"id": uid, "intent": intent, "duration_variant_s": variant,
                              "file": f"units/{uid}.json", "stages": stages})
        for tag in ("thumbs_up", "stop"):
            uid = f"semantic_{tag}_{variant}"
            clip, stages = make_unit(tag, 1.0, variant)
            write_json(os.path.join(root, "units", uid + ".json"), clip)
            units.append({"id": uid, "intent": "semantic", "semantic_tag": tag, "duration_variant_s": variant,
                          "file": f"units/{uid}.json", "stages": stages})
    write_json(os.path.join(root, "rest.json"), clip_json([pose_at("welcome", 0.0, 0.0)]))
    write_json(os.path.join(root, "manifest.json"), {"version": 1, "rest_pose": "rest.json", "units": units}, indent=2)
    return len(units)


TRANSCRIPT = [
    "Good morning everyone, and welcome to our workshop on gesture synthesis.",
    "Today I want to show you how my team builds expressive talking avatars.",
    "The model we trained is absolutely huge, with billions of carefully tuned parameters.",
    "Because speech and gesture share meaning, we align every movement with the words.",
    "The stage was wide and round, like a giant bowl filled with light.",
    "You must never skip the alignment step.",
    "Honestly, the results look awesome on every speaker we tried so far.",
    "Now stop and look.",
    "Everything else is handled by the pipeline automatically.",
    "Thank you all for listening, and goodbye.",
]

SHORT_SCRIPT = [
    "Welcome to the demonstration of our gesture system.",
    "It is absolutely essential to keep the rhythm natural.",
    "Thank you for watching and see you next time.",
]


def word_timings(sentences, start=0.3):
    words = []
    t = start
    for sentence in sentences:
        for raw in sentence.split():
            word = raw.strip(".,!?;:")
            dur = max(0.2, 0.12 + 0.055 * len(word))
            words.append({"word": word, "start_s": round(t, 3), "end_s": round(t + dur, 3)})
            t += dur + 0.05
        t += 0.45
    return words


def textgrid(words):
    end = words[-1]["end_s"] + 0.2
    intervals = []
    cursor = 0.0
    for w in words:
        if w["start_s"] > cursor + 1e-9:
            intervals.append((cursor, w["start_s"], ""))
        intervals.append((w["start_s"], w["end_s"], w["word"]))
        cursor = w["end_s"]
    intervals.append((cursor, end, ""))
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0",
        f"xmax = {end:.3f}",
        "tiers? <exists>",
        "size = 1",
        "item []:",
        "    item [1]:",
        '        class = "IntervalTier"',
        '        name = "words"',
        "        xmin = 0",
        f"        xmax = {end:.3f}",
        f"        intervals: size = {len(intervals)}",
    ]
    for i, (a, b, text) in enumerate(intervals, 1):
        lines += [
            f"        intervals [{i}]:",
            f"            xmin = {a:.3f}",
            f"            xmax = {b:.3f}",
            f'            text = "{text}"',
        ]
    return "\n".join(lines) + "\n"


def performance_clip(root):
    """Rest, two dictionary-like gestures separated by rest, rest."""
    rest = pose_at("welcome", 0.0, 0.0)
    frames = [rest] * FPS
    for shape in ("emphasis", "welcome"):
        clip, _ = make_unit(shape, 1.0, 3)
        frames += clip["frames"]
        frames += [rest] * FPS
    write_json(os.path.join(root, "performance.json"), clip_json(frames))
    # The holds inside each gesture last longer than the default minimum rest.
    write_json(os.path.join(root, "performance_params.json"), {"min_rest_s": 0.8}, indent=1)


def base_file(root):
    """4 s of gentle sway at 15 fps, used as a file base."""
    fps = 15
    frames = []
    for f in range(4 * fps + 1):
        dx = 0.01 * math.sin(2 * math.pi * 0.15 * f / fps)
        frames.append([[round(x + dx, 6), y, z] for (x, y, z) in (REST[j] for j in JOINTS)])
    write_json(os.path.join(root, "base_15fps.json"), {"version": 1, "fps": fps, "joints": JOINTS, "frames": frames})


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "..", "data", "fixtures")
    root = os.path.normpath(root)
    count = build_dictionary(os.path.join(root, "dictionary"))

    words = word_timings(TRANSCRIPT)
    with open(os.path.join(root, "transcript.txt"), "w", encoding="utf-8") as f:
        f.write(" ".join(TRANSCRIPT) + "\n")
    write_json(os.path.join(root, "transcript_timings.json"), {"words": words}, indent=1)
    with open(os.path.join(root, "transcript.TextGrid"), "w", encoding="utf-8") as f:
        f.write(textgrid(words))

    short_words = word_timings(SHORT_SCRIPT)
    with open(os.path.join(root, "short.txt"), "w", encoding="utf-8") as f:
        f.write(" ".join(SHORT_SCRIPT) + "\n")
    write_json(os.path.join(root, "short_timings.json"), {"words": short_words}, indent=1)

    performance_clip(root)
    base_file(root)
    print(f"{count} units written to {root}", file=sys.stderr)


if __name__ == "__main__":
    main()
