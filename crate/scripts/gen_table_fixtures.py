#!/usr/bin/env python3
"""Per-instance result fixtures whose aggregates equal target rows.

classification_deepseek.jsonl: one binary verdict per instance. The counts
are the smallest integer confusion matrices whose six scores round to the
target per-quartile values; their totals equal the per-quartile instance
counts (122/206/224/238).

baseline_ours.jsonl / baseline_soup.jsonl: paired single-snippet instances
whose per-metric means equal the target system means. Each value is
mean + d or mean - d in equal numbers. Four multi-snippet instances with
far-off values are appended; the single-snippet filter must drop them.
"""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "tables"

COUNTS = {  # tp, fp, tn, fn
    "Q1": (47, 17, 49, 9),
    "Q2": (87, 23, 74, 22),
    "Q3": (99, 23, 87, 15),
    "Q4": (99, 45, 85, 9),
}
TARGET = {  # accuracy, precision, recall, f1, specificity, mcc
    "Q1": (0.7869, 0.7344, 0.8393, 0.7833, 0.7424, 0.5805),
    "Q2": (0.7816, 0.7909, 0.7982, 0.7945, 0.7629, 0.5614),
    "Q3": (0.8304, 0.8115, 0.8684, 0.8390, 0.7909, 0.6619),
    "Q4": (0.7731, 0.6875, 0.9167, 0.7857, 0.6538, 0.5810),
}

KEYS = ["rouge1", "rouge2", "rouge_l", "bleu1", "bleu2", "bleu3", "bleu4", "meteor",
        "ter", "corpus_bleu", "chrf", "jaccard", "dist1", "dist2", "tfidf_cosine"]
PERCENT = {"ter", "corpus_bleu", "chrf"}
OURS = [0.8416, 0.7864, 0.8256, 0.8133, 0.7976, 0.7856, 0.7756, 0.7927,
        24.8675, 77.2102, 81.4651, 0.8543, 0.4639, 0.7903, 0.8886]
SOUP = [0.5474, 0.4065, 0.5296, 0.3259, 0.2968, 0.2733, 0.2524, 0.4840,
        66.6756, 16.4341, 36.0951, 0.6208, 0.4000, 0.6770, 0.6770]
PAIRS = 40


def scores(c):
    tp, fp, tn, fn = c
    n = tp + fp + tn + fn
    p = tp / (tp + fp)
    r = tp / (tp + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return ((tp + tn) / n, p, r, 2 * p * r / (p + r), tn / (tn + fp), mcc)


def classification():
    rows = []
    for q, c in COUNTS.items():
        got = tuple(round(v, 4) for v in scores(c))
        assert got == TARGET[q], (q, got)
        kinds = [("tp", c[0]), ("fp", c[1]), ("tn", c[2]), ("fn", c[3])]
        k = 0
        for kind, count in kinds:
            for _ in range(count):
                k += 1
                conf = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
                conf[kind] = 1
                rows.append({"instance_id": f"{q.lower()}-{k:04d}", "quartile": q, "confusion": conf})
    return rows


def record(iid, values, code_blocks):
    return {
        "instance_id": iid,
        "quartile": "Q2",
        "scores": dict(zip(KEYS, values)),
        "code_blocks": code_blocks,
    }


def baseline(means):
    rows = []
    for i in range(PAIRS):
        sign = 1 if i % 2 == 0 else -1
        vals = [m + sign * (2.0 if k in PERCENT else 0.02) for k, m in zip(KEYS, means)]
        rows.append(record(f"b{i + 1:03d}", vals, 1))
    for i in range(4):
        vals = [0.0 if k not in PERCENT else 100.0 for k in KEYS]
        rows.append(record(f"m{i + 1:03d}", vals, 2))
    return rows


def write(name, rows):
    with open(OUT / name, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("classification_deepseek.jsonl", classification())
    write("baseline_ours.jsonl", baseline(OURS))
    write("baseline_soup.jsonl", baseline(SOUP))


if __name__ == "__main__":
    main()
