#!/usr/bin/env python3
"""Regenerate fixtures/metrics/golden_scores.json from established scorers.

Texts in golden_pairs.jsonl are written so the crate tokenizer equals
lowercase + whitespace split; the external tools are fed that tokenization
(tokenizers disabled) so only the metric arithmetic is compared. chrF runs on
the raw text, as the crate does.

Requires: sacrebleu==2.6.0 rouge-score nltk
"""
import json
import pathlib
import sys

import sacrebleu
from nltk.translate.bleu_score import sentence_bleu
from rouge_score import rouge_scorer
from sacrebleu.metrics import CHRF

ROOT = pathlib.Path(__file__).resolve().parent.parent
PAIRS = ROOT / "fixtures" / "metrics" / "golden_pairs.jsonl"
OUT = ROOT / "fixtures" / "metrics" / "golden_scores.json"


class WhitespaceTokenizer:
    def tokenize(self, text):
        return text.lower().split()


def main():
    pairs = [json.loads(l) for l in PAIRS.read_text().splitlines() if l.strip()]
    rouge = rouge_scorer.RougeScorer(
        ["rouge1", "rouge2", "rougeL"], tokenizer=WhitespaceTokenizer()
    )
    chrf = CHRF(char_order=6, word_order=0, beta=2)
    rows = []
    for p in pairs:
        hyp, ref = p["hyp"], p["ref"]
        h, r = hyp.lower().split(), ref.lower().split()
        rs = rouge.score(ref, hyp)
        row = {
            "rouge1": rs["rouge1"].fmeasure,
            "rouge2": rs["rouge2"].fmeasure,
            "rouge_l": rs["rougeL"].fmeasure,
        }
        for k in range(1, 5):
            row[f"bleu{k}"] = sentence_bleu([r], h, weights=tuple([1.0 / k] * k))
        row["chrf"] = chrf.sentence_score(hyp, [ref]).score
        rows.append(row)
    corpus = sacrebleu.corpus_bleu(
        [" ".join(p["hyp"].lower().split()) for p in pairs],
        [[" ".join(p["ref"].lower().split()) for p in pairs]],
        tokenize="none",
        smooth_method="none",
        force=True,
    ).score
    OUT.write_text(
        json.dumps(
            {
                "tools": {
                    "sacrebleu": sacrebleu.__version__,
                    "rouge_score": "rouge-score",
                    "nltk": __import__("nltk").__version__,
                },
                "pairs": rows,
                "corpus_bleu": corpus,
            },
            indent=2,
        )
        + "\n"
    )
    print(f"wrote {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
