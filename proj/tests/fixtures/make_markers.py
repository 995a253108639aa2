"""Builds the marker-count corpus.

Each document is assembled from filler words, trap words that contain a
marker as a substring but are not the marker, and marker occurrences
written in assorted cases and punctuation. The counts file records how many
occurrences of each term were placed, which is the oracle for the counter.
"""
import json
import random
from pathlib import Path

LEXICON = ["assume", "derive", "derivation", "proof", "prove", "lemma", "theorem"]

FILLER = """we consider the model and show that the bound holds under mild conditions
the estimator converges at a rate that depends on the sample size and the dimension
our method improves over prior baselines on every benchmark we tried
this section presents notation used throughout the paper""".split()

TRAPS = ["proofs", "proven", "proved", "assumed", "assumes", "assumption", "derived", "derives",
         "derivations", "theorems", "lemmas", "lemmata", "improve", "disprove", "reproof",
         "proof_sketch", "theorem2", "prooflike", "derivative", "theoremata", "preassume",
         "théorème", "lemmaé", "xproof", "proof9"]

# How a counted occurrence is written: (prefix, case transform, suffix).
STYLES = [
    ("", str.lower, ""), ("", str.capitalize, "."), ("", str.upper, ""), ("(", str.lower, ")"),
    ("\\begin{", str.lower, "}"), ("", str.capitalize, "~3"), ("", str.lower, ","), ("", str.lower, "-like"),
    ("", str.capitalize, "'s"), ("\"", str.lower, "\""), ("", str.upper, ":"), ("[", str.capitalize, "]"),
]


def build(rng, placed):
    words = [rng.choice(FILLER) for _ in range(rng.randint(40, 160))]
    words += [rng.choice(TRAPS) for _ in range(rng.randint(0, 12))]
    for term, n in placed.items():
        for _ in range(n):
            pre, case, post = rng.choice(STYLES)
            words.append(pre + case(term) + post)
    rng.shuffle(words)
    lines, line = [], []
    for w in words:
        line.append(w)
        if len(line) >= rng.randint(6, 14):
            lines.append(" ".join(line))
            line = []
    if line:
        lines.append(" ".join(line))
    return "\n".join(lines) + "\n"


def placement(rng, total):
    placed = {t: 0 for t in LEXICON}
    for _ in range(total):
        placed[rng.choice(LEXICON)] += 1
    return placed


def main():
    rng = random.Random(20240501)
    out = Path(__file__).parent / "markers"
    out.mkdir(exist_ok=True)
    totals = [0, 5, 6, 5, 6, 1, 4, 7, 12, 30] + [rng.randint(0, 40) for _ in range(40)]
    counts = {}
    for i, total in enumerate(totals, start=1):
        doc = f"doc{i:02d}"
        placed = placement(rng, total)
        (out / f"{doc}.txt").write_text(build(rng, placed), encoding="utf-8")
        counts[doc] = {"counts": placed, "total": total}
    (out / "counts.json").write_text(json.dumps(counts, indent=1, sort_keys=True) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
