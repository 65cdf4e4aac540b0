"""Check which logarithm base reproduces published length scores.

Recomputes S_l = 0.5 * (log_b(1 + L_w/1000) + min(1, L_c/C_baseline)) for each
published (L_w, L_c, S_l) row under ln, log10 and log2, and prints the largest
absolute error per base. The engine uses the natural log.

Usage: python scripts/fit_length_base.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from storyengine.hnes import DEFAULT_C_BASELINE, LengthInputs, length_score  # noqa: E402

# (words, chapters, published S_l)
ROWS = [
    (650, 8, 0.65),
    (2396, 8, 1.01),
    (7391, 4, 1.26),
    (653, 8, 0.65),
    (3614, 5, 1.01),
    (4337, 2770, 1.34),
    (5158, 105, 1.41),
]

BASES = {
    "ln": math.log,
    "log10": math.log10,
    "log2": math.log2,
}


def score(log, words: int, chapters: int) -> float:
    return 0.5 * (log(1 + words / 1000) + min(1.0, chapters / DEFAULT_C_BASELINE))


def main():
    for name, log in BASES.items():
        worst = max(abs(score(log, w, c) - published) for w, c, published in ROWS)
        print(f"{name:6} max error {worst:.4f}")
    engine = max(
        abs(length_score(LengthInputs(words=w, chapters=c)) - published) for w, c, published in ROWS
    )
    print(f"engine max error {engine:.4f}")


if __name__ == "__main__":
    main()
