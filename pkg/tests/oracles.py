"""Naive reference implementations the production code is checked against.

Everything here favors directness over speed: formulas transcribed term by
term, exhaustive searches, rational arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction


def screen_reference(bids) -> dict:
    """All five screens computed straight from their defining formulas."""
    b = sorted(float(x) for x in bids)
    n = len(b)
    mean = sum(b) / n
    sd = math.sqrt(sum((x - mean) ** 2 for x in b) / (n - 1))
    out = {
        "CV": sd / mean,
        "SPD": (b[-1] - b[0]) / b[0],
        "DIFFP": (b[1] - b[0]) / b[0],
    }
    if n < 3:
        out["RD"] = None
    else:
        losing = b[1:]
        if len(set(losing)) == 1:
            out["RD"] = None  # zero denominator, checked structurally
        else:
            lm = sum(losing) / len(losing)
            lsd = math.sqrt(sum((x - lm) ** 2 for x in losing) / (len(losing) - 1))
            out["RD"] = (b[1] - b[0]) / lsd
    if b[-1] == b[0]:
        out["RDNORM"] = None
    else:
        gaps = [b[i + 1] - b[i] for i in range(n - 1)]
        out["RDNORM"] = (b[1] - b[0]) / (sum(gaps) / (n - 1))
    return out


def best_allocation(class_size: int) -> list[int] | None:
    """Most fours such that the remainder splits into threes; None if impossible."""
    for fours in range(class_size // 4, -1, -1):
        rest = class_size - 4 * fours
        if rest % 3 == 0:
            return [4] * fours + [3] * (rest // 3)
    return None


def weighted_gini(values, labels, threshold) -> float:
    """Post-split impurity, missing values excluded (they carry no signal here)."""
    left = [y for v, y in zip(values, labels) if not math.isnan(v) and v <= threshold]
    right = [y for v, y in zip(values, labels) if not math.isnan(v) and v > threshold]

    def gini(ys):
        if not ys:
            return 0.0
        p = sum(ys) / len(ys)
        return 2 * p * (1 - p)

    total = len(left) + len(right)
    return (len(left) * gini(left) + len(right) * gini(right)) / total


def scale_half_up(cents: int, num: int, den: int) -> int:
    """Exact rational scaling with ties rounded up."""
    exact = Fraction(cents) * Fraction(num, den)
    floor = exact.numerator // exact.denominator
    return int(floor) + (1 if (exact - floor) * 2 >= 1 else 0)
