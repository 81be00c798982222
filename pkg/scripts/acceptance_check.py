#!/usr/bin/env python3
"""Run the exact acceptance checks, up to seven-leaf stationarity.

Exits 0 when every check agrees with its expected verdict, 1 otherwise.
"""

import sys
from fractions import Fraction

from src.config import configure_logging
from src.exceptions import DownUpError
from src.verify import run_named_check

# (check, keyword arguments, expected verdict)
CHECKS: list[tuple[str, dict[str, object], bool]] = [
    ("stationarity", {"n": 5}, True),
    ("stationarity", {"n": 7}, True),
    ("stationarity", {"n": 6, "alpha": Fraction(1, 4)}, True),
    ("stationarity", {"n": 6, "alpha": Fraction(2, 3)}, True),
    ("stationarity", {"n": 5, "alpha": Fraction(1, 3)}, True),
    ("resample-law", {"n": 5, "alpha": Fraction(1, 3)}, True),
    ("decrement", {"n": 7, "alpha": Fraction(1, 3)}, True),
    ("decrement", {"n": 7, "alpha": Fraction(1, 2)}, True),
    ("marginal-law", {"n": 5, "k": 3, "alpha": Fraction(1, 3)}, True),
    ("consistency", {"n": 5, "k": 2}, True),
    ("consistency", {"n": 4, "k": 2, "alpha": Fraction(1, 3)}, True),
    ("kemeny-snell", {"n": 5, "k": 2}, True),
    ("kemeny-snell", {"n": 4, "k": 2, "projection": "mass"}, False),
    ("intertwining", {"n": 5, "k": 2}, True),
    ("spatial-markov", {"n": 5, "k": 2, "alpha": Fraction(1, 3)}, True),
    ("markov-slices", {"n": 4, "k": 2}, True),
    ("markov-slices", {"n": 4, "k": 2, "start": "point-mass"}, False),
    ("first-drop-law", {"n": 5, "k": 3}, True),
    ("down-invariance", {"n": 5, "alpha": Fraction(1, 3)}, True),
    ("insertion-law", {"n": 4, "k": 2, "alpha": Fraction(1, 3)}, True),
    ("resampling-law", {"n": 4, "k": 2, "label": 1}, True),
    ("state-space", {"n": 6, "k": 3}, True),
]


def main() -> None:
    """Run every acceptance check and report one line per check."""
    configure_logging()
    failures = 0
    for name, kwargs, expected in CHECKS:
        try:
            reports = run_named_check(name, **kwargs)  # type: ignore[arg-type]
        except DownUpError as e:
            print(f"✗ {name} {kwargs}: {e.message}")
            failures += 1
            continue
        ok = all(report.passed == expected for report in reports)
        mark = "✓" if ok else "✗"
        verdicts = ", ".join(report.verdict for report in reports)
        print(f"{mark} {name} {kwargs}: {verdicts}")
        failures += not ok

    if failures:
        print(f"✗ {failures} of {len(CHECKS)} checks disagree with the expected verdict")
        sys.exit(1)
    print("✓ All acceptance checks passed")
    sys.exit(0)


if __name__ == "__main__":
    main()
