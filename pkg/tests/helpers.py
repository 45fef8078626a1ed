from pathlib import Path

import numpy as np

from rectikit import MeasuredSpace

FIXTURES = Path(__file__).parent / "fixtures"


def line(xs, w=None) -> MeasuredSpace:
    """Points on the real line (stored as 1-d coordinates)."""
    xs = np.asarray(xs, dtype=float)
    return MeasuredSpace.from_points(xs[:, None], w)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str) -> None:
    """Print (and keep for the terminal summary) one pass/fail line."""
    text = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(text)
    print(text)
