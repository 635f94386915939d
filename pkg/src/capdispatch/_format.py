"""Deterministic text rendering of linear expressions."""
from __future__ import annotations

from typing import Iterable


def num(v: float) -> str:
    return f"{v:.12g}"


def linear_expr(terms: Iterable[tuple[float, str | None]]) -> str:
    """Render ``[(coef, name), ...]``; ``name=None`` marks a constant term.

    Zero coefficients are dropped and unit coefficients print bare:
    ``[(5, None), (-1, "x"), (2.5, "y")]`` -> ``"5 - x + 2.5*y"``.
    """
    parts: list[tuple[bool, str]] = []
    for coef, name in terms:
        coef = float(coef)
        if coef == 0.0:
            continue
        mag = abs(coef)
        if name is None:
            body = num(mag)
        elif mag == 1.0:
            body = name
        else:
            body = f"{num(mag)}*{name}"
        parts.append((coef < 0, body))
    if not parts:
        return "0"
    neg, body = parts[0]
    out = ("-" if neg else "") + body
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out
