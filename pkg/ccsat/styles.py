# Centralized console palette.
# rich accepts style strings; this file gives them semantic names.

from __future__ import annotations

from rich.style import Style

# ------------------------------------------------------------------------------
# Semantic palette
# ------------------------------------------------------------------------------

# Tables
TITLE_STYLE = Style(bold=True)
HEADER_STYLE = Style(color="cyan", bold=True)
FAMILY_STYLE = Style(color="magenta")
SOLVER_STYLE = Style(color="blue")
MUTED_STYLE = Style(color="bright_black")

# Outcomes
SOLVED_STYLE = Style(color="green")
PARTIAL_STYLE = Style(color="yellow")
FAILED_STYLE = Style(color="red")


def rate_style(rate: float) -> Style:
    """Pick the outcome colour for a success rate in [0, 1]."""
    if rate >= 0.9:
        return SOLVED_STYLE
    if rate > 0.0:
        return PARTIAL_STYLE
    return FAILED_STYLE
