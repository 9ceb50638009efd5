"""Exact-arithmetic admissibility intervals for the growth gap q/p.

Four criteria are implemented, each mapping (p, N) to an interval of
admissible q values with exact rational endpoints:

* ``marcellini``:          q/p < 1 + 2/N
* ``bella_schaffner``:     q/p < 1 + min(1, 2/(N-1))
* ``hirsch_schaffner``:    1/p - 1/q <= 1/(N-1)  (boundedness; closed bound)
* ``this_paper_combined``: q < p + 2 intersected with the closed
  boundedness bound.

``render_table`` reproduces the reference 54-cell table for p in {2,3,4},
N in {2..7}, including which cells are sharp (shaded); a verbatim
transcription of that table is embedded for the ``check_table1`` self-test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidInputError, OutOfRangeError

CRITERIA = ("marcellini", "bella_schaffner", "hirsch_schaffner",
            "this_paper_combined")

# Row order of the reference table within each p block.
TABLE_CRITERIA = ("this_paper_combined", "bella_schaffner", "hirsch_schaffner")
TABLE_P = (2, 3, 4)
TABLE_N = (2, 3, 4, 5, 6, 7)


def _frac(x, name):
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be rational-convertible") from exc


@dataclass(frozen=True)
class QInterval:
    """Interval of admissible q with independently open/closed endpoints.

    ``upper`` is None for +inf; ``upper_closed`` then records whether the
    criterion admits q = inf itself (rendered "inf]" vs "inf)").
    """

    lower: Fraction
    lower_closed: bool
    upper: Fraction | None
    upper_closed: bool

    def contains(self, q) -> bool:
        q = _frac(q, "q")
        if q < self.lower or (q == self.lower and not self.lower_closed):
            return False
        if self.upper is None:
            return True
        if q > self.upper or (q == self.upper and not self.upper_closed):
            return False
        return True

    def upper_key(self):
        """Sort key for comparing upper endpoints: finite < inf-open < inf-closed;
        at equal finite values, closed sits above open."""
        if self.upper is None:
            return (2 if self.upper_closed else 1, Fraction(0), 0)
        return (0, self.upper, 1 if self.upper_closed else 0)

    def issubset(self, other: "QInterval") -> bool:
        lower_ok = self.lower > other.lower or (
            self.lower == other.lower
            and (other.lower_closed or not self.lower_closed))
        return lower_ok and self.upper_key() <= other.upper_key()


def _validate_pn(p, N):
    p = _frac(p, "p")
    if p < 2:
        raise OutOfRangeError(f"p must be >= 2, got {p}")
    if not (isinstance(N, int) and N >= 2):
        raise InvalidInputError("N must be an integer >= 2")
    return p


def admissible_interval(criterion: str, p, N: int) -> QInterval:
    """Interval of q values the criterion admits at (p, N).

    Lower endpoint is p, closed (the working range is q >= p).  The
    boundedness criterion's upper bound is closed, the others open; when the
    boundedness denominator N - 1 - p is <= 0 the bound degenerates to +inf.
    """
    p = _validate_pn(p, N)
    if criterion == "marcellini":
        return QInterval(p, True, p * (1 + Fraction(2, N)), False)
    if criterion == "bella_schaffner":
        gap = min(Fraction(1), Fraction(2, N - 1))
        return QInterval(p, True, p * (1 + gap), False)
    if criterion == "hirsch_schaffner":
        if p > N - 1:
            return QInterval(p, True, None, True)
        if p == N - 1:
            return QInterval(p, True, None, False)
        return QInterval(p, True, p * Fraction(N - 1, 1) / (N - 1 - p), True)
    if criterion == "this_paper_combined":
        bounded = admissible_interval("hirsch_schaffner", p, N)
        cap = p + 2
        if bounded.upper is None or bounded.upper > cap:
            return QInterval(p, True, cap, False)
        if bounded.upper < cap:
            return QInterval(p, True, bounded.upper, True)
        # Equal endpoints: the strict q < p + 2 requirement wins.
        return QInterval(p, True, cap, False)
    raise InvalidInputError(f"unknown criterion {criterion!r}")


def unboundedness_threshold(p, N: int) -> Fraction | None:
    """The critical q above which unbounded minimizers exist, or None when
    p >= N - 1 (no finite threshold)."""
    p = _validate_pn(p, N)
    if p >= N - 1:
        return None
    return Fraction(N - 1) * p / (N - 1 - p)


@dataclass(frozen=True)
class Classification:
    p: Fraction
    q: Fraction
    N: int
    lipschitz_by_paper: bool
    lipschitz_by_bs: bool
    bounded_by_hs: bool
    unbounded_risk: bool

    def as_dict(self) -> dict:
        return {
            "p": str(self.p), "q": str(self.q), "N": self.N,
            "lipschitz_by_paper": self.lipschitz_by_paper,
            "lipschitz_by_bs": self.lipschitz_by_bs,
            "bounded_by_hs": self.bounded_by_hs,
            "unbounded_risk": self.unbounded_risk,
        }


def classify(p, q, N: int) -> Classification:
    """Per-criterion membership verdicts for a concrete (p, q, N)."""
    p = _validate_pn(p, N)
    q = _frac(q, "q")
    if q < p:
        raise InvalidInputError(f"need q >= p, got p={p}, q={q}")
    threshold = unboundedness_threshold(p, N)
    return Classification(
        p=p, q=q, N=N,
        lipschitz_by_paper=admissible_interval("this_paper_combined", p, N).contains(q),
        lipschitz_by_bs=admissible_interval("bella_schaffner", p, N).contains(q),
        bounded_by_hs=admissible_interval("hirsch_schaffner", p, N).contains(q),
        unbounded_risk=threshold is not None and q > threshold,
    )


def sharpness_region(p, N: int) -> bool:
    """True iff N > p(p+2)/2 + 1, where the combined restriction is sharp."""
    p = _validate_pn(p, N)
    return N > p * (p + 2) / 2 + 1


# -- table rendering -----------------------------------------------------------

@dataclass(frozen=True)
class TableCell:
    criterion: str
    p: int
    N: int
    text: str
    shaded: bool


def format_cell(interval: QInterval) -> str:
    if interval.upper is None:
        return "q in (1, inf]" if interval.upper_closed else "q in (1, inf)"
    op = "<=" if interval.upper_closed else "<"
    return f"q {op} {interval.upper}"


def render_table(p_list=TABLE_P, N_list=TABLE_N) -> list[TableCell]:
    """One cell per (criterion, p, N); shading marks the sharp cells: every
    boundedness cell, and the combined cells inside the sharpness region."""
    if not p_list or not N_list:
        raise InvalidInputError("p_list and N_list must be non-empty")
    cells = []
    for p in p_list:
        for criterion in TABLE_CRITERIA:
            for N in N_list:
                interval = admissible_interval(criterion, p, N)
                if criterion == "hirsch_schaffner":
                    shaded = True
                elif criterion == "this_paper_combined":
                    shaded = sharpness_region(p, N)
                else:
                    shaded = False
                cells.append(TableCell(criterion, int(p), int(N),
                                       format_cell(interval), shaded))
    return cells


# Verbatim transcription of the published 54-cell table (value, strictness,
# inf cells, shading), used as the golden reference for check_table1.
# Entries: (criterion, p, N) -> (cell text, shaded).
TABLE1_GOLDEN = {}


def _golden_row(criterion, p, texts, shades):
    for N, text, shaded in zip(TABLE_N, texts, shades):
        TABLE1_GOLDEN[(criterion, p, N)] = (text, shaded)


_golden_row("this_paper_combined", 2,
            ["q < 4", "q < 4", "q < 4", "q < 4", "q <= 10/3", "q <= 3"],
            [False, False, False, False, True, True])
_golden_row("bella_schaffner", 2,
            ["q < 4", "q < 4", "q < 10/3", "q < 3", "q < 14/5", "q < 8/3"],
            [False] * 6)
_golden_row("hirsch_schaffner", 2,
            ["q in (1, inf]", "q in (1, inf)", "q <= 6", "q <= 4",
             "q <= 10/3", "q <= 3"],
            [True] * 6)
_golden_row("this_paper_combined", 3,
            ["q < 5"] * 6, [False] * 6)
_golden_row("bella_schaffner", 3,
            ["q < 6", "q < 6", "q < 5", "q < 9/2", "q < 21/5", "q < 4"],
            [False] * 6)
_golden_row("hirsch_schaffner", 3,
            ["q in (1, inf]", "q in (1, inf]", "q in (1, inf)", "q <= 12",
             "q <= 15/2", "q <= 6"],
            [True] * 6)
_golden_row("this_paper_combined", 4,
            ["q < 6"] * 6, [False] * 6)
_golden_row("bella_schaffner", 4,
            ["q < 8", "q < 8", "q < 20/3", "q < 6", "q < 28/5", "q < 16/3"],
            [False] * 6)
_golden_row("hirsch_schaffner", 4,
            ["q in (1, inf]", "q in (1, inf]", "q in (1, inf]",
             "q in (1, inf)", "q <= 20", "q <= 12"],
            [True] * 6)


def check_table1() -> list[str]:
    """Compare the generated 54-cell table against the embedded golden copy.

    Returns a list of mismatch descriptions; empty means exact agreement.
    """
    mismatches = []
    cells = {(c.criterion, c.p, c.N): c for c in render_table()}
    if set(cells) != set(TABLE1_GOLDEN):
        mismatches.append("cell sets differ")
        return mismatches
    for key, (text, shaded) in TABLE1_GOLDEN.items():
        cell = cells[key]
        if cell.text != text:
            mismatches.append(f"{key}: got {cell.text!r}, expected {text!r}")
        if cell.shaded != shaded:
            mismatches.append(f"{key}: shading {cell.shaded}, expected {shaded}")
    return mismatches


def table_text(cells: list[TableCell]) -> str:
    """Aligned text rendering, one line per (p, criterion) row."""
    n_values = sorted({c.N for c in cells})
    lines = ["p  criterion            " + "".join(f"N={N:<16}" for N in n_values)]
    rows = {}
    for c in cells:
        rows.setdefault((c.p, c.criterion), {})[c.N] = c
    for (p, criterion), by_n in rows.items():
        entries = []
        for N in n_values:
            cell = by_n.get(N)
            mark = "*" if cell and cell.shaded else " "
            entries.append(f"{(cell.text if cell else ''):<14}{mark} ")
        lines.append(f"{p}  {criterion:<20} " + "".join(entries))
    return "\n".join(lines)
