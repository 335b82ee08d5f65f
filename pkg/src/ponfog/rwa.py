"""Routing and wavelength assignment for full inter-group connectivity.

Every ordered pair of endpoints (PON groups plus the OLT) gets one
wavelength. A group transmits to each peer on a different wavelength and
receives from each peer on a different wavelength, so a valid map is an
n x n matrix with an empty diagonal whose rows and columns hold no repeats.
Each row needs n - 1 distinct values, which makes n - 1 wavelengths a hard
lower bound; the exact search below meets it.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

from ponfog.errors import InvalidParams, OutOfRange, SelfPair, TooLarge

ROW_CLASH = "row-clash"
COLUMN_CLASH = "column-clash"
MISSING_PAIR = "missing-pair"
SELF_PAIR = "self-pair"
OUT_OF_RANGE = "out-of-range"

BRUTEFORCE_MAX = 5


@dataclass(frozen=True)
class RoutingMap:
    """Wavelength index per ordered (src, dst) endpoint pair.

    Endpoints are indices ``0..n_endpoints-1``; wavelengths are ``1..n_wavelengths``.
    ``labels`` names the endpoints for display and lookup.
    """

    n_endpoints: int
    n_wavelengths: int
    assignment: Mapping[tuple[int, int], int]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.labels:
            object.__setattr__(self, "labels", default_labels(self.n_endpoints))
        elif len(self.labels) != self.n_endpoints:
            raise InvalidParams(f"{len(self.labels)} labels for {self.n_endpoints} endpoints")

    def index(self, endpoint: int | str) -> int:
        if isinstance(endpoint, str):
            try:
                return self.labels.index(endpoint)
            except ValueError:
                raise OutOfRange(f"unknown endpoint {endpoint!r}") from None
        if not 0 <= endpoint < self.n_endpoints:
            raise OutOfRange(f"endpoint {endpoint} outside 0..{self.n_endpoints - 1}")
        return endpoint

    def matrix(self) -> list[list[int | None]]:
        """Dense form; the diagonal and unassigned pairs are ``None``."""
        n = self.n_endpoints
        return [[self.assignment.get((s, d)) for d in range(n)] for s in range(n)]


def default_labels(n: int) -> tuple[str, ...]:
    """``G1..G(n-1)`` followed by ``OLT``."""
    if n < 1:
        return ()
    return tuple(f"G{i + 1}" for i in range(n - 1)) + ("OLT",)


@dataclass(frozen=True)
class Violation:
    kind: str
    endpoints: tuple[int, ...]
    wavelength: int | None = None


@dataclass(frozen=True)
class RwaValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def describe(self, labels: Sequence[str]) -> list[str]:
        lines = []
        for v in self.violations:
            names = ",".join(labels[e] if e < len(labels) else str(e) for e in v.endpoints)
            lam = f" L{v.wavelength}" if v.wavelength is not None else ""
            lines.append(f"{v.kind}: {names}{lam}")
        return lines


def verify(rmap: RoutingMap) -> RwaValidationReport:
    """List every breach of the routing-map invariants.

    Row and column clashes are reported once per (endpoint, wavelength) with
    all the peers that share it, e.g. ``row-clash (0, 1, 2) L2`` means G1
    sends to G2 and G3 on the same wavelength.
    """
    n = rmap.n_endpoints
    out: list[Violation] = []
    rows: dict[tuple[int, int], list[int]] = {}
    cols: dict[tuple[int, int], list[int]] = {}
    for (s, d), lam in sorted(rmap.assignment.items()):
        if not (0 <= s < n and 0 <= d < n):
            out.append(Violation(OUT_OF_RANGE, (s, d), lam))
            continue
        if s == d:
            out.append(Violation(SELF_PAIR, (s, d), lam))
            continue
        if lam is None:
            continue
        if not 1 <= lam <= rmap.n_wavelengths:
            out.append(Violation(OUT_OF_RANGE, (s, d), lam))
        rows.setdefault((s, lam), []).append(d)
        cols.setdefault((d, lam), []).append(s)
    for s in range(n):
        for d in range(n):
            if s != d and rmap.assignment.get((s, d)) is None:
                out.append(Violation(MISSING_PAIR, (s, d)))
    for (s, lam), dsts in sorted(rows.items()):
        if len(dsts) > 1:
            out.append(Violation(ROW_CLASH, (s, *dsts), lam))
    for (d, lam), srcs in sorted(cols.items()):
        if len(srcs) > 1:
            out.append(Violation(COLUMN_CLASH, (d, *srcs), lam))
    return RwaValidationReport(tuple(out))


def wavelength(rmap: RoutingMap, src: int | str, dst: int | str) -> int:
    """Wavelength assigned to ``src -> dst``; endpoints by index or label."""
    s, d = rmap.index(src), rmap.index(dst)
    if s == d:
        raise SelfPair(f"{rmap.labels[s]} has no wavelength to itself")
    lam = rmap.assignment.get((s, d))
    if lam is None:
        raise OutOfRange(f"pair {rmap.labels[s]}->{rmap.labels[d]} is unassigned")
    return lam


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 2:
        raise InvalidParams(f"need at least 2 endpoints, got {n!r}")


def construct_cyclic(n_endpoints: int) -> RoutingMap:
    """Closed-form optimum: ``src i -> dst j`` on wavelength ``(j - i) mod n``."""
    _check_n(n_endpoints)
    n = n_endpoints
    assignment = {(i, j): (j - i) % n for i in range(n) for j in range(n) if i != j}
    return RoutingMap(n, n - 1, assignment)


def _has_matching(cols: list[int], symbols: list[int], used: list[set[int]]) -> bool:
    """Kuhn's augmenting-path test for a perfect cols -> symbols matching."""
    owner: dict[int, int] = {}

    def augment(c: int, seen: set[int]) -> bool:
        for sym in symbols:
            if sym in used[c] or sym in seen:
                continue
            seen.add(sym)
            if sym not in owner or augment(owner[sym], seen):
                owner[sym] = c
                return True
        return False

    return all(augment(c, set()) for c in cols)


def _lex_min_square(n: int) -> dict[tuple[int, int], int]:
    """Row-major lexicographically smallest map on n - 1 wavelengths.

    Adding wavelength 0 on the diagonal turns a valid map into a Latin
    square. Missing-symbol graphs of a Latin rectangle are regular bipartite,
    so every edge lies in a perfect matching and any completed row can be
    extended. Choosing each row greedily, smallest wavelength first with a
    matching check on the rest of the row, therefore never needs to revisit
    an earlier row.
    """
    col_used: list[set[int]] = [set() for _ in range(n)]
    assignment: dict[tuple[int, int], int] = {}
    for s in range(n):
        remaining = [d for d in range(n) if d != s]
        free = list(range(1, n))
        while remaining:
            d = remaining.pop(0)
            for lam in free:
                if lam in col_used[d]:
                    continue
                rest = [x for x in free if x != lam]
                if _has_matching(remaining, rest, col_used):
                    break
            else:  # pragma: no cover - excluded by the extension argument
                raise AssertionError(f"row {s} cannot be completed")
            assignment[(s, d)] = lam
            col_used[d].add(lam)
            free.remove(lam)
    return assignment


def solve(n_endpoints: int) -> RoutingMap:
    """Minimum-wavelength routing map for ``n_endpoints`` endpoints.

    Each endpoint sends to n - 1 peers on pairwise distinct wavelengths, so
    no map uses fewer than n - 1. A map meeting that bound always exists and
    the one returned is the lexicographically smallest in (src, dst) order.
    """
    _check_n(n_endpoints)
    return RoutingMap(n_endpoints, n_endpoints - 1, _lex_min_square(n_endpoints))


def minimal_wavelengths_bruteforce(n_endpoints: int) -> int:
    """Smallest feasible wavelength count found by exhaustive enumeration.

    Independent of :func:`solve`: fills pairs column by column using sets,
    tries every value, and starts from one wavelength with no lower bound.
    """
    _check_n(n_endpoints)
    if n_endpoints > BRUTEFORCE_MAX:
        raise TooLarge(f"exhaustive search limited to n <= {BRUTEFORCE_MAX}")
    n = n_endpoints
    pairs = [(s, d) for d in range(n) for s in range(n) if s != d]

    def feasible(k: int) -> bool:
        chosen: dict[tuple[int, int], int] = {}

        def fill(i: int) -> bool:
            if i == len(pairs):
                return True
            s, d = pairs[i]
            for lam in range(1, k + 1):
                if any(chosen.get((s, x)) == lam for x in range(n)):
                    continue
                if any(chosen.get((x, d)) == lam for x in range(n)):
                    continue
                chosen[(s, d)] = lam
                if fill(i + 1):
                    return True
                del chosen[(s, d)]
            return False

        return fill(0)

    k = 1
    while not feasible(k):
        k += 1
    return k


def relabel(rmap: RoutingMap, perm: Sequence[int]) -> RoutingMap:
    """Move endpoint ``i`` to position ``perm[i]``; wavelengths unchanged."""
    if sorted(perm) != list(range(rmap.n_endpoints)):
        raise InvalidParams("perm must be a permutation of the endpoint indices")
    assignment = {(perm[s], perm[d]): lam for (s, d), lam in rmap.assignment.items()}
    labels = [""] * rmap.n_endpoints
    for i, p in enumerate(perm):
        labels[p] = rmap.labels[i]
    return RoutingMap(rmap.n_endpoints, rmap.n_wavelengths, assignment, tuple(labels))


def used_wavelengths(rmap: RoutingMap) -> set[int]:
    return {lam for lam in rmap.assignment.values() if lam is not None}


# ---------------------------------------------------------------------------
# CSV matrix format: header row of destination labels, first column of source
# labels, "-" on the diagonal, entries "L<k>".

_ENTRY = re.compile(r"^(?:L|λ_?)?(\d+)$")


def to_csv(rmap: RoutingMap) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["", *rmap.labels])
    for s, row in enumerate(rmap.matrix()):
        cells = []
        for d, lam in enumerate(row):
            if s == d:
                cells.append("-")
            else:
                cells.append("" if lam is None else f"L{lam}")
        writer.writerow([rmap.labels[s], *cells])
    return buf.getvalue()


def from_csv(text: str, n_wavelengths: int | None = None) -> RoutingMap:
    """Parse the CSV matrix format.

    Blank entries become missing pairs and a value on the diagonal is kept
    as a self-pair so :func:`verify` can report both. ``n_wavelengths``
    defaults to the largest index present.

    Raises:
        InvalidParams: Ragged rows, mismatched labels or unparseable entries.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise InvalidParams("empty routing map")
    header = [c.strip() for c in rows[0][1:]]
    n = len(header)
    if len(rows) - 1 != n:
        raise InvalidParams(f"{len(rows) - 1} source rows for {n} destination columns")
    assignment: dict[tuple[int, int], int] = {}
    for s, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise InvalidParams(f"line {s + 2}: expected {n + 1} fields, got {len(row)}")
        if row[0].strip() != header[s]:
            raise InvalidParams(
                f"line {s + 2}: source label {row[0].strip()!r} != column label {header[s]!r}"
            )
        for d, raw in enumerate(row[1:]):
            cell = raw.strip()
            if cell in ("", "-"):
                continue
            m = _ENTRY.match(cell)
            if not m:
                raise InvalidParams(f"line {s + 2}, column {header[d]}: bad entry {cell!r}")
            assignment[(s, d)] = int(m.group(1))
    if n_wavelengths is None:
        n_wavelengths = max(assignment.values(), default=0)
    return RoutingMap(n, n_wavelengths, assignment, tuple(header))


def load_table1() -> RoutingMap:
    """The published six-group routing map (G1..G6 plus the OLT)."""
    text = resources.files("ponfog.data").joinpath("table1.csv").read_text()
    return from_csv(text)
