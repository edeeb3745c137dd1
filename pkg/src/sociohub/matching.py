"""Query-to-profile scoring and ranking.

A query is matched against each candidate's handle and display name.
Scores live in [0, 1]: exact match 1.0, prefix match 0.9, otherwise a
normalized Damerau-Levenshtein similarity scaled by 0.8. Handle matches
outrank equal display-name matches by a 0.95 factor on the latter.
Everything here is pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import UnifiedProfile

DEFAULT_LIMIT = 10
DEFAULT_THRESHOLD = 0.3


class EmptyQuery(ValueError):
    """The query contains nothing but whitespace."""


@dataclass(frozen=True)
class RankedResult:
    """One candidate profile together with its match score."""

    profile: UnifiedProfile
    score: float

    def to_json(self) -> dict:
        return {"profile": self.profile.to_json(), "score": self.score}

    @classmethod
    def from_json(cls, doc: dict) -> "RankedResult":
        return cls(profile=UnifiedProfile.from_json(doc["profile"]), score=doc["score"])


def edit_distance(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance.

    Substitution, insertion, deletion, and adjacent transposition each
    cost 1. Unlike the restricted (optimal string alignment) variant,
    a transposed pair may be edited again, which keeps the distance a
    true metric. Strings are compared by Unicode scalar values; any
    case-folding is the caller's concern.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    # Lowrance-Wagner: matrix with a sentinel border so transpositions
    # can reach back past the first row/column. d[i+1][j+1] covers
    # prefixes a[:i], b[:j]; last_row tracks the last row where each
    # character of `a` occurred.
    inf = la + lb
    d = [[inf] * (lb + 2) for _ in range(la + 2)]
    for i in range(la + 1):
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[1][j + 1] = j

    last_row: dict[str, int] = {}
    for i in range(1, la + 1):
        last_col = 0
        for j in range(1, lb + 1):
            row = last_row.get(b[j - 1], 0)
            col = last_col
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_col = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,  # substitute or match
                d[i + 1][j] + 1,  # insert
                d[i][j + 1] + 1,  # delete
                d[row][col] + (i - row - 1) + 1 + (j - col - 1),  # transpose
            )
        last_row[a[i - 1]] = i
    return d[la + 1][lb + 1]


def _fold(text: str) -> str:
    return text.strip().casefold()


def field_score(query: str, text: str) -> float:
    """Similarity of one text field to the query, in [0, 1]."""
    q = _fold(query)
    if not q:
        raise EmptyQuery("query is empty after trimming")
    t = _fold(text)
    if q == t:
        return 1.0
    if t.startswith(q):
        return 0.9
    longest = max(len(q), len(t))
    return 0.8 * max(0.0, 1.0 - edit_distance(q, t) / longest)


def score_profile(query: str, profile: UnifiedProfile) -> float:
    """Best of the handle score and a 0.95-weighted display-name score."""
    return max(
        field_score(query, profile.handle),
        0.95 * field_score(query, profile.display_name),
    )


def ranking_key(result: RankedResult) -> tuple:
    """Total order over ranked results: score desc, followers desc,
    handle asc, platform canonical order asc."""
    p = result.profile
    return (-result.score, -p.followers, p.handle, p.platform.order)


def rank_results(
    query: str,
    candidates: list[UnifiedProfile],
    limit: int = DEFAULT_LIMIT,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[RankedResult]:
    """Score candidates and return the best matches, best first.

    Candidates scoring below `threshold` are dropped; ties break by
    followers (desc), then handle, then canonical platform order, so the
    output is a total order, identical for any permutation of the input.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    scored = [RankedResult(profile=c, score=score_profile(query, c)) for c in candidates]
    kept = [r for r in scored if r.score >= threshold]
    kept.sort(key=ranking_key)
    return kept[:limit]
