"""Greedy key sorting and query classification for one head (or tile).

Keys are ordered by repeatedly picking the unsorted column whose access
pattern is most similar to the running column sum (the "dummy" vector) of
everything sorted so far. Similarity scores are maintained incrementally:
when column j is sorted, every unsorted column i gains the binary dot
product of columns i and j, so the accumulator always equals the direct
dummy-column dot product without recomputing it.

Queries are then classified against the sorted order using a heavy-size
window s_h: a query touching none of the last s_h sorted keys is HEAD,
none of the first s_h is TAIL (HEAD wins when both hold), anything else
is GLOB. If too many queries stay GLOB the window shrinks one step at a
time; a head that cannot escape by the floor is itself declared GLOB and
later falls back to the dense wrap flow.

Matrices may be rectangular (n_q x n_k): tiling and zero-skip produce
tiles whose surviving row and column counts differ. All scores are exact
integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class QClass(str, Enum):
    HEAD = "HEAD"
    TAIL = "TAIL"
    GLOB = "GLOB"


class HeadType(str, Enum):
    HEAD = "HEAD"
    TAIL = "TAIL"
    GLOB = "GLOB"


@dataclass(frozen=True)
class SeedPolicy:
    """First-key choice: fixed(index) or random(seed)."""

    kind: str = "fixed"
    value: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "random"):
            raise ValueError(f"unknown seed policy {self.kind!r}")

    def first_key(self, n_k: int) -> int:
        if self.kind == "fixed":
            if not 0 <= self.value < n_k:
                raise ValueError(f"fixed seed index {self.value} outside [0, {n_k})")
            return self.value
        from .rng import SplitMix64

        return SplitMix64(self.value).randbelow(n_k)

    @classmethod
    def parse(cls, text: str) -> "SeedPolicy":
        kind, _, arg = text.partition(":")
        return cls(kind, int(arg) if arg else 0)

    def __str__(self) -> str:
        return f"{self.kind}:{self.value}"


FIXED0 = SeedPolicy("fixed", 0)


@dataclass
class PsumState:
    """Incremental similarity accumulators, one per key column."""

    psums: np.ndarray  # int64, length n_k
    sorted_keys: list[int]

    @classmethod
    def fresh(cls, n_k: int) -> "PsumState":
        return cls(psums=np.zeros(n_k, dtype=np.int64), sorted_keys=[])


@dataclass
class SortStep:
    """One greedy pick: the scores seen among unsorted keys and the chosen key."""

    chosen: int
    scores: dict[int, int]


@dataclass
class SortResult:
    key_order: list[int]
    steps: list[SortStep]


@dataclass
class SortOutcome:
    """Result of sorting + classification for one head/tile."""

    key_order: list[int]
    q_class: list[QClass]
    head_type: HeadType
    s_h: int
    decrements: int
    counts: tuple[int, int, int]  # (#HEAD, #TAIL, #GLOB)
    glob_trace: list[tuple[int, int]] = field(default_factory=list)  # (s_h, #GLOB)


def _as_matrix(head_mask) -> np.ndarray:
    mat = np.asarray(head_mask)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"head mask must be a non-empty 2-D matrix, got shape {mat.shape}")
    return mat.astype(np.int64, copy=False)


def direct_distance(dummy, column) -> int:
    """Reference similarity score: dot product of the dummy vector and a column."""
    d = np.asarray(dummy, dtype=np.int64)
    c = np.asarray(column, dtype=np.int64)
    if d.shape != c.shape:
        raise ValueError(f"length mismatch: {d.shape} vs {c.shape}")
    return int(d @ c)


def update_psums(state: PsumState, just_sorted: int, head_mask) -> PsumState:
    """Fold a newly sorted column into the accumulators (pure; returns a new state)."""
    if just_sorted in state.sorted_keys:
        raise ValueError(f"key {just_sorted} is already sorted")
    mat = _as_matrix(head_mask)
    new = PsumState(
        psums=state.psums + mat.T @ mat[:, just_sorted],
        sorted_keys=state.sorted_keys + [just_sorted],
    )
    return new


def sort_keys(head_mask, seed_policy: SeedPolicy = FIXED0) -> SortResult:
    """Greedy key ordering with a per-step score trace for oracle replay.

    Ties in the score argmax go to the lowest original key index.
    """
    mat = _as_matrix(head_mask)
    n_k = mat.shape[1]
    first = seed_policy.first_key(n_k)
    order = [first]
    psums = mat.T @ mat[:, first]
    unsorted = np.ones(n_k, dtype=bool)
    unsorted[first] = False
    steps: list[SortStep] = []
    for _ in range(n_k - 1):
        candidates = np.flatnonzero(unsorted)
        scores = {int(k): int(psums[k]) for k in candidates}
        masked = np.where(unsorted, psums, -1)
        chosen = int(np.argmax(masked))  # argmax returns the lowest index on ties
        steps.append(SortStep(chosen=chosen, scores=scores))
        order.append(chosen)
        unsorted[chosen] = False
        psums = psums + mat.T @ mat[:, chosen]
    return SortResult(key_order=order, steps=steps)


def classify_queries(head_mask, key_order: list[int], s_h: int) -> list[QClass]:
    """Tag each query HEAD/TAIL/GLOB against the s_h windows of the sorted order."""
    mat = _as_matrix(head_mask)
    n_k = mat.shape[1]
    if not 0 <= s_h <= n_k // 2:
        raise ValueError(f"s_h {s_h} outside [0, {n_k // 2}]")
    first = key_order[:s_h]
    last = key_order[n_k - s_h:] if s_h > 0 else []
    touches_first = mat[:, first].any(axis=1) if first else np.zeros(mat.shape[0], bool)
    touches_last = mat[:, last].any(axis=1) if last else np.zeros(mat.shape[0], bool)
    out = []
    for tf, tl in zip(touches_first, touches_last):
        if not tl:
            out.append(QClass.HEAD)  # HEAD wins when both windows are untouched
        elif not tf:
            out.append(QClass.TAIL)
        else:
            out.append(QClass.GLOB)
    return out


def resolve_head(
    head_mask,
    theta: int,
    s_h_init: int,
    s_h_min: int,
    seed_policy: SeedPolicy = FIXED0,
) -> SortOutcome:
    """Sort once, then shrink s_h until GLOB queries no longer dominate.

    Stops at the first s_h with #GLOB <= theta (head type = majority query
    class, ties to HEAD). If s_h reaches s_h_min with #GLOB still above
    theta, the head is declared GLOB for the dense wrap path.
    """
    mat = _as_matrix(head_mask)
    n_k = mat.shape[1]
    if theta < 0:
        raise ValueError("theta must be >= 0")
    if not 0 <= s_h_min <= s_h_init <= n_k // 2:
        raise ValueError(
            f"need 0 <= s_h_min <= s_h_init <= {n_k // 2}, got ({s_h_min}, {s_h_init})"
        )
    order = sort_keys(mat, seed_policy).key_order
    s_h = s_h_init
    glob_trace: list[tuple[int, int]] = []
    while True:
        classes = classify_queries(mat, order, s_h)
        a = sum(c is QClass.HEAD for c in classes)
        b = sum(c is QClass.TAIL for c in classes)
        c = sum(cl is QClass.GLOB for cl in classes)
        glob_trace.append((s_h, c))
        if c <= theta:
            head_type = HeadType.HEAD if a >= b else HeadType.TAIL
            break
        if s_h <= s_h_min:
            head_type = HeadType.GLOB
            break
        s_h -= 1
    return SortOutcome(
        key_order=order,
        q_class=classes,
        head_type=head_type,
        s_h=s_h,
        decrements=s_h_init - s_h,
        counts=(a, b, c),
        glob_trace=glob_trace,
    )
