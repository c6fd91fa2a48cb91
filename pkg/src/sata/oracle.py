"""Brute-force reference implementations backing the test suite.

Everything here recomputes from first principles - materialized dummy
vectors, explicit pair enumeration - and must agree with the fast paths
exactly (integer domains, no tolerances). Sizes are capped at 64 tokens
per subhead by default to bound runtime; pass ``max_n`` to go larger.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mask import SelectiveMask
from .scheduler import Schedule, attach_masks, mac_pair_set, resolve_active
from .sorter import FIXED0, HeadType, QClass, SeedPolicy, SortOutcome, SortResult, SortStep

DEFAULT_MAX_N = 64


class ViolationKind(str, Enum):
    MISSING_PAIR = "MISSING_PAIR"
    DUPLICATE_PAIR = "DUPLICATE_PAIR"
    ILLEGAL_EXCLUSION = "ILLEGAL_EXCLUSION"
    LOAD_ORDER = "LOAD_ORDER"
    CLASS_ERROR = "CLASS_ERROR"


@dataclass
class Violation:
    kind: ViolationKind
    coords: tuple
    message: str


def _check_cap(n: int, max_n: int) -> None:
    if n > max_n:
        raise ValueError(f"oracle capped at {max_n} tokens (got {n}); raise max_n to override")


def replay_sort(
    head_mask, seed_policy: SeedPolicy = FIXED0, max_n: int = DEFAULT_MAX_N
) -> SortResult:
    """Greedy sort with the dummy vector rebuilt from scratch every step."""
    mat = np.asarray(head_mask).astype(np.int64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"head mask must be a non-empty 2-D matrix, got shape {mat.shape}")
    n_k = mat.shape[1]
    _check_cap(n_k, max_n)
    order = [seed_policy.first_key(n_k)]
    steps: list[SortStep] = []
    while len(order) < n_k:
        dummy = mat[:, order].sum(axis=1)
        scores = {}
        best, best_score = None, -1
        for k in range(n_k):
            if k in order:
                continue
            score = int(dummy @ mat[:, k])
            scores[k] = score
            if score > best_score:
                best, best_score = k, score
        assert best is not None
        steps.append(SortStep(chosen=best, scores=scores))
        order.append(best)
    return SortResult(key_order=order, steps=steps)


def count_pairs_enumerated(outcome: SortOutcome, n_q: int, n_k: int | None = None) -> int:
    """Count MAC pairs by walking phase x active-set explicitly."""
    if outcome.head_type is HeadType.GLOB:
        raise ValueError("pair enumeration applies to local heads only")
    if n_k is None:
        n_k = n_q
    s_h = outcome.s_h
    major_class = QClass.HEAD if outcome.head_type is HeadType.HEAD else QClass.TAIL
    minor_class = QClass.TAIL if outcome.head_type is HeadType.HEAD else QClass.HEAD
    major = [q for q, c in enumerate(outcome.q_class) if c in (major_class, QClass.GLOB)]
    minor_glob = [q for q, c in enumerate(outcome.q_class) if c in (minor_class, QClass.GLOB)]
    everyone = list(range(n_q))
    total = 0
    for _ in range(s_h):            # opening window
        for _ in major:
            total += 1
    for _ in range(n_k - 2 * s_h):  # middle stretch
        for _ in everyone:
            total += 1
    for _ in range(s_h):            # closing window
        for _ in minor_glob:
            total += 1
    return total


def validate_schedule(
    schedule: Schedule,
    mask: SelectiveMask,
    outcomes: list[SortOutcome] | None = None,
    max_n: int = DEFAULT_MAX_N,
) -> list[Violation]:
    """Check coverage, exclusions, load ordering, and classification soundness.

    Returns one Violation per defect; an empty list means the schedule
    satisfies every checked invariant.
    """
    if any(sub.matrix is None for sub in schedule.subheads):
        attach_masks(schedule, mask)
    violations: list[Violation] = []
    pairs = mac_pair_set(schedule)

    per_sub_pairs: dict[int, Counter] = {i: Counter() for i in range(len(schedule.subheads))}
    for (sub_idx, q, k), count in pairs.items():
        per_sub_pairs[sub_idx][(q, k)] = count

    for i, sub in enumerate(schedule.subheads):
        _check_cap(max(sub.n_q, sub.n_k, 1), max_n)
        out = outcomes[i] if outcomes is not None else sub.outcome
        mat = sub.matrix
        assert mat is not None
        sorted_pos = {sub.cols[k]: p for p, k in enumerate(out.key_order)}
        row_class = dict(zip(sub.rows, out.q_class))
        got = per_sub_pairs[i]
        s_h, n_k = out.s_h, sub.n_k
        is_glob = out.head_type is HeadType.GLOB
        for qi, q in enumerate(sub.rows):
            cls = row_class[q]
            for ki, k in enumerate(sub.cols):
                supported = bool(mat[qi, ki])
                count = got.get((q, k), 0)
                if supported and count == 0:
                    violations.append(
                        Violation(
                            ViolationKind.MISSING_PAIR,
                            (i, q, k),
                            f"subhead {i}: selected pair (Q{q}, K{k}) never MAC'd",
                        )
                    )
                elif count > 1:
                    violations.append(
                        Violation(
                            ViolationKind.DUPLICATE_PAIR,
                            (i, q, k),
                            f"subhead {i}: pair (Q{q}, K{k}) MAC'd {count} times",
                        )
                    )
                elif not supported and count == 0 and not is_glob:
                    pos = sorted_pos[k]
                    legal = (cls is QClass.HEAD and pos >= n_k - s_h) or (
                        cls is QClass.TAIL and pos < s_h
                    )
                    if not legal:
                        violations.append(
                            Violation(
                                ViolationKind.ILLEGAL_EXCLUSION,
                                (i, q, k),
                                f"subhead {i}: pair (Q{q}, K{k}) skipped outside "
                                f"the {cls.value} bypass window",
                            )
                        )
                # Pairs on zero-skipped rows/columns never appear in sub.rows/cols,
                # so their exclusion is legal by construction.
            # Classification soundness against the reduced mask.
            if cls is QClass.HEAD and s_h > 0:
                window = [out.key_order[p] for p in range(n_k - s_h, n_k)]
                if mat[qi, window].any():
                    violations.append(
                        Violation(
                            ViolationKind.CLASS_ERROR,
                            (i, q),
                            f"subhead {i}: HEAD query Q{q} touches the last-{s_h} window",
                        )
                    )
            if cls is QClass.TAIL and s_h > 0:
                window = [out.key_order[p] for p in range(s_h)]
                if mat[qi, window].any():
                    violations.append(
                        Violation(
                            ViolationKind.CLASS_ERROR,
                            (i, q),
                            f"subhead {i}: TAIL query Q{q} touches the first-{s_h} window",
                        )
                    )

    violations.extend(_check_load_order(schedule))
    return violations


def _check_load_order(schedule: Schedule) -> list[Violation]:
    violations: list[Violation] = []
    load_at: dict[tuple[int, int], list[int]] = {}
    retire_at: dict[tuple[int, int], int] = {}
    active_at: dict[tuple[int, int], list[int]] = {}
    for t, step in enumerate(schedule.steps):
        if step.q_loads:
            owner = step.load_head if step.load_head is not None else step.head
            for q in step.q_loads:
                load_at.setdefault((owner, q), []).append(t)
        for q in step.retired:
            retire_at[(step.head, q)] = t
        if step.k_macs:
            for q in resolve_active(schedule, step):
                active_at.setdefault((step.head, q), []).append(t)
    for i, sub in enumerate(schedule.subheads):
        for q in sub.rows:
            loads = load_at.get((i, q), [])
            uses = active_at.get((i, q), [])
            if len(loads) != 1:
                violations.append(
                    Violation(
                        ViolationKind.LOAD_ORDER,
                        (i, q),
                        f"subhead {i}: Q{q} loaded {len(loads)} times (expected 1)",
                    )
                )
                continue
            if uses and loads[0] >= min(uses):
                violations.append(
                    Violation(
                        ViolationKind.LOAD_ORDER,
                        (i, q),
                        f"subhead {i}: Q{q} loaded at step {loads[0]} but first "
                        f"MAC'd at step {min(uses)}",
                    )
                )
            retired = retire_at.get((i, q))
            if retired is None:
                violations.append(
                    Violation(
                        ViolationKind.LOAD_ORDER,
                        (i, q),
                        f"subhead {i}: Q{q} never retired",
                    )
                )
            elif uses and retired < max(uses):
                violations.append(
                    Violation(
                        ViolationKind.LOAD_ORDER,
                        (i, q),
                        f"subhead {i}: Q{q} retired at step {retired} before its "
                        f"last MAC at step {max(uses)}",
                    )
                )
    return violations
