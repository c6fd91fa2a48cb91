"""Interleaved Q-load / K-MAC schedule construction across heads.

Each local (HEAD- or TAIL-typed) subhead runs three phases over its
sorted keys: an opening window of s_h keys MAC'd against the major
queries while the minor queries stream in, a middle stretch MAC'd
against everyone, and a closing window of s_h keys MAC'd against the
minors+GLOB set. TAIL-typed subheads traverse the sorted order in
reverse so the opening window is the one their majors never touch.

Subheads are pipelined: the closing phase of subhead i carries the
query loads for subhead i+1's majors, so the compute engine never idles
waiting on loads. GLOB subheads are appended after all local ones and
run a plain load-everything-then-MAC-everything wrap.

Long sequences are tiled into s_f x s_f sub-blocks, each scheduled as an
independent subhead (K-fold-major order so a fixed key fold is reused
across query folds), with optional zero-skip removing rows/columns that
select nothing inside the tile.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ScheduleFormatError, SpecError
from .mask import SelectiveMask
from .rng import SplitMix64
from .sorter import FIXED0, HeadType, QClass, SeedPolicy, SortOutcome, resolve_head

SCHED_FORMAT = "sata-sched"
SCHED_VERSION = 1


class Phase(str, Enum):
    INIT = "INIT"
    MAC_FIRST = "MAC_FIRST"
    MAC_MID = "MAC_MID"
    MAC_LAST = "MAC_LAST"
    WRAP_LOAD = "WRAP_LOAD"
    WRAP_MAC = "WRAP_MAC"


class ActiveSet(str, Enum):
    MAJOR = "MAJOR"          # head-type class plus GLOB
    ALL = "ALL"              # every surviving query of the subhead
    MINOR_GLOB = "MINOR_GLOB"  # opposite class plus GLOB
    ALL_PRESENT = "ALL_PRESENT"  # wrap flow: everything the GLOB subhead loaded


@dataclass(frozen=True)
class TileSpec:
    """Tile edge in tokens plus the zero-skip switch."""

    s_f: int
    zero_skip: bool = False

    def __post_init__(self) -> None:
        if self.s_f < 1:
            raise SpecError("tile size must be >= 1")


@dataclass
class Tile:
    q_fold: int
    k_fold: int
    rows: list[int]  # original head row indices
    cols: list[int]  # original head column indices
    matrix: np.ndarray


@dataclass
class Subhead:
    """One scheduled unit: a head (or tile of one) after zero-skip and sorting."""

    head: int
    q_fold: int
    k_fold: int
    rows: list[int]          # original head rows surviving zero-skip, ascending
    cols: list[int]          # original head columns surviving zero-skip, ascending
    skipped_rows: list[int]  # original head rows dropped by zero-skip
    skipped_cols: list[int]
    outcome: SortOutcome
    matrix: np.ndarray | None = None  # reduced mask; reattachable from the SelectiveMask

    @property
    def n_q(self) -> int:
        return len(self.rows)

    @property
    def n_k(self) -> int:
        return len(self.cols)


@dataclass
class ScheduleStep:
    phase: Phase
    head: int                      # index into Schedule.subheads
    q_loads: list[int] = field(default_factory=list)   # original head row indices
    k_macs: list[tuple[int, int]] = field(default_factory=list)  # (sorted pos, orig col)
    active: ActiveSet | None = None
    retired: list[int] = field(default_factory=list)
    # Subhead the q_loads are written for; a closing MAC step carries the
    # *next* subhead's loads, so this can differ from `head`.
    load_head: int | None = None


@dataclass
class Schedule:
    seq_len: int
    n_heads: int
    s_f: int
    zero_skip: bool
    subheads: list[Subhead]
    steps: list[ScheduleStep]


def tile_mask(head_mask: np.ndarray, spec: TileSpec) -> list[Tile]:
    """Partition an N x N head into ceil(N/s_f)^2 tiles, K-fold-major order."""
    mat = np.asarray(head_mask)
    n = mat.shape[0]
    folds = -(-n // spec.s_f)
    tiles = []
    for k_fold in range(folds):
        c_lo, c_hi = k_fold * spec.s_f, min((k_fold + 1) * spec.s_f, n)
        for q_fold in range(folds):
            r_lo, r_hi = q_fold * spec.s_f, min((q_fold + 1) * spec.s_f, n)
            tiles.append(
                Tile(
                    q_fold=q_fold,
                    k_fold=k_fold,
                    rows=list(range(r_lo, r_hi)),
                    cols=list(range(c_lo, c_hi)),
                    matrix=mat[r_lo:r_hi, c_lo:c_hi],
                )
            )
    return tiles


def zero_skip(tile_matrix: np.ndarray) -> tuple[np.ndarray, list[int], list[int]]:
    """Drop all-zero rows/columns. Returns (reduced, skipped_rows, skipped_cols).

    Skipped indices are tile-local. A fully zero tile reduces to an empty
    matrix and is dropped from scheduling entirely.
    """
    mat = np.asarray(tile_matrix)
    keep_r = mat.any(axis=1)
    keep_c = mat.any(axis=0)
    reduced = mat[np.ix_(keep_r, keep_c)]
    return reduced, list(np.flatnonzero(~keep_r)), list(np.flatnonzero(~keep_c))


def _query_sets(sub: Subhead) -> tuple[list[int], list[int], list[int]]:
    """(major, minor, glob) query lists in original head row indices."""
    ht = sub.outcome.head_type
    major_class = QClass.HEAD if ht is HeadType.HEAD else QClass.TAIL
    minor_class = QClass.TAIL if ht is HeadType.HEAD else QClass.HEAD
    major, minor, glob = [], [], []
    for row, cls in zip(sub.rows, sub.outcome.q_class):
        if cls is QClass.GLOB:
            glob.append(row)
        elif cls is major_class:
            major.append(row)
        else:
            minor.append(row)
    return major, minor, glob


def major_queries(sub: Subhead) -> list[int]:
    major, _, glob = _query_sets(sub)
    return major + glob


def minor_queries(sub: Subhead) -> list[int]:
    _, minor, _ = _query_sets(sub)
    return minor


def resolve_active(schedule: Schedule, step: ScheduleStep) -> list[int]:
    """Explicit query list (original head rows) behind a step's active-set tag."""
    if step.active is None:
        return []
    sub = schedule.subheads[step.head]
    major, minor, glob = _query_sets(sub)
    if step.active is ActiveSet.MAJOR:
        return sorted(major + glob)
    if step.active is ActiveSet.MINOR_GLOB:
        return sorted(minor + glob)
    return sorted(sub.rows)  # ALL / ALL_PRESENT


def schedule_head(sub: Subhead, index: int) -> list[ScheduleStep]:
    """Three-phase plan for one local subhead (minor loads attached, next-head
    loads left for the layer pipeliner).

    TAIL-typed subheads traverse the sorted keys in reverse, so their
    opening phase covers the keys the major (TAIL+GLOB) queries never
    touch. Empty phases are omitted; a phase never loads queries its own
    active set contains.
    """
    out = sub.outcome
    if out.head_type is HeadType.GLOB:
        raise ValueError("cannot phase-schedule a GLOB subhead")
    n_k = sub.n_k
    s_h = out.s_h
    positions = list(range(n_k))
    if out.head_type is HeadType.TAIL:
        positions.reverse()
    macs = [(p, sub.cols[out.key_order[p]]) for p in positions]
    spans = [
        (Phase.MAC_FIRST, macs[:s_h], ActiveSet.MAJOR),
        (Phase.MAC_MID, macs[s_h: n_k - s_h], ActiveSet.ALL),
        (Phase.MAC_LAST, macs[n_k - s_h:], ActiveSet.MINOR_GLOB),
    ]
    steps = [
        ScheduleStep(phase=ph, head=index, k_macs=km, active=act)
        for ph, km, act in spans
        if km
    ]
    minors = minor_queries(sub)
    if minors and steps:
        steps[0].q_loads = list(minors)
        steps[0].load_head = index
    # Retire each query at the last phase whose active set contains it.
    last_needed = {q: -1 for q in sub.rows}
    resolved = [_active_for(sub, st.active) for st in steps]
    for i, queries in enumerate(resolved):
        for q in queries:
            last_needed[q] = i
    for q, i in last_needed.items():
        if i >= 0:
            steps[i].retired.append(q)
    for st in steps:
        st.retired.sort()
    return steps


def _active_for(sub: Subhead, active: ActiveSet | None) -> list[int]:
    if active is None:
        return []
    major, minor, glob = _query_sets(sub)
    if active is ActiveSet.MAJOR:
        return major + glob
    if active is ActiveSet.MINOR_GLOB:
        return minor + glob
    return list(sub.rows)


def schedule_layer(
    subheads: list[Subhead],
    *,
    seq_len: int,
    n_heads: int,
    s_f: int,
    zero_skip_enabled: bool = False,
) -> Schedule:
    """Pipeline local subheads in order, then append GLOB wrap subheads."""
    local_idx = [i for i, s in enumerate(subheads) if s.outcome.head_type is not HeadType.GLOB]
    glob_idx = [i for i, s in enumerate(subheads) if s.outcome.head_type is HeadType.GLOB]
    steps: list[ScheduleStep] = []
    if local_idx:
        first = subheads[local_idx[0]]
        steps.append(
            ScheduleStep(
                phase=Phase.INIT,
                head=local_idx[0],
                q_loads=sorted(major_queries(first)),
                load_head=local_idx[0],
            )
        )
        for pos, idx in enumerate(local_idx):
            plan = schedule_head(subheads[idx], idx)
            steps.extend(plan)
            if pos + 1 < len(local_idx):
                nxt = local_idx[pos + 1]
                loads = sorted(major_queries(subheads[nxt]))
                if not loads:
                    continue
                # Overlap next majors with this subhead's closing MACs; a plan
                # ending in MAC_MID stays load-free, so fall back to a bare
                # load step.
                if plan and plan[-1].phase is Phase.MAC_LAST and not plan[-1].q_loads:
                    plan[-1].q_loads = loads
                    plan[-1].load_head = nxt
                else:
                    steps.append(
                        ScheduleStep(
                            phase=Phase.INIT, head=nxt, q_loads=loads, load_head=nxt
                        )
                    )
    for idx in glob_idx:
        sub = subheads[idx]
        steps.append(
            ScheduleStep(
                phase=Phase.WRAP_LOAD, head=idx, q_loads=sorted(sub.rows), load_head=idx
            )
        )
        steps.append(
            ScheduleStep(
                phase=Phase.WRAP_MAC,
                head=idx,
                k_macs=[(p, sub.cols[sub.outcome.key_order[p]]) for p in range(sub.n_k)],
                active=ActiveSet.ALL_PRESENT,
                retired=sorted(sub.rows),
            )
        )
    return Schedule(
        seq_len=seq_len,
        n_heads=n_heads,
        s_f=s_f,
        zero_skip=zero_skip_enabled,
        subheads=subheads,
        steps=steps,
    )


def plan_layer(
    mask: SelectiveMask,
    *,
    theta_fraction: float = 0.5,
    s_h_init_fraction: float = 0.5,
    s_h_min: int = 1,
    s_f: int | None = None,
    zero_skip_enabled: bool = False,
    seed_policy: SeedPolicy = FIXED0,
) -> Schedule:
    """Full pipeline for one layer: tile, zero-skip, sort/classify, schedule.

    theta and s_h_init scale with each subhead's own dimensions, so one
    configuration spans ragged edge tiles; s_h_min is clamped down to
    s_h_init on tiles too small to honor it. For the nominal tile size a
    too-large s_h_min is a config error.
    """
    if not 0.0 < theta_fraction <= 0.5:
        raise SpecError("theta_fraction must lie in (0, 0.5]")
    if not 0.0 < s_h_init_fraction <= 0.5:
        raise SpecError("s_h_init_fraction must lie in (0, 0.5]")
    if s_h_min < 0:
        raise SpecError("s_h_min must be >= 0")
    n = mask.seq_len
    s_f_eff = n if s_f is None else s_f
    if not 1 <= s_f_eff <= n:
        raise SpecError(f"tile size {s_f_eff} outside [1, {n}]")
    nominal = min(s_f_eff, n)
    if s_h_min > nominal // 2:
        raise SpecError(
            f"s_h_min {s_h_min} exceeds half the subhead size ({nominal // 2})"
        )
    spec = TileSpec(s_f=s_f_eff, zero_skip=zero_skip_enabled)
    subheads: list[Subhead] = []
    ordinal = 0
    for h in range(mask.n_heads):
        for tile in tile_mask(mask.head(h), spec):
            matrix = tile.matrix
            rows, cols = tile.rows, tile.cols
            skipped_r: list[int] = []
            skipped_c: list[int] = []
            if zero_skip_enabled:
                matrix, skip_r, skip_c = zero_skip(matrix)
                skipped_r = [tile.rows[i] for i in skip_r]
                skipped_c = [tile.cols[i] for i in skip_c]
                dropped_r, dropped_c = set(skipped_r), set(skipped_c)
                rows = [r for r in tile.rows if r not in dropped_r]
                cols = [c for c in tile.cols if c not in dropped_c]
            if matrix.size == 0 or not matrix.any():
                continue  # fully zero tiles never reach the scheduler
            n_q, n_k = matrix.shape
            theta = int(theta_fraction * n_q)
            s_h_init = min(int(s_h_init_fraction * n_k), n_k // 2)
            policy = seed_policy
            if seed_policy.kind == "random":
                policy = SeedPolicy("random", _subhead_seed(seed_policy.value, ordinal))
            outcome = resolve_head(
                matrix,
                theta=theta,
                s_h_init=s_h_init,
                s_h_min=min(s_h_min, s_h_init),
                seed_policy=policy,
            )
            subheads.append(
                Subhead(
                    head=h,
                    q_fold=tile.q_fold,
                    k_fold=tile.k_fold,
                    rows=rows,
                    cols=cols,
                    skipped_rows=skipped_r,
                    skipped_cols=skipped_c,
                    outcome=outcome,
                    matrix=matrix,
                )
            )
            ordinal += 1
    return schedule_layer(
        subheads,
        seq_len=n,
        n_heads=mask.n_heads,
        s_f=s_f_eff,
        zero_skip_enabled=zero_skip_enabled,
    )


def _subhead_seed(seed: int, ordinal: int) -> int:
    stream = SplitMix64(seed)
    value = 0
    for _ in range(ordinal + 1):
        value = stream.next_u64()
    return value


def mac_pair_set(schedule: Schedule, masks: SelectiveMask | None = None) -> Counter:
    """Multiset of (subhead index, query row, original key column) MAC'd pairs."""
    pairs: Counter = Counter()
    for step in schedule.steps:
        if not step.k_macs:
            continue
        active = resolve_active(schedule, step)
        for _, orig in step.k_macs:
            for q in active:
                pairs[(step.head, q, orig)] += 1
    return pairs


def attach_masks(schedule: Schedule, mask: SelectiveMask) -> None:
    """Re-derive each subhead's reduced matrix from the mask (after load)."""
    if mask.seq_len != schedule.seq_len or mask.n_heads != schedule.n_heads:
        raise ScheduleFormatError(
            f"mask ({mask.seq_len} tokens, {mask.n_heads} heads) does not match "
            f"schedule ({schedule.seq_len} tokens, {schedule.n_heads} heads)"
        )
    for sub in schedule.subheads:
        sub.matrix = mask.head(sub.head)[np.ix_(sub.rows, sub.cols)]


def save_schedule(schedule: Schedule, path: str) -> None:
    doc = {
        "format": SCHED_FORMAT,
        "version": SCHED_VERSION,
        "seq_len": schedule.seq_len,
        "n_heads": schedule.n_heads,
        "s_f": schedule.s_f,
        "zero_skip": schedule.zero_skip,
        "subheads": [
            {
                "head": s.head,
                "q_fold": s.q_fold,
                "k_fold": s.k_fold,
                "n": s.n_k,
                "n_q": s.n_q,
                "s_h": s.outcome.s_h,
                "head_type": s.outcome.head_type.value,
                "q_class": [c.value for c in s.outcome.q_class],
                "key_order": s.outcome.key_order,
                "decrements": s.outcome.decrements,
                "skipped_rows": s.skipped_rows,
                "skipped_cols": s.skipped_cols,
            }
            for s in schedule.subheads
        ],
        "steps": [
            {
                "phase": st.phase.value,
                "head": st.head,
                "q_loads": st.q_loads,
                "k_macs": [{"pos": p, "orig": o} for p, o in st.k_macs],
                "active": st.active.value if st.active else None,
                "retired": st.retired,
                "load_head": st.load_head,
            }
            for st in schedule.steps
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


def load_schedule(path: str) -> Schedule:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScheduleFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SCHED_FORMAT:
        raise ScheduleFormatError(f"missing or wrong format marker (expected {SCHED_FORMAT!r})")
    if doc.get("version") != SCHED_VERSION:
        raise ScheduleFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        n = int(doc["seq_len"])
        s_f = int(doc["s_f"])
        subheads = []
        for i, s in enumerate(doc["subheads"]):
            r_lo, r_hi = s["q_fold"] * s_f, min((s["q_fold"] + 1) * s_f, n)
            c_lo, c_hi = s["k_fold"] * s_f, min((s["k_fold"] + 1) * s_f, n)
            skipped_r = set(s["skipped_rows"])
            skipped_c = set(s["skipped_cols"])
            rows = [r for r in range(r_lo, r_hi) if r not in skipped_r]
            cols = [c for c in range(c_lo, c_hi) if c not in skipped_c]
            q_class = [QClass(c) for c in s["q_class"]]
            if len(rows) != len(q_class) or len(cols) != len(s["key_order"]):
                raise ScheduleFormatError(f"subhead {i}: inconsistent dimensions")
            counts = (
                sum(c is QClass.HEAD for c in q_class),
                sum(c is QClass.TAIL for c in q_class),
                sum(c is QClass.GLOB for c in q_class),
            )
            outcome = SortOutcome(
                key_order=[int(k) for k in s["key_order"]],
                q_class=q_class,
                head_type=HeadType(s["head_type"]),
                s_h=int(s["s_h"]),
                decrements=int(s.get("decrements", 0)),
                counts=counts,
            )
            subheads.append(
                Subhead(
                    head=int(s["head"]),
                    q_fold=int(s["q_fold"]),
                    k_fold=int(s["k_fold"]),
                    rows=rows,
                    cols=cols,
                    skipped_rows=[int(r) for r in s["skipped_rows"]],
                    skipped_cols=[int(c) for c in s["skipped_cols"]],
                    outcome=outcome,
                )
            )
        steps = [
            ScheduleStep(
                phase=Phase(st["phase"]),
                head=int(st["head"]),
                q_loads=[int(q) for q in st["q_loads"]],
                k_macs=[(int(m["pos"]), int(m["orig"])) for m in st["k_macs"]],
                active=ActiveSet(st["active"]) if st["active"] else None,
                retired=[int(q) for q in st["retired"]],
                load_head=None if st.get("load_head") is None else int(st["load_head"]),
            )
            for st in doc["steps"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScheduleFormatError(f"malformed schedule document: {exc}") from exc
    return Schedule(
        seq_len=n,
        n_heads=int(doc["n_heads"]),
        s_f=s_f,
        zero_skip=bool(doc.get("zero_skip", False)),
        subheads=subheads,
        steps=steps,
    )
