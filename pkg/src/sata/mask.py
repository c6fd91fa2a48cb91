"""Selective-attention mask model: data type, synthesis, and file I/O.

A mask is one binary N x N matrix per attention head; entry (q, k) = 1
means query q attends key k. Masks with a fixed per-query budget K have
every row summing to exactly K, which is what the scheduler's query
classification relies on.

Generation procedure (fixed; golden files pin its output):

* One SplitMix64 stream seeded with ``spec.seed`` drives the whole mask,
  visiting heads in order and rows 0..N-1 within each head.
* Per row: the candidate column window is chosen by the locality mode
  (whole row for ``uniform``; the query's own block for ``block(b)``;
  a width-w window centered on the query, clamped at the edges, for
  ``banded(w)``), then K distinct columns are drawn with
  ``SplitMix64.sample``.
* Noise pass, immediately after each row's draw: floor(noise * K) times,
  pick a uniformly random currently-selected column and move it to a
  uniformly random currently-unselected column (both chosen over the
  ascending-sorted candidate lists). Row sums stay exactly K.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaskFormatError, SpecError
from .rng import SplitMix64

MASK_FORMAT = "sata-mask"
MASK_VERSION = 1

# Preset name -> (seq_len, k_per_query). Head count is not part of a preset.
PRESETS: dict[str, tuple[int, int]] = {
    "ttst": (30, 15),
    "kvt-tiny": (198, 50),
    "kvt-base": (198, 64),
    "drsformer": (48, 12),
}

DEFAULT_N_HEADS = 12


@dataclass(frozen=True)
class Locality:
    """Column-window rule for row selections: uniform, block(b), or banded(w)."""

    kind: str = "uniform"
    param: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "block", "banded"):
            raise SpecError(f"unknown locality kind {self.kind!r}")
        if self.kind != "uniform" and (self.param is None or self.param < 1):
            raise SpecError(f"locality {self.kind!r} needs a positive parameter")

    @classmethod
    def parse(cls, text: str) -> "Locality":
        """Parse 'uniform', 'block:B', or 'banded:W'."""
        if text == "uniform":
            return cls("uniform")
        kind, sep, arg = text.partition(":")
        if not sep or kind not in ("block", "banded"):
            raise SpecError(f"cannot parse locality {text!r}")
        try:
            return cls(kind, int(arg))
        except ValueError as exc:
            raise SpecError(f"cannot parse locality {text!r}") from exc

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param}"


@dataclass
class GeneratorSpec:
    """Inputs for mask synthesis. A preset overrides seq_len and k_per_query."""

    preset: str | None = None
    seq_len: int | None = None
    n_heads: int = DEFAULT_N_HEADS
    k_per_query: int | None = None
    locality: Locality = field(default_factory=Locality)
    noise: float = 0.0
    seed: int = 0

    def resolved(self) -> tuple[int, int, int]:
        """(seq_len, n_heads, k) after preset resolution, validated."""
        n, k = self.seq_len, self.k_per_query
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise SpecError(
                    f"unknown preset {self.preset!r} (choices: {', '.join(sorted(PRESETS))})"
                )
            n, k = PRESETS[self.preset]
        if n is None or n < 1:
            raise SpecError("seq_len must be a positive integer")
        if k is None or k < 1:
            raise SpecError("k_per_query must be a positive integer")
        if k > n:
            raise SpecError(f"K exceeds N ({k} > {n})")
        if self.n_heads < 1:
            raise SpecError("n_heads must be a positive integer")
        if not 0.0 <= self.noise <= 1.0:
            raise SpecError("noise must lie in [0, 1]")
        return n, self.n_heads, k


@dataclass
class SelectiveMask:
    """Per-head binary query->key selection matrices."""

    seq_len: int
    n_heads: int
    k_per_query: int | None
    heads: list[np.ndarray]

    def head(self, h: int) -> np.ndarray:
        return self.heads[h]


def _block_bounds(n: int, blocks: int, index: int) -> tuple[int, int]:
    # Balanced contiguous partition of [0, n) into `blocks` parts.
    return index * n // blocks, (index + 1) * n // blocks


def _row_window(q: int, n: int, locality: Locality) -> tuple[int, int]:
    """Half-open candidate column range for query q."""
    if locality.kind == "uniform":
        return 0, n
    if locality.kind == "block":
        b = locality.param
        assert b is not None
        if b > n:
            raise SpecError(f"block count {b} exceeds seq_len {n}")
        for i in range(b):
            lo, hi = _block_bounds(n, b, i)
            if lo <= q < hi:
                return lo, hi
        raise AssertionError("row outside every block")
    # banded
    w = min(locality.param or n, n)
    lo = min(max(q - (w - 1) // 2, 0), n - w)
    return lo, lo + w


def generate_mask(spec: GeneratorSpec) -> SelectiveMask:
    """Synthesize a mask per the documented procedure. Deterministic in (spec, seed)."""
    n, n_heads, k = spec.resolved()
    rng = SplitMix64(spec.seed)
    n_moves = math.floor(spec.noise * k)
    heads = []
    for _ in range(n_heads):
        mat = np.zeros((n, n), dtype=np.uint8)
        for q in range(n):
            lo, hi = _row_window(q, n, spec.locality)
            width = hi - lo
            if k > width:
                raise SpecError(
                    f"K={k} does not fit the {spec.locality} window of width {width}"
                )
            for c in rng.sample(width, k):
                mat[q, lo + c] = 1
            for _ in range(n_moves):
                selected = np.flatnonzero(mat[q])
                unselected = np.flatnonzero(mat[q] == 0)
                if unselected.size == 0:
                    break
                src = selected[rng.randbelow(selected.size)]
                dst = unselected[rng.randbelow(unselected.size)]
                mat[q, src] = 0
                mat[q, dst] = 1
        heads.append(mat)
    return SelectiveMask(seq_len=n, n_heads=n_heads, k_per_query=k, heads=heads)


def validate_mask(mask: SelectiveMask) -> list[str]:
    """Diagnostics for every invariant violation; empty when the mask is valid."""
    diags: list[str] = []
    n = mask.seq_len
    if n < 1:
        diags.append("seq_len must be >= 1")
    if mask.n_heads != len(mask.heads):
        diags.append(f"n_heads {mask.n_heads} != {len(mask.heads)} head matrices")
    k = mask.k_per_query
    if k is not None and not 1 <= k <= n:
        diags.append(f"k_per_query {k} outside [1, {n}]")
    for h, mat in enumerate(mask.heads):
        if mat.shape != (n, n):
            diags.append(f"head {h}: shape {mat.shape} != ({n}, {n})")
            continue
        bad = np.argwhere((mat != 0) & (mat != 1))
        for q, c in bad[:8]:
            diags.append(f"head {h} row {q}: entry at column {c} is not 0/1")
        if k is not None and bad.size == 0:
            sums = mat.sum(axis=1)
            for q in np.flatnonzero(sums != k):
                diags.append(f"head {h} row {q}: row sum {int(sums[q])} != k_per_query {k}")
    return diags


def save_mask(mask: SelectiveMask, path: str) -> None:
    diags = validate_mask(mask)
    if diags:
        raise MaskFormatError("; ".join(diags))
    doc = {
        "format": MASK_FORMAT,
        "version": MASK_VERSION,
        "seq_len": mask.seq_len,
        "n_heads": mask.n_heads,
        "k_per_query": mask.k_per_query,
        "heads": [
            ["".join("1" if v else "0" for v in row) for row in mat]
            for mat in mask.heads
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


def load_mask(path: str) -> SelectiveMask:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise MaskFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MASK_FORMAT:
        raise MaskFormatError(f"missing or wrong format marker (expected {MASK_FORMAT!r})")
    if doc.get("version") != MASK_VERSION:
        raise MaskFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        n = int(doc["seq_len"])
        n_heads = int(doc["n_heads"])
        k = doc["k_per_query"]
        rows_per_head = doc["heads"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MaskFormatError(f"malformed header: {exc}") from exc
    if k is not None:
        k = int(k)
    if not isinstance(rows_per_head, list) or len(rows_per_head) != n_heads:
        raise MaskFormatError(f"expected {n_heads} heads, found {len(rows_per_head)}")
    heads = []
    for h, rows in enumerate(rows_per_head):
        if not isinstance(rows, list) or len(rows) != n:
            raise MaskFormatError(f"head {h}: expected {n} rows, found {len(rows)}")
        mat = np.zeros((n, n), dtype=np.uint8)
        for q, row in enumerate(rows):
            if not isinstance(row, str) or len(row) != n:
                raise MaskFormatError(f"head {h} row {q}: row length != {n}")
            for c, ch in enumerate(row):
                if ch == "1":
                    mat[q, c] = 1
                elif ch != "0":
                    raise MaskFormatError(
                        f"head {h} row {q}: illegal character {ch!r} at column {c}"
                    )
        heads.append(mat)
    mask = SelectiveMask(seq_len=n, n_heads=n_heads, k_per_query=k, heads=heads)
    diags = validate_mask(mask)
    if diags:
        raise MaskFormatError("; ".join(diags))
    return mask
