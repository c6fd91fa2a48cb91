"""Shared fixtures: the worked 4-token head, corpus builders, suite timer."""

from __future__ import annotations

import time

import numpy as np
import pytest

from sata.mask import GeneratorSpec, Locality, SelectiveMask, generate_mask
from sata.rng import SplitMix64

SUITE_TIME_LIMIT_S = 60.0


def worked_head() -> np.ndarray:
    """Q0,Q1 -> keys 0,1; Q2,Q3 -> keys 2,3."""
    return np.array(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], dtype=np.uint8
    )


def worked_mask(n_heads: int = 1) -> SelectiveMask:
    return SelectiveMask(
        seq_len=4,
        n_heads=n_heads,
        k_per_query=2,
        heads=[worked_head().copy() for _ in range(n_heads)],
    )


@pytest.fixture
def worked():
    return worked_mask()


def random_specs(count: int, *, max_n: int = 32, seed: int = 2024) -> list[GeneratorSpec]:
    """Deterministic mixed-locality spec corpus: N in [2, max_n], K in [1, N]."""
    rng = SplitMix64(seed)
    specs = []
    for i in range(count):
        n = 2 + rng.randbelow(max_n - 1)
        locality_pick = i % 3
        if locality_pick == 0:
            locality = Locality("uniform")
            k_cap = n
        elif locality_pick == 1:
            b = 2 if n < 8 else 2 + rng.randbelow(3)
            locality = Locality("block", b)
            k_cap = n // b  # smallest block width in the balanced partition
        else:
            w = max(1, 1 + rng.randbelow(n))
            locality = Locality("banded", w)
            k_cap = w
        k_cap = max(1, k_cap)
        k = 1 + rng.randbelow(k_cap)
        noise = (0.0, 0.1, 0.25)[i % 3]
        specs.append(
            GeneratorSpec(
                seq_len=n,
                n_heads=1,
                k_per_query=k,
                locality=locality,
                noise=noise,
                seed=seed + i,
            )
        )
    return specs


def build_corpus(count: int, **kwargs) -> list[SelectiveMask]:
    return [generate_mask(s) for s in random_specs(count, **kwargs)]


def pytest_configure(config):
    config._suite_t0 = time.monotonic()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.monotonic() - getattr(session.config, "_suite_t0", time.monotonic())
    ok = elapsed < SUITE_TIME_LIMIT_S
    print(
        f"\n[criterion 10] {'PASS' if ok else 'FAIL'}: "
        f"full suite wall time {elapsed:.1f}s (limit {SUITE_TIME_LIMIT_S:.0f}s)"
    )
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1
