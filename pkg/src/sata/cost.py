"""Analytical latency/energy evaluation of schedules plus reference baselines.

A step that MACs x keys while loading y queries costs, with both streams
busy, one combined data-transfer term and one combined compute/write
term. Two combine modes exist:

* ``overlap_max`` (default): each term is max(read cost, write cost);
  the two engines run concurrently and the step ends when the slower one
  finishes.
* ``paper_min``: each term is min(...), kept for fidelity studies; it
  degenerates to zero whenever one stream is empty, so single-stream
  steps use the empty-stream rule in both modes: the step costs the
  nonempty stream's full serial time.

Energy counts d_k elements per MAC'd (key, active query) pair and per
loaded query; MACs within a step run dense across its active set, so the
active count shows up in energy but not latency (array broadcast).
Sorting overhead is one round per key; it adds energy always, but adds
latency only where it exceeds the subhead's compute window (pipelined
hiding).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import SpecError
from .mask import SelectiveMask
from .scheduler import Phase, Schedule, attach_masks, resolve_active

COMBINE_MODES = ("overlap_max", "paper_min")


@dataclass
class CostParams:
    """Latency/energy constants; defaults are unit costs."""

    t_rd_dt: float = 1.0      # per-key read data transfer
    t_wr_arr: float = 1.0     # per-query write into the array
    t_rd_comp: float = 1.0    # per-key MAC compute
    t_wr_dt: float = 1.0      # per-query write data transfer
    d_k: int = 1              # embedding elements per vector
    e_mac_elem: float = 1.0   # energy per MAC element
    e_load_elem: float = 1.0  # energy per loaded element
    combine_mode: str = "overlap_max"
    glob_energy_gated: bool = False
    sched_cycles_per_key: float = 1.0
    sched_energy_per_round: float = 1.0

    def __post_init__(self) -> None:
        if self.combine_mode not in COMBINE_MODES:
            raise SpecError(f"combine_mode must be one of {COMBINE_MODES}")
        if self.d_k < 1:
            raise SpecError("d_k must be >= 1")
        for f in fields(self):
            if f.name in ("combine_mode", "glob_energy_gated", "d_k"):
                continue
            if getattr(self, f.name) < 0:
                raise SpecError(f"{f.name} must be >= 0")


def load_cost_params(path: str) -> CostParams:
    """Read a cost-config JSON file; unknown keys are errors."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise SpecError("cost config must be a JSON object")
    known = {f.name for f in fields(CostParams)}
    unknown = set(doc) - known
    if unknown:
        raise SpecError(f"unknown cost config keys: {', '.join(sorted(unknown))}")
    return CostParams(**doc)


@dataclass
class SimReport:
    scheduled_latency: float = 0.0
    dense_latency: float = 0.0
    pruned_latency: float = 0.0
    scheduled_energy: float = 0.0
    dense_energy: float = 0.0
    pruned_energy: float = 0.0
    throughput_gain_dense: float = 1.0
    throughput_gain_pruned: float = 1.0
    energy_gain_dense: float = 1.0
    energy_gain_pruned: float = 1.0
    utilization: float = 0.0
    sched_overhead_latency: float = 0.0
    sched_overhead_energy: float = 0.0
    overhead_hidden: list[bool] = field(default_factory=list)
    occupancy_trace: list[int] = field(default_factory=list)
    scheduled_mac_pairs: int = 0
    scheduled_mac_energy: float = 0.0
    scheduled_load_energy: float = 0.0


def step_latency(x: int, y: int, p: CostParams) -> float:
    """Latency of one step MAC'ing x keys while loading y queries."""
    if x < 0 or y < 0:
        raise ValueError("stream sizes must be >= 0")
    if x == 0 and y == 0:
        raise ValueError("a step must MAC keys or load queries")
    if x == 0:
        return y * (p.t_wr_arr + p.t_wr_dt)
    if y == 0:
        return x * (p.t_rd_dt + p.t_rd_comp)
    combine = max if p.combine_mode == "overlap_max" else min
    return combine(p.t_rd_dt * x, p.t_wr_arr * y) + combine(p.t_rd_comp * x, p.t_wr_dt * y)


def baseline_dense(n: int, n_heads: int, p: CostParams) -> tuple[float, float]:
    """Serial load-then-MAC reference: every key against every query."""
    if n < 1:
        raise ValueError("n must be >= 1")
    latency = n_heads * (n * (p.t_wr_arr + p.t_wr_dt) + n * (p.t_rd_dt + p.t_rd_comp))
    energy = n_heads * (n * n * p.d_k * p.e_mac_elem + n * p.d_k * p.e_load_elem)
    return latency, energy


def baseline_pruned(mask: SelectiveMask, p: CostParams) -> tuple[float, float]:
    """Gated baseline: dense timing (gating saves no idle time), selected-pair energy."""
    latency, _ = baseline_dense(mask.seq_len, mask.n_heads, p)
    supported = sum(int(np.count_nonzero(m)) for m in mask.heads)
    energy = (
        supported * p.d_k * p.e_mac_elem
        + mask.n_heads * mask.seq_len * p.d_k * p.e_load_elem
    )
    return latency, energy


def scheduler_overhead(
    n_sub: int, compute_latency: float, p: CostParams
) -> tuple[float, float, bool]:
    """Sorting cost of one subhead: (latency, energy, hidden-behind-compute)."""
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    latency = p.sched_cycles_per_key * n_sub
    energy = latency * p.sched_energy_per_round
    hidden = latency <= compute_latency
    return latency, energy, hidden


def simulate(schedule: Schedule, mask: SelectiveMask, p: CostParams) -> SimReport:
    """Evaluate a schedule and both baselines into one report.

    Scheduled latency sums the per-step combine plus any scheduler
    overhead that exceeds its subhead's compute window. GLOB wrap MACs
    bill energy for every present query unless ``glob_energy_gated``.
    """
    if any(sub.matrix is None for sub in schedule.subheads):
        attach_masks(schedule, mask)
    report = SimReport()
    step_lat: list[float] = []
    per_sub_latency = [0.0] * len(schedule.subheads)
    resident = 0
    col_index = [
        {c: i for i, c in enumerate(sub.cols)} for sub in schedule.subheads
    ]
    for step in schedule.steps:
        x, y = len(step.k_macs), len(step.q_loads)
        lat = step_latency(x, y, p)
        step_lat.append(lat)
        per_sub_latency[step.head] += lat
        if x:
            active = resolve_active(schedule, step)
            report.scheduled_mac_pairs += x * len(active)
            if step.phase is Phase.WRAP_MAC and p.glob_energy_gated:
                sub = schedule.subheads[step.head]
                assert sub.matrix is not None
                supported = sum(
                    int(sub.matrix[:, col_index[step.head][orig]].sum())
                    for _, orig in step.k_macs
                )
                report.scheduled_mac_energy += supported * p.d_k * p.e_mac_elem
            else:
                report.scheduled_mac_energy += x * len(active) * p.d_k * p.e_mac_elem
        if y:
            report.scheduled_load_energy += y * p.d_k * p.e_load_elem
        resident += y - len(step.retired)
        report.occupancy_trace.append(resident)

    exposed_total = 0.0
    for i, sub in enumerate(schedule.subheads):
        lat, energy, hidden = scheduler_overhead(sub.n_k, per_sub_latency[i], p)
        report.sched_overhead_latency += lat
        report.sched_overhead_energy += energy
        report.overhead_hidden.append(hidden)
        exposed_total += max(0.0, lat - per_sub_latency[i])

    report.scheduled_latency = sum(step_lat) + exposed_total
    report.scheduled_energy = (
        report.scheduled_mac_energy
        + report.scheduled_load_energy
        + report.sched_overhead_energy
    )
    report.dense_latency, report.dense_energy = baseline_dense(
        mask.seq_len, mask.n_heads, p
    )
    report.pruned_latency, report.pruned_energy = baseline_pruned(mask, p)
    report.throughput_gain_dense = _gain(report.dense_latency, report.scheduled_latency)
    report.throughput_gain_pruned = _gain(report.pruned_latency, report.scheduled_latency)
    report.energy_gain_dense = _gain(report.dense_energy, report.scheduled_energy)
    report.energy_gain_pruned = _gain(report.pruned_energy, report.scheduled_energy)
    mac_serial = sum(len(st.k_macs) for st in schedule.steps) * (p.t_rd_dt + p.t_rd_comp)
    report.utilization = (
        mac_serial / report.scheduled_latency if report.scheduled_latency > 0 else 0.0
    )
    return report


def _gain(baseline: float, scheduled: float) -> float:
    if scheduled > 0:
        return baseline / scheduled
    return float("inf") if baseline > 0 else 1.0
