"""Scheduling engine and analytical cost simulator for TopK selective
query-key attention: sorts keys for operand locality, classifies queries,
interleaves Q loads with K MACs across heads, and quantifies the
throughput/energy outcome against dense and pruned baselines.
"""

from .cost import CostParams, SimReport, baseline_dense, baseline_pruned, simulate, step_latency
from .errors import (
    MaskFormatError,
    ReportFormatError,
    SataError,
    ScheduleFormatError,
    SpecError,
)
from .mask import (
    GeneratorSpec,
    Locality,
    SelectiveMask,
    generate_mask,
    load_mask,
    save_mask,
    validate_mask,
)
from .scheduler import (
    ActiveSet,
    Phase,
    Schedule,
    ScheduleStep,
    Subhead,
    TileSpec,
    load_schedule,
    mac_pair_set,
    plan_layer,
    save_schedule,
    schedule_head,
    schedule_layer,
    tile_mask,
    zero_skip,
)
from .sorter import (
    FIXED0,
    HeadType,
    PsumState,
    QClass,
    SeedPolicy,
    SortOutcome,
    classify_queries,
    direct_distance,
    resolve_head,
    sort_keys,
    update_psums,
)
from .stats import StatsRow, collect_stats, emit_report, read_report

__version__ = "0.1.0"
