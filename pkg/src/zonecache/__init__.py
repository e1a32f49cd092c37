"""Deterministic simulator for cache layouts on zoned flash devices."""

from . import errors
from .zns import DeviceConfig, ZnsDevice, ZoneState, create_device
from .ftl import FtlConfig, PageMappedFtl
from .zstorage import (DropVerb, GcConfig, OpPlan, ZoneStore, compute_min_op,
                       watermark_zones)
from .zcache import CacheConfig, Policy, RegionCache, RegionStatus
from .schemes import SCHEME_NAMES, SchemeSpec, build, wa_factor
from .workload import (CacheOp, OpKind, WorkloadSpec, generate, preset_spec,
                       replay, value_bytes, write_trace)
from .harness import (ExperimentConfig, MetricsReport, parse_config_file,
                      parse_config_text, render_csv, run, simulate_time)

__all__ = [
    "errors",
    "DeviceConfig", "ZnsDevice", "ZoneState", "create_device",
    "FtlConfig", "PageMappedFtl",
    "DropVerb", "GcConfig", "OpPlan", "ZoneStore", "compute_min_op",
    "watermark_zones",
    "CacheConfig", "Policy", "RegionCache", "RegionStatus",
    "SCHEME_NAMES", "SchemeSpec", "build", "wa_factor",
    "CacheOp", "OpKind", "WorkloadSpec", "generate", "preset_spec",
    "replay", "value_bytes", "write_trace",
    "ExperimentConfig", "MetricsReport", "parse_config_file",
    "parse_config_text", "render_csv", "run", "simulate_time",
]

__version__ = "0.1.0"
