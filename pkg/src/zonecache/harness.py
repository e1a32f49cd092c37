"""Experiment runner: wires a scheme to a workload, tracks run stages,
advances an optional simulated clock, and reports per-interval metrics.

A run moves through three stages. It starts out `filling` (the cache is
cold), becomes `evicting` at the first top-down eviction, and `stable` once
background reclamation has fired for the first time (first GC cycle entry,
or the first zone reset for the GC-free direct layout, or the first
internal FTL GC for the block baselines). Headline numbers are stable-stage
averages.

The simulated clock charges device traffic against two independent
bandwidth channels: all writes (foreground flushes plus GC migrations)
share the write budget, all reads share the read budget, and elapsed time
per interval is whichever channel is busier.
"""

import os
from dataclasses import dataclass, field, replace

from . import errors
from .schemes import SchemeSpec, build, SCHEME_NAMES
from .workload import (CacheOp, OpKind, WorkloadSpec, generate, key_size,
                       preset_spec, replay, value_bytes, PRESET_GET_RATIOS)
from . import schemes as _schemes

CSV_HEADER = ("interval,ops,hits,misses,hit_ratio,cache_bytes,device_bytes,"
              "wa_cum,gc_migrated_bytes,empty_zones,stage")


@dataclass
class ExperimentConfig:
    scheme: SchemeSpec
    workload: WorkloadSpec = None
    trace_path: str = None
    interval_ops: int = 10_000
    timing_enabled: bool = False
    output_path: str = None
    verify_hits: bool = False  # compare hit payloads against expected bytes

    def validate(self):
        if self.interval_ops < 1:
            raise errors.InvalidConfig("interval_ops must be >= 1")
        if (self.workload is None) == (self.trace_path is None):
            raise errors.InvalidConfig("exactly one of workload or trace required")


@dataclass
class IntervalRow:
    interval: int
    ops: int
    hits: int
    misses: int
    hit_ratio: float
    cache_bytes: int
    device_bytes: int
    wa_cum: float
    gc_migrated_bytes: int
    empty_zones: int
    stage: str


@dataclass
class RunSummary:
    stable_ops_per_sec: float  # None when timing is off or no stable stage
    stable_hit_ratio: float
    final_wa: float
    total_sim_seconds: float
    first_eviction_op: int
    first_gc_op: int


@dataclass
class MetricsReport:
    rows: list
    summary: RunSummary
    final_metrics: object
    corrupt_hits: int = 0
    engine: object = None  # the engine post-run, for state inspection


def _fmt(value, digits=4):
    if value is None:
        return "na"
    return f"{value:.{digits}f}"


def _row_line(row) -> str:
    return (f"{row.interval},{row.ops},{row.hits},{row.misses},"
            f"{row.hit_ratio:.4f},{row.cache_bytes},{row.device_bytes},"
            f"{row.wa_cum:.4f},{row.gc_migrated_bytes},{row.empty_zones},"
            f"{row.stage}")


def render_csv(report: MetricsReport) -> str:
    lines = [CSV_HEADER]
    lines.extend(_row_line(r) for r in report.rows)
    s = report.summary
    lines.append(f"#summary,stable_ops_per_sec={_fmt(s.stable_ops_per_sec, 2)},"
                 f"stable_hit_ratio={_fmt(s.stable_hit_ratio)},"
                 f"final_wa={_fmt(s.final_wa)}")
    return "\n".join(lines) + "\n"


class _Clock:
    """Two-channel bandwidth budget; elapsed time is the busier channel."""

    def __init__(self, write_bandwidth, read_bandwidth):
        self.write_bw = float(write_bandwidth)
        self.read_bw = float(read_bandwidth)
        self.seconds = 0.0
        self._written = 0
        self._read = 0

    def advance(self, total_written, total_read) -> float:
        dw = total_written - self._written
        dr = total_read - self._read
        self._written = total_written
        self._read = total_read
        delta = max(dw / self.write_bw, dr / self.read_bw)
        self.seconds += delta
        return delta


class _Driver:
    """Pushes one op stream through an engine, interval by interval."""

    def __init__(self, engine, workload_spec=None, verify_hits=False):
        self.engine = engine
        self.workload_spec = workload_spec
        self.verify_hits = verify_hits
        self.stage = "filling"
        self.first_eviction_op = None
        self.first_gc_op = None
        self.corrupt_hits = 0
        self.op_index = 0
        self._sizes = {}   # sizes seen in trace sets / memoized spec sizes

    def _size_of(self, key):
        size = self._sizes.get(key)
        if size is None and self.workload_spec is not None:
            size = key_size(self.workload_spec, key)
            self._sizes[key] = size
        return size

    def _apply(self, op: CacheOp):
        engine = self.engine
        if op.kind is OpKind.SET:
            self._sizes[op.key] = op.size
            engine.insert(op.key, value_bytes(op.key, op.size))
        else:
            data = engine.lookup(op.key)
            if data is None:
                size = self._size_of(op.key)
                if size is not None:  # cache-fill after a miss
                    engine.insert(op.key, value_bytes(op.key, size))
            elif self.verify_hits and data != value_bytes(op.key, len(data)):
                self.corrupt_hits += 1

    def step(self, op: CacheOp):
        try:
            self._apply(op)
            self.engine.tick_gc()
        except errors.SimError as e:
            raise errors.ExperimentError(
                f"op {self.op_index} ({op.kind.value} {op.key}): {e}",
                self.op_index) from e
        if self.stage == "filling" and self.engine.eviction_events > 0:
            self.stage = "evicting"
            self.first_eviction_op = self.op_index
        if self.stage == "evicting" and self.engine.gc_events > 0:
            self.stage = "stable"
            self.first_gc_op = self.op_index
        self.op_index += 1


def run(config: ExperimentConfig) -> MetricsReport:
    """Execute one experiment and return (and optionally write) its report."""
    config.validate()
    engine = build(config.scheme)
    if config.trace_path is not None:
        ops = replay(config.trace_path)
    else:
        ops = generate(config.workload)
    driver = _Driver(engine, config.workload, config.verify_hits)
    clock = _Clock(engine.write_bandwidth, engine.read_bandwidth)

    rows = []
    interval_ops = 0
    last_hits = last_misses = 0
    stable_hits = stable_lookups = stable_ops = 0
    stable_seconds = 0.0

    def close_interval():
        nonlocal interval_ops, last_hits, last_misses
        nonlocal stable_hits, stable_lookups, stable_ops, stable_seconds
        m = engine.metrics()
        delta = clock.advance(m.device_bytes_written, m.device_bytes_read)
        hits = m.hits - last_hits
        misses = m.misses - last_misses
        last_hits, last_misses = m.hits, m.misses
        lookups = hits + misses
        wa = (m.device_bytes_written / m.cache_bytes_written
              if m.cache_bytes_written else 1.0)
        rows.append(IntervalRow(
            interval=len(rows) + 1, ops=interval_ops, hits=hits, misses=misses,
            hit_ratio=hits / lookups if lookups else 0.0,
            cache_bytes=m.cache_bytes_written,
            device_bytes=m.device_bytes_written, wa_cum=wa,
            gc_migrated_bytes=m.gc_migrated_bytes,
            empty_zones=m.empty_zones, stage=driver.stage))
        if driver.stage == "stable":
            stable_hits += hits
            stable_lookups += lookups
            stable_ops += interval_ops
            stable_seconds += delta
        interval_ops = 0

    for op in ops:
        driver.step(op)
        interval_ops += 1
        if interval_ops == config.interval_ops:
            close_interval()
    if interval_ops:
        close_interval()

    final = engine.metrics()
    final_wa = (final.device_bytes_written / final.cache_bytes_written
                if final.cache_bytes_written else 1.0)
    throughput = None
    if config.timing_enabled and stable_seconds > 0:
        throughput = stable_ops / stable_seconds
    summary = RunSummary(
        stable_ops_per_sec=throughput,
        stable_hit_ratio=stable_hits / stable_lookups if stable_lookups else None,
        final_wa=final_wa,
        total_sim_seconds=clock.seconds,
        first_eviction_op=driver.first_eviction_op,
        first_gc_op=driver.first_gc_op)
    report = MetricsReport(rows=rows, summary=summary, final_metrics=final,
                           corrupt_hits=driver.corrupt_hits, engine=engine)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(render_csv(report))
    return report


def simulate_time(engine, op_stream) -> float:
    """Drive the ops through the engine charging the bandwidth budgets;
    returns total simulated seconds."""
    driver = _Driver(engine)
    clock = _Clock(engine.write_bandwidth, engine.read_bandwidth)
    for op in op_stream:
        driver.step(op)
    m = engine.metrics()
    clock.advance(m.device_bytes_written, m.device_bytes_read)
    return clock.seconds


# --- config files -------------------------------------------------------------

_SIZE_SUFFIXES = {"kib": 1024, "mib": 1024 ** 2, "gib": 1024 ** 3,
                  "k": 1024, "m": 1024 ** 2, "g": 1024 ** 3, "b": 1}


def parse_size(text: str) -> int:
    t = text.strip().lower()
    for suffix, mult in _SIZE_SUFFIXES.items():
        if t.endswith(suffix) and t[:-len(suffix)].strip():
            return int(float(t[:-len(suffix)].strip()) * mult)
    return int(t)


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "on", "yes"):
        return True
    if t in ("0", "false", "off", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_SCHEME_KEYS = {
    "scheme": str, "zone_count": int, "zone_capacity": parse_size,
    "max_open_zones": int, "region_size": parse_size, "op_ratio": float,
    "vop_ratio": float, "w_low": float, "w_high": float,
    "min_write_zones": int, "max_write_zones": int,
    "cache_capacity_regions": int, "reorder_enabled": _parse_bool,
    "page_size": parse_size, "pages_per_block": int,
    "gc_trigger_free_blocks": int,
    "read_bandwidth": parse_size, "write_bandwidth": parse_size,
}
_WORKLOAD_KEYS = {
    "preset": str, "get_ratio": float, "key_space": int, "zipf_alpha": float,
    "size_min": parse_size, "size_max": parse_size, "op_count": int,
    "seed": int, "trace": str,
}
_RUN_KEYS = {
    "interval_ops": int, "timing": _parse_bool, "output": str,
}


def parse_config_text(text, base_dir=".") -> ExperimentConfig:
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise errors.ConfigError(f"line {number}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in values:
            raise errors.ConfigError(f"line {number}: duplicate key {key!r}")
        schema = {**_SCHEME_KEYS, **_WORKLOAD_KEYS, **_RUN_KEYS}
        if key not in schema:
            raise errors.ConfigError(f"line {number}: unknown key {key!r}")
        try:
            values[key] = schema[key](value)
        except (ValueError, TypeError) as e:
            raise errors.ConfigError(f"line {number}: bad value for {key}: {e}")
    return config_from_values(values, base_dir)


def config_from_values(values, base_dir=".") -> ExperimentConfig:
    if "scheme" not in values:
        raise errors.ConfigError("missing required key: scheme")
    if values["scheme"] not in SCHEME_NAMES:
        raise errors.ConfigError(
            f"unknown scheme {values['scheme']!r}; "
            f"choose one of {', '.join(SCHEME_NAMES)}")
    spec_kwargs = {k: v for k, v in values.items() if k in _SCHEME_KEYS}
    spec_kwargs["name"] = spec_kwargs.pop("scheme")
    scheme = SchemeSpec(**spec_kwargs)

    trace = values.get("trace")
    workload = None
    if trace is not None:
        clash = [k for k in ("preset", "get_ratio", "key_space") if k in values]
        if clash:
            raise errors.ConfigError(
                f"config names both a trace and a synthetic workload "
                f"({', '.join(clash)}); pick one")
        trace = os.path.join(base_dir, trace) if not os.path.isabs(trace) else trace
        if not os.path.exists(trace):
            raise errors.ConfigError(f"trace file not found: {trace}")
    else:
        workload = _workload_from_values(values, scheme)

    return ExperimentConfig(
        scheme=scheme, workload=workload, trace_path=trace,
        interval_ops=values.get("interval_ops", 10_000),
        timing_enabled=values.get("timing", False),
        output_path=values.get("output"))


def _workload_from_values(values, scheme: SchemeSpec) -> WorkloadSpec:
    region = scheme.region_size
    if region is None:
        region = scheme.zone_capacity if scheme.name == "zns-direct" \
            else 16 * 1024 * 1024
    sized = replace(scheme, region_size=region)
    cache_bytes = _schemes._capacity_regions(sized) * region
    preset = values.get("preset")
    if preset is not None:
        spec = preset_spec(preset, cache_bytes,
                           seed=values.get("seed", 1),
                           op_count=values.get("op_count", 100_000))
    else:
        if "get_ratio" not in values or "key_space" not in values:
            raise errors.ConfigError(
                "workload needs a preset, a trace, or get_ratio + key_space")
        spec = WorkloadSpec(name="custom",
                            get_ratio=values["get_ratio"],
                            key_space=values["key_space"],
                            op_count=values.get("op_count", 100_000),
                            seed=values.get("seed", 1))
    overrides = {key: values[key]
                 for key in ("get_ratio", "key_space", "zipf_alpha",
                             "size_min", "size_max", "op_count", "seed")
                 if key in values}
    if overrides:
        spec = replace(spec, **overrides)
    try:
        spec.validate()
    except errors.InvalidSpec as e:
        raise errors.ConfigError(str(e))
    return spec


def parse_config_file(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise errors.ConfigError(f"cannot read config {path}: {e.strerror}")
    return parse_config_text(text, base_dir=os.path.dirname(path) or ".")
