"""Assembly of the comparable cache schemes behind one engine interface.

  zcachelib        zoned backend, ZLRU policy, vop partition, GC drops
                   evictable regions in place instead of migrating them
  zns-middle-lru   zoned backend behind a translation layer that migrates
  zns-middle-fifo  every valid region during GC (cache is unaware of zones)
  zns-direct       region size equals zone capacity; eviction leaves whole
                   zones invalid, so reclamation is a plain reset: GC-free
  reg-lru          conventional block-interface SSD baselines over the
  reg-fifo         page-mapped FTL (internal GC, hidden over-provisioning)

Engines expose insert / lookup / tick_gc / metrics. tick_gc is called at
operation boundaries and is where background reclamation runs, which keeps
every run single-threaded and reproducible.
"""

from dataclasses import dataclass, field, replace

from . import errors
from .ftl import FtlConfig, PageMappedFtl
from .zcache import CacheConfig, Policy, RegionCache
from .zns import DeviceConfig, ZnsDevice
from .zstorage import DropVerb, GcConfig, ZoneStore

MIB = 1024 * 1024

SCHEME_NAMES = ("zcachelib", "zns-middle-lru", "zns-middle-fifo",
                "zns-direct", "reg-lru", "reg-fifo")

_POLICY = {
    "zcachelib": Policy.ZLRU,
    "zns-middle-lru": Policy.LRU,
    "zns-middle-fifo": Policy.FIFO,
    "zns-direct": Policy.LRU,
    "reg-lru": Policy.LRU,
    "reg-fifo": Policy.FIFO,
}


@dataclass
class SchemeSpec:
    name: str
    zone_count: int = 64
    zone_capacity: int = 64 * MIB
    max_open_zones: int = 14
    read_bandwidth: int = 3000 * MIB
    write_bandwidth: int = 1000 * MIB
    region_size: int = None          # default 16 MiB; zone capacity for zns-direct
    op_ratio: float = 0.07           # reserved space / cache space
    vop_ratio: float = 1.0           # zcachelib only
    w_low: float = 1.0
    w_high: float = 3.0
    min_write_zones: int = 4
    max_write_zones: int = None
    cache_capacity_regions: int = None  # override the op_ratio sizing
    reorder_enabled: bool = True
    # FTL geometry for the reg-* baselines
    page_size: int = 4096
    pages_per_block: int = 1024
    gc_trigger_free_blocks: int = 2


@dataclass
class EngineMetrics:
    hits: int = 0
    misses: int = 0
    inserted_bytes: int = 0
    cache_bytes_written: int = 0
    device_bytes_written: int = 0
    device_bytes_read: int = 0
    gc_migrated_bytes: int = 0
    gc_cycles: int = 0
    empty_zones: int = 0
    evicted_regions: int = 0
    dropped_regions: int = 0
    zone_resets: int = 0
    gc_log: list = field(default_factory=list)


def _capacity_regions(spec) -> int:
    if spec.cache_capacity_regions is not None:
        return spec.cache_capacity_regions
    device_bytes = spec.zone_count * spec.zone_capacity
    usable = int(device_bytes / (1.0 + spec.op_ratio))
    count = usable // spec.region_size
    if count < 1:
        raise errors.IncompatibleSpec("device too small for one region of cache")
    return count


class _ZnsEngine:
    """Common wiring for the three zoned schemes."""

    def __init__(self, spec, drop_filter_kind):
        device_cfg = DeviceConfig(spec.zone_count, spec.zone_capacity,
                                  spec.max_open_zones, spec.read_bandwidth,
                                  spec.write_bandwidth)
        self.read_bandwidth = spec.read_bandwidth
        self.write_bandwidth = spec.write_bandwidth
        self.device = ZnsDevice(device_cfg)
        self.store = ZoneStore(self.device, spec.region_size,
                               GcConfig(spec.w_low, spec.w_high),
                               min_write_zones=spec.min_write_zones,
                               max_write_zones=spec.max_write_zones)
        policy = _POLICY[spec.name]
        vop = spec.vop_ratio if policy is Policy.ZLRU else 0.0
        self.cache = RegionCache(
            CacheConfig(_capacity_regions(spec), spec.region_size, vop,
                        policy, spec.reorder_enabled),
            self.store)
        self.gc_free = drop_filter_kind == "none"
        if drop_filter_kind == "cache":
            self._filter = self.cache.zdrop_filter
        else:
            self._filter = lambda vaddr, zone: DropVerb.MIGRATE

    def insert(self, key, value):
        self.cache.insert(key, value)

    def lookup(self, key):
        return self.cache.lookup(key)

    def tick_gc(self):
        if self.gc_free:
            # whole-zone regions go invalid on eviction; reclaim by reset only
            if not self.store.empty_zones:
                self.store.reclaim_invalid_read_zones()
        elif self.store.gc_needed():
            self.store.gc_cycle(self._filter)

    # cheap progress probes for the harness stage tracker
    @property
    def eviction_events(self) -> int:
        return self.cache.stats_counters.evicted_region_count \
            + self.cache.stats_counters.dropped_region_count

    @property
    def gc_events(self) -> int:
        if self.gc_free:
            return self.device.counters.total_resets
        return self.store.gc_cycles

    def metrics(self) -> EngineMetrics:
        snaps, counters = self.device.report()
        c = self.cache.stats()
        return EngineMetrics(
            hits=c.hit_count, misses=c.miss_count,
            inserted_bytes=c.inserted_bytes,
            cache_bytes_written=self.store.cache_region_bytes,
            device_bytes_written=counters.total_appended_bytes,
            device_bytes_read=counters.total_read_bytes,
            gc_migrated_bytes=self.store.migrated_bytes,
            gc_cycles=self.store.gc_cycles,
            empty_zones=len(self.store.empty_zones),
            evicted_regions=c.evicted_region_count,
            dropped_regions=c.dropped_region_count,
            zone_resets=counters.total_resets,
            gc_log=list(self.store.gc_log))


class _FtlRegionStore:
    """Adapts the page-mapped FTL to the region store interface the cache
    expects. A block device gets no eviction hints, so invalidation is a
    no-op; stale pages die when their logical range is overwritten."""

    def __init__(self, ftl, region_size):
        self.ftl = ftl
        self.region_size = region_size
        self.cache_region_bytes = 0

    def write_region(self, vaddr, payload):
        self.ftl.ftl_write(vaddr, payload)
        self.cache_region_bytes += len(payload)
        return vaddr

    def read_region(self, vaddr, offset=0, length=None):
        if length is None:
            length = self.region_size - offset
        return self.ftl.ftl_read(vaddr + offset, length)

    def invalidate_region(self, vaddr):
        pass

    def zone_of(self, vaddr):
        return None


class _RegEngine:
    def __init__(self, spec):
        self.read_bandwidth = spec.read_bandwidth
        self.write_bandwidth = spec.write_bandwidth
        block_bytes = spec.page_size * spec.pages_per_block
        device_bytes = spec.zone_count * spec.zone_capacity
        if device_bytes % block_bytes != 0:
            raise errors.IncompatibleSpec(
                "device size must be a whole number of erase blocks")
        if spec.region_size % spec.page_size != 0:
            raise errors.IncompatibleSpec("region size must be page-aligned")
        self.ftl = PageMappedFtl(FtlConfig(
            pages_per_block=spec.pages_per_block,
            block_count=device_bytes // block_bytes,
            page_size=spec.page_size,
            internal_op_ratio=spec.op_ratio,
            gc_trigger_free_blocks=spec.gc_trigger_free_blocks))
        capacity = _capacity_regions(spec)
        if capacity * spec.region_size > self.ftl.config.exported_bytes:
            raise errors.IncompatibleSpec(
                "cache regions exceed the FTL's exported capacity")
        self.store = _FtlRegionStore(self.ftl, spec.region_size)
        self.cache = RegionCache(
            CacheConfig(capacity, spec.region_size, 0.0, _POLICY[spec.name],
                        reorder_enabled=False),
            self.store)

    def insert(self, key, value):
        self.cache.insert(key, value)

    def lookup(self, key):
        return self.cache.lookup(key)

    def tick_gc(self):
        pass  # internal GC is inline in the FTL write path

    @property
    def eviction_events(self) -> int:
        return self.cache.stats_counters.evicted_region_count

    @property
    def gc_events(self) -> int:
        return self.ftl.gc_runs

    def metrics(self) -> EngineMetrics:
        c = self.cache.stats()
        return EngineMetrics(
            hits=c.hit_count, misses=c.miss_count,
            inserted_bytes=c.inserted_bytes,
            cache_bytes_written=self.store.cache_region_bytes,
            device_bytes_written=self.ftl.nand_bytes_written,
            device_bytes_read=self.ftl.read_bytes + self.ftl.migrated_bytes,
            gc_migrated_bytes=self.ftl.migrated_bytes,
            gc_cycles=self.ftl.gc_runs,
            empty_zones=self.ftl.free_block_count,
            evicted_regions=c.evicted_region_count,
            dropped_regions=c.dropped_region_count,
            zone_resets=self.ftl.erase_count)


def build(spec: SchemeSpec):
    """Wire a fully configured engine for one scheme."""
    if spec.name not in SCHEME_NAMES:
        raise errors.IncompatibleSpec(f"unknown scheme {spec.name!r}; "
                                      f"choose one of {', '.join(SCHEME_NAMES)}")
    if spec.region_size is None:
        default = spec.zone_capacity if spec.name == "zns-direct" else 16 * MIB
        spec = replace(spec, region_size=default)
    if spec.name == "zns-direct":
        if spec.region_size != spec.zone_capacity:
            raise errors.IncompatibleSpec(
                "zns-direct requires region_size == zone_capacity")
        spec = replace(spec, min_write_zones=1)
        return _ZnsEngine(spec, "none")
    if spec.name == "zcachelib":
        return _ZnsEngine(spec, "cache")
    if spec.name in ("zns-middle-lru", "zns-middle-fifo"):
        return _ZnsEngine(spec, "migrate")
    return _RegEngine(spec)


def wa_factor(engine) -> float:
    """Total device writes (GC included) divided by cache-engine writes."""
    m = engine.metrics()
    if m.cache_bytes_written == 0:
        raise errors.SimError("no region has been flushed yet")
    return m.device_bytes_written / m.cache_bytes_written
