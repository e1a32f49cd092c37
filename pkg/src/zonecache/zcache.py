"""Log-structured region cache.

Items are packed into a RAM buffer one region wide; full buffers are flushed
to the backing store with a single large write. Flushed regions live in a
recency list that eviction policies operate on:

  FIFO  insertion order, no movement on hit
  LRU   hit moves the region to the head
  ZLRU  LRU plus a tail-side "virtual over-provisioning" (vop) partition:
        regions there are marked evictable yet stay readable, hits promote
        them back, and a reorder pass sinks regions whose zones look like
        upcoming GC victims toward the evictable tail

Eviction is region-granular top-down (list tail), while the drop filter
gives GC a bottom-up path: regions in a victim zone that the policy deems
evictable are dropped in place instead of being migrated.
"""

import threading
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum

from . import errors
from .zstorage import DropVerb

MIB = 1024 * 1024


class Policy(Enum):
    FIFO = "fifo"
    LRU = "lru"
    ZLRU = "zlru"


class RegionStatus(Enum):
    FREE = "free"
    BUFFERED = "buffered"
    FLUSHED = "flushed"
    EVICTING = "evicting"
    EVICTED = "evicted"


_ALLOWED = {
    RegionStatus.FREE: (RegionStatus.BUFFERED,),
    RegionStatus.BUFFERED: (RegionStatus.FLUSHED,),
    RegionStatus.FLUSHED: (RegionStatus.EVICTING,),
    RegionStatus.EVICTING: (RegionStatus.EVICTED,),
    RegionStatus.EVICTED: (RegionStatus.FREE,),
}


@dataclass
class CacheConfig:
    cache_capacity_regions: int
    region_size: int = 16 * MIB
    vop_ratio: float = 1.0
    policy: Policy = Policy.ZLRU
    reorder_enabled: bool = True

    def validate(self):
        if self.cache_capacity_regions < 1:
            raise errors.InvalidConfig("cache_capacity_regions must be >= 1")
        if self.region_size < 1:
            raise errors.InvalidConfig("region_size must be >= 1")
        if not 0.0 <= self.vop_ratio <= 1.0:
            raise errors.InvalidConfig("vop_ratio must be in [0, 1]")


@dataclass
class CacheStats:
    hit_count: int = 0
    miss_count: int = 0
    inserted_bytes: int = 0
    evicted_region_count: int = 0
    dropped_region_count: int = 0


class RecencyList:
    """Recency-ordered region ids, head = most recent. O(1) everywhere."""

    def __init__(self):
        self._od = OrderedDict()

    def __len__(self):
        return len(self._od)

    def __contains__(self, rid):
        return rid in self._od

    def __iter__(self):  # head to tail
        return iter(self._od)

    def push_head(self, rid):
        self._od[rid] = None
        self._od.move_to_end(rid, last=False)

    def push_tail(self, rid):
        self._od[rid] = None

    def move_to_head(self, rid):
        self._od.move_to_end(rid, last=False)

    def move_to_tail(self, rid):
        self._od.move_to_end(rid, last=True)

    def remove(self, rid):
        del self._od[rid]

    def tail(self):
        return next(reversed(self._od)) if self._od else None

    def pop_tail(self):
        rid, _ = self._od.popitem(last=True)
        return rid


class _Region:
    __slots__ = ("id", "status", "fill", "keys")

    def __init__(self, rid):
        self.id = rid
        self.status = RegionStatus.FREE
        self.fill = 0
        self.keys = {}  # key -> (offset, size), live items only

    def set_status(self, new):
        if new not in _ALLOWED[self.status]:
            raise RuntimeError(
                f"region {self.id}: illegal {self.status.value} -> {new.value}")
        self.status = new


class RegionCache:
    """Cache engine over a region store (zoned or FTL-backed)."""

    def __init__(self, config: CacheConfig, store):
        config.validate()
        self.config = config
        self.store = store
        self.regions = [_Region(i) for i in range(config.cache_capacity_regions)]
        self.free_slots = list(range(config.cache_capacity_regions))
        self.free_slots.reverse()  # pop() yields lowest id first
        self.main = RecencyList()
        self.vop = RecencyList()
        self.index = {}  # key -> (region id, offset, size)
        self._buffer = bytearray(config.region_size)
        self._buffered = None  # region id currently accepting items
        self.stats_counters = CacheStats()
        self.flushed_count = 0
        self._lock = threading.RLock()

    def vaddr(self, rid) -> int:
        return rid * self.config.region_size

    # -- eviction list maintenance ----------------------------------------------

    def _vop_target(self) -> int:
        if self.config.policy is not Policy.ZLRU:
            return 0
        total = len(self.main) + len(self.vop)
        return int(self.config.vop_ratio * total)

    def _rebalance(self):
        # single direction: demote the main tail until the split is satisfied
        while len(self.vop) < self._vop_target() and len(self.main) > 0:
            self.vop.push_head(self.main.pop_tail())

    def zlru_reorder(self) -> int:
        """Sink vop regions whose zone is a likely GC victim to the vop tail.

        A zone is a candidate when it holds strictly fewer main-partition
        regions than the average over zones holding any listed region.
        Relative order among moved regions is preserved. Returns move count.
        """
        if self.config.policy is not Policy.ZLRU or not self.config.reorder_enabled:
            return 0
        main_count = {}
        holding = set()
        for rid in self.main:
            z = self.store.zone_of(self.vaddr(rid))
            holding.add(z)
            main_count[z] = main_count.get(z, 0) + 1
        vop_zone = {}
        for rid in self.vop:
            z = self.store.zone_of(self.vaddr(rid))
            holding.add(z)
            vop_zone[rid] = z
        if not holding:
            return 0
        average = sum(main_count.values()) / len(holding)
        candidates = {z for z in holding if main_count.get(z, 0) < average}
        moved = [rid for rid in self.vop if vop_zone[rid] in candidates]
        for rid in moved:  # head-first re-append keeps relative order
            self.vop.move_to_tail(rid)
        return len(moved)

    # -- buffer and flush -------------------------------------------------------

    def _alloc_buffer(self):
        if not self.free_slots:
            self.evict_one()
        rid = self.free_slots.pop()
        region = self.regions[rid]
        region.set_status(RegionStatus.BUFFERED)
        region.fill = 0
        region.keys = {}
        self._buffered = rid

    def _flush(self):
        rid = self._buffered
        region = self.regions[rid]
        data = bytes(self._buffer)  # fixed-width write, tail padding included
        self.store.write_region(self.vaddr(rid), data)
        region.set_status(RegionStatus.FLUSHED)
        self.main.push_head(rid)
        self._rebalance()
        self.flushed_count += 1
        self._buffered = None
        if self.config.policy is Policy.ZLRU:
            self.zlru_reorder()

    # -- cache interface -------------------------------------------------------

    def insert(self, key, value):
        if len(value) > self.config.region_size:
            raise errors.ItemTooLarge(
                f"{len(value)} bytes exceeds region size {self.config.region_size}")
        with self._lock:
            if self._buffered is None:
                self._alloc_buffer()
            region = self.regions[self._buffered]
            if region.fill + len(value) > self.config.region_size:
                self._flush()
                self._alloc_buffer()
                region = self.regions[self._buffered]
            offset = region.fill
            self._buffer[offset:offset + len(value)] = value
            region.fill += len(value)
            old = self.index.get(key)
            if old is not None:
                # superseded copy: drop the old region's live-item entry
                self.regions[old[0]].keys.pop(key, None)
            region.keys[key] = (offset, len(value))
            self.index[key] = (region.id, offset, len(value))
            self.stats_counters.inserted_bytes += len(value)

    def lookup(self, key):
        with self._lock:
            entry = self.index.get(key)
            if entry is None:
                self.stats_counters.miss_count += 1
                return None
            rid, offset, size = entry
            region = self.regions[rid]
            if region.status is RegionStatus.BUFFERED:
                data = bytes(self._buffer[offset:offset + size])
            elif region.status is RegionStatus.FLUSHED:
                data = self.store.read_region(self.vaddr(rid), offset, size)
            else:
                self.stats_counters.miss_count += 1
                return None
            self.stats_counters.hit_count += 1
            if self.config.policy is not Policy.FIFO \
                    and region.status is RegionStatus.FLUSHED:
                if rid in self.vop:
                    self.vop.remove(rid)
                    self.main.push_head(rid)
                    self._rebalance()  # demotes main tail into vop head
                else:
                    self.main.move_to_head(rid)
            return data

    def evict_one(self) -> int:
        """Top-down eviction of the least valuable flushed region."""
        with self._lock:
            if self.config.policy is Policy.ZLRU and len(self.vop) > 0:
                rid = self.vop.tail()
            else:
                rid = self.main.tail() if len(self.main) else self.vop.tail()
            if rid is None:
                raise errors.NothingToEvict("no flushed region to evict")
            self._teardown(rid, invalidate=True)
            self.stats_counters.evicted_region_count += 1
            return rid

    def _teardown(self, rid, invalidate):
        region = self.regions[rid]
        region.set_status(RegionStatus.EVICTING)
        for key in region.keys:
            del self.index[key]
        region.keys = {}
        if invalidate:
            self.store.invalidate_region(self.vaddr(rid))
        region.set_status(RegionStatus.EVICTED)
        if rid in self.vop:
            self.vop.remove(rid)
        else:
            self.main.remove(rid)
        region.set_status(RegionStatus.FREE)
        region.fill = 0
        self.free_slots.append(rid)
        self._rebalance()

    def zdrop_filter(self, region_virtual_address, victim_zone_id) -> DropVerb:
        """Bottom-up eviction decision for one region in a GC victim zone.

        Wait while a top-down eviction of the region is mid-flight; skip
        regions already gone or remapped since the victim snapshot; drop
        evictable ones in place (the store unmaps after we return); migrate
        the rest.
        """
        with self._lock:
            rid = region_virtual_address // self.config.region_size
            if not 0 <= rid < len(self.regions):
                return DropVerb.SKIP
            region = self.regions[rid]
            if region.status is RegionStatus.EVICTING:
                return DropVerb.WAIT
            if region.status is not RegionStatus.FLUSHED:
                return DropVerb.SKIP
            if self.store.zone_of(region_virtual_address) != victim_zone_id:
                return DropVerb.SKIP  # stale copy; current data lives elsewhere
            if rid in self.vop or self.config.vop_ratio == 1.0:
                self._teardown(rid, invalidate=False)
                self.stats_counters.dropped_region_count += 1
                return DropVerb.DROP
            return DropVerb.MIGRATE

    def stats(self) -> CacheStats:
        c = self.stats_counters
        return CacheStats(c.hit_count, c.miss_count, c.inserted_bytes,
                          c.evicted_region_count, c.dropped_region_count)
