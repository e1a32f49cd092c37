"""In-memory emulation of a zoned (ZNS-style) SSD.

Zones are append-only: each zone accepts writes only at its write pointer
and is cleaned as a whole by reset. Payloads are stored byte-faithfully so
read-back and migration tests can compare actual buffers, not just sizes.
"""

import bisect
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum

from . import errors

MIB = 1024 * 1024
PAGE = 4096


class ZoneState(Enum):
    EMPTY = "empty"
    OPEN = "open"
    FULL = "full"


@dataclass
class DeviceConfig:
    zone_count: int = 64
    zone_capacity: int = 64 * MIB
    max_open_zones: int = 14
    # bandwidths feed the harness timing model only (bytes per simulated second)
    read_bandwidth: int = 3000 * MIB
    write_bandwidth: int = 1000 * MIB

    def validate(self):
        if self.zone_count < 1:
            raise errors.InvalidConfig("zone_count must be >= 1")
        if self.zone_capacity < 1:
            raise errors.InvalidConfig("zone_capacity must be >= 1")
        if self.zone_capacity % PAGE != 0:
            raise errors.InvalidConfig("zone_capacity must be a multiple of 4096")
        if not (1 <= self.max_open_zones <= self.zone_count):
            raise errors.InvalidConfig("max_open_zones must be in [1, zone_count]")
        if self.read_bandwidth < 1 or self.write_bandwidth < 1:
            raise errors.InvalidConfig("bandwidths must be >= 1")


@dataclass
class ZoneSnapshot:
    id: int
    state: ZoneState
    write_pointer: int
    reset_count: int


@dataclass
class DeviceCounters:
    total_appended_bytes: int = 0
    total_read_bytes: int = 0
    total_resets: int = 0
    open_zone_count: int = 0


class _Zone:
    __slots__ = ("id", "state", "write_pointer", "reset_count",
                 "chunks", "chunk_starts", "readers")

    def __init__(self, zone_id):
        self.id = zone_id
        self.state = ZoneState.EMPTY
        self.write_pointer = 0
        self.reset_count = 0
        # appended payloads kept as-is; chunk_starts[i] is the zone offset of chunks[i]
        self.chunks = []
        self.chunk_starts = []
        self.readers = 0


class ZnsDevice:
    """One emulated zoned device. All operations are atomic under one lock."""

    def __init__(self, config: DeviceConfig):
        config.validate()
        self.config = config
        self._zones = [_Zone(i) for i in range(config.zone_count)]
        self._lock = threading.RLock()
        self.counters = DeviceCounters()

    # -- helpers -----------------------------------------------------------

    def _zone(self, zone_id) -> _Zone:
        if not 0 <= zone_id < self.config.zone_count:
            raise errors.OutOfRange(f"no such zone: {zone_id}")
        return self._zones[zone_id]

    def zone_state(self, zone_id) -> ZoneState:
        return self._zone(zone_id).state

    def write_pointer(self, zone_id) -> int:
        return self._zone(zone_id).write_pointer

    # -- operations --------------------------------------------------------

    def append(self, zone_id: int, payload) -> int:
        """Append payload at the zone's write pointer; returns the device-global
        physical address (zone_id * zone_capacity + previous write pointer)."""
        cap = self.config.zone_capacity
        with self._lock:
            zone = self._zone(zone_id)
            if zone.state is ZoneState.FULL:
                raise errors.ZoneNotWritable(f"zone {zone_id} is full")
            if zone.write_pointer + len(payload) > cap:
                raise errors.ZoneFull(
                    f"zone {zone_id}: {len(payload)} bytes exceed remaining "
                    f"{cap - zone.write_pointer}")
            if len(payload) == 0:
                return zone_id * cap + zone.write_pointer
            if zone.state is ZoneState.EMPTY:
                # first append opens the zone implicitly
                if self.counters.open_zone_count >= self.config.max_open_zones:
                    raise errors.MaxOpenZonesExceeded(
                        f"opening zone {zone_id} would exceed "
                        f"{self.config.max_open_zones} open zones")
                zone.state = ZoneState.OPEN
                self.counters.open_zone_count += 1
            addr = zone_id * cap + zone.write_pointer
            zone.chunk_starts.append(zone.write_pointer)
            zone.chunks.append(bytes(payload))
            zone.write_pointer += len(payload)
            self.counters.total_appended_bytes += len(payload)
            if zone.write_pointer == cap:
                zone.state = ZoneState.FULL
                self.counters.open_zone_count -= 1
            return addr

    def read(self, physical_address: int, length: int) -> bytes:
        cap = self.config.zone_capacity
        if physical_address < 0 or length < 0:
            raise errors.OutOfRange("negative address or length")
        zone_id = physical_address // cap
        offset = physical_address % cap
        with self._lock:
            zone = self._zone(zone_id)
            if offset + length > cap:
                raise errors.CrossZoneRead(
                    f"range [{offset}, {offset + length}) spans past zone {zone_id}")
            if offset + length > zone.write_pointer:
                raise errors.ReadBeyondWritePointer(
                    f"zone {zone_id}: read up to {offset + length} but write "
                    f"pointer is {zone.write_pointer}")
            self.counters.total_read_bytes += length
            if length == 0:
                return b""
            return self._slice(zone, offset, length)

    @staticmethod
    def _slice(zone, offset, length) -> bytes:
        i = bisect.bisect_right(zone.chunk_starts, offset) - 1
        start = zone.chunk_starts[i]
        chunk = zone.chunks[i]
        if offset + length <= start + len(chunk):
            lo = offset - start
            return chunk[lo:lo + length]
        # assemble across chunk boundaries (appends smaller than the read)
        out = bytearray()
        remaining = length
        pos = offset
        while remaining > 0:
            start = zone.chunk_starts[i]
            chunk = zone.chunks[i]
            lo = pos - start
            take = min(remaining, len(chunk) - lo)
            out += chunk[lo:lo + take]
            pos += take
            remaining -= take
            i += 1
        return bytes(out)

    def reset(self, zone_id: int):
        """Wipe the zone. Fails with ZoneBusy while shared readers are registered."""
        with self._lock:
            zone = self._zone(zone_id)
            if zone.readers > 0:
                raise errors.ZoneBusy(f"zone {zone_id} has {zone.readers} readers")
            if zone.state is ZoneState.OPEN:
                self.counters.open_zone_count -= 1
            zone.state = ZoneState.EMPTY
            zone.write_pointer = 0
            zone.chunks = []
            zone.chunk_starts = []
            zone.reset_count += 1
            self.counters.total_resets += 1

    def finish(self, zone_id: int):
        """Close an open zone early; the unwritten tail becomes unusable."""
        with self._lock:
            zone = self._zone(zone_id)
            if zone.state is not ZoneState.OPEN:
                raise errors.ZoneNotOpen(f"zone {zone_id} is {zone.state.value}")
            zone.state = ZoneState.FULL
            self.counters.open_zone_count -= 1

    @contextmanager
    def shared_reader(self, zone_id: int):
        """Registers a shared reader; reset of the zone is rejected meanwhile."""
        with self._lock:
            zone = self._zone(zone_id)
            zone.readers += 1
        try:
            yield
        finally:
            with self._lock:
                zone.readers -= 1

    def report(self):
        """Point-in-time snapshot of all zones plus the device counters."""
        with self._lock:
            snaps = [ZoneSnapshot(z.id, z.state, z.write_pointer, z.reset_count)
                     for z in self._zones]
            counters = DeviceCounters(
                self.counters.total_appended_bytes,
                self.counters.total_read_bytes,
                self.counters.total_resets,
                self.counters.open_zone_count)
        return snaps, counters


def create_device(config: DeviceConfig) -> ZnsDevice:
    return ZnsDevice(config)
