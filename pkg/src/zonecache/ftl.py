"""Minimal page-mapped FTL emulator for a conventional block-interface SSD.

Models just enough firmware behavior to compare against zoned backends:
logical page remapping, an active erase block filled append-style, greedy
internal GC (victim = fewest valid pages, lowest block index on ties), and
internal over-provisioning hidden from the host. GC runs inline during
writes; there is no background thread.
"""

import heapq
from dataclasses import dataclass

from . import errors

PAGE = 4096


@dataclass
class FtlConfig:
    pages_per_block: int
    block_count: int
    page_size: int = PAGE
    internal_op_ratio: float = 0.07
    gc_trigger_free_blocks: int = 2

    def validate(self):
        if self.page_size < 1 or self.pages_per_block < 1 or self.block_count < 1:
            raise errors.InvalidConfig("page/block geometry must be >= 1")
        if self.internal_op_ratio < 0:
            raise errors.InvalidConfig("internal_op_ratio must be >= 0")
        if self.gc_trigger_free_blocks < 1:
            raise errors.InvalidConfig("gc_trigger_free_blocks must be >= 1")
        if self.exported_bytes < self.page_size:
            raise errors.InvalidConfig("exported capacity under one page")

    @property
    def total_bytes(self) -> int:
        return self.block_count * self.pages_per_block * self.page_size

    @property
    def exported_bytes(self) -> int:
        # physical space split between exported capacity and reserved OP
        raw = int(self.total_bytes / (1.0 + self.internal_op_ratio))
        return raw - raw % self.page_size

    @property
    def exported_pages(self) -> int:
        return self.exported_bytes // self.page_size


class PageMappedFtl:
    def __init__(self, config: FtlConfig):
        config.validate()
        self.config = config
        self.mapping = {}            # logical page -> physical page
        self.reverse = {}            # physical page -> logical page (valid pages only)
        self.page_data = {}          # physical page -> bytes (valid pages only)
        self.valid_counts = [0] * config.block_count
        self.free_blocks = list(range(config.block_count))
        heapq.heapify(self.free_blocks)
        self.active_block = None
        self.active_fill = 0         # pages consumed in the active block
        self.host_bytes_written = 0
        self.nand_bytes_written = 0
        self.read_bytes = 0
        self.migrated_bytes = 0
        self.gc_runs = 0
        self.erase_count = 0

    # -- allocation and GC ---------------------------------------------------

    @property
    def free_block_count(self) -> int:
        return len(self.free_blocks)

    def _take_active(self):
        if not self.free_blocks:
            raise errors.DeviceBusy("no free erase blocks remain")
        self.active_block = heapq.heappop(self.free_blocks)
        self.active_fill = 0

    def _alloc_page(self) -> int:
        if self.active_block is None or self.active_fill == self.config.pages_per_block:
            self._take_active()
        ppage = self.active_block * self.config.pages_per_block + self.active_fill
        self.active_fill += 1
        return ppage

    def _place(self, lpage: int, data: bytes):
        old = self.mapping.get(lpage)
        ppage = self._alloc_page()
        if old is not None:
            # invalidate after allocating so GC never migrates the stale copy
            self.valid_counts[old // self.config.pages_per_block] -= 1
            del self.reverse[old]
            del self.page_data[old]
        self.mapping[lpage] = ppage
        self.reverse[ppage] = lpage
        self.page_data[ppage] = data
        self.valid_counts[ppage // self.config.pages_per_block] += 1
        self.nand_bytes_written += self.config.page_size

    def _select_victim(self):
        best = None
        for block in range(self.config.block_count):
            if block == self.active_block:
                continue
            if block in self._free_set:
                continue
            count = self.valid_counts[block]
            if best is None or count < self.valid_counts[best]:
                best = block
        return best

    @property
    def _free_set(self):
        return set(self.free_blocks)

    def ftl_internal_gc(self) -> int:
        """Reclaim erase blocks until the free pool reaches the trigger level.

        No-op when enough blocks are already free. Returns migrated page count.
        """
        if self.free_block_count >= self.config.gc_trigger_free_blocks:
            return 0
        self.gc_runs += 1
        ppb = self.config.pages_per_block
        migrated = 0
        while self.free_block_count < self.config.gc_trigger_free_blocks:
            victim = self._select_victim()
            if victim is None or self.valid_counts[victim] >= ppb:
                break  # nothing reclaimable: every candidate is fully valid
            base = victim * ppb
            for ppage in range(base, base + ppb):
                lpage = self.reverse.get(ppage)
                if lpage is None:
                    continue
                data = self.page_data[ppage]
                self.valid_counts[victim] -= 1
                del self.reverse[ppage]
                del self.page_data[ppage]
                new_ppage = self._alloc_page()
                self.mapping[lpage] = new_ppage
                self.reverse[new_ppage] = lpage
                self.page_data[new_ppage] = data
                self.valid_counts[new_ppage // ppb] += 1
                self.nand_bytes_written += self.config.page_size
                self.migrated_bytes += self.config.page_size
                migrated += 1
            self.erase_count += 1
            heapq.heappush(self.free_blocks, victim)
        return migrated

    # -- host interface --------------------------------------------------------

    def ftl_write(self, logical_address: int, payload):
        ps = self.config.page_size
        if logical_address % ps != 0 or len(payload) % ps != 0:
            raise errors.Misaligned("writes must be page-aligned in address and length")
        if logical_address < 0 or logical_address + len(payload) > self.config.exported_bytes:
            raise errors.OutOfRange("write outside exported capacity")
        if len(payload) == 0:
            return
        first = logical_address // ps
        ppb = self.config.pages_per_block
        view = memoryview(payload)
        for i in range(len(payload) // ps):
            # GC fires only when a fresh erase block is about to be taken;
            # checking per page instead would evict victims mid-drain and
            # inflate WA even for strictly sequential overwrites
            if (self.active_block is None or self.active_fill == ppb) \
                    and self.free_block_count < self.config.gc_trigger_free_blocks:
                self.ftl_internal_gc()
            self._place(first + i, bytes(view[i * ps:(i + 1) * ps]))
            self.host_bytes_written += ps

    def ftl_read(self, logical_address: int, length: int) -> bytes:
        ps = self.config.page_size
        if logical_address < 0 or length < 0 \
                or logical_address + length > self.config.exported_bytes:
            raise errors.OutOfRange("read outside exported capacity")
        if length == 0:
            return b""
        out = bytearray()
        pos = logical_address
        remaining = length
        while remaining > 0:
            lpage = pos // ps
            ppage = self.mapping.get(lpage)
            if ppage is None:
                raise errors.Unmapped(f"logical page {lpage} never written")
            lo = pos % ps
            take = min(remaining, ps - lo)
            out += self.page_data[ppage][lo:lo + take]
            pos += take
            remaining -= take
        self.read_bytes += length
        return bytes(out)
