"""Deterministic synthetic workloads and trace replay.

Key popularity follows a bounded zipf distribution sampled with a
cumulative-weight table, so identical specs always produce identical op
streams regardless of platform. Object sizes are log-uniform and derived
from a keyed hash, which keeps every key's size stable across re-inserts
and across runs.
"""

import bisect
import math
import random
from dataclasses import dataclass
from enum import Enum
from hashlib import blake2b

from . import errors

KIB = 1024


class OpKind(Enum):
    GET = "get"
    SET = "set"


@dataclass
class CacheOp:
    kind: OpKind
    key: str
    size: int = 0  # Set only


@dataclass
class WorkloadSpec:
    name: str
    get_ratio: float
    key_space: int
    op_count: int
    seed: int = 1
    zipf_alpha: float = 1.0
    size_min: int = 2 * KIB
    size_max: int = 256 * KIB

    def validate(self):
        if not 0.0 <= self.get_ratio <= 1.0:
            raise errors.InvalidSpec("get_ratio must be in [0, 1]")
        if self.key_space < 1:
            raise errors.InvalidSpec("key_space must be >= 1")
        if self.op_count < 1:
            raise errors.InvalidSpec("op_count must be >= 1")
        if self.zipf_alpha < 0:
            raise errors.InvalidSpec("zipf_alpha must be >= 0")
        if not 1 <= self.size_min <= self.size_max:
            raise errors.InvalidSpec("need 1 <= size_min <= size_max")


# get ratios for the shipped workload profiles
PRESET_GET_RATIOS = {"l2_wc": 0.60, "l2_reg": 0.88, "flat": 0.985}


def mean_object_size(size_min, size_max) -> float:
    if size_min == size_max:
        return float(size_min)
    return (size_max - size_min) / math.log(size_max / size_min)


def preset_spec(preset: str, cache_bytes: int, seed: int = 1,
                op_count: int = 100_000) -> WorkloadSpec:
    """Build a workload spec for one of the named profiles, with the key
    space sized so the working set is about 1.5x the cache."""
    if preset not in PRESET_GET_RATIOS:
        raise errors.InvalidSpec(
            f"unknown preset {preset!r}; choose one of {', '.join(PRESET_GET_RATIOS)}")
    size_min, size_max = 2 * KIB, 256 * KIB
    keys = max(1, round(1.5 * cache_bytes / mean_object_size(size_min, size_max)))
    return WorkloadSpec(name=f"{preset}-like",
                        get_ratio=PRESET_GET_RATIOS[preset],
                        key_space=keys, op_count=op_count, seed=seed,
                        zipf_alpha=1.0, size_min=size_min, size_max=size_max)


def _hash_unit(*parts) -> float:
    """Stable hash of the parts mapped into [0, 1)."""
    digest = blake2b("|".join(str(p) for p in parts).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big") / 2.0 ** 64


def key_size(spec: WorkloadSpec, key: str) -> int:
    """Log-uniform size in [size_min, size_max], a pure function of the key."""
    if spec.size_min == spec.size_max:
        return spec.size_min
    u = _hash_unit(spec.seed, key, "size")
    span = math.log(spec.size_max / spec.size_min)
    return min(spec.size_max, int(spec.size_min * math.exp(u * span)))


def value_bytes(key: str, size: int) -> bytes:
    """Deterministic payload for a key: a keyed 8-byte pattern tiled to size.
    Reconstructable from the key alone, so integrity checks never need to
    store a second copy of the data."""
    if size == 0:
        return b""
    tile = blake2b(str(key).encode(), digest_size=8).digest()
    return (tile * (size // 8 + 1))[:size]


class ZipfSampler:
    """Bounded zipf(alpha) over ranks 0..n-1 via an inverse-CDF table."""

    def __init__(self, n, alpha):
        weights = [1.0 / (r + 1) ** alpha for r in range(n)]
        total = 0.0
        self._cumulative = []
        for w in weights:
            total += w
            self._cumulative.append(total)
        self._total = total

    def sample(self, u: float) -> int:
        return bisect.bisect_left(self._cumulative, u * self._total)


def generate(spec: WorkloadSpec):
    """Deterministic op stream for the spec. Get misses are turned into
    fill Sets by the harness, not here."""
    spec.validate()
    rng = random.Random(spec.seed)
    sampler = ZipfSampler(spec.key_space, spec.zipf_alpha)
    for _ in range(spec.op_count):
        is_get = rng.random() < spec.get_ratio
        key = f"k{sampler.sample(rng.random())}"
        if is_get:
            yield CacheOp(OpKind.GET, key)
        else:
            yield CacheOp(OpKind.SET, key, key_size(spec, key))


def replay(path):
    """Parse a trace file into CacheOps.

    One op per line: `set <key> <size_bytes>` or `get <key>`; `#` starts a
    comment line. Raises ParseError naming the offending line.
    """
    ops = []
    with open(path) as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(" ")
            if fields[0] == "get" and len(fields) == 2:
                ops.append(CacheOp(OpKind.GET, fields[1]))
            elif fields[0] == "set" and len(fields) == 3:
                try:
                    size = int(fields[2])
                except ValueError:
                    raise errors.ParseError(
                        f"line {number}: bad size {fields[2]!r}", number)
                if size < 0:
                    raise errors.ParseError(
                        f"line {number}: negative size", number)
                ops.append(CacheOp(OpKind.SET, fields[1], size))
            else:
                raise errors.ParseError(
                    f"line {number}: expected 'get <key>' or "
                    f"'set <key> <size>', got {line!r}", number)
    return ops


def write_trace(ops, path):
    with open(path, "w") as fh:
        fh.write("# zonecache trace: set <key> <size_bytes> | get <key>\n")
        for op in ops:
            if op.kind is OpKind.SET:
                fh.write(f"set {op.key} {op.size}\n")
            else:
                fh.write(f"get {op.key}\n")
