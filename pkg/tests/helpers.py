"""Shared fixtures: a small 8-zone geometry and a scripted op driver.

The tiny layout keeps the watermark reserve reachable (capacity 7 of 16
region slots) so background cleaning behaves the same way it does at full
size, just faster.
"""

import random

from zonecache import SchemeSpec
from zonecache.workload import value_bytes

KIB = 1024
MIB = 1024 * KIB


def tiny_spec(name, **overrides):
    base = dict(name=name, zone_count=8, zone_capacity=32 * KIB,
                max_open_zones=8, region_size=16 * KIB,
                min_write_zones=2, max_write_zones=2,
                w_low=25.0, w_high=50.0, cache_capacity_regions=7,
                page_size=2 * KIB, pages_per_block=4)
    if name == "zns-direct":
        base["region_size"] = 32 * KIB
        del base["min_write_zones"], base["max_write_zones"]
    base.update(overrides)
    return SchemeSpec(**base)


def make_script(seed, ops=400, keys=30, get_ratio=0.5, size_max=16 * KIB):
    rng = random.Random(seed)
    sizes = {f"k{i}": rng.randrange(2 * KIB, size_max + 1) for i in range(keys)}
    script = []
    for _ in range(ops):
        key = f"k{rng.randrange(keys)}"
        script.append((rng.random() < get_ratio, key, sizes[key]))
    return script


def drive(engine, script):
    """Runs the script with cache-fill on miss; returns the hit sequence."""
    hits = []
    for is_get, key, size in script:
        if is_get:
            data = engine.lookup(key)
            hits.append(data is not None)
            if data is None:
                engine.insert(key, value_bytes(key, size))
        else:
            engine.insert(key, value_bytes(key, size))
        engine.tick_gc()
    return hits
