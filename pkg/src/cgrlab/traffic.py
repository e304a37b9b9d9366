"""Seeded generation of the three bundle traffic classes.

Streaming traffic models periodic telemetry: one 1 Mb critical bundle every
5 seconds at priority 2.  Expedited traffic models urgent sensor data: up to
three 1-5 Mb bundles per 10-second window at priority 1.  Data traffic models
bulk imagery: bursts of twenty 1-5 Mb bundles spread over 25 seconds at
priority 0.  Composite scenarios rescale the classes so that priorities 2 and
1 together contribute 25% of the bundles and priority 0 the remaining 75%.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass

from cgrlab.forwarding import Bundle


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one seeded traffic scenario."""

    seed: int
    duration: int
    source: str
    dest_pool: tuple[str, ...]
    with_critical: bool = True
    ttl_range: tuple[int, int] = (20, 30)

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.source in self.dest_pool:
            raise ValueError("dest_pool must exclude the source")


def _rng(spec: ScenarioSpec, stream: str) -> random.Random:
    return random.Random(f"{spec.seed}:{stream}")


def _finish(spec: ScenarioSpec, raw: list[tuple[float, float, int, bool]]) -> list[Bundle]:
    """Assign ids, destinations and expiry times to raw (t_gen, size, prio, crit) rows."""
    rng = _rng(spec, "assign")
    pool = sorted(spec.dest_pool)
    lo, hi = spec.ttl_range
    bundles = []
    for bid, (t_gen, size, priority, critical) in enumerate(
        sorted(raw, key=lambda r: (r[0], -r[2])), start=1
    ):
        dest = pool[rng.randrange(len(pool))]
        ttl = rng.randint(lo, hi)
        bundles.append(
            Bundle(
                id=bid,
                source=spec.source,
                dest=dest,
                size=size,
                priority=priority,
                critical=critical,
                t_gen=t_gen,
                t_exp=t_gen + ttl,
            )
        )
    return bundles


def _streaming_raw(spec: ScenarioSpec) -> list[tuple[float, float, int, bool]]:
    return [(float(t), 1.0, 2, True) for t in range(0, spec.duration, 5)]


def _expedited_raw(spec: ScenarioSpec) -> list[tuple[float, float, int, bool]]:
    rng = _rng(spec, "expedited")
    raw = []
    for window in range(0, spec.duration, 10):
        end = min(window + 10, spec.duration)
        for _ in range(rng.randint(0, 3)):
            t = rng.randrange(window, end)
            raw.append((float(t), float(rng.randint(1, 5)), 1, False))
    return raw


def _data_raw(spec: ScenarioSpec, bursts: int = 1) -> list[tuple[float, float, int, bool]]:
    rng = _rng(spec, "data")
    raw = []
    for burst in range(bursts):
        start = burst * 25
        for _ in range(20):
            t = start + rng.randrange(0, 25)
            raw.append((float(t), float(rng.randint(1, 5)), 0, False))
    return raw


def generate_streaming(spec: ScenarioSpec) -> list[Bundle]:
    """Periodic 1 Mb critical bundles, one every 5 seconds."""
    if not spec.with_critical:
        raise ValueError("streaming traffic requires with_critical=True")
    return _finish(spec, _streaming_raw(spec))


def generate_expedited(spec: ScenarioSpec) -> list[Bundle]:
    """Up to three 1-5 Mb priority-1 bundles per 10-second window."""
    return _finish(spec, _expedited_raw(spec))


def generate_data(spec: ScenarioSpec) -> list[Bundle]:
    """A burst of twenty 1-5 Mb priority-0 bundles within 25 seconds."""
    return _finish(spec, _data_raw(spec))


def generate_scenario(spec: ScenarioSpec, weight_by_megabits: bool = False) -> list[Bundle]:
    """Composite scenario with the 25/75 priority split.

    Streaming is omitted when ``with_critical`` is false.  The number of
    priority-0 bundles is scaled to three times the higher-priority pool
    (or, with ``weight_by_megabits``, until their megabits reach three times
    the pool's megabits), trimming data bursts in generation order.
    """
    if not spec.dest_pool:
        raise ValueError("dest_pool must not be empty")
    pool = list(_expedited_raw(spec))
    if spec.with_critical:
        pool += _streaming_raw(spec)
    if not pool:
        pool = [(0.0, 1.0, 1, False)]  # degenerate seed draw: keep one bundle
    if weight_by_megabits:
        target_mb = 3.0 * sum(size for _, size, _, _ in pool)
        data: list[tuple[float, float, int, bool]] = []
        bursts = 1
        while sum(size for _, size, _, _ in data) < target_mb:
            data = _data_raw(spec, bursts=bursts)
            bursts += 1
        data.sort(key=lambda r: r[0])
        total = 0.0
        kept = []
        for row in data:
            if total >= target_mb:
                break
            kept.append(row)
            total += row[1]
        data = kept
    else:
        n_data = 3 * len(pool)
        bursts = (n_data + 19) // 20
        data = sorted(_data_raw(spec, bursts=bursts), key=lambda r: r[0])[:n_data]
    return _finish(spec, pool + data)


_TASK_FIELDS = ("bundle_id", "source", "dest", "size_mb", "priority", "critical", "t_gen", "t_exp")


def write_tasks(bundles: list[Bundle]) -> str:
    """Serialize bundles to the task CSV format."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(_TASK_FIELDS)
    for b in bundles:
        writer.writerow(
            [b.id, b.source, b.dest, f"{b.size:g}", b.priority, int(b.critical), f"{b.t_gen:g}", f"{b.t_exp:g}"]
        )
    return out.getvalue()


def read_tasks(text: str) -> list[Bundle]:
    """Parse the task CSV format back into bundles."""
    reader = csv.DictReader(io.StringIO(text))
    bundles = []
    for row in reader:
        bundles.append(
            Bundle(
                id=int(row["bundle_id"]),
                source=row["source"],
                dest=row["dest"],
                size=float(row["size_mb"]),
                priority=int(row["priority"]),
                critical=bool(int(row["critical"])),
                t_gen=float(row["t_gen"]),
                t_exp=float(row["t_exp"]),
            )
        )
    return bundles
