"""Per-node dynamic route computation for bundles.

Candidate routes pass four gates before a bundle is queued: basic checks
(first hop alive, no revisit of a traversed node, delivery before expiry),
the earliest transmission opportunity given queued higher-priority traffic,
the projected last-byte arrival time, and the effective volume limit after
higher-priority bookings.  Critical bundles are replicated according to the
active policy; overbooked contacts displace lower-priority bookings; bundles
with no usable candidate are rolled back to their upstream custodian.

All operations are pure given explicit node-state inputs; the simulation
engine owns every mutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from cgrlab.contactplan import Contact, ContactPlan, total_transit_time
from cgrlab.routesearch import Route

POLICY_STANDARD = "standard"
POLICY_RMDG = "rmdg"


@dataclass
class Bundle:
    """A unit of application data with priority, criticality and lifetime."""

    id: int
    source: str
    dest: str
    size: float
    priority: int
    critical: bool
    t_gen: float
    t_exp: float
    custodian: str = ""
    hop_trace: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.priority not in (0, 1, 2):
            raise ValueError(f"bundle {self.id}: priority must be 0, 1 or 2")
        if self.critical and self.priority != 2:
            raise ValueError(f"bundle {self.id}: critical bundles carry priority 2")
        if self.t_exp <= self.t_gen:
            raise ValueError(f"bundle {self.id}: t_exp must exceed t_gen")
        if self.size <= 0:
            raise ValueError(f"bundle {self.id}: size must be positive")
        if not self.custodian:
            self.custodian = self.source
        if not self.hop_trace:
            self.hop_trace = (self.source,)


@dataclass(frozen=True)
class CandidateRoute:
    """A reviewed route with its transmission-opportunity figures."""

    route: Route
    eto: float
    pat: float
    evl: float
    admissible: bool


@dataclass(frozen=True)
class Booking:
    """A volume reservation on one contact for one queued bundle."""

    contact_id: int
    bundle_id: int
    mb: float
    priority: int
    seq: int = 0  # booking order, used for latest-booked eviction


def basic_checks(plan: ContactPlan, route: Route, bundle: Bundle, now: float) -> bool:
    """First screening of a route for a bundle at the current node.

    True when the bundle is still alive, the route's first hop has at least a
    second of window left, the next-hop node was not already visited by this
    bundle, and the first byte can reach the destination before expiry.
    """
    if now > bundle.t_exp:
        return False
    first = plan.contact(route.first_hop)
    if first.t_end - 1 < now:
        return False
    if first.to_node in bundle.hop_trace:
        return False
    return route.bdt <= bundle.t_exp


def compute_eto(plan: ContactPlan, route: Route, ahead_mb: float, now: float) -> float:
    """Earliest transmission opportunity on the route's first hop.

    ``ahead_mb`` is the equal-or-higher-priority traffic already queued for
    that contact (megabits), which must drain first under the priority
    transmission discipline.
    """
    first = plan.contact(route.first_hop)
    start = now if now > first.t_start else first.t_start
    return start + ahead_mb / first.rate


def compute_pat(
    plan: ContactPlan,
    route: Route,
    eto: float,
    size: float,
    use_margin: bool = False,
) -> float:
    """Projected last-byte arrival at the destination.

    Store-and-forward recurrence: each hop departs at max(previous arrival,
    window start) and delivers size/rate plus the light time later.  Raises
    when the first hop cannot carry the bundle before its window closes;
    returns infinity when a later hop cannot.
    """
    arrival = eto
    for idx, cid in enumerate(route.hops):
        c = plan.contact(cid)
        dep = arrival if arrival > c.t_start else c.t_start
        tx = size / c.rate
        if dep + tx > c.t_end:
            if idx == 0:
                raise ValueError(
                    f"transmission start {dep} + {tx}s exceeds first hop end {c.t_end}"
                )
            return math.inf
        owlt = total_transit_time(c.owlt) if use_margin else c.owlt
        arrival = dep + tx + owlt
    return arrival


def compute_evl(
    plan: ContactPlan,
    route: Route,
    bookings: dict[int, list[Booking]],
    priority: int,
) -> float:
    """Effective volume limit: route capacity left after competing bookings.

    Per hop, the residual volume minus bookings of equal or higher priority
    (lower-priority bookings would be displaced, so they do not constrain),
    clamped at zero; the route limit is the minimum over hops.
    """
    evl = math.inf
    for cid in route.hops:
        c = plan.contact(cid)
        booked = sum(
            b.mb for b in bookings.get(cid, ()) if b.priority >= priority
        )
        evl = min(evl, max(0.0, c.residual_volume - booked))
    return evl


def select_route(
    candidates: list[CandidateRoute], bundle: Bundle
) -> CandidateRoute | None:
    """Best admissible candidate under the route ordering, or None.

    Bundle-level processing order (priority descending, expiry ascending, id
    ascending) is applied by the engine before calling this per bundle.
    """
    admissible = [c for c in candidates if c.admissible]
    if not admissible:
        return None
    return min(admissible, key=lambda c: c.route.sort_key)


def forward_critical(
    bundle: Bundle,
    candidates: list[CandidateRoute],
    holders: set[str],
    policy: str,
    plan: ContactPlan,
) -> list[CandidateRoute]:
    """Dispatch plan for a critical bundle under the given policy.

    standard: one copy through each distinct first-hop neighbour, along that
    neighbour's best admissible candidate (blanket replication).
    rmdg: a single copy along the best admissible candidate whose first-hop
    neighbour is not already known to hold the bundle.

    Callers decide what admissible means for critical traffic; the engine
    drops the volume gate there, since critical reservations displace
    lower-priority ones instead of yielding to them.
    """
    if not bundle.critical:
        raise ValueError("forward_critical requires a critical bundle")
    ranked = sorted(
        (c for c in candidates if c.admissible), key=lambda c: c.route.sort_key
    )
    if policy == POLICY_STANDARD:
        chosen: dict[str, CandidateRoute] = {}
        for cand in ranked:
            neighbor = plan.contact(cand.route.first_hop).to_node
            if neighbor not in chosen:
                chosen[neighbor] = cand
        return list(chosen.values())
    if policy == POLICY_RMDG:
        for cand in ranked:
            neighbor = plan.contact(cand.route.first_hop).to_node
            if neighbor not in holders:
                return [cand]
        return []
    raise ValueError(f"unknown policy {policy!r}")


def handle_overbooking(
    contact: Contact, bookings: list[Booking], incoming: Booking
) -> tuple[bool, list[Booking]]:
    """Resolve an incoming booking against a contact's reservation list.

    When the contact has spare volume the booking is accepted outright.
    Otherwise strictly lower-priority bookings are displaced, lowest priority
    and latest-booked first, until the incoming booking fits; if displacing
    every outranked booking still cannot make room, the incoming booking is
    rejected and nothing is displaced.

    Returns (accepted, displaced bookings).
    """
    capacity = contact.residual_volume
    booked = sum(b.mb for b in bookings)
    if booked + incoming.mb <= capacity:
        return True, []
    evictable = sorted(
        (b for b in bookings if b.priority < incoming.priority),
        key=lambda b: (b.priority, -b.seq),
    )
    freed = 0.0
    displaced: list[Booking] = []
    for victim in evictable:
        if booked - freed + incoming.mb <= capacity:
            break
        displaced.append(victim)
        freed += victim.mb
    if booked - freed + incoming.mb > capacity:
        return False, []
    return True, displaced


def find_rollback_contact(
    plan: ContactPlan,
    bundle: Bundle,
    at_node: str,
    now: float,
    bookings: dict[int, list[Booking]],
) -> tuple[str, Contact] | None:
    """Reverse contact for returning a stuck bundle to its upstream custodian.

    The upstream node is the hop-trace predecessor of the current node.  A
    usable reverse contact must fit the whole bundle within its remaining
    window and volume (rollback consumes real capacity).  Returns None when
    there is no upstream node or no usable contact, in which case the bundle
    stays stored until expiry.
    """
    trace = bundle.hop_trace
    upstream = None
    for i in range(len(trace) - 1, -1, -1):
        if trace[i] == at_node and i > 0:
            upstream = trace[i - 1]
            break
    if upstream is None or upstream == at_node:
        return None
    for c in plan.contacts_from(at_node):
        if c.to_node != upstream:
            continue
        dep = now if now > c.t_start else c.t_start
        if dep + bundle.size / c.rate > c.t_end:
            continue
        booked = sum(
            b.mb for b in bookings.get(c.id, ()) if b.priority >= bundle.priority
        )
        if c.residual_volume - booked < bundle.size:
            continue
        return upstream, c
    return None
