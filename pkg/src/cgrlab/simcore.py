"""Deterministic discrete-event engine for bundle delivery over a contact plan.

The engine executes bundle lifecycles (generation, per-node route selection,
queued transmission, delivery, expiry) under one of two forwarding policies:

* ``standard``: bundles are processed in arrival order; critical bundles are
  replicated through every distinct candidate first-hop neighbour.
* ``rmdg``: same-instant bundles are processed by priority then expiry;
  critical bundles travel as a single copy along the best candidate whose
  neighbour is not already known to hold them.

Both policies share candidate review (basic checks, ETO, PAT, EVL), the
priority transmission discipline, overbooking displacement and rollback.
The engine is single-threaded and strictly deterministic: identical inputs
produce bit-identical metrics and dispatch logs.  Metrics are sampled every
second.
"""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
from dataclasses import dataclass, field, replace

from cgrlab.contactgraph import ContactGraph, build_contact_graph
from cgrlab.contactplan import Contact, ContactPlan, occupancy_rate
from cgrlab.forwarding import (
    POLICY_RMDG,
    POLICY_STANDARD,
    Booking,
    Bundle,
    CandidateRoute,
    basic_checks,
    compute_eto,
    compute_evl,
    compute_pat,
    find_rollback_contact,
    forward_critical,
    handle_overbooking,
)
from cgrlab.routesearch import Route, dijkstra_bdt, evaluate_route, yen_plus

POLICIES = (POLICY_STANDARD, POLICY_RMDG)

# event ranks fix the processing order at equal timestamps
_R_CONTACT_END = 0
_R_CONTACT_START = 1
_R_TX_COMPLETE = 2
_R_ARRIVAL = 3
_R_SELECT = 4
_R_EXPIRE = 5
_R_SAMPLE = 6

OUTCOME_DELIVERED = "delivered"
OUTCOME_EXPIRED = "expired_in_transit"
OUTCOME_NEVER_ROUTED = "never_routed"


@dataclass
class NodeState:
    """Per-node bookkeeping: cached copies and critical-holder knowledge."""

    node_id: str
    stored: dict[int, "_Copy"] = field(default_factory=dict)
    seen_critical: dict[int, set[str]] = field(default_factory=dict)


@dataclass
class _Copy:
    """One traveling instance of a bundle (critical bundles may have many)."""

    copy_id: int
    bundle: Bundle
    at_node: str
    first_tx_at: float | None = None
    in_flight: bool = False
    alive: bool = True
    queued_on: int | None = None
    no_rollback_to: str | None = None


@dataclass
class _QueueItem:
    copy: _Copy
    booking: Booking
    enq_seq: int


@dataclass
class _SimContact:
    contact: Contact
    queue: list[_QueueItem] = field(default_factory=list)
    busy_until: float = -1.0
    transmitted_mb: float = 0.0
    events_scheduled: bool = False


@dataclass(frozen=True)
class MetricsRow:
    t: float
    r_o: float
    computing_cum: int
    storage_bundles: int
    mb_to_send: float
    mb_at_sending: float
    mb_sent: float
    delivered: int
    failed: int


@dataclass
class BundleRecord:
    bundle: Bundle
    t_delivered: float | None = None
    outcome: str | None = None
    first_tx: bool = False

    @property
    def early_margin(self) -> float | None:
        if self.t_delivered is None:
            return None
        return self.bundle.t_exp - self.t_delivered


@dataclass
class SimulationMetrics:
    """Per-second series plus per-bundle delivery records for one run."""

    policy: str
    seed: int
    k: int
    rows: list[MetricsRow]
    records: dict[int, BundleRecord]
    dispatch_log: list[tuple[float, int, str, str, int, str, str]]
    computing_total: int
    contact_usage: dict[int, float]

    @property
    def generated(self) -> int:
        return len(self.records)

    @property
    def delivered_count(self) -> int:
        return sum(1 for r in self.records.values() if r.outcome == OUTCOME_DELIVERED)

    @property
    def failed_count(self) -> int:
        return sum(
            1
            for r in self.records.values()
            if r.outcome in (OUTCOME_EXPIRED, OUTCOME_NEVER_ROUTED)
        )

    def delivery_rate(self) -> float:
        return self.delivered_count / self.generated if self.records else 0.0

    def mean_occupancy(self) -> float:
        return sum(r.r_o for r in self.rows) / len(self.rows) if self.rows else 0.0

    def peak_at_sending(self) -> float:
        return max((r.mb_at_sending for r in self.rows), default=0.0)

    def mean_early_margin(self) -> float:
        margins = [
            r.early_margin for r in self.records.values() if r.early_margin is not None
        ]
        return sum(margins) / len(margins) if margins else 0.0

    def metrics_csv(self) -> str:
        out = ["t,r_o,computing_cum,storage_bundles,mb_to_send,mb_at_sending,mb_sent,delivered,failed"]
        for r in self.rows:
            out.append(
                f"{r.t:g},{r.r_o:.6f},{r.computing_cum},{r.storage_bundles},"
                f"{r.mb_to_send:g},{r.mb_at_sending:g},{r.mb_sent:g},{r.delivered},{r.failed}"
            )
        return "\n".join(out) + "\n"

    def bundles_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(
            ["bundle_id", "priority", "critical", "t_gen", "t_exp", "t_delivered", "early_margin", "outcome"]
        )
        for bid in sorted(self.records):
            r = self.records[bid]
            b = r.bundle
            writer.writerow(
                [
                    bid,
                    b.priority,
                    int(b.critical),
                    f"{b.t_gen:g}",
                    f"{b.t_exp:g}",
                    "" if r.t_delivered is None else f"{r.t_delivered:g}",
                    "" if r.early_margin is None else f"{r.early_margin:g}",
                    r.outcome or "",
                ]
            )
        return out.getvalue()

    def dispatch_csv(self) -> str:
        out = ["time,bundle_id,from,to,contact_id,policy,reason"]
        for t, bid, frm, to, cid, policy, reason in self.dispatch_log:
            out.append(f"{t:g},{bid},{frm},{to},{cid},{policy},{reason}")
        return "\n".join(out) + "\n"

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.metrics_csv().encode())
        digest.update(self.bundles_csv().encode())
        digest.update(self.dispatch_csv().encode())
        return digest.hexdigest()


class _Engine:
    def __init__(
        self,
        plan: ContactPlan,
        bundles: list[Bundle],
        policy: str,
        seed: int,
        k: int,
        owlt_mode: str,
        uniform_owlt: float,
    ) -> None:
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if owlt_mode not in ("uniform", "file"):
            raise ValueError(f"unknown owlt mode {owlt_mode!r}")
        for b in bundles:
            for node in (b.source, b.dest):
                if node not in plan.node_ids:
                    raise ValueError(f"bundle {b.id} references unknown node {node!r}")
            if not 0 <= b.t_gen <= plan.horizon:
                raise ValueError(f"bundle {b.id} generated outside the plan horizon")
        # private plan copy: the engine mutates residual volumes
        contacts = tuple(
            Contact(
                id=c.id,
                from_node=c.from_node,
                to_node=c.to_node,
                t_start=c.t_start,
                t_end=c.t_end,
                rate=c.rate,
                owlt=uniform_owlt if owlt_mode == "uniform" else c.owlt,
            )
            for c in plan.contacts
        )
        self.plan = ContactPlan(contacts=contacts, horizon=plan.horizon, node_ids=plan.node_ids)
        self.policy = policy
        self.seed = seed
        self.k = k
        self.bundles = sorted(bundles, key=lambda b: b.id)

        self.sc = {c.id: _SimContact(c) for c in self.plan.contacts}
        self.nodes = {n: NodeState(n) for n in sorted(self.plan.node_ids)}
        self.records = {b.id: BundleRecord(b) for b in self.bundles}
        self.copies: list[_Copy] = []
        self.alive: dict[int, _Copy] = {}
        self.bundle_copies: dict[int, list[_Copy]] = {b.id: [] for b in self.bundles}

        self.graphs: dict[tuple[str, str], ContactGraph] = {}
        self.route_cache: dict[tuple[str, str], tuple[float, list[Route]]] = {}
        self.crc_count = 0
        self.booking_seq = 0
        self.copy_seq = 0

        self.delivered = 0
        self.failed = 0
        self.mb_sent = 0.0
        self.rows: list[MetricsRow] = []
        self.dispatch_log: list[tuple[float, int, str, str, int, str, str]] = []

        self.heap: list[tuple[float, int, int, str, object]] = []
        self.event_seq = 0
        self.nonsample_pending = 0

    # -- event plumbing --------------------------------------------------

    def _push(self, t: float, rank: int, kind: str, payload: object) -> None:
        self.event_seq += 1
        if rank != _R_SAMPLE:
            self.nonsample_pending += 1
        heapq.heappush(self.heap, (t, rank, self.event_seq, kind, payload))

    def _schedule_contact_events(self, sc: _SimContact) -> None:
        if sc.events_scheduled:
            return
        sc.events_scheduled = True
        c = sc.contact
        if c.t_start > 0:
            self._push(c.t_start, _R_CONTACT_START, "contact_start", c.id)
        self._push(c.t_end, _R_CONTACT_END, "contact_end", c.id)

    # -- route computation -----------------------------------------------

    def _routes(self, node: str, dest: str, now: float, force: bool = False) -> list[Route]:
        key = (node, dest)
        cached = self.route_cache.get(key)
        if cached is not None and not (force and cached[0] < now):
            live = [
                r
                for r in cached[1]
                if self.plan.contact(r.first_hop).t_end - 1 >= now
            ]
            if live:
                self.route_cache[key] = (cached[0], live)
                return live
        graph = self.graphs.get(key)
        if graph is None:
            graph = build_contact_graph(self.plan, node, dest)
            self.graphs[key] = graph
        routes = yen_plus(graph, self.k, depart=now, confirm=False)
        self.route_cache[key] = (now, routes)
        return routes

    def _route_bookings(self, hops: tuple[int, ...]) -> dict[int, list[Booking]]:
        return {cid: [item.booking for item in self.sc[cid].queue] for cid in hops}

    def _review_route(self, route: Route, bundle: Bundle, now: float) -> CandidateRoute | None:
        """Apply the four forwarding gates to one route for one bundle.

        Critical reservations oversubscribe: their volume gate is waived and
        overbooked contacts displace lower priorities at enqueue instead.
        """
        self.crc_count += 1
        if not basic_checks(self.plan, route, bundle, now):
            return None
        first = self.plan.contact(route.first_hop)
        sc = self.sc[first.id]
        ahead = sum(
            it.booking.mb for it in sc.queue if it.booking.priority >= bundle.priority
        )
        window_open = now if now > first.t_start else first.t_start
        if sc.busy_until > window_open:
            ahead += (sc.busy_until - window_open) * first.rate
        eto = compute_eto(self.plan, route, ahead, now)
        try:
            pat = compute_pat(self.plan, route, eto, bundle.size)
        except ValueError:
            return None
        evl = compute_evl(
            self.plan, route, self._route_bookings(route.hops), bundle.priority
        )
        admissible = pat <= bundle.t_exp and (bundle.critical or evl >= bundle.size)
        return CandidateRoute(route, eto, pat, evl, admissible)

    def _candidates(self, copy: _Copy, now: float) -> list[CandidateRoute]:
        bundle = copy.bundle
        node = copy.at_node
        for attempt in (0, 1):
            routes = self._routes(node, bundle.dest, now, force=attempt == 1)
            cands: list[CandidateRoute] = []
            for route in routes:
                fresh = evaluate_route(self.plan, route.hops, now)
                if fresh is None:
                    continue
                cand = self._review_route(fresh, bundle, now)
                if cand is not None:
                    cands.append(cand)
            if cands or attempt == 1:
                return cands
        return []

    def _critical_candidates(self, copy: _Copy, now: float) -> list[CandidateRoute]:
        """Best route through every usable neighbour (blanket replication).

        Mirrors the baseline's critical handling: a route is computed per
        proximate node rather than taken from the K-route list, so a copy can
        be launched through each neighbour that still has a path.
        """
        bundle = copy.bundle
        node = copy.at_node
        key = (node, bundle.dest)
        graph = self.graphs.get(key)
        if graph is None:
            graph = build_contact_graph(self.plan, node, bundle.dest)
            self.graphs[key] = graph
        by_neighbor: dict[str, list[int]] = {}
        for c in self.plan.contacts_from(node):
            if c.t_end - 1 >= now and c.to_node not in bundle.hop_trace:
                by_neighbor.setdefault(c.to_node, []).append(c.id)
        cands: list[CandidateRoute] = []
        for neighbor in sorted(by_neighbor):
            graph.computing_counter += 1
            route = dijkstra_bdt(
                graph, depart=now, via_first_hops=frozenset(by_neighbor[neighbor])
            )
            if route is None:
                continue
            cand = self._review_route(route, bundle, now)
            if cand is not None:
                cands.append(cand)
        return cands

    # -- copy lifecycle ---------------------------------------------------

    def _new_copy(
        self, bundle: Bundle, at_node: str, first_tx_at: float | None = None
    ) -> _Copy:
        self.copy_seq += 1
        copy = _Copy(
            copy_id=self.copy_seq, bundle=bundle, at_node=at_node, first_tx_at=first_tx_at
        )
        self.copies.append(copy)
        self.alive[copy.copy_id] = copy
        self.bundle_copies[bundle.id].append(copy)
        return copy

    def _retire(self, copy: _Copy) -> None:
        if not copy.alive:
            return
        copy.alive = False
        self.alive.pop(copy.copy_id, None)
        self.nodes[copy.at_node].stored.pop(copy.copy_id, None)

    def _store(self, copy: _Copy) -> None:
        self.nodes[copy.at_node].stored[copy.copy_id] = copy

    def _reattempt_stored(self, node: str, now: float) -> None:
        for copy_id in sorted(self.nodes[node].stored):
            copy = self.nodes[node].stored[copy_id]
            if copy.alive and copy.queued_on is None and not copy.in_flight:
                self._push(now, _R_SELECT, "select", copy)

    # -- dispatch ---------------------------------------------------------

    def _enqueue(self, copy: _Copy, contact: Contact, now: float, reason: str) -> bool:
        sc = self.sc[contact.id]
        bundle = copy.bundle
        self.booking_seq += 1
        booking = Booking(
            contact_id=contact.id,
            bundle_id=bundle.id,
            mb=bundle.size,
            priority=bundle.priority,
            seq=self.booking_seq,
        )
        accepted, displaced = handle_overbooking(
            contact, [item.booking for item in sc.queue], booking
        )
        if not accepted:
            return False
        for victim in displaced:
            item = next(it for it in sc.queue if it.booking is victim)
            sc.queue.remove(item)
            item.copy.queued_on = None
            self._store(item.copy)
            self.dispatch_log.append(
                (now, victim.bundle_id, contact.from_node, contact.to_node, contact.id, self.policy, "overbook_displace")
            )
            self._push(now, _R_SELECT, "select", item.copy)
        self.event_seq += 1
        sc.queue.append(_QueueItem(copy=copy, booking=booking, enq_seq=self.event_seq))
        copy.queued_on = contact.id
        self.nodes[copy.at_node].stored.pop(copy.copy_id, None)
        if bundle.critical:
            holders = self.nodes[copy.at_node].seen_critical.setdefault(bundle.id, set())
            holders.add(copy.at_node)
            holders.add(contact.to_node)
        self.dispatch_log.append(
            (now, bundle.id, contact.from_node, contact.to_node, contact.id, self.policy, reason)
        )
        self._schedule_contact_events(sc)
        self._try_start(sc, now)
        return True

    def _try_start(self, sc: _SimContact, now: float) -> None:
        c = sc.contact
        while True:
            if sc.busy_until > now or not sc.queue:
                return
            if now < c.t_start or now >= c.t_end:
                return
            item = min(sc.queue, key=lambda it: (-it.booking.priority, it.enq_seq))
            duration = item.booking.mb / c.rate
            if now + duration > c.t_end:
                # no longer fits in the remaining window: back to selection
                sc.queue.remove(item)
                item.copy.queued_on = None
                self._store(item.copy)
                self._push(now, _R_SELECT, "select", item.copy)
                continue
            sc.queue.remove(item)
            copy = item.copy
            copy.queued_on = None
            if copy.first_tx_at is None:
                copy.first_tx_at = now
            copy.in_flight = True
            self.records[copy.bundle.id].first_tx = True
            c.residual_volume -= item.booking.mb
            sc.transmitted_mb += item.booking.mb
            sc.busy_until = now + duration
            self._push(sc.busy_until, _R_TX_COMPLETE, "tx_complete", (c.id, copy))
            return

    def _dispatch_candidates(
        self, copy: _Copy, cands: list[CandidateRoute], now: float
    ) -> None:
        bundle = copy.bundle
        node = copy.at_node
        if bundle.critical:
            holders = set(self.nodes[node].seen_critical.get(bundle.id, set()))
            holders.add(node)
            dispatches = forward_critical(bundle, cands, holders, self.policy, self.plan)
            sent = 0
            for cand in dispatches:
                child = self._new_copy(bundle, node, first_tx_at=copy.first_tx_at)
                contact = self.plan.contact(cand.route.first_hop)
                if self._enqueue(child, contact, now, "critical_copy"):
                    sent += 1
                else:
                    self._retire(child)
            if sent:
                self._retire(copy)
            else:
                self._store(copy)
            return
        # non-critical: single best admissible candidate, next-best on refusal
        admissible = sorted(
            (c for c in cands if c.admissible), key=lambda c: c.route.sort_key
        )
        for cand in admissible:
            contact = self.plan.contact(cand.route.first_hop)
            if self._enqueue(copy, contact, now, "select"):
                return
        self._rollback_or_store(copy, now)

    def _rollback_or_store(self, copy: _Copy, now: float) -> None:
        bundle = copy.bundle
        node = copy.at_node
        found = find_rollback_contact(
            self.plan, bundle, node, now, self._node_bookings(node)
        )
        if found is not None:
            upstream, contact = found
            if upstream != copy.no_rollback_to:
                if self._enqueue(copy, contact, now, "rollback"):
                    copy.no_rollback_to = node
                    return
        self._store(copy)

    def _node_bookings(self, node: str) -> dict[int, list[Booking]]:
        return {
            c.id: [item.booking for item in self.sc[c.id].queue]
            for c in self.plan.contacts_from(node)
        }

    def storage_snapshot(self) -> dict[str, set[int]]:
        """Bundle ids cached per node right now (stored plus queued copies)."""
        index: dict[str, set[int]] = {}
        for copy in self.alive.values():
            if copy.in_flight:
                continue
            index.setdefault(copy.at_node, set()).add(copy.bundle.id)
        return index

    # -- event handlers ----------------------------------------------------

    def _attempt_forward(self, copy: _Copy, now: float) -> None:
        if not copy.alive or copy.queued_on is not None or copy.in_flight:
            return
        bundle = copy.bundle
        if now > bundle.t_exp:
            self._retire(copy)
            return
        if copy.at_node == bundle.dest:
            self._retire(copy)
            return
        if bundle.critical and self.policy == POLICY_STANDARD:
            cands = self._critical_candidates(copy, now)
        else:
            cands = self._candidates(copy, now)
        if not cands:
            self._rollback_or_store(copy, now)
            return
        self._dispatch_candidates(copy, cands, now)

    def _handle_arrival(self, copy: _Copy, from_node: str, to_node: str, now: float) -> None:
        copy.in_flight = False
        copy.at_node = to_node
        copy.bundle = replace(
            copy.bundle, custodian=to_node, hop_trace=copy.bundle.hop_trace + (to_node,)
        )
        bundle = copy.bundle
        if bundle.critical:
            holders = self.nodes[to_node].seen_critical.setdefault(bundle.id, set())
            holders.add(from_node)
            holders.add(to_node)
        record = self.records[bundle.id]
        if now > bundle.t_exp:
            self._retire(copy)
            return
        if to_node == bundle.dest:
            if record.outcome is None:
                record.outcome = OUTCOME_DELIVERED
                record.t_delivered = now
                self.delivered += 1
                self.mb_sent += bundle.size
            self._retire(copy)
            return
        self._push(now, _R_SELECT, "select", copy)

    def _handle_expire(self, bundle_id: int, now: float) -> None:
        record = self.records[bundle_id]
        if record.outcome is None:
            record.outcome = OUTCOME_EXPIRED if record.first_tx else OUTCOME_NEVER_ROUTED
            self.failed += 1
        for copy in self.bundle_copies[bundle_id]:
            if not copy.alive:
                continue
            if copy.in_flight:
                continue  # retires on arrival
            if copy.queued_on is not None:
                sc = self.sc[copy.queued_on]
                sc.queue = [it for it in sc.queue if it.copy is not copy]
                copy.queued_on = None
            self._retire(copy)

    def _handle_contact_end(self, contact_id: int, now: float) -> None:
        sc = self.sc[contact_id]
        flushed = sc.queue
        sc.queue = []
        for item in flushed:
            item.copy.queued_on = None
            self._store(item.copy)
            self._push(now, _R_SELECT, "select", item.copy)

    def _sample(self, t: float) -> MetricsRow:
        active = {
            cid
            for cid, sc in self.sc.items()
            if sc.busy_until > t and sc.contact.t_start <= t <= sc.contact.t_end
        }
        r_o = occupancy_rate(self.plan, t, active)
        computing = sum(g.computing_counter for g in self.graphs.values()) + self.crc_count
        storage = 0
        mb_to_send = 0.0
        mb_at_sending = 0.0
        for copy in self.alive.values():
            if not copy.in_flight:
                storage += 1
            # a bundle is counted in transit only once bits left its
            # origin strictly before the sample instant
            if copy.first_tx_at is not None and copy.first_tx_at < t:
                mb_at_sending += copy.bundle.size
            else:
                mb_to_send += copy.bundle.size
        generated = sum(1 for b in self.bundles if b.t_gen <= t)
        live = sum(
            1
            for b in self.bundles
            if b.t_gen <= t and self.records[b.id].outcome is None
        )
        if generated != self.delivered + self.failed + live:
            raise AssertionError(
                f"conservation violated at t={t}: {generated} generated vs "
                f"{self.delivered} delivered + {self.failed} failed + {live} live"
            )
        return MetricsRow(
            t=t,
            r_o=r_o,
            computing_cum=computing,
            storage_bundles=storage,
            mb_to_send=mb_to_send,
            mb_at_sending=mb_at_sending,
            mb_sent=self.mb_sent,
            delivered=self.delivered,
            failed=self.failed,
        )

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimulationMetrics:
        for sc in self.sc.values():
            self._schedule_contact_events(sc)
        for b in self.bundles:
            self._push(b.t_gen, _R_SELECT, "generate", b)
            self._push(b.t_exp, _R_EXPIRE, "expire", b.id)
        self._push(0.0, _R_SAMPLE, "sample", None)

        while self.heap:
            t, rank, _, kind, payload = heapq.heappop(self.heap)
            if rank != _R_SAMPLE:
                self.nonsample_pending -= 1
            if rank == _R_SELECT:
                batch = [(kind, payload)]
                while self.heap and self.heap[0][0] == t and self.heap[0][1] == _R_SELECT:
                    _, _, _, k2, p2 = heapq.heappop(self.heap)
                    self.nonsample_pending -= 1
                    batch.append((k2, p2))
                self._process_selection_batch(batch, t)
            elif kind == "contact_start":
                self._try_start(self.sc[payload], t)
                self._reattempt_stored(self.sc[payload].contact.from_node, t)
            elif kind == "contact_end":
                self._handle_contact_end(payload, t)
            elif kind == "tx_complete":
                contact_id, copy = payload
                sc = self.sc[contact_id]
                sc.busy_until = t
                c = sc.contact
                self._push(t + c.owlt, _R_ARRIVAL, "arrival", (copy, c.from_node, c.to_node))
                self._try_start(sc, t)
                self._reattempt_stored(c.from_node, t)
            elif kind == "arrival":
                copy, from_node, to_node = payload
                self._handle_arrival(copy, from_node, to_node, t)
            elif kind == "expire":
                self._handle_expire(payload, t)
            elif kind == "sample":
                self.rows.append(self._sample(t))
                if self.nonsample_pending > 0 or self.alive:
                    self._push(t + 1.0, _R_SAMPLE, "sample", None)

        return SimulationMetrics(
            policy=self.policy,
            seed=self.seed,
            k=self.k,
            rows=self.rows,
            records=self.records,
            dispatch_log=self.dispatch_log,
            computing_total=self.rows[-1].computing_cum if self.rows else 0,
            contact_usage={cid: sc.transmitted_mb for cid, sc in self.sc.items()},
        )

    def _process_selection_batch(self, batch: list[tuple[str, object]], now: float) -> None:
        ready: list[tuple[tuple, _Copy]] = []
        order = 0
        for kind, payload in batch:
            order += 1
            if kind == "generate":
                bundle: Bundle = payload  # type: ignore[assignment]
                copy = self._new_copy(bundle, bundle.source)
                if bundle.critical:
                    self.nodes[bundle.source].seen_critical.setdefault(
                        bundle.id, set()
                    ).add(bundle.source)
            else:
                copy = payload  # type: ignore[assignment]
            b = copy.bundle
            if self.policy == POLICY_RMDG:
                key = (-b.priority, b.t_exp, b.id, order)
            else:
                key = (order,)
            ready.append((key, copy))
        for _, copy in sorted(ready, key=lambda item: item[0]):
            self._attempt_forward(copy, now)


def run_simulation(
    plan: ContactPlan,
    bundles: list[Bundle],
    policy: str,
    seed: int = 0,
    k: int = 4,
    owlt_mode: str = "uniform",
    uniform_owlt: float = 1.0,
) -> SimulationMetrics:
    """Execute one deterministic simulation run and return its metrics.

    ``owlt_mode`` selects the propagation delay source: ``uniform`` applies
    ``uniform_owlt`` seconds on every contact (the constellation-scale
    default), ``file`` keeps each contact's own range value.
    """
    engine = _Engine(plan, bundles, policy, seed, k, owlt_mode, uniform_owlt)
    return engine.run()


def new_engine(
    plan: ContactPlan,
    bundles: list[Bundle],
    policy: str,
    seed: int = 0,
    k: int = 4,
    owlt_mode: str = "uniform",
    uniform_owlt: float = 1.0,
) -> _Engine:
    """Construct an engine without running it (state inspection and tests)."""
    return _Engine(plan, bundles, policy, seed, k, owlt_mode, uniform_owlt)


def sample_metrics(engine: _Engine, t: float) -> MetricsRow:
    """Compute the engine's metrics row at ``t`` without recording it."""
    return engine._sample(t)
