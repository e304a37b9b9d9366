"""K-best route search over a contact graph.

Routes are sequences of contacts from a source to a destination node.  The
primary cost is the best delivery time (BDT): the earliest instant the first
byte can reach the destination, accounting for per-hop light time and for
storage waits when the next contact has not opened yet.  Ties are broken by
hop count, then carried volume (larger first), then the valid transmission
interval (earlier start, later end), then the first-hop contact id.

``yen_plus`` extends Dijkstra to the K-shortest loop-free routes by spur-path
deviation.  In its default mode it keeps extracting candidate routes until it
has proven that no undiscovered route can outrank the K-th one (the proof is
a popped route with a strictly larger BDT), so the returned list may contain
a few confirmed routes beyond K.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from cgrlab.contactgraph import ROOT_ID, TERMINAL_ID, ContactGraph
from cgrlab.contactplan import Contact, ContactPlan, total_transit_time

_OMEGA_DEFAULT = 999999999


@dataclass(frozen=True)
class Route:
    """An ordered contact sequence with its delivery-time cost terms.

    ``hops`` lists real contact ids only; ``hops_with_notional`` adds the
    root/terminal placeholders.  ``vti`` is the closed interval of feasible
    first-byte departure seconds at the source; ``volume`` is the largest
    transferable amount in megabits given every hop's usable window and
    residual volume.
    """

    hops: tuple[int, ...]
    bdt: float
    vti: tuple[float, float]
    volume: float
    hop_cnt: int
    first_hop: int
    horizon: float

    @property
    def sort_key(self) -> tuple:
        return (
            self.bdt,
            self.hop_cnt,
            -self.volume,
            self.vti[0],
            -self.vti[1],
            self.first_hop,
        )

    def hops_with_notional(self) -> tuple[int, ...]:
        return (ROOT_ID,) + self.hops + (TERMINAL_ID,)


def compare_routes(a: Route, b: Route) -> int:
    """Total order on routes: negative when ``a`` ranks before ``b``."""
    ka, kb = a.sort_key, b.sort_key
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


def _eff_owlt(contact: Contact, use_margin: bool) -> float:
    return total_transit_time(contact.owlt) if use_margin else contact.owlt


def evaluate_route(
    plan: ContactPlan,
    hops: tuple[int, ...] | list[int],
    depart: float,
    use_margin: bool = False,
) -> Route | None:
    """Compute BDT, VTI and volume for a contact sequence, or None if infeasible.

    Forward pass: leave each node no earlier than max(arrival, window start),
    first byte lands after the one-way light time; a hop is feasible while at
    least one whole second of its window remains.  Backward pass finds the
    latest workable departure per hop, which bounds both the VTI and each
    hop's usable capacity.
    """
    contacts = [plan.contact(h) for h in hops]
    if not contacts:
        return None
    arrival = depart
    departures = []
    for c in contacts:
        dep = arrival if arrival > c.t_start else c.t_start
        if dep > c.t_end - 1:
            return None
        departures.append(dep)
        arrival = dep + _eff_owlt(c, use_margin)

    last_deps = [0.0] * len(contacts)
    nxt = math.inf
    for i in range(len(contacts) - 1, -1, -1):
        c = contacts[i]
        ld = min(c.t_end - 1, nxt - _eff_owlt(c, use_margin))
        last_deps[i] = ld
        nxt = ld
    volume = math.inf
    for c, dep, ld in zip(contacts, departures, last_deps):
        volume = min(volume, (ld - dep + 1) * c.rate, c.residual_volume)

    return Route(
        hops=tuple(hops),
        bdt=arrival,
        vti=(departures[0], last_deps[0]),
        volume=volume,
        hop_cnt=len(contacts),
        first_hop=contacts[0].id,
        horizon=plan.horizon,
    )


def _search(
    graph: ContactGraph,
    start_node: str,
    start_time: float,
    banned_nodes: frozenset[str],
    banned_first: frozenset[int],
    use_margin: bool,
) -> tuple[list[int], float] | None:
    """Earliest-arrival search from a node; returns (hops, arrival) or None."""
    plan = graph.plan
    dest = graph.dest
    best: dict[str, float] = {start_node: start_time}
    parent: dict[str, tuple[int, str]] = {}
    done: set[str] = set()
    heap: list[tuple[float, str]] = [(start_time, start_node)]
    while heap:
        arrival, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dest:
            hops: list[int] = []
            n = node
            while n != start_node:
                cid, prev = parent[n]
                hops.append(cid)
                n = prev
            hops.reverse()
            return hops, arrival
        for c in plan.contacts_from(node):
            if c.id not in graph.vertices:
                continue
            if node == start_node and c.id in banned_first:
                continue
            to = c.to_node
            if to in done or to in banned_nodes:
                continue
            dep = arrival if arrival > c.t_start else c.t_start
            if dep > c.t_end - 1:
                continue
            reach = dep + _eff_owlt(c, use_margin)
            if reach < best.get(to, math.inf):
                best[to] = reach
                parent[to] = (c.id, node)
                heapq.heappush(heap, (reach, to))
    return None


def dijkstra_bdt(
    graph: ContactGraph,
    depart: float = 0.0,
    use_margin: bool = False,
    via_first_hops: frozenset[int] | None = None,
) -> Route | None:
    """Route minimizing the best delivery time from the graph's source.

    ``via_first_hops`` restricts the first hop to the given contact ids,
    which yields the best route through one chosen neighbour.  Returns None
    when the destination is unreachable.
    """
    banned_first: frozenset[int] = frozenset()
    if via_first_hops is not None:
        banned_first = frozenset(
            c.id
            for c in graph.plan.contacts_from(graph.source)
            if c.id not in via_first_hops
        )
    found = _search(graph, graph.source, depart, frozenset(), banned_first, use_margin)
    if found is None:
        return None
    hops, _ = found
    return evaluate_route(graph.plan, hops, depart, use_margin)


def yen_plus(
    graph: ContactGraph,
    k: int,
    depart: float = 0.0,
    use_margin: bool = False,
    confirm: bool = True,
) -> list[Route]:
    """K best loop-free routes, ordered by ``compare_routes``.

    With ``confirm`` (the default) the search keeps extracting candidates
    until a popped route's BDT strictly exceeds the K-th best found, which
    proves every route tied with the K-th on BDT has been seen, and then
    finishes that last BDT class as well; the returned list is an exact
    prefix of the full loop-free ranking and holds at least K routes when
    that many exist.  With ``confirm=False`` the search stops as soon as K
    routes are found (faster, but routes tied on BDT with the K-th may be
    ordered greedily).

    Each search iteration increments the graph's computing counter.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    first = dijkstra_bdt(graph, depart, use_margin)
    graph.computing_counter += 1
    if first is None:
        return []

    accepted: list[Route] = [first]
    seen: set[tuple[int, ...]] = {first.hops}
    pool: list[tuple[tuple, int, Route]] = []
    seq = 0
    plan = graph.plan

    def prefix_arrival(hops: tuple[int, ...], count: int) -> float:
        arrival = depart
        for cid in hops[:count]:
            c = plan.contact(cid)
            dep = arrival if arrival > c.t_start else c.t_start
            arrival = dep + _eff_owlt(c, use_margin)
        return arrival

    # once the K-th best BDT is certain, `boundary` holds the BDT class of the
    # first route beyond it; that whole class is still confirmed before
    # stopping so the returned list is a true prefix of the full ranking
    boundary: float | None = None
    while True:
        if confirm:
            if boundary is None and len(accepted) >= k:
                kth_bdt = sorted(r.bdt for r in accepted)[k - 1]
                if accepted[-1].bdt > kth_bdt:
                    boundary = accepted[-1].bdt
        else:
            if len(accepted) >= k:
                break

        # deviate from the most recently accepted route at every spur point
        graph.computing_counter += 1
        base = accepted[-1].hops
        for j in range(len(base)):
            root_hops = base[:j]
            if j == 0:
                spur_node = graph.source
                banned_nodes: frozenset[str] = frozenset()
            else:
                spur_node = plan.contact(base[j - 1]).to_node
                nodes = [graph.source] + [plan.contact(h).to_node for h in root_hops]
                banned_nodes = frozenset(nodes[:-1])
            banned_first = frozenset(
                r.hops[j] for r in accepted if len(r.hops) > j and r.hops[:j] == root_hops
            )
            start_time = depart if j == 0 else prefix_arrival(base, j)
            found = _search(
                graph, spur_node, start_time, banned_nodes, banned_first, use_margin
            )
            if found is None:
                continue
            total = root_hops + tuple(found[0])
            if total in seen:
                continue
            route = evaluate_route(plan, total, depart, use_margin)
            if route is None:
                continue
            seen.add(total)
            seq += 1
            heapq.heappush(pool, (route.sort_key, seq, route))

        if not pool:
            break
        nxt = heapq.heappop(pool)[2]
        if boundary is not None and nxt.bdt > boundary:
            break
        accepted.append(nxt)

    accepted.sort(key=lambda r: r.sort_key)
    return accepted


def route_volume(route: Route, plan: ContactPlan) -> float:
    """Largest amount transferable along the route, in megabits.

    The minimum over hops of the usable transmission window times the rate,
    capped by each hop's residual volume.
    """
    fresh = evaluate_route(plan, route.hops, route.vti[0])
    if fresh is None:
        return 0.0
    return fresh.volume


def pack_rank_components(components: list[int] | tuple[int, ...], omega: int) -> int:
    """Positional packing of ordering components into one wide integer."""
    value = 0
    for comp in components:
        if not 0 <= comp < omega:
            raise ValueError(f"component {comp} outside [0, {omega})")
        value = value * omega + comp
    return value


def edt_scalar(route: Route, omega: int = _OMEGA_DEFAULT) -> int:
    """Route ordering collapsed into a single wide integer.

    Packs the comparator terms positionally with weight ``omega``; descending
    terms (volume, VTI end) are complemented against ``omega``/the plan
    horizon so that smaller scalars always mean better routes.  Python ints
    are arbitrary precision, so the omega**5 weight cannot overflow.
    """
    components = (
        int(route.bdt),
        route.hop_cnt,
        omega - 1 - int(route.volume),
        int(route.vti[0]),
        int(route.horizon - route.vti[1]),
        route.first_hop,
    )
    return pack_rank_components(components, omega)


def routes_to_csv(routes: list[Route]) -> str:
    """Route list as CSV: rank,bdt,volume,vti_start,vti_end,hops."""
    lines = ["rank,bdt,volume,vti_start,vti_end,hops"]
    for rank, r in enumerate(routes, start=1):
        hops = ";".join(str(h) for h in r.hops)
        lines.append(
            f"{rank},{r.bdt:g},{r.volume:g},{r.vti[0]:g},{r.vti[1]:g},{hops}"
        )
    return "\n".join(lines) + "\n"
