"""Contact plans: scheduled, directed transmission opportunities between nodes.

A contact plan is the full schedule of one-way transmission windows over a
topology horizon.  Plans are parsed from an ION-style text format (one
directive per line) or built programmatically.  A plan is treated as an
immutable value after construction; the only mutable field is each contact's
residual volume, which only the single-threaded simulation engine touches.

Text format, one directive per line, ``#`` starts a comment::

    a contact +<t_start> +<t_end> <from> <to> <rate> [<owlt>]
    a range   +<t_start> +<t_end> <from> <to> <owlt>
    a horizon +<seconds>

Times are non-negative integer seconds prefixed with ``+``; rates are in
megabits/second; ranges are in light-seconds.  A range line applies to both
directions of the node pair unless a direction-exact line exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

LIGHT_SPEED_KM_S = 299792.458


class ContactPlanError(ValueError):
    """Malformed contact-plan input or inconsistent plan data."""


def owlt_margin(distance: float) -> float:
    """Worst-case growth of the one-way light time over a given range.

    The margin pads range estimates against relative platform motion: two
    nodes closing or receding at up to 40 mi/s each can change their
    separation by 80 mi/s, so a transfer planned against a stale range
    needs this allowance per direction.

    Args:
        distance: range between the nodes in light-seconds.
    """
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    return 40.0 * distance / 18600.0


def total_transit_time(distance: float) -> float:
    """Pessimistic transit time: nominal light time plus twice the margin."""
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    return distance + 2.0 * owlt_margin(distance)


@dataclass
class Contact:
    """One directed transmission opportunity between two nodes.

    Times are integer seconds; ``rate`` is megabits/second; ``owlt`` is the
    one-way light time (range) in light-seconds.  ``residual_volume`` starts
    at the full window capacity and is decremented by the simulator as data
    is committed to the contact.
    """

    id: int
    from_node: str
    to_node: str
    t_start: float
    t_end: float
    rate: float
    owlt: float = 0.0
    residual_volume: float | None = None

    def __post_init__(self) -> None:
        if self.t_start > self.t_end:
            raise ContactPlanError(
                f"contact {self.id}: t_start {self.t_start} > t_end {self.t_end}"
            )
        if self.rate <= 0:
            raise ContactPlanError(f"contact {self.id}: rate must be positive")
        if self.owlt < 0:
            raise ContactPlanError(f"contact {self.id}: owlt must be non-negative")
        if self.residual_volume is None:
            self.residual_volume = self.volume

    @property
    def volume(self) -> float:
        """Total capacity in megabits: window length times rate."""
        return (self.t_end - self.t_start) * self.rate


@dataclass
class ContactPlan:
    """An immutable schedule of contacts over a topology horizon."""

    contacts: tuple[Contact, ...]
    horizon: float
    node_ids: frozenset[str]
    _by_id: dict[int, Contact] = field(init=False, repr=False)
    _by_from: dict[str, tuple[Contact, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        by_id: dict[int, Contact] = {}
        for c in self.contacts:
            if c.id in by_id:
                raise ContactPlanError(f"duplicate contact id {c.id}")
            if c.t_end > self.horizon:
                raise ContactPlanError(
                    f"contact {c.id} ends at {c.t_end}, beyond horizon {self.horizon}"
                )
            by_id[c.id] = c
        self._by_id = by_id
        by_from: dict[str, list[Contact]] = {}
        for c in sorted(self.contacts, key=lambda c: c.id):
            by_from.setdefault(c.from_node, []).append(c)
        self._by_from = {n: tuple(cs) for n, cs in by_from.items()}

    @classmethod
    def build(
        cls, contacts: list[Contact] | tuple[Contact, ...], horizon: float | None = None
    ) -> "ContactPlan":
        """Assemble a plan, deriving horizon and node set from the contacts."""
        contacts = tuple(contacts)
        if horizon is None:
            horizon = max((c.t_end for c in contacts), default=0)
        nodes = frozenset(n for c in contacts for n in (c.from_node, c.to_node))
        return cls(contacts=contacts, horizon=horizon, node_ids=nodes)

    def contact(self, contact_id: int) -> Contact:
        return self._by_id[contact_id]

    def contacts_from(self, node: str) -> tuple[Contact, ...]:
        """All contacts transmitting from ``node``, ordered by id."""
        return self._by_from.get(node, ())


def available_contacts(plan: ContactPlan, t: float) -> set[int]:
    """Ids of contacts whose window contains ``t`` (closed interval)."""
    return {c.id for c in plan.contacts if c.t_start <= t <= c.t_end}


def occupancy_rate(plan: ContactPlan, t: float, active: set[int]) -> float:
    """Fraction of currently available contacts with a transfer in progress.

    Returns 0 when no contact is available at ``t``.
    """
    avail = available_contacts(plan, t)
    if not active <= avail:
        raise ValueError(f"active contacts {active - avail} not available at t={t}")
    if not avail:
        return 0.0
    return len(active) / len(avail)


def _parse_time(token: str, lineno: int) -> int:
    if not token.startswith("+"):
        raise ContactPlanError(f"line {lineno}: time {token!r} must be '+'-prefixed")
    try:
        value = int(token[1:])
    except ValueError:
        raise ContactPlanError(f"line {lineno}: bad time {token!r}") from None
    if value < 0:
        raise ContactPlanError(f"line {lineno}: negative time {token!r}")
    return value


def parse_contact_plan(text: str) -> ContactPlan:
    """Parse the line-oriented contact plan format into a ContactPlan.

    Contact ids are assigned sequentially in file order.  Each contact picks
    up its one-way light time from an explicit trailing field or from the
    first matching range line (direction-exact match preferred, otherwise the
    reversed pair).
    """
    raw_contacts: list[tuple[int, int, int, str, str, float, float | None]] = []
    ranges: list[tuple[int, int, str, str, float]] = []
    horizon_override: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "a":
            raise ContactPlanError(f"line {lineno}: unknown directive {tokens[0]!r}")
        if len(tokens) < 2:
            raise ContactPlanError(f"line {lineno}: truncated directive")
        kind = tokens[1]
        if kind == "horizon":
            if len(tokens) != 3:
                raise ContactPlanError(f"line {lineno}: horizon takes one time field")
            horizon_override = _parse_time(tokens[2], lineno)
            continue
        if kind not in ("contact", "range"):
            raise ContactPlanError(f"line {lineno}: unknown directive {kind!r}")
        if kind == "contact" and len(tokens) not in (7, 8):
            raise ContactPlanError(f"line {lineno}: contact needs 5 or 6 fields")
        if kind == "range" and len(tokens) != 7:
            raise ContactPlanError(f"line {lineno}: range needs 5 fields")
        t_start = _parse_time(tokens[2], lineno)
        t_end = _parse_time(tokens[3], lineno)
        if t_start > t_end:
            raise ContactPlanError(f"line {lineno}: t_start {t_start} > t_end {t_end}")
        from_node, to_node = tokens[4], tokens[5]
        try:
            value = float(tokens[6])
        except ValueError:
            raise ContactPlanError(f"line {lineno}: bad numeric field {tokens[6]!r}") from None
        if kind == "range":
            if value < 0:
                raise ContactPlanError(f"line {lineno}: negative owlt")
            ranges.append((t_start, t_end, from_node, to_node, value))
        else:
            owlt: float | None = None
            if len(tokens) == 8:
                try:
                    owlt = float(tokens[7])
                except ValueError:
                    raise ContactPlanError(
                        f"line {lineno}: bad owlt field {tokens[7]!r}"
                    ) from None
            raw_contacts.append((lineno, t_start, t_end, from_node, to_node, value, owlt))

    def lookup_owlt(t_start: int, t_end: int, frm: str, to: str) -> float:
        for exact in (True, False):
            for rs, re, rf, rt, owlt in ranges:
                pair_ok = (rf, rt) == (frm, to) if exact else (rf, rt) == (to, frm)
                if pair_ok and rs <= t_end and re >= t_start:
                    return owlt
        return 0.0

    contacts = []
    for idx, (lineno, t_start, t_end, frm, to, rate, owlt) in enumerate(raw_contacts, 1):
        if owlt is None:
            owlt = lookup_owlt(t_start, t_end, frm, to)
        try:
            contacts.append(
                Contact(
                    id=idx,
                    from_node=frm,
                    to_node=to,
                    t_start=t_start,
                    t_end=t_end,
                    rate=rate,
                    owlt=owlt,
                )
            )
        except ContactPlanError as exc:
            raise ContactPlanError(f"line {lineno}: {exc}") from None

    horizon = (
        horizon_override
        if horizon_override is not None
        else max((c.t_end for c in contacts), default=0)
    )
    try:
        return ContactPlan.build(contacts, horizon=horizon)
    except ContactPlanError as exc:
        raise ContactPlanError(str(exc)) from None


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def serialize_contact_plan(plan: ContactPlan) -> str:
    """Emit a plan in the text format; reparsing restores identical fields."""
    lines = [f"a horizon +{_fmt(plan.horizon)}"]
    for c in plan.contacts:
        lines.append(
            f"a contact +{_fmt(c.t_start)} +{_fmt(c.t_end)} "
            f"{c.from_node} {c.to_node} {_fmt(c.rate)}"
        )
        lines.append(
            f"a range +{_fmt(c.t_start)} +{_fmt(c.t_end)} "
            f"{c.from_node} {c.to_node} {_fmt(c.owlt)}"
        )
    return "\n".join(lines) + "\n"


# Six-node demonstration network: three permanent links (A-B, C-D, E-F) and a
# set of episodic links, every link represented as a pair of one-way contacts
# with rate 1 Mb/s and a 1 light-second range.
_DEMO_LINKS = (
    ("A", "B", 0, 60),
    ("A", "C", 0, 10),
    ("A", "C", 20, 30),
    ("B", "D", 0, 12),
    ("B", "D", 1, 10),
    ("C", "D", 0, 60),
    ("C", "E", 30, 40),
    ("D", "F", 35, 45),
    ("D", "F", 50, 59),
    ("E", "F", 0, 60),
)


def make_demo_plan() -> ContactPlan:
    """Reference six-node plan used by the route-search examples and tests."""
    contacts = []
    next_id = 1
    for a, b, ts, te in _DEMO_LINKS:
        for frm, to in ((a, b), (b, a)):
            contacts.append(
                Contact(
                    id=next_id,
                    from_node=frm,
                    to_node=to,
                    t_start=ts,
                    t_end=te,
                    rate=1.0,
                    owlt=1.0,
                )
            )
            next_id += 1
    return ContactPlan.build(contacts, horizon=60)
