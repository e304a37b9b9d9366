"""Contact graph routing engine and deterministic DTN simulator for LEO constellations."""

from cgrlab.contactplan import (
    Contact,
    ContactPlan,
    ContactPlanError,
    available_contacts,
    make_demo_plan,
    occupancy_rate,
    owlt_margin,
    parse_contact_plan,
    serialize_contact_plan,
    total_transit_time,
)
from cgrlab.contactgraph import ContactGraph, build_contact_graph, successors
from cgrlab.routesearch import (
    Route,
    compare_routes,
    dijkstra_bdt,
    edt_scalar,
    route_volume,
    yen_plus,
)
from cgrlab.forwarding import (
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
    select_route,
)
from cgrlab.traffic import (
    ScenarioSpec,
    generate_data,
    generate_expedited,
    generate_scenario,
    generate_streaming,
)
from cgrlab.constellation import (
    IslConstraints,
    WalkerParams,
    generate_contact_plan,
    orbit_period,
    pairwise_distance,
    propagate,
)
from cgrlab.simcore import POLICIES, SimulationMetrics, run_simulation

__version__ = "0.1.0"
