"""Simulation engine: lifecycles, discipline invariants, metrics, determinism."""

import pytest

from cgrlab.contactplan import Contact, ContactPlan, make_demo_plan
from cgrlab.forwarding import POLICY_RMDG, POLICY_STANDARD, Bundle
from cgrlab.simcore import (
    OUTCOME_DELIVERED,
    OUTCOME_EXPIRED,
    OUTCOME_NEVER_ROUTED,
    new_engine,
    run_simulation,
    sample_metrics,
)


def _one_hop_plan(ts=0, te=60, rate=1.0):
    return ContactPlan.build(
        [
            Contact(id=1, from_node="S", to_node="D", t_start=ts, t_end=te, rate=rate, owlt=1),
            Contact(id=2, from_node="D", to_node="S", t_start=ts, t_end=te, rate=rate, owlt=1),
        ]
    )


def _bundle(bid=1, src="S", dst="D", size=1.0, priority=0, critical=False, t_gen=0.0, ttl=30.0):
    return Bundle(
        id=bid, source=src, dest=dst, size=size, priority=priority,
        critical=critical, t_gen=t_gen, t_exp=t_gen + ttl,
    )


class TestSingleBundle:
    def test_delivery_time_and_margin(self):
        metrics = run_simulation(_one_hop_plan(), [_bundle(t_gen=3.0, ttl=27.0)], POLICY_STANDARD)
        rec = metrics.records[1]
        assert rec.outcome == OUTCOME_DELIVERED
        assert rec.t_delivered == 5.0  # one second transmitting, one second in flight
        assert rec.early_margin == 25.0

    def test_zero_bundles(self):
        metrics = run_simulation(_one_hop_plan(), [], POLICY_STANDARD)
        assert metrics.generated == 0
        assert all(row.r_o == 0 for row in metrics.rows)
        assert all(row.mb_at_sending == 0 for row in metrics.rows)

    def test_unknown_node_rejected_before_start(self):
        with pytest.raises(ValueError, match="unknown node"):
            run_simulation(_one_hop_plan(), [_bundle(dst="Z")], POLICY_STANDARD)

    def test_generation_outside_horizon_rejected(self):
        with pytest.raises(ValueError, match="horizon"):
            run_simulation(_one_hop_plan(), [_bundle(t_gen=100.0)], POLICY_STANDARD)

    def test_unreachable_destination_never_routed(self):
        plan = ContactPlan.build(
            [
                Contact(id=1, from_node="S", to_node="M", t_start=0, t_end=60, rate=1, owlt=1),
                Contact(id=2, from_node="X", to_node="D", t_start=0, t_end=60, rate=1, owlt=1),
            ]
        )
        metrics = run_simulation(plan, [_bundle()], POLICY_STANDARD)
        assert metrics.records[1].outcome == OUTCOME_NEVER_ROUTED

    def test_demo_plan_end_to_end(self):
        plan = make_demo_plan()
        bundle = Bundle(id=1, source="A", dest="F", size=1.0, priority=1,
                        critical=False, t_gen=0.0, t_exp=40.0)
        metrics = run_simulation(plan, [bundle], POLICY_STANDARD, owlt_mode="file")
        rec = metrics.records[1]
        assert rec.outcome == OUTCOME_DELIVERED
        # best route waits for the 30s window: last byte lands at 34
        assert rec.t_delivered == 34.0


class TestPriorityDiscipline:
    def test_higher_priority_transmits_first(self):
        plan = _one_hop_plan(ts=2)
        bundles = [
            _bundle(bid=1, priority=0, size=2.0),
            _bundle(bid=2, priority=2, size=2.0, critical=True),
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD)
        assert metrics.records[2].t_delivered < metrics.records[1].t_delivered

    def test_no_lower_priority_bit_before_queued_higher(self):
        plan = _one_hop_plan(ts=5)
        bundles = [
            _bundle(bid=1, priority=0, size=3.0),
            _bundle(bid=2, priority=1, size=3.0, t_gen=1.0),
            _bundle(bid=3, priority=2, size=3.0, t_gen=2.0, critical=True),
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD)
        order = sorted(
            (rec.t_delivered, bid) for bid, rec in metrics.records.items()
        )
        assert [bid for _, bid in order] == [3, 2, 1]


class TestSelectionOrderPolicy:
    def test_rmdg_processes_by_priority_then_expiry(self):
        plan = _one_hop_plan(ts=2)
        bundles = [
            _bundle(bid=1, priority=0, size=4.0, ttl=30.0),
            _bundle(bid=2, priority=1, size=4.0, ttl=29.0),
            _bundle(bid=3, priority=1, size=4.0, ttl=28.0),
        ]
        log = run_simulation(plan, bundles, POLICY_RMDG).dispatch_log
        first_three = [entry[1] for entry in log[:3]]
        assert first_three == [3, 2, 1]  # priority desc, then earliest expiry

    def test_standard_processes_in_arrival_order(self):
        plan = _one_hop_plan(ts=2)
        bundles = [
            _bundle(bid=1, priority=0, size=4.0, ttl=30.0),
            _bundle(bid=2, priority=1, size=4.0, ttl=29.0),
            _bundle(bid=3, priority=1, size=4.0, ttl=28.0),
        ]
        log = run_simulation(plan, bundles, POLICY_STANDARD).dispatch_log
        assert [entry[1] for entry in log[:3]] == [1, 2, 3]


class TestOverbooking:
    def test_displacement_recorded_and_resolved(self):
        plan = _one_hop_plan(ts=2, te=10)
        bundles = [
            _bundle(bid=1, priority=0, size=8.0, ttl=25.0),
            _bundle(bid=2, priority=2, size=8.0, ttl=25.0, critical=True),
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD)
        reasons = {entry[6] for entry in metrics.dispatch_log}
        assert "overbook_displace" in reasons
        assert metrics.records[2].outcome == OUTCOME_DELIVERED
        assert metrics.records[1].outcome in (OUTCOME_EXPIRED, OUTCOME_NEVER_ROUTED)

    def test_booked_volume_never_exceeds_capacity(self):
        plan = _one_hop_plan(te=20)
        bundles = [_bundle(bid=i, size=6.0, ttl=25.0) for i in range(1, 6)]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD)
        c = plan.contact(1)
        assert metrics.contact_usage[1] <= c.volume + 1e-9


class TestRollback:
    def _contested_run(self):
        # A commits to S->X->D, but while it crosses the first hop a local
        # bundle at X seizes the onward window; A must return to S
        plan = ContactPlan.build(
            [
                Contact(id=1, from_node="S", to_node="X", t_start=0, t_end=10, rate=1, owlt=1),
                Contact(id=2, from_node="X", to_node="S", t_start=0, t_end=20, rate=1, owlt=1),
                Contact(id=3, from_node="X", to_node="D", t_start=0, t_end=12, rate=1, owlt=1),
                Contact(id=4, from_node="D", to_node="X", t_start=0, t_end=12, rate=1, owlt=1),
            ]
        )
        bundles = [
            Bundle(id=1, source="S", dest="D", size=3.0, priority=0, critical=False,
                   t_gen=0.0, t_exp=20.0),
            Bundle(id=2, source="X", dest="D", size=8.0, priority=1, critical=False,
                   t_gen=2.0, t_exp=24.0),
        ]
        return run_simulation(plan, bundles, POLICY_STANDARD)

    def test_rollback_returns_to_upstream(self):
        metrics = self._contested_run()
        rollbacks = [e for e in metrics.dispatch_log if e[6] == "rollback"]
        assert rollbacks and rollbacks[0][1] == 1
        assert (rollbacks[0][2], rollbacks[0][3]) == ("X", "S")
        assert metrics.records[1].outcome == OUTCOME_EXPIRED
        assert metrics.records[2].outcome == OUTCOME_DELIVERED

    def test_rollback_consumes_reverse_volume(self):
        metrics = self._contested_run()
        assert metrics.contact_usage[2] == 3.0

    def test_stuck_at_source_is_stored_until_expiry(self):
        plan = ContactPlan.build(
            [
                Contact(id=1, from_node="S", to_node="D", t_start=50, t_end=60, rate=1, owlt=1),
                Contact(id=2, from_node="D", to_node="S", t_start=50, t_end=60, rate=1, owlt=1),
            ]
        )
        metrics = run_simulation(plan, [_bundle(ttl=20.0)], POLICY_STANDARD)
        assert metrics.records[1].outcome == OUTCOME_NEVER_ROUTED
        assert not [e for e in metrics.dispatch_log if e[6] == "rollback"]


class TestCriticalReplication:
    def _critical(self):
        return Bundle(id=1, source="A", dest="F", size=1.0, priority=2,
                      critical=True, t_gen=0.0, t_exp=40.0)

    def test_standard_floods_distinct_neighbors(self):
        plan = make_demo_plan()
        log = run_simulation(plan, [self._critical()], POLICY_STANDARD, owlt_mode="file").dispatch_log
        first_wave = [e for e in log if e[0] == 0.0 and e[2] == "A"]
        assert {e[3] for e in first_wave} == {"B", "C"}

    def test_rmdg_sends_single_copy(self):
        plan = make_demo_plan()
        log = run_simulation(plan, [self._critical()], POLICY_RMDG, owlt_mode="file").dispatch_log
        first_wave = [e for e in log if e[0] == 0.0 and e[2] == "A"]
        assert len(first_wave) == 1 and first_wave[0][3] == "C"

    def test_both_policies_deliver(self):
        plan = make_demo_plan()
        for policy in (POLICY_STANDARD, POLICY_RMDG):
            metrics = run_simulation(plan, [self._critical()], policy, owlt_mode="file")
            assert metrics.records[1].outcome == OUTCOME_DELIVERED

    def test_rmdg_never_dispatches_to_known_holder(self):
        plan = make_demo_plan()
        metrics = run_simulation(plan, [self._critical()], POLICY_RMDG, owlt_mode="file")
        sent_to: dict[str, set[str]] = {}
        for t, bid, frm, to, cid, policy, reason in metrics.dispatch_log:
            if reason == "critical_copy":
                assert to not in sent_to.get(frm, set())
                sent_to.setdefault(frm, set()).add(to)

    def test_standard_uses_more_transmissions(self):
        plan = make_demo_plan()
        std = run_simulation(plan, [self._critical()], POLICY_STANDARD, owlt_mode="file")
        rmdg = run_simulation(plan, [self._critical()], POLICY_RMDG, owlt_mode="file")
        assert sum(std.contact_usage.values()) > sum(rmdg.contact_usage.values())


class TestMetricsSeries:
    def test_fresh_engine_samples_zero(self):
        engine = new_engine(_one_hop_plan(), [_bundle(t_gen=5.0)], POLICY_STANDARD)
        row = sample_metrics(engine, 0.0)
        assert row.r_o == 0 and row.storage_bundles == 0
        assert row.mb_to_send == 0 and row.mb_at_sending == 0 and row.mb_sent == 0

    def test_mid_transmission_counts_at_sending(self):
        metrics = run_simulation(_one_hop_plan(), [_bundle(size=5.0)], POLICY_STANDARD)
        by_t = {row.t: row for row in metrics.rows}
        assert by_t[2.0].mb_at_sending == 5.0
        assert by_t[2.0].r_o > 0

    def test_at_sending_starts_and_ends_at_zero(self):
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=1.0 + i % 3, priority=i % 2,
                   critical=False, t_gen=float(i), t_exp=float(i) + 25.0)
            for i in range(1, 8)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        assert metrics.rows[0].mb_at_sending == 0
        assert metrics.rows[-1].mb_at_sending == 0

    def test_conservation_every_row(self):
        # the engine asserts the identity at each sample; a full run proves it held
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=1.0, priority=0, critical=False,
                   t_gen=0.0, t_exp=25.0)
            for i in range(1, 6)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        final = metrics.rows[-1]
        assert final.delivered + final.failed == metrics.generated

    def test_sent_series_monotone(self):
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=1.0, priority=0, critical=False,
                   t_gen=float(i), t_exp=float(i) + 25.0)
            for i in range(1, 6)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        sent = [row.mb_sent for row in metrics.rows]
        assert sent == sorted(sent)

    def test_storage_snapshot_matches_cached_copy_count(self):
        engine = new_engine(
            make_demo_plan(),
            [
                Bundle(id=i, source="A", dest="F", size=1.0, priority=0, critical=False,
                       t_gen=0.0, t_exp=25.0)
                for i in range(1, 4)
            ],
            POLICY_STANDARD,
            owlt_mode="file",
        )
        engine.run()
        # drained run: nothing cached anywhere
        assert engine.storage_snapshot() == {}

    def test_computing_counter_monotone(self):
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=1.0, priority=0, critical=False,
                   t_gen=float(i), t_exp=float(i) + 25.0)
            for i in range(1, 6)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        series = [row.computing_cum for row in metrics.rows]
        assert series == sorted(series)


class TestDeterminismAndIsolation:
    def _bundles(self):
        return [
            Bundle(id=i, source="A", dest="F", size=1.0 + (i % 3), priority=i % 3,
                   critical=i % 3 == 2, t_gen=float(i % 5), t_exp=float(i % 5) + 24.0)
            for i in range(1, 10)
        ]

    def test_bit_identical_repeats(self):
        plan = make_demo_plan()
        a = run_simulation(plan, self._bundles(), POLICY_RMDG, seed=3, owlt_mode="file")
        b = run_simulation(plan, self._bundles(), POLICY_RMDG, seed=3, owlt_mode="file")
        assert a.fingerprint() == b.fingerprint()

    def test_input_plan_not_mutated(self):
        plan = make_demo_plan()
        before = [(c.id, c.residual_volume) for c in plan.contacts]
        run_simulation(plan, self._bundles(), POLICY_STANDARD, owlt_mode="file")
        assert [(c.id, c.residual_volume) for c in plan.contacts] == before

    def test_policies_may_diverge_but_each_repeats(self):
        plan = make_demo_plan()
        std = run_simulation(plan, self._bundles(), POLICY_STANDARD, owlt_mode="file")
        rmdg = run_simulation(plan, self._bundles(), POLICY_RMDG, owlt_mode="file")
        assert std.fingerprint() == run_simulation(
            plan, self._bundles(), POLICY_STANDARD, owlt_mode="file"
        ).fingerprint()
        assert rmdg.fingerprint() == run_simulation(
            plan, self._bundles(), POLICY_RMDG, owlt_mode="file"
        ).fingerprint()


class TestCausality:
    def test_no_dispatch_before_generation_or_after_expiry(self):
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=2.0, priority=0, critical=False,
                   t_gen=float(2 * i), t_exp=float(2 * i) + 22.0)
            for i in range(1, 7)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        by_id = {b.id: b for b in bundles}
        for t, bid, frm, to, cid, policy, reason in metrics.dispatch_log:
            assert by_id[bid].t_gen <= t <= by_id[bid].t_exp

    def test_transmissions_within_contact_windows(self):
        plan = make_demo_plan()
        bundles = [
            Bundle(id=i, source="A", dest="F", size=2.0, priority=0, critical=False,
                   t_gen=float(2 * i), t_exp=float(2 * i) + 22.0)
            for i in range(1, 7)
        ]
        metrics = run_simulation(plan, bundles, POLICY_STANDARD, owlt_mode="file")
        for cid, used in metrics.contact_usage.items():
            c = plan.contact(cid)
            assert used <= c.volume + 1e-9
