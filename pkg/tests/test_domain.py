import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrocascade.domain import (
    CascadeSystem,
    Curve1D,
    CurveDomainWarning,
    GeneratingUnit,
    HydraulicArc,
    LossModel,
    OperatingZoneSet,
    PhysicalConstants,
    PowerSurface,
    Reservoir,
    TimeGrid,
    evaluate_curve,
    topological_order,
    validate_topology,
)
from hydrocascade.errors import CurveError, DomainError, TopologyError


def res(rid, **kw):
    args = dict(v_min=0.0, v_max=1e6, v_initial=5e5, e_min=0.0, e_max=100.0, storage_to_elevation=Curve1D.constant(50.0))
    args.update(kw)
    return Reservoir(rid, **args)


def system(ids, arcs=(), units=()):
    return CascadeSystem(tuple(res(i) for i in ids), tuple(units), tuple(HydraulicArc(a, b) for a, b in arcs), TimeGrid(2, 3600.0))


class TestTopology:
    def test_two_reservoir_chain_is_valid(self):
        rep = validate_topology(system("AB", [("A", "B")]))
        assert rep.ok and rep.errors == []

    def test_cycle_is_reported(self):
        rep = validate_topology(system("AB", [("A", "B"), ("B", "A")]))
        assert any("cycle detected" in e for e in rep.errors)

    def test_dangling_unit_reference(self):
        u = GeneratingUnit("U1", "Z", 0.0, 10.0)
        rep = validate_topology(system("A", units=[u]))
        assert any("unresolved reservoir reference" in e for e in rep.errors)

    def test_chain_order(self):
        assert topological_order(system("CBA", [("A", "B"), ("B", "C")])) == ["A", "B", "C"]

    def test_confluence_ties_break_by_id(self):
        assert topological_order(system("CBA", [("A", "C"), ("B", "C")])) == ["A", "B", "C"]

    def test_singleton(self):
        assert topological_order(system("A")) == ["A"]

    def test_order_of_cyclic_system_raises(self):
        with pytest.raises(TopologyError):
            topological_order(system("AB", [("A", "B"), ("B", "A")]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.data())
    def test_order_respects_every_arc(self, n, data):
        ids = [f"R{k}" for k in range(n)]
        arcs = []
        for i in range(n - 1):
            if data.draw(st.booleans()):
                arcs.append((ids[i], ids[data.draw(st.integers(i + 1, n - 1))]))
        perm = data.draw(st.permutations(ids))
        order = topological_order(system(perm, arcs))
        assert sorted(order) == sorted(ids)
        pos = {r: k for k, r in enumerate(order)}
        assert all(pos[a] < pos[b] for a, b in arcs)


class TestCurves:
    def test_affine(self):
        assert evaluate_curve(Curve1D.affine(300.0, 1e-5), 1e6) == pytest.approx(310.0)

    def test_pwl_midpoint(self):
        assert evaluate_curve(Curve1D.pwl([0.0, 10.0], [0.0, 5.0]), 5.0) == 2.5

    def test_constant(self):
        c = Curve1D.constant(42.0)
        assert c(-1e9) == 42.0 and c(3.0) == 42.0

    def test_outside_domain_clamps_with_warning(self):
        c = Curve1D.table([0.0, 1.0], [2.0, 4.0])
        with pytest.warns(CurveDomainWarning):
            assert c(1.5) == 4.0

    def test_decreasing_abscissae_rejected(self):
        with pytest.raises(CurveError):
            Curve1D.table([0.0, 2.0, 1.0], [0.0, 1.0, 2.0])

    def test_non_monotone_storage_curve_rejected(self):
        with pytest.raises(DomainError):
            res("A", storage_to_elevation=Curve1D.table([0.0, 1e6], [60.0, 40.0]))

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20, unique=True), st.data())
    def test_table_exact_at_knots(self, xs, data):
        xs = sorted(xs)
        ys = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=len(xs), max_size=len(xs)))
        c = Curve1D.table(xs, ys)
        assert [c(x) for x in xs] == [float(y) for y in ys]

    @given(st.lists(st.floats(0.0, 50.0), min_size=2, max_size=12), st.floats(0.0, 1e6), st.floats(0.0, 1e6))
    def test_validated_storage_curve_is_monotone(self, steps, v1, v2):
        ys = np.cumsum(steps) + 100.0
        xs = np.linspace(0.0, 1e6, len(ys))
        r = res("A", storage_to_elevation=Curve1D.table(xs, ys))
        lo, hi = sorted((v1, v2))
        assert r.elevation(lo) <= r.elevation(hi)


class TestPhysics:
    def test_fixed_efficiency_power(self):
        p = PowerSurface(efficiency=0.9).power(10.0, 50.0)
        assert p == pytest.approx(1000 * 9.81 * 0.9 * 10 * 50 / 1e6)

    def test_non_positive_head_gives_zero_power(self):
        assert PowerSurface(efficiency=0.9).power(10.0, -3.0) == 0.0

    def test_table_surface_exact_at_vertices(self):
        q, h = (0.0, 50.0, 100.0), (20.0, 40.0)
        vals = ((0.0, 0.0), (8.0, 17.0), (15.0, 33.0))
        s = PowerSurface("power_table", discharge=q, head=h, values=vals)
        for i, qi in enumerate(q):
            for j, hj in enumerate(h):
                assert s.power(qi, hj) == vals[i][j]

    def test_efficiency_table_matches_formula(self):
        s = PowerSurface("efficiency_table", discharge=(0.0, 100.0), head=(10.0, 50.0), values=((0.8, 0.85), (0.9, 0.92)))
        c = PhysicalConstants()
        assert s.power(100.0, 50.0, c) == pytest.approx(c.rho * c.g * 0.92 * 100.0 * 50.0 / 1e6)

    def test_tailwater_with_backwater(self):
        r = res("A", tailrace=Curve1D.affine(10.0, 0.01), tailrace_backwater=0.5)
        assert r.tailwater(100.0, 20.0) == pytest.approx(10.0 + 1.0 + 10.0)

    def test_linear_loss_uses_start_storage(self):
        loss = LossModel("linear", intercept=1.0, slope=1e-6)
        assert loss.loss(3, 2e6) == pytest.approx(3.0)

    def test_reservoir_initial_storage_out_of_bounds(self):
        with pytest.raises(DomainError):
            res("A", v_initial=2e6)


class TestZones:
    zones = OperatingZoneSet("intervals_1d", ((5.0, 8.0), (10.0, 15.0)), commitment=True)

    def test_gap_point_is_one_mw_from_edge(self):
        assert not self.zones.contains(9.0)
        assert self.zones.distance(9.0) == pytest.approx(1.0)

    def test_standstill_allowed(self):
        assert self.zones.contains(0.0)

    def test_triangle_zone(self):
        z = OperatingZoneSet("zones_2d", polygons=(((5.0, 40.0), (15.0, 40.0), (10.0, 60.0)),), commitment=True)
        assert z.contains(10.0, 45.0)
        assert not z.contains(10.0, 62.0)
        assert z.distance(10.0, 62.0) == pytest.approx(2.0)  # nearest point is the apex

    def test_overlapping_intervals_rejected(self):
        with pytest.raises(DomainError):
            OperatingZoneSet("intervals_1d", ((5.0, 10.0), (9.0, 15.0)))

    def test_non_convex_polygon_rejected(self):
        with pytest.raises(DomainError):
            OperatingZoneSet("zones_2d", polygons=(((0.0, 0.0), (4.0, 0.0), (1.0, 1.0), (0.0, 4.0)),))

