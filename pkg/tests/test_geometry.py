import math

import numpy as np
import pytest

import platelab as pl
from platelab.geometry import (
    Axis,
    DisconnectedInteriorError,
    GeometryError,
    cap_reflection_contained,
    mirror_orbit_ids,
    mirror_ranks,
    reflect_values,
)


class TestDomainSpec:
    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(GeometryError):
            pl.disk(0.0)
        with pytest.raises(GeometryError):
            pl.rectangle(-1.0, 1.0)

    def test_annulus_needs_inner_below_outer(self):
        with pytest.raises(GeometryError):
            pl.annulus(1.0, 0.5)

    def test_declared_axis_must_be_symmetry(self):
        spec = pl.ellipse(1.0, 0.6)
        bogus = pl.geometry.DomainSpec(
            spec.kind, spec.params, spec.center, (Axis(0, 0.3),)
        )
        with pytest.raises(GeometryError):
            pl.geometry._check_axes(bogus)

    def test_level_sign(self):
        for spec in (pl.disk(1.0), pl.annulus(0.5), pl.ellipse(1, 0.6),
                     pl.unit_square(), pl.stadium(1.0, 0.5)):
            xmin, xmax, ymin, ymax = spec.bbox()
            assert spec.level(xmax + 0.1, 0.5 * (ymin + ymax)) > 0
        assert pl.disk(1.0).level(0.0, 0.0) < 0
        assert pl.annulus(0.5).level(0.0, 0.0) > 0  # the hole is outside
        assert pl.annulus(0.5).level(0.75, 0.0) < 0


class TestBuildGrid:
    def test_unit_square_five_nodes(self):
        g = pl.build_grid(pl.unit_square(), 5)
        assert g.n == 9
        assert g.delta == 0.25
        assert (g.theta == 1.0).all()
        assert sorted(set(g.node_x.tolist())) == [0.25, 0.5, 0.75]

    def test_disk_interior_count(self):
        g = pl.build_grid(pl.disk(1.0), 65)  # delta = 1/32
        expected = math.pi / g.delta**2
        assert abs(g.n - expected) / expected < 0.02

    def test_annulus_interior_count_and_loops(self):
        g = pl.build_grid(pl.annulus(0.5, 1.0), 129)  # delta = 1/64
        expected = math.pi * (1 - 0.25) / g.delta**2
        assert abs(g.n - expected) / expected < 0.02
        assert g.spec.n_boundary_loops() == 2

    def test_too_few_nodes_rejected(self):
        with pytest.raises(GeometryError):
            pl.build_grid(pl.disk(1.0), 4)

    def test_disconnected_interior_names_components(self):
        with pytest.raises(DisconnectedInteriorError) as err:
            pl.build_grid(pl.annulus(0.9, 1.0), 9)
        assert len(err.value.component_sizes) > 1

    def test_cut_fractions_match_circle(self):
        g = pl.build_grid(pl.disk(1.0), 33)
        # pick a node with an eastern cut and verify against the exact
        # crossing of the unit circle along its row
        cut_nodes = np.flatnonzero((g.theta[:, 1] < 1.0))
        assert cut_nodes.size
        for i in cut_nodes[:10]:
            x, y = g.node_x[i], g.node_y[i]
            x_cross = math.sqrt(1.0 - y * y)
            assert g.theta[i, 1] == pytest.approx((x_cross - x) / g.delta, abs=1e-11)

    def test_boundary_normals_are_unit(self):
        g = pl.build_grid(pl.ellipse(1.0, 0.6), 33)
        norms = np.linalg.norm(g.boundary_normals, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12

    def test_theta_range(self):
        g = pl.build_grid(pl.stadium(1.0, 0.5), 33)
        assert (g.theta > 0).all() and (g.theta <= 1).all()


class TestReflectValues:
    def test_symmetric_field_reflects_exactly(self):
        g = pl.build_grid(pl.disk(1.0), 65)
        f = np.cos(3 * g.node_x**2) * np.exp(g.node_y)
        r = reflect_values(g, f, Axis(0, 0.0), 0.0)
        assert r.present.all()
        assert np.array_equal(r.values, f)

    def test_odd_field_negates_exactly(self):
        g = pl.build_grid(pl.disk(1.0), 65)
        f = g.node_x * np.exp(g.node_y)
        r = reflect_values(g, f, Axis(0, 0.0), 0.0)
        assert np.array_equal(r.values, -f)

    def test_involution_bitwise(self):
        g = pl.build_grid(pl.disk(1.0), 65)
        f = np.random.default_rng(3).normal(size=g.n)
        once = reflect_values(g, f, Axis(0, 0.0), 0.0)
        twice = reflect_values(g, once.values, Axis(0, 0.0), 0.0)
        assert np.array_equal(twice.values, f)

    def test_off_axis_reflection_flags_absent(self):
        g = pl.build_grid(pl.disk(1.0), 65)
        f = np.ones(g.n)
        r = reflect_values(g, f, Axis(0, 0.0), 0.5)
        # nodes far left of the plane reflect to points outside the disk
        far_left = g.node_x < -0.2
        assert not r.present[far_left].any()
        cap = g.node_x > 0.5
        assert r.present[cap].all()

    def test_interpolation_is_second_order(self):
        def err(nps):
            g = pl.build_grid(pl.rectangle(2.0, 2.0), nps)
            # keep the fractional interpolation phase fixed across
            # resolutions so the prefactor matches
            lam = g.xs[g.xs.shape[0] // 2 + 3] + 0.37 * g.delta
            f = np.sin(1.3 * g.node_x + 0.4) * np.cos(0.7 * g.node_y)
            r = reflect_values(g, f, Axis(0, 0.0), lam)
            exact = np.sin(1.3 * (2 * lam - g.node_x) + 0.4) * np.cos(0.7 * g.node_y)
            sel = r.present & (np.abs(2 * lam - g.node_x) < 0.9) & (np.abs(g.node_y) < 0.9)
            return np.max(np.abs(r.values[sel] - exact[sel]))

        ratio = err(65) / err(129)
        assert 2.8 < ratio < 5.2

    def test_y_axis_reflection(self):
        g = pl.build_grid(pl.ellipse(1.0, 0.6), 65)
        f = np.abs(g.node_y) + g.node_x
        r = reflect_values(g, f, Axis(1, 0.0), 0.0)
        assert np.array_equal(r.values, f)

    def test_field_wrapper(self):
        from platelab.fields import field_from_function

        g = pl.build_grid(pl.disk(1.0), 33)
        f = field_from_function(g, lambda x, y: x + y * y)
        r = pl.reflect_field(f, Axis(0, 0.0), 0.0)
        assert np.array_equal(r.values, -g.node_x + g.node_y**2)


class TestMirrorRanks:
    def test_mirror_is_involution(self):
        g = pl.build_grid(pl.ellipse(1.0, 0.6), 65)
        for ax in g.spec.axes:
            m = mirror_ranks(g, ax)
            assert np.array_equal(m[m], np.arange(g.n))

    def test_orbit_ids_are_reflection_invariant(self):
        g = pl.build_grid(pl.disk(1.0), 33)
        ids = mirror_orbit_ids(g)
        for ax in g.spec.axes:
            m = mirror_ranks(g, ax)
            assert np.array_equal(ids, ids[m])


class TestReflectionCaps:
    def test_disk(self):
        caps = pl.reflection_caps(pl.disk(1.0), 0)
        assert caps.lam0 == 1.0
        assert caps.lam1 == 0.0
        assert caps.lam2 == 0.0

    def test_centered_square(self):
        caps = pl.reflection_caps(pl.rectangle(1.0, 1.0), 0)
        assert caps.lam0 == 0.5
        assert caps.lam1 == 0.0
        assert caps.lam2 == 0.0

    def test_annulus_touching_position(self):
        caps = pl.reflection_caps(pl.annulus(0.5, 1.0), 0)
        assert caps.lam2 == pytest.approx(0.75, abs=1e-8)
        assert caps.lam2 <= caps.lam1 < caps.lam0
        assert caps.lam2 > 0.0  # strictly beyond the symmetry axis

    def test_ordering_for_all_builtins(self):
        for spec in (pl.disk(1.0), pl.annulus(0.3), pl.ellipse(1, 0.6),
                     pl.unit_square(), pl.stadium(1.0, 0.5)):
            for dim in (0, 1):
                caps = pl.reflection_caps(spec, dim)
                assert caps.lam2 <= caps.lam1 < caps.lam0
                if spec.is_convex:
                    offset = next(a.offset for a in spec.axes if a.dim == dim)
                    assert caps.lam1 == offset
                    assert caps.lam2 == offset

    def test_containment_monotone_above_lam2(self):
        rng = np.random.default_rng(11)
        for spec in (pl.disk(1.0), pl.annulus(0.5), pl.ellipse(1, 0.6)):
            caps = pl.reflection_caps(spec, 0)
            lo = caps.lam2 + 1e-6
            for _ in range(20):
                a, b = sorted(rng.uniform(lo, caps.lam0, size=2))
                if cap_reflection_contained(spec, 0, a):
                    assert cap_reflection_contained(spec, 0, b)

    def test_non_axis_aligned_rejected(self):
        with pytest.raises(GeometryError):
            pl.reflection_caps(pl.disk(1.0), (0.7, 0.7))


class TestBoundaryNormal:
    def test_disk_east(self):
        assert np.allclose(pl.boundary_normal(pl.disk(1.0), (1.0, 0.0)), (1.0, 0.0))

    def test_square_bottom(self):
        n = pl.boundary_normal(pl.unit_square(), (0.5, 0.0))
        assert np.allclose(n, (0.0, -1.0))

    def test_ellipse_vertex(self):
        n = pl.boundary_normal(pl.ellipse(2.0, 1.0), (2.0, 0.0))
        assert np.allclose(n, (1.0, 0.0))

    def test_annulus_inner_points_into_hole(self):
        n = pl.boundary_normal(pl.annulus(0.5, 1.0), (0.5, 0.0))
        assert np.allclose(n, (-1.0, 0.0))

    def test_off_boundary_rejected(self):
        with pytest.raises(GeometryError):
            pl.boundary_normal(pl.disk(1.0), (0.5, 0.0))
