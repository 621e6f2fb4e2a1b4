"""Orbit, level and graded-set structure tests.

Derived values are recomputed here with independent brute-force oracles:
preimage maps built from scratch, step-counting walks to the cycle, and
reverse-reachability searches.
"""

import numpy as np
import pytest

from laurentops import (
    DirectedTree,
    SystemSpec,
    analyze_orbits,
    descendants,
    gen_range,
    iterate,
    k_phi,
    w_set,
)
from laurentops.errors import (
    BoundaryExitError,
    IndexRangeError,
    UnboundedSupportError,
    WindowTooSmallError,
    ZeroWeightError,
)
from laurentops.systems import (
    make_bilateral,
    make_branch_tree,
    make_branched_ray,
    make_cycle,
    make_ray_cycle,
    make_rooted_ray,
    regenerate,
)


def brute_preimages(spec):
    pre = {p: set() for p in spec.points}
    for p in spec.points:
        if spec.phi[p] is not None:
            pre[spec.phi[p]].add(p)
    return pre


def brute_steps_to_cycle(spec, x, cycle):
    steps = 0
    cur = x
    while cur not in cycle:
        cur = spec.phi[cur]
        steps += 1
        assert steps <= len(spec.points)
    return steps


class TestIterate:
    def test_cycle2(self):
        spec = make_cycle(2, [2, 3])
        assert iterate(spec, 1, 2) == 1
        assert iterate(spec, 1, 0) == 1
        assert iterate(spec, 1, 5) == 2

    def test_bilateral_translation(self):
        spec = make_bilateral(8)
        assert iterate(spec, 3, 2) == 1

    def test_ray_cycle_first_step(self):
        k = 3
        spec = make_ray_cycle(k, 8)
        assert iterate(spec, (1, 0), 1) == k

    def test_boundary_exit(self):
        spec = make_bilateral(4)
        with pytest.raises(BoundaryExitError):
            iterate(spec, -2, 5)

    def test_root_exit(self):
        spec = make_rooted_ray(4)
        with pytest.raises(BoundaryExitError):
            iterate(spec, 2, 3)


class TestAnalyzeOrbits:
    def test_cycle2(self):
        spec = make_cycle(2, [2, 3])
        orb = analyze_orbits(spec)
        assert orb.orbit_partition == (frozenset({1, 2}),)
        assert orb.cycles == ((1, 2),)
        assert all(orb.level[p] == 0 for p in spec.points)
        assert orb.branching_points == frozenset()

    def test_ray_cycle_structure(self):
        k = 3
        spec = make_ray_cycle(k, 12)
        orb = analyze_orbits(spec)
        assert set(orb.cycles[0]) == set(range(k + 1))
        # level oracle: steps needed to reach the cycle
        cyc = set(orb.cycles[0])
        for i in range(6):
            assert orb.level[(1, i)] == brute_steps_to_cycle(spec, (1, i), cyc)
            assert orb.level[(1, i)] == i + 1
        pre = brute_preimages(spec)
        assert orb.branching_points == frozenset(
            p for p in spec.points if len(pre[p]) >= 2
        )
        assert orb.branching_points == frozenset({k})
        assert orb.branching_index == 0
        assert gen_range(orb, 1, 1) == frozenset({(1, 0)})

    def test_rooted_ray(self):
        spec = make_rooted_ray(10, infinite=False)
        orb = analyze_orbits(spec)
        assert orb.cycles == ((),)
        assert orb.branching_points == frozenset()
        assert orb.branching_index == 0
        assert orb.omega is None
        assert [orb.level[i] for i in range(5)] == [0, 1, 2, 3, 4]

    def test_branched_ray_omega(self):
        spec = make_branched_ray(8, 5)
        orb = analyze_orbits(spec)
        assert orb.omega == 0
        assert orb.level[0] == 0
        assert orb.level[("s", 0)] == 1
        assert orb.level[1] == 1
        assert orb.level[-3] == -3

    def test_branch_tree_anchored_at_root(self):
        spec = make_branch_tree(2, 4)
        orb = analyze_orbits(spec)
        assert orb.level[0] == 0
        assert orb.level[2] == 2
        assert orb.level[("a", 0)] == 3
        assert orb.branching_index == 2

    def test_level_relation_pointwise(self):
        for spec in (make_ray_cycle(2, 9), make_bilateral(7),
                     make_branch_tree(1, 5), make_branched_ray(6, 4)):
            orb = analyze_orbits(spec)
            for p in spec.points:
                img = spec.phi[p]
                if img is None:
                    continue
                rec = orb.orbit_of(p)
                if p in rec.cycle:
                    assert orb.level[p] == 0
                else:
                    assert orb.level[img] == orb.level[p] - 1

    def test_partition_and_cycle_absorption(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(2, 30))
            pts = tuple(range(n))
            phi = {i: int(rng.integers(0, n)) for i in pts}
            w = {i: 1.0 + float(rng.uniform(0, 1)) for i in pts}
            spec = SystemSpec(points=pts, phi=phi, weights=w)
            orb = analyze_orbits(spec)
            seen = set()
            for part in orb.orbit_partition:
                assert not (part & seen)
                seen |= part
            assert seen == set(pts)
            for rec in orb.orbits:
                assert rec.has_cycle  # total finite map always cycles
                cyc = set(rec.cycle)
                for p in rec.points:
                    cur = p
                    for _ in range(n + 1):
                        if cur in cyc:
                            break
                        cur = spec.phi[cur]
                    assert cur in cyc

    def test_multi_orbit(self):
        spec = SystemSpec(
            points=(0, 1, 2, 3),
            phi={0: 1, 1: 0, 2: 3, 3: 2},
            weights={i: 1.0 for i in range(4)},
        )
        orb = analyze_orbits(spec)
        assert len(orb.orbits) == 2
        assert orb.omega is None


class TestGenRange:
    def test_examples(self):
        spec = make_ray_cycle(3, 10)
        orb = analyze_orbits(spec)
        assert gen_range(orb, 1, 1) == frozenset({(1, 0)})
        assert gen_range(orb, 0, 0) == frozenset(range(4))
        spec2 = make_cycle(2, [2, 3])
        orb2 = analyze_orbits(spec2)
        assert gen_range(orb2, 1, 1) == frozenset()

    def test_bad_range(self):
        spec = make_cycle(2, [2, 3])
        orb = analyze_orbits(spec)
        with pytest.raises(IndexRangeError):
            gen_range(orb, 2, 1)


class TestDescendants:
    def test_reverse_reachability_oracle(self):
        spec = make_ray_cycle(2, 8)
        for x in spec.points:
            got = descendants(spec, x).points
            # oracle: y is a descendant iff some iterate of y equals x
            expect = set()
            for y in spec.points:
                cur = y
                for _ in range(len(spec.points) + 1):
                    if cur == x:
                        expect.add(y)
                        break
                    cur = spec.phi[cur]
                    if cur is None:
                        break
            assert got == expect

    def test_cycle_reaches_itself(self):
        spec = make_cycle(2, [2, 3])
        assert descendants(spec, 1).points == frozenset({1, 2})

    def test_bilateral_truncation_flag(self):
        spec = make_bilateral(6)
        res = descendants(spec, 0)
        assert res.points == frozenset(range(0, 7))
        assert res.window_truncated

    def test_finite_no_flag(self):
        spec = make_rooted_ray(5, infinite=False)
        assert not descendants(spec, 0).window_truncated

    def test_backward_closed(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            n = int(rng.integers(3, 25))
            pts = tuple(range(n))
            spec = SystemSpec(
                points=pts,
                phi={i: int(rng.integers(0, n)) for i in pts},
                weights={i: 1.0 for i in pts},
            )
            x = int(rng.integers(0, n))
            des = descendants(spec, x).points
            for z in pts:
                if spec.phi[z] in des:
                    assert z in des


class TestKPhi:
    def test_ray_cycle(self):
        spec = make_ray_cycle(3, 10)
        orb = analyze_orbits(spec)
        assert k_phi(orb, {(1, 0)}) == 1
        assert k_phi(orb, {(1, 0), (1, 2)}) == 3

    def test_exact_band(self):
        spec = make_ray_cycle(2, 10)
        orb = analyze_orbits(spec)
        support = gen_range(orb, 1, 3)
        assert k_phi(orb, support) == 3

    def test_empty_support(self):
        spec = make_cycle(2, [2, 3])
        orb = analyze_orbits(spec)
        assert k_phi(orb, set()) == 1

    def test_rooted_support_at_root(self):
        spec = make_rooted_ray(6, infinite=False)
        orb = analyze_orbits(spec)
        assert k_phi(orb, {0}) == 0

    def test_cycle_support_rejected(self):
        spec = make_ray_cycle(2, 6)
        orb = analyze_orbits(spec)
        with pytest.raises(UnboundedSupportError):
            k_phi(orb, {0})

    def test_below_anchor_rejected(self):
        spec = make_branched_ray(6, 3)
        orb = analyze_orbits(spec)
        with pytest.raises(UnboundedSupportError):
            k_phi(orb, {-2})


class TestWSet:
    def test_ray_cycle_layers(self):
        spec = make_ray_cycle(3, 10)
        orb = analyze_orbits(spec)
        assert w_set(orb, spec, {(1, 0)}, 0) == frozenset({(1, 0)})
        assert w_set(orb, spec, {(1, 0)}, 2) == frozenset({(1, 2)})

    def test_layer_definition_oracle(self):
        # the n-th layer is exactly the n-fold preimage of the base layer
        spec = make_branched_ray(8, 5)
        orb = analyze_orbits(spec)
        support = {0, ("s", 0)}
        base = w_set(orb, spec, support, 0)
        pre = brute_preimages(spec)
        layer = set(base)
        for n in range(1, 4):
            layer = {y for x in layer for y in pre[x]}
            assert w_set(orb, spec, support, n) == frozenset(layer)

    def test_forward_layers_without_cycle(self):
        spec = make_branched_ray(8, 5)
        orb = analyze_orbits(spec)
        support = {0, ("s", 0)}
        base = w_set(orb, spec, support, 0)
        fwd = {spec.phi[x] for x in base if spec.phi[x] is not None}
        assert w_set(orb, spec, support, -1) == frozenset(fwd)

    def test_grading_invariant(self):
        spec = make_ray_cycle(2, 9)
        orb = analyze_orbits(spec)
        support = {(1, 0)}
        for n in range(1, 5):
            layer = w_set(orb, spec, support, n)
            prev = w_set(orb, spec, support, n - 1)
            assert {spec.phi[x] for x in layer} <= prev

    def test_negative_index_with_cycle(self):
        spec = make_ray_cycle(2, 6)
        orb = analyze_orbits(spec)
        with pytest.raises(IndexRangeError):
            w_set(orb, spec, {(1, 0)}, -1)

    def test_empty_structural_support(self):
        spec = make_cycle(2, [2, 3])
        orb = analyze_orbits(spec)
        assert w_set(orb, spec, set(), 0) == frozenset()
        assert w_set(orb, spec, set(), 3) == frozenset()


class TestWindowConsistency:
    def test_bilateral_regeneration_overlap(self):
        small = make_bilateral(6)
        large = regenerate(small, 10)
        for p in small.points:
            if p not in small.truncated_exits:
                assert large.phi[p] == small.phi[p]
            assert large.weights[p] == small.weights[p]

    def test_ray_cycle_regeneration_overlap(self):
        small = make_ray_cycle(3, 6)
        large = regenerate(small, 12)
        for p in small.points:
            if p in small.truncated_columns:
                continue
            assert large.phi[p] == small.phi[p]
            assert large.weights[p] == small.weights[p]


class TestSpecValidation:
    def test_zero_weight_rejected(self):
        with pytest.raises(ZeroWeightError):
            SystemSpec(points=(0, 1), phi={0: 1, 1: 0},
                       weights={0: 0.0, 1: 1.0})

    def test_missing_phi_rejected(self):
        with pytest.raises(ValueError):
            SystemSpec(points=(0, 1), phi={0: 1}, weights={0: 1.0, 1: 1.0})

    def test_window_cap(self):
        n = 5000
        with pytest.raises(WindowTooSmallError):
            SystemSpec(points=tuple(range(n)),
                       phi={i: (i + 1) % n for i in range(n)},
                       weights={i: 1.0 for i in range(n)})


class TestDirectedTree:
    def test_duality_and_validation(self):
        tree = DirectedTree.from_parent_map(
            {1: 0, 2: 0, 3: 1}, vertices=(0, 1, 2, 3)
        )
        assert tree.root == 0
        assert set(tree.children[0]) == {1, 2}
        assert tree.branching_vertices == frozenset({0})
        for v, cs in tree.children.items():
            for c in cs:
                assert tree.parent[c] == v

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            DirectedTree(vertices=(0, 1), parent={0: 1, 1: 0},
                         root=None).validate()

    def test_disconnected_rejected(self):
        with pytest.raises(ValueError):
            DirectedTree.from_parent_map({1: 0, 3: 2}, vertices=(0, 1, 2, 3))

    def test_from_system_subtree(self):
        spec = make_ray_cycle(2, 6)
        tree = DirectedTree.from_system(
            spec, descendants(spec, (1, 0)).points, root=(1, 0)
        )
        assert tree.root == (1, 0)
        assert tree.branching_vertices == frozenset()
