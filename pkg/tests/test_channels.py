import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interclosure import (
    Channel,
    Partition,
    Relation,
    bayesian_inverse,
    channel_from_function,
    conditional_family,
    convex_membership,
    extreme_points,
    induced_partition,
    is_deterministic,
    partition_relation,
    recover_step_map,
    two_step_joint,
)
from interclosure.channels import phase_one
from interclosure.errors import (
    DimensionMismatch,
    InputError,
    NotDeterministic,
    OutOfRangeValue,
    StateSpaceMismatch,
)

from conftest import FM, FS, random_universe
from oracles import lp_in_hull, random_channel


def test_channel_from_identity():
    ch = channel_from_function([1, 2, 3])
    np.testing.assert_array_equal(ch.entries, np.eye(3))
    assert ch.map == (1, 2, 3)


@pytest.mark.parametrize("f", [FM, FS])
def test_channel_from_fixture_maps(f):
    ch = channel_from_function(f, 6, 2)
    assert ch.entries.shape == (2, 6)
    for x, y in enumerate(f):
        assert ch.entries[y - 1, x] == 1.0
        assert ch.entries[:, x].sum() == 1.0


def test_channel_from_function_range():
    with pytest.raises(OutOfRangeValue):
        channel_from_function([1, 3], 2, 2)
    with pytest.raises(OutOfRangeValue):
        channel_from_function([1, 2], 3, 2)
    with pytest.raises(OutOfRangeValue):
        channel_from_function([0, 1])


def test_channel_validation():
    with pytest.raises(InputError):
        Channel([[0.5, 1.0], [0.6, 0.0]])
    with pytest.raises(InputError):
        Channel(np.eye(2), map=(2, 1))


class TestBayesianInverse:
    def test_uniform_in_block(self):
        ch = channel_from_function([1, 1, 2])
        inv = bayesian_inverse(ch, np.full(3, 1 / 3))
        np.testing.assert_allclose(inv.entries[:, 0], [0.5, 0.5, 0.0])
        np.testing.assert_allclose(inv.entries[:, 1], [0.0, 0.0, 1.0])

    def test_fixture_source(self, fixture_universe):
        inv = bayesian_inverse(fixture_universe.channel("S"), fixture_universe.stationary)
        np.testing.assert_allclose(inv.entries[:, 0], [1 / 3, 0, 0, 2 / 3, 0, 0], atol=1e-15)
        assert inv.unreachable == frozenset()

    def test_zero_entry_forces_zero(self):
        ch = Channel([[0.0, 0.4], [1.0, 0.6]])
        inv = bayesian_inverse(ch, [0.999, 0.001])
        assert inv.entries[0, 0] == 0.0
        assert inv.entries[1, 0] == 1.0

    def test_unreachable_output_flagged(self):
        ch = channel_from_function([1, 1], 2, 3)
        inv = bayesian_inverse(ch, [0.5, 0.5])
        assert inv.unreachable == {2, 3}
        np.testing.assert_array_equal(inv.entries[:, 1:], 0.0)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            bayesian_inverse(channel_from_function([1, 2]), [1.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 4), st.booleans())
    def test_double_inverse(self, seed, n, k, sparse_p):
        rng = np.random.default_rng(seed)
        pi = random_channel(rng, k, n)
        pi[pi < 0.15] = 0.0
        pi[np.argmax(pi, axis=0), np.arange(n)] += 1 - pi.sum(axis=0)
        ch = Channel(pi)
        px = rng.dirichlet(np.ones(n))
        if sparse_p:
            px[0] = 0.0
            px /= px.sum()
        inv = bayesian_inverse(ch, px)
        py = pi @ px
        back = bayesian_inverse(inv, py)
        keep = px > 0
        np.testing.assert_allclose(back.entries[:, keep], pi[:, keep], rtol=0, atol=1e-10)


class TestDeterministic:
    def test_fixture(self, fixture_universe):
        ok, f = is_deterministic(fixture_universe.channel("M"))
        assert ok and f == FM

    def test_midpoint_column(self):
        ok, f = is_deterministic(Channel([[1.0, 0.5], [0.0, 0.5]]))
        assert not ok and f is None

    def test_tolerance_edge(self):
        ok, f = is_deterministic(Channel([[1 - 5e-11, 0.0], [5e-11, 1.0]]))
        assert ok and f == (1, 2)
        ok, _ = is_deterministic(Channel([[1 - 5e-10, 0.0], [5e-10, 1.0]]))
        assert not ok


class TestConditionalFamily:
    def test_fixture_mprime_given_s(self, fixture_joint):
        fam = conditional_family(fixture_joint, "M'", "S")
        assert [s for s, _ in fam] == [1, 2]
        np.testing.assert_allclose(fam[0][1], [1, 0], atol=1e-15)
        np.testing.assert_allclose(fam[1][1], [0, 1], atol=1e-15)

    def test_self(self, fixture_joint):
        fam = conditional_family(fixture_joint, "M", "M")
        np.testing.assert_array_equal([v for _, v in fam], np.eye(2))

    def test_independent(self):
        P = np.full((3, 3), 1 / 3)
        j = two_step_joint(P, {"A": channel_from_function([1, 2, 1])})
        fam = conditional_family(j, "A'", "A")
        np.testing.assert_allclose(fam[0][1], fam[1][1], atol=1e-15)

    def test_skips_null_states(self):
        P = np.full((2, 2), 0.5)
        j = two_step_joint(P, {"A": channel_from_function([1, 1], 2, 3)})
        assert [b for b, _ in conditional_family(j, "A'", "A")] == [1]


class TestConvexMembership:
    def test_midpoint(self):
        assert convex_membership([0.5, 0.5], [[1, 0], [0, 1]])

    def test_outside(self):
        assert not convex_membership([1, 0], [[0.5, 0.5], [0, 1]])

    def test_generator_itself(self):
        gens = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.0, 1.0, 0.0]]
        for g in gens:
            assert convex_membership(g, gens)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            convex_membership([1, 0, 0], [[1, 0]])

    def test_degenerate_pivoting(self):
        # many coincident generators make the tableau degenerate
        gens = [[1, 0, 0]] * 4 + [[0, 1, 0]] * 3 + [[0, 0, 1]] * 2
        assert convex_membership([1 / 3, 1 / 3, 1 / 3], gens)
        assert not convex_membership([0.5, 0.5, 0.0], [[1, 0, 0]] * 3 + [[0, 0, 1]])

    def test_phase_one_residual(self):
        assert phase_one([[1.0, 1.0]], [2.0]) == pytest.approx(0.0)
        assert phase_one([[1.0, 1.0]], [-2.0]) == pytest.approx(2.0)

    @settings(max_examples=120, deadline=None)
    # spreads inside the 1e-9 membership band are a coin flip for any solver
    @given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6), st.just(0.0) | st.floats(1e-6, 1.5))
    def test_agrees_with_lp(self, seed, d, m, spread):
        rng = np.random.default_rng(seed)
        gens = rng.dirichlet(np.ones(d), size=m)
        centre = gens.mean(axis=0)
        direction = rng.dirichlet(np.ones(d)) - centre
        point = centre + spread * direction
        point = np.clip(point, 0, None)
        point /= point.sum()
        assert convex_membership(point, gens) == lp_in_hull(point, gens)


class TestExtremePoints:
    def test_midpoint_excluded(self):
        es = extreme_points([[1, 0], [0, 1], [0.5, 0.5]])
        assert len(es) == 2
        assert es.witness_sets() == [{1}, {2}]
        assert es.find(np.array([0.5, 0.5])) is None

    def test_deterministic_channel(self):
        ch = channel_from_function([3, 1, 2, 1, 3], 5, 3)
        es = extreme_points([(x + 1, ch.entries[:, x]) for x in range(5)])
        assert len(es) == 3
        got = {tuple(p.vector): set(p.witnesses) for p in es}
        assert got == {(0, 0, 1): {1, 5}, (1, 0, 0): {2, 4}, (0, 1, 0): {3}}

    def test_fixture_mprime_given_x(self, fixture_joint):
        es = extreme_points(conditional_family(fixture_joint, "M'", "X"))
        got = {tuple(np.round(p.vector, 12)): set(p.witnesses) for p in es}
        assert got == {(1.0, 0.0): {1, 4}, (0.0, 1.0): {2, 3, 5, 6}}

    def test_single_point(self):
        es = extreme_points([[0.3, 0.7], [0.3, 0.7]])
        assert len(es) == 1 and es.witness_sets() == [{1, 2}]

    def test_dedup_tolerance(self):
        es = extreme_points([[1, 0], [1 - 1e-12, 1e-12], [0, 1]])
        assert len(es) == 2

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 8))
    def test_hull_properties(self, seed, d, m):
        rng = np.random.default_rng(seed)
        fam = list(rng.dirichlet(np.ones(d), size=m))
        # throw in some interior points
        fam += [np.mean(fam[: i + 1], axis=0) for i in range(min(3, m))]
        es = extreme_points(fam)
        distinct = len(es.level_sets)
        assert 1 <= len(es) <= distinct
        for v in fam:
            assert convex_membership(v, es.vectors)
        for i, p in enumerate(es.points):
            others = [q.vector for j, q in enumerate(es.points) if j != i]
            assert not others or not lp_in_hull(p.vector, others)


class TestPartitions:
    def test_induced_fixture(self, fixture_universe):
        assert induced_partition(fixture_universe.channel("M")).as_lists() == [[1, 2, 3], [4, 5, 6]]
        assert induced_partition(fixture_universe.channel("S")).as_lists() == [[1, 4], [2, 3, 5, 6]]

    def test_identity_singletons(self):
        p = induced_partition(channel_from_function([1, 2, 3, 4]))
        assert p.as_lists() == [[1], [2], [3], [4]]

    def test_not_deterministic(self):
        with pytest.raises(NotDeterministic):
            induced_partition(Channel([[1.0, 0.5], [0.0, 0.5]]))

    def test_unreachable_outputs_dropped(self):
        p = induced_partition(channel_from_function([1, 3, 3], 3, 4))
        assert p.labels == (1, 3)

    def test_invalid(self):
        with pytest.raises(InputError):
            Partition(3, ({1, 2}, {2, 3}), (1, 2))
        with pytest.raises(InputError):
            Partition(3, ({1}, {2}), (1, 2))
        with pytest.raises(InputError):
            Partition(2, ({1}, {2}), (1, 1))

    def test_fixture_orthogonal(self):
        current, future = Partition.from_map(FM), Partition.from_map(FS)
        rel = partition_relation(current, future)
        assert rel.relation is Relation.ORTHOGONAL
        # keys are (m, s); the (s, m) table reads {1}, {4}, {2,3}, {5,6}
        assert rel.intersections == {
            (1, 1): {1},
            (2, 1): {4},
            (1, 2): {2, 3},
            (2, 2): {5, 6},
        }

    def test_self_coinciding(self):
        p = Partition.from_map(FS)
        assert partition_relation(p, p).relation is Relation.COINCIDING

    def test_intermediate(self):
        a = Partition(3, ({1}, {2, 3}), (1, 2))
        b = Partition(3, ({1, 2}, {3}), (1, 2))
        rel = partition_relation(a, b)
        assert rel.relation is Relation.INTERMEDIATE
        assert rel.intersections[(1, 2)] == frozenset()

    def test_mismatch(self):
        with pytest.raises(StateSpaceMismatch):
            partition_relation(Partition.from_map([1, 2]), Partition.from_map([1, 2, 1]))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=10), st.lists(st.integers(1, 4), min_size=10, max_size=10))
    def test_properties(self, f, h):
        a = Partition.from_map(f)
        b = Partition.from_map(h[: len(f)])
        assert sorted(x for blk in a.blocks for x in blk) == list(range(1, len(f) + 1))
        assert partition_relation(a, a).relation is Relation.COINCIDING
        if partition_relation(a, b).relation is Relation.ORTHOGONAL:
            assert len(a.blocks) * len(b.blocks) <= len(f)


class TestRecoverStepMap:
    def test_fixture_g(self, fixture_joint):
        g = recover_step_map(fixture_joint, "M'", "S")
        assert g.mapping == {1: 1, 2: 2}
        assert g.bijective is True

    def test_fixture_future_map(self, fixture_joint):
        f = recover_step_map(fixture_joint, "M'", "X")
        assert f.as_tuple() == (1, 2, 2, 1, 2, 2)
        assert f.bijective is None

    def test_iid_uniform(self):
        P = np.full((4, 4), 0.25)
        j = two_step_joint(P, {"S": channel_from_function([1, 2, 1, 2]), "M": channel_from_function([1, 1, 2, 2])})
        with pytest.raises(NotDeterministic) as info:
            recover_step_map(j, "M'", "X")
        assert info.value.state == 1

    def test_random_universe_not_deterministic(self):
        u = random_universe(5, n=5, ks=2, km=2)
        with pytest.raises(NotDeterministic):
            recover_step_map(u.joint, "M'", "S")
