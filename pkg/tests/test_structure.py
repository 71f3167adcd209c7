"""Diagram parsing, serialization, crossing analysis, and distances."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkinv import (
    Arc,
    Structure,
    ValidationPolicy,
    core_of,
    crossing_number,
    is_motif,
    is_skeleton,
    l_graph_of,
    parse_structure,
    serialize_structure,
    stacks,
    structure_distance,
    validate_target,
)
from pkinv.structure import (
    IllegalCharacter,
    LengthMismatch,
    OutOfRange,
    UnbalancedBracket,
)

from .helpers import PSEUDOKNOT_18, random_valid_structure

HAIRPIN = "(((....)))"


def structures(max_n=26):
    return st.builds(
        lambda seed, n: random_valid_structure(random.Random(seed), n),
        st.integers(0, 2**32 - 1),
        st.integers(10, max_n),
    )


class TestParse:
    def test_unpaired_only(self):
        s = parse_structure(":::")
        assert s.n == 3 and s.arcs == ()

    def test_hairpin(self):
        assert parse_structure(HAIRPIN).arcs == (Arc(1, 10), Arc(2, 9), Arc(3, 8))

    def test_pseudoknot_families_match_independently(self):
        s = parse_structure(PSEUDOKNOT_18)
        assert s.arcs == (
            Arc(1, 13), Arc(2, 12), Arc(3, 11),
            Arc(6, 18), Arc(7, 17), Arc(8, 16),
        )

    def test_dot_and_colon_both_mean_unpaired(self):
        assert parse_structure("(((....)))") == parse_structure("(((::::)))")

    def test_unbalanced_opener(self):
        with pytest.raises(UnbalancedBracket) as err:
            parse_structure("(((...))")
        assert err.value.position == 1

    def test_unbalanced_closer(self):
        with pytest.raises(UnbalancedBracket) as err:
            parse_structure("...)")
        assert err.value.position == 4

    def test_illegal_character(self):
        with pytest.raises(IllegalCharacter) as err:
            parse_structure("((x))")
        assert err.value.position == 3

    def test_doubly_paired_position_rejected(self):
        with pytest.raises(ValueError):
            Structure.from_pairs(10, [(1, 5), (5, 9)])

    def test_arc_outside_range_rejected(self):
        with pytest.raises(ValueError):
            Structure.from_pairs(4, [(1, 5)])


class TestSerialize:
    def test_empty(self):
        assert serialize_structure(Structure(3, ())) == ":::"

    def test_single_family(self):
        assert serialize_structure(parse_structure(HAIRPIN)) == "(((::::)))"

    def test_crossing_needs_second_family(self):
        s = parse_structure(PSEUDOKNOT_18)
        assert serialize_structure(s) == "(((::[[[::)))::]]]"

    @settings(max_examples=200, deadline=None)
    @given(structures())
    def test_round_trip(self, s):
        assert parse_structure(serialize_structure(s)) == s


class TestCrossingNumber:
    def test_empty(self):
        assert crossing_number(Structure(5, ())) == 0

    def test_noncrossing_nonempty(self):
        assert crossing_number(parse_structure(HAIRPIN)) == 1

    def test_three_mutually_crossing(self):
        s = Structure.from_pairs(16, [(1, 7), (4, 9), (5, 11), (13, 16)])
        assert crossing_number(s) == 3

    def test_pseudoknot_is_two(self):
        assert crossing_number(parse_structure(PSEUDOKNOT_18)) == 2


class TestStacks:
    def test_single_stack(self):
        (stack,) = stacks(parse_structure(HAIRPIN))
        assert stack.size == 3

    def test_two_stacks(self):
        got = stacks(parse_structure(PSEUDOKNOT_18))
        assert [st.size for st in got] == [3, 3]

    def test_broken_run_splits(self):
        got = stacks(Structure.from_pairs(10, [(1, 10), (3, 8)]))
        assert [st.size for st in got] == [1, 1]

    @settings(max_examples=100, deadline=None)
    @given(structures())
    def test_partition(self, s):
        assert sum(st.size for st in stacks(s)) == len(s.arcs)


class TestValidate:
    def test_hairpin_ok(self):
        assert validate_target(parse_structure(HAIRPIN)) == ()

    def test_short_arcs_and_thin_stack(self):
        kinds = {v.kind for v in validate_target(parse_structure("((..))"))}
        assert kinds == {"arc-length", "stack-size"}

    def test_pseudoknot_ok(self):
        assert validate_target(parse_structure(PSEUDOKNOT_18)) == ()

    def test_crossing_bound(self):
        s = Structure.from_pairs(16, [(1, 7), (4, 9), (5, 11)])
        assert any(v.kind == "crossing" for v in validate_target(s))

    def test_policy_invariants(self):
        with pytest.raises(ValueError):
            ValidationPolicy(k=1)

    @settings(max_examples=100, deadline=None)
    @given(structures())
    def test_crossing_check_matches_crossing_number(self, s):
        has_violation = any(
            v.kind == "crossing" for v in validate_target(s, ValidationPolicy())
        )
        assert has_violation == (crossing_number(s) > 2)


class TestDistance:
    def test_identity(self):
        s = parse_structure(HAIRPIN)
        assert structure_distance(s, s) == 0

    def test_missing_arc_counts_both_ends(self):
        s1 = Structure.from_pairs(10, [(1, 10), (2, 9), (3, 8)])
        s2 = Structure.from_pairs(10, [(1, 10), (2, 9)])
        assert structure_distance(s1, s2) == 2

    def test_repaired_position_counts_once_per_endpoint(self):
        s1 = Structure.from_pairs(20, [(4, 20)])
        s2 = Structure.from_pairs(20, [(4, 17)])
        # position 4 contributes 1; endpoints 17 and 20 contribute one each
        assert s1.partner[4] != s2.partner[4]
        assert structure_distance(s1, s2) == 3

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            structure_distance(Structure(3, ()), Structure(4, ()))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(10, 22))
    def test_metric_axioms(self, seed, n):
        rng = random.Random(seed)
        a, b, c = (random_valid_structure(rng, n) for _ in range(3))
        assert structure_distance(a, a) == 0
        assert structure_distance(a, b) == structure_distance(b, a)
        assert structure_distance(a, c) <= (
            structure_distance(a, b) + structure_distance(b, c)
        )
        if structure_distance(a, b) == 0:
            assert a == b


class TestCore:
    def test_hairpin_collapses(self):
        core = core_of(parse_structure(HAIRPIN))
        assert core.n == 6 and core.arcs == (Arc(1, 6),)

    def test_empty_unchanged(self):
        assert core_of(Structure(4, ())) == Structure(4, ())

    def test_pseudoknot_core(self):
        core = core_of(parse_structure(PSEUDOKNOT_18))
        assert core.n == 10 and core.arcs == (Arc(1, 7), Arc(4, 10))
        assert crossing_number(core) == 2

    @settings(max_examples=150, deadline=None)
    @given(structures())
    def test_idempotent(self, s):
        assert core_of(core_of(s)) == core_of(s)


class TestLGraphSkeletonMotif:
    def test_hairpin_graph_has_no_edges(self):
        graph = l_graph_of(parse_structure(HAIRPIN))
        assert len(graph) == 3
        assert sum(len(n) for n in graph.values()) == 0

    def test_pseudoknot_graph_is_complete_bipartite(self):
        graph = l_graph_of(parse_structure(PSEUDOKNOT_18))
        assert sum(len(n) for n in graph.values()) // 2 == 9

    def test_empty_graph(self):
        assert l_graph_of(Structure(3, ())) == {}

    def test_hairpin_is_not_skeleton(self):
        assert not is_skeleton(parse_structure(HAIRPIN))

    def test_pseudoknot_is_skeleton(self):
        assert is_skeleton(parse_structure(PSEUDOKNOT_18))

    def test_hairpin_is_motif_at_three(self):
        assert is_motif(parse_structure(HAIRPIN), 3)
        assert not is_motif(parse_structure(HAIRPIN), 2)

    def test_pseudoknot_is_motif_at_three(self):
        assert is_motif(parse_structure(PSEUDOKNOT_18), 3)


class TestPartnerAccess:
    def test_partner_of(self):
        s = Structure.from_pairs(4, [(1, 4)])
        assert s.partner_of(1) == 4
        assert s.partner_of(2) == 0
        assert s.partner_of(4) == 1

    def test_out_of_range(self):
        s = Structure(4, ())
        with pytest.raises(OutOfRange):
            s.partner_of(0)
        with pytest.raises(OutOfRange):
            s.partner_of(5)
