"""Interface types: nil normalization, insertion plans, matching, membership."""

import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from agapia.iface import (
    NIL,
    SPATIAL,
    InsertionPlan,
    TBool,
    TInt,
    TList,
    TSet,
    TStarList,
    TStarTuple,
    TTuple,
    TUnion,
    VBool,
    VInt,
    VList,
    VNIL,
    VSet,
    VTup,
    align_up_to_nil,
    canon_type,
    canon_value,
    equal_up_to_nil,
    nil_normalize,
    parse_type,
    type_list_items_raw,
    type_match,
    type_to_json,
    type_to_str,
    value_from_json,
    value_has_type,
    value_to_json,
)
from conftest import gen_type, gen_value


class TestNilNormalize:
    def test_drops_nil_elements(self):
        assert nil_normalize(parse_type("sn;nil;sn")) == parse_type("sn;sn")

    def test_nil_is_the_empty_list(self):
        assert nil_normalize(parse_type("nil")) == NIL
        assert nil_normalize(TList(())) == NIL

    def test_no_nil_unchanged(self):
        t = parse_type("sn;sn")
        assert nil_normalize(t) == t

    def test_idempotent_on_random_types(self):
        rng = random.Random(7)
        for _ in range(300):
            t = gen_type(rng, 4)
            once = nil_normalize(t)
            assert nil_normalize(once) == once


def _brute_force_plan(left, right, max_insert=3):
    """Oracle: exhaustive search over nil insertions on both sides."""
    def insertions(items, count):
        if count == 0:
            yield tuple(items)
            return
        for i in range(len(items) + 1):
            yield from insertions(items[:i] + [None] + items[i:], count - 1)

    def norm(seq):
        return tuple("nil" if x is None or canon_type(x) == NIL else type_to_str(x) for x in seq)

    best = None
    for lc in range(max_insert + 1):
        for rc in range(max_insert + 1):
            for li in insertions(list(left), lc):
                for ri in insertions(list(right), rc):
                    if len(li) == len(ri) and norm(li) == norm(ri):
                        cost = lc + rc
                        if best is None or cost < best:
                            best = cost
    return best


class TestEqualUpToNil:
    def test_forced_insertion(self):
        plan = equal_up_to_nil(parse_type("sn;nil;sn"), parse_type("sn;sn"))
        assert plan == InsertionPlan(left=(), right=(1,), length=3)

    def test_distinct_leaves(self):
        assert equal_up_to_nil(parse_type("sn"), parse_type("sb")) is None

    def test_both_sides_padded(self):
        # derived by exhaustive plan search: both become nil;tn;nil
        plan = equal_up_to_nil(parse_type("nil;tn"), parse_type("tn;nil"))
        assert plan is not None
        assert plan.left == (2,) and plan.right == (0,) and plan.length == 3

    def test_against_brute_force_on_short_lists(self):
        pool = [NIL, TInt(SPATIAL), TBool(SPATIAL)]
        for llen in range(0, 3):
            for rlen in range(0, 3):
                for left in product(pool, repeat=llen):
                    for right in product(pool, repeat=rlen):
                        t, u = TList(tuple(left)), TList(tuple(right))
                        plan = equal_up_to_nil(t, u)
                        brute = _brute_force_plan(list(left), list(right))
                        if plan is None:
                            assert brute is None
                        else:
                            assert brute is not None
                            assert len(plan.left) + len(plan.right) == brute  # minimal

    def test_present_iff_normal_forms_equal(self):
        rng = random.Random(13)
        for _ in range(400):
            t, u = gen_type(rng, 3), gen_type(rng, 3)
            plan = equal_up_to_nil(t, u)
            same = nil_normalize(t) == nil_normalize(u)
            assert (plan is not None) == same


class TestTypeMatch:
    def test_union_member(self):
        assert type_match(parse_type("sn|sb"), parse_type("sn")) == parse_type("sn")

    def test_disjoint_leaves(self):
        assert type_match(parse_type("sn"), parse_type("sb")) is None

    def test_star_unrolled_to_two(self):
        # star membership oracle: (sn;)* contains exactly the all-int lists
        got = type_match(parse_type("(sn;)*"), parse_type("sn;sn"))
        assert got == parse_type("sn;sn")

    def test_stars_share_nil(self):
        assert type_match(parse_type("(sn;)*"), parse_type("(sb;)*")) == NIL

    def test_commutative_up_to_membership(self):
        rng = random.Random(3)
        for _ in range(250):
            t, u = gen_type(rng, 3), gen_type(rng, 3)
            a, b = type_match(t, u), type_match(u, t)
            assert (a is None) == (b is None)
            if a is not None:
                for _ in range(20):
                    v = gen_value(rng, 3)
                    assert value_has_type(v, a) == value_has_type(v, b)

    def test_membership_lifts_through_match(self):
        rng = random.Random(5)
        for _ in range(300):
            t, u = gen_type(rng, 3), gen_type(rng, 3)
            m = type_match(t, u)
            v = gen_value(rng, 3)
            if m is not None and value_has_type(v, m):
                assert value_has_type(v, t) and value_has_type(v, u)


class TestValueHasType:
    def test_leaf(self):
        assert value_has_type(VInt(5), parse_type("sn"))

    def test_pair(self):
        assert value_has_type(VList((VBool(True), VInt(3))), parse_type("sb;sn"))
        assert not value_has_type(VList((VInt(3), VBool(True))), parse_type("sb;sn"))

    def test_star_accepts_zero_repetitions(self):
        assert value_has_type(VNIL, parse_type("(sn;)*"))
        assert value_has_type(VList((VInt(0), VInt(1), VInt(2))), parse_type("(sn;)*"))
        assert not value_has_type(VList((VInt(0), VBool(True))), parse_type("(sn;)*"))

    def test_total_on_random_pairs(self):
        rng = random.Random(11)
        for _ in range(500):
            v, t = gen_value(rng, 3), gen_type(rng, 4)
            assert value_has_type(v, t) in (True, False)


class TestSyntaxAndJson:
    @pytest.mark.parametrize(
        "text",
        ["sn", "tb", "nil", "(sn, sb)", "(sn; sb)", "(sn)*", "(sn;)*", "(sn | sb)",
         "sIntSet", "(col:sColor, pos:sn)", "((tn, tb); (tn;)*)"],
    )
    def test_round_trip(self, text):
        t = parse_type(text)
        assert parse_type(type_to_str(t)) == canon_type(t)

    def test_value_json_round_trip(self):
        rng = random.Random(2)
        for _ in range(200):
            v = gen_value(rng, 3)
            assert canon_value(value_from_json(value_to_json(v))) == canon_value(v)

    def test_type_json_has_tags(self):
        j = type_to_json(parse_type("(sn, sb)"))
        assert j["t"] == "tuple" and len(j["fields"]) == 2


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 3_000_000))
def test_align_is_symmetric_under_swap(seed):
    rng = random.Random(seed)
    t, u = gen_type(rng, 3), gen_type(rng, 3)
    p1 = equal_up_to_nil(t, u)
    p2 = equal_up_to_nil(u, t)
    assert (p1 is None) == (p2 is None)
    if p1 is not None:
        assert p1.left == p2.right and p1.right == p2.left
