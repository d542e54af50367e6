"""Acceptance suite: one test per exit criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Everything asserted here is computed, not copied: expected values come
from the independent brute-force oracles defined in the baselines module and
in tests/helpers.py.
"""

import statistics
import time
from collections import Counter
from fractions import Fraction as F
from random import Random

from hypothesis import given, settings
from hypothesis import strategies as st

from assemblage_shapley import (
    AssignmentScenario,
    OwnerSet,
    Project,
    NaturalJoin,
    OwnedTable,
    RunConfig,
    Scan,
    SourceTable,
    SynthesisSplit,
    Union,
    UtilityEvaluator,
    brute_force_tuple_oracle,
    classify_tuple,
    compute_case_rates,
    compute_error_rate,
    evaluate_plan,
    generate_assignment,
    iusv_all,
    iusv_tuple,
    minimalize,
    perm_shapley,
    run_method,
    shapley_sc,
    shapley_single_owner_only,
    shapley_sl,
    shapley_unique_multi,
    trad_shapley,
)
from assemblage_shapley.shapley import General, SingleOwnerOnly, UniqueMultiOwner

from helpers import (
    example_counter_tables,
    example_mapping_tables,
    random_mini_dataset,
    random_synthesis_set,
)


def _verdict(number: int, text: str) -> None:
    print(f"\n[ACCEPTANCE {number}] PASS - {text}")


# --- criterion 1: bridging-owner regression across every route ---------------------

def test_c1_bridging_instance_all_routes_agree_exactly():
    start = time.perf_counter()
    plan, tables = example_counter_tables()
    d = evaluate_plan(plan, tables)
    (t,) = d.tuples
    expected = {0: F(2, 3), 1: F(1, 6), 2: F(1, 6)}

    ev = UtilityEvaluator(plan, tables)
    trad = trad_shapley(ev)
    assert trad.per_owner() == expected

    res = iusv_all(d)
    assert res.allocation.per_owner() == expected

    oracle = brute_force_tuple_oracle(t.syntheses, t.utility)
    assert oracle == expected

    for owner, want in expected.items():
        split = SynthesisSplit.for_owner(t.syntheses, owner)
        assert shapley_sc(owner, split, t.utility) == want
        assert shapley_sl(owner, t.syntheses, t.utility) == want

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _verdict(1, f"trad/iusv/SC/SL/oracle all exactly (2/3, 1/6, 1/6) in {elapsed:.3f}s")


# --- criterion 2: mapping-scenario regression ----------------------------------------

def test_c2_mapping_scenario_assembly_and_allocation():
    plan, tables = example_mapping_tables()
    d = evaluate_plan(plan, tables)
    assert len(d) == 1
    (t,) = d.tuples
    assert [sorted(s) for s in t.syntheses] == [[0, 2], [1, 2]]

    oracle = brute_force_tuple_oracle(t.syntheses, t.utility)
    assert oracle == {2: F(2, 3), 0: F(1, 6), 1: F(1, 6)}
    res = iusv_all(d)
    assert res.allocation.per_owner() == {0: F(1, 6), 1: F(1, 6), 2: F(2, 3)}
    _verdict(2, "one coalition tuple, syntheses {{0,2},{1,2}}, split (1/6, 1/6, 2/3)")


# --- criterion 3: oracle equivalence sweep --------------------------------------------

def test_c3_oracle_equivalence_sweep():
    start = time.perf_counter()
    rng = Random("acceptance-sweep")
    closed_form_checks = 0
    for _ in range(1000):
        s = random_synthesis_set(rng, max_owners=10, max_syntheses=6)
        utility = F(rng.randint(1, 4), rng.randint(1, 3))
        oracle = brute_force_tuple_oracle(s, utility)
        for owner in s.owners():
            split = SynthesisSplit.for_owner(s, owner)
            assert shapley_sc(owner, split, utility) == oracle[owner]
            assert shapley_sl(owner, s, utility) == oracle[owner]
        case = classify_tuple(s)
        if isinstance(case, SingleOwnerOnly):
            assert shapley_single_owner_only(s, utility) == oracle
            closed_form_checks += 1
        elif isinstance(case, UniqueMultiOwner):
            assert shapley_unique_multi(s, utility) == oracle
            closed_form_checks += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _verdict(
        3,
        f"1000 synthesis sets: SC = SL = oracle exactly; "
        f"{closed_form_checks} closed-form cases agreed; {elapsed:.1f}s",
    )


# --- criterion 4: end-to-end equivalence ------------------------------------------------

def test_c4_end_to_end_iusv_equals_trad():
    start = time.perf_counter()
    rng = Random("acceptance-e2e")
    for i in range(50):
        plan, tables, n_owners = random_mini_dataset(rng, max_owners=8)
        assert n_owners <= 8
        d = evaluate_plan(plan, tables, n_owners=n_owners)
        assert len(d) <= 500
        ev = UtilityEvaluator(plan, tables, n_owners=n_owners)
        assert iusv_all(d).allocation.shares == trad_shapley(ev).shares
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0
    _verdict(4, f"50 random mini datasets: iusv_all == trad_shapley exactly; {elapsed:.1f}s")


# --- criterion 5: property suites ---------------------------------------------------------

@st.composite
def antichains(draw, max_owners=6, max_syntheses=4):
    width = draw(st.integers(2, max_owners))
    masks = draw(
        st.lists(st.integers(1, (1 << width) - 1), min_size=1, max_size=max_syntheses)
    )
    return minimalize([OwnerSet(width, m) for m in masks])


utilities = st.fractions(min_value=0, max_value=100, max_denominator=1000)
gammas = st.sampled_from([0.5, 1.0, 2.0])


@given(antichains(), utilities, gammas)
def _balance(s, utility, gamma):
    values = iusv_tuple(s, utility, gamma)
    assert sum(values.values(), F(0)) == utility


@given(antichains(), gammas)
def _zero_element(s, gamma):
    # re-embed in a universe with one extra owner, who contributes nothing
    wide = minimalize(
        [OwnerSet(s.width + 1, syn.bits) for syn in s]
    )
    outside = s.width
    values = iusv_tuple(wide, F(1), gamma)
    assert outside not in values
    assert shapley_sl(outside, wide, F(1)) == 0
    assert shapley_sc(outside, SynthesisSplit.for_owner(wide, outside), F(1)) == 0
    assert outside not in brute_force_tuple_oracle(wide, F(1))


def _swap_bits(mask: int, i: int, j: int) -> int:
    if (mask >> i & 1) == (mask >> j & 1):
        return mask
    return mask ^ ((1 << i) | (1 << j))


@given(antichains(), st.data())
def _symmetry(s, data):
    i = data.draw(st.integers(0, s.width - 1))
    j = data.draw(st.integers(0, s.width - 1))
    # close the set under the (i j) transposition: the result is invariant,
    # so owners i and j are interchangeable and must earn the same
    masks = list(s.masks()) + [_swap_bits(m, i, j) for m in s.masks()]
    symmetric = minimalize([OwnerSet(s.width, m) for m in masks])
    values = iusv_tuple(symmetric, F(1))
    assert values.get(i, F(0)) == values.get(j, F(0))


@given(antichains(), utilities, st.fractions(min_value=0, max_value=50, max_denominator=100))
def _scale_equivariance(s, utility, c):
    base = iusv_tuple(s, utility)
    scaled = iusv_tuple(s, c * utility)
    assert scaled == {owner: c * v for owner, v in base.items()}


@given(
    st.integers(2, 10).flatmap(
        lambda w: st.tuples(
            st.integers(0, (1 << w) - 1),
            st.integers(0, (1 << w) - 1),
            st.integers(0, (1 << w) - 1),
        ).map(lambda bits: tuple(OwnerSet(w, b) for b in bits))
    )
)
def _lattice_laws(sets):
    a, b, c = sets
    assert (a | a) == a and (a & a) == a
    assert (a | b) == (b | a) and (a & b) == (b & a)
    assert (a | (a & b)) == a and (a & (a | b)) == a
    assert ((a | b) | c) == (a | (b | c))


@given(
    st.integers(2, 8).flatmap(
        lambda w: st.lists(st.integers(1, (1 << w) - 1), min_size=1, max_size=8).map(
            lambda masks: [OwnerSet(w, m) for m in masks]
        )
    )
)
def _minimalize_antichain(sets):
    out = minimalize(sets)
    outputs = list(out)
    for a in outputs:
        for b in outputs:
            if a is not b:
                assert not a <= b
    input_bits = {s.bits for s in sets}
    for a in outputs:
        assert a.bits in input_bits
    for s in sets:
        assert any(a <= s for a in outputs)


@given(
    st.integers(1, 25),
    st.integers(1, 5),
    st.integers(1, 4),
    st.sampled_from(["EA", "UA"]),
    st.sampled_from(["EO", "UO"]),
    st.integers(0, 10**6),
)
def _datagen_copy_bound_and_no_loss(n_rows, k, max_copies, assign_mode, owner_mode, seed):
    rows = tuple((f"r{i}",) for i in range(n_rows))
    src = SourceTable("t", ("id",), rows)
    scenario = AssignmentScenario(
        owner_mode=owner_mode,
        assign_mode=assign_mode,
        k=k,
        max_copies=max_copies,
        small_table_threshold=0,
        seed=seed,
    )
    a = generate_assignment([src], scenario)
    copies = Counter()
    for t in a.tables:
        assert len(set(t.rows)) == len(t.rows)
        for row in t.rows:
            copies[row] += 1
    assert set(copies) == set(rows)  # no loss, no invention
    assert max(copies.values()) <= max_copies


def test_c5_property_suites():
    campaigns = [
        ("balance", _balance),
        ("zero element", _zero_element),
        ("symmetry under automorphism", _symmetry),
        ("scale equivariance", _scale_equivariance),
        ("owner-set lattice laws", _lattice_laws),
        ("minimalize antichain", _minimalize_antichain),
        ("datagen copy bound + no data loss", _datagen_copy_bound_and_no_loss),
    ]
    for name, campaign in campaigns:
        campaign()
    _verdict(5, f"{len(campaigns)} property suites x 500 cases: zero failures")


# --- criterion 6: Monte-Carlo behavior ------------------------------------------------------

def _five_owner_instance():
    """Fixed 5-owner instance mixing a duplicated bridge with a direct holder."""
    t_left = [OwnedTable("left", o, ("A", "B"), (("a", "b"),)) for o in (0, 3)]
    t_right = [OwnedTable("right", o, ("B", "C"), (("b", "c"),)) for o in (1, 2)]
    t_direct = [OwnedTable("direct", 4, ("A", "B", "C"), (("a", "b", "c"),))]
    plan = Union((NaturalJoin(Scan("left"), Scan("right")), Scan("direct")))
    return plan, t_left + t_right + t_direct


def test_c6_monte_carlo_unbiasedness_and_error_rate(miniworld):
    plan, tables = _five_owner_instance()
    ev = UtilityEvaluator(plan, tables)
    exact = trad_shapley(ev)

    n_seeds = 200
    estimates = [perm_shapley(ev, samples=64, seed=seed) for seed in range(n_seeds)]
    for owner in range(5):
        series = [float(est.shares[owner]) for est in estimates]
        mean = statistics.fmean(series)
        se = statistics.stdev(series) / n_seeds**0.5
        assert abs(mean - float(exact.shares[owner])) <= 3 * se, (
            f"owner {owner}: mean {mean} vs exact {float(exact.shares[owner])} "
            f"(3se = {3 * se})"
        )

    exact_mini = iusv_all(miniworld.coalition).allocation
    ev_mini = UtilityEvaluator(
        miniworld.plan, miniworld.assignment.tables, n_owners=miniworld.assignment.n_owners
    )
    perm16 = perm_shapley(ev_mini, samples=16, seed=0)
    error = compute_error_rate(exact_mini, perm16)
    assert error > F(5, 100)
    _verdict(
        6,
        f"perm unbiased within 3 standard errors on 5-owner instance; "
        f"perm-16 error rate on bundled scenario = {float(error):.1%} > 5%",
    )


# --- criterion 7: performance trend ------------------------------------------------------------

def test_c7_scaled_instance_speed_gap():
    rng = Random("scaled-trend")
    n_fact, n_dim = 12_000, 400
    facts = SourceTable(
        "facts", ("pk", "fk"), tuple((i, rng.randrange(n_dim)) for i in range(n_fact))
    )
    dims = SourceTable(
        "dims", ("fk", "attr"), tuple((j, f"a{j % 37}") for j in range(n_dim))
    )
    scenario = AssignmentScenario(owner_mode="UO", assign_mode="EA", k=10, seed=1)
    assignment = generate_assignment([facts, dims], scenario)
    assert assignment.n_owners == 12
    plan = Project(NaturalJoin(Scan("facts"), Scan("dims")), ("pk", "attr"))

    start = time.perf_counter()
    d = evaluate_plan(plan, assignment.tables, n_owners=assignment.n_owners)
    res = iusv_all(d)
    iusv_seconds = time.perf_counter() - start
    assert len(d) >= 10_000
    assert res.allocation.total() == d.total_utility()

    trad_report = run_method(
        RunConfig(method="trad", timeout_s=120.0),
        plan,
        assignment.tables,
        n_owners=assignment.n_owners,
    )
    if trad_report.status == "timeout":
        assert iusv_seconds < 10.0
        outcome = f"trad timed out at 120s; iusv finished in {iusv_seconds:.2f}s"
    else:
        assert trad_report.status == "ok"
        assert trad_report.runtime_seconds >= 10 * iusv_seconds
        outcome = (
            f"trad {trad_report.runtime_seconds:.1f}s >= 10x iusv {iusv_seconds:.2f}s"
        )
    _verdict(7, f"{len(d)} coalition tuples over 12 owners: {outcome}")


# --- criterion 8: dispatcher sanity --------------------------------------------------------------

def test_c8_gamma_sweep_routing_only(miniworld):
    results = {g: iusv_all(miniworld.coalition, g) for g in (0.5, 1.0, 2.0)}
    allocations = [res.allocation.shares for res in results.values()]
    assert allocations[0] == allocations[1] == allocations[2]

    sl_rates = [compute_case_rates(results[g].stats).sl_rate for g in (0.5, 1.0, 2.0)]
    assert sl_rates[0] <= sl_rates[1] <= sl_rates[2]
    assert sl_rates[2] > sl_rates[0]  # routing actually moves on this scenario
    _verdict(
        8,
        "gamma sweep {0.5, 1, 2}: identical exact allocations; SL rate "
        + " -> ".join(f"{r:.1%}" for r in sl_rates),
    )
