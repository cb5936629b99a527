import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_assignments, feasible_mask, objective_values, random_instance
from qasbse.instances import (Constraint, InvalidInstance, Objective, ParseError, ProblemInstance,
                              Variable, evaluate, evaluate_batch, find_feasible, generate_fm,
                              generate_nrp, parse_classic_nrp, parse_dimacs_fm,
                              serialize_classic_nrp, serialize_dimacs_fm)

ATTR_HEADER = "feature,richness,reliability,defects,cost\n"


def test_parse_classic_example():
    inst = parse_classic_nrp("1\n2\n3 5\n1\n1 2\n1\n10 1 1\n")
    assert inst.n == 3
    assert inst.objectives[0].coefficients == (3, 5, 0)
    assert inst.objectives[1].coefficients == (0, 0, 10)
    assert inst.objectives[1].sense == "maximize"
    # requirement 2 requires requirement 1, customer 1 requires requirement 1
    assert inst.constraints == (Constraint.implies(1, 0), Constraint.implies(2, 0))


def test_parse_classic_crlf_and_multilevel():
    text = "2\r\n1\r\n4\r\n2\r\n1 2\r\n0\r\n1\r\n7 2 1 3\r\n"
    inst = parse_classic_nrp(text)
    assert inst.objectives[0].coefficients[:3] == (4, 1, 2)
    assert inst.constraints == (Constraint.implies(3, 0), Constraint.implies(3, 2))


def test_parse_classic_empty_sections():
    inst = parse_classic_nrp("1\n3\n1 2 3\n0\n0\n")
    assert inst.n == 3
    assert inst.objectives[1].coefficients == (0, 0, 0)
    assert inst.constraints == ()


@pytest.mark.parametrize("text, line", [
    ("1\n2\n3\n0\n0\n", 3),            # too few costs
    ("1\n2\n3 5\n1\n1 9\n0\n", 5),     # dangling dependency id
    ("1\n2\n3 x\n0\n0\n", 3),          # non-numeric
    ("1\n1\n3\n0\n1\n5 2 1\n", 6),     # count mismatch on customer line
    ("1\n1\n3\n0\n0\n99\n", 6),        # trailing content
])
def test_parse_classic_errors_name_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_classic_nrp(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_classic_round_trip():
    inst = generate_nrp(20, 20, 0.2, seed=4, name="rt")
    again = parse_classic_nrp(serialize_classic_nrp(inst), name="rt")
    assert again == inst
    assert serialize_classic_nrp(again) == serialize_classic_nrp(inst)


def test_parse_dimacs_example():
    attrs = ATTR_HEADER + "a,1,2,3,4\nb,5,6,7,8\n"
    inst = parse_dimacs_fm("c comment\np cnf 2 1\n1 -2 0\n", attrs)
    assert inst.n == 2
    assert len(inst.objectives) == 4
    assert inst.senses == ("maximize", "maximize", "minimize", "minimize")
    assert inst.constraints == (Constraint.clause([(0, True), (1, False)]),)
    assert inst.objectives[3].coefficients == (4, 8)


@pytest.mark.parametrize("cnf, attrs", [
    ("p cnf 2 1\n0\n", "a,1,1,1,1\nb,1,1,1,1\n"),
    ("p cnf 2 1\n1 3 0\n", "a,1,1,1,1\nb,1,1,1,1\n"),
    ("p cnf 2 1\n1 2 0\n", "a,1,1,1,1\n"),
    ("p cnf 2 1\n1 2\n", "a,1,1,1,1\nb,1,1,1,1\n"),
    ("1 2 0\n", "a,1,1,1,1\nb,1,1,1,1\n"),
])
def test_parse_dimacs_errors(cnf, attrs):
    with pytest.raises(ParseError):
        parse_dimacs_fm(cnf, ATTR_HEADER + attrs)


def test_dimacs_feasibility_matches_sat_oracle():
    rng = np.random.default_rng(5)
    lines = []
    for _ in range(5):
        vs = rng.choice(10, 3, replace=False) + 1
        lines.append(" ".join(str(int(v) * (1 if rng.random() < 0.5 else -1)) for v in vs) + " 0")
    cnf = "p cnf 10 5\n" + "\n".join(lines) + "\n"
    attrs = ATTR_HEADER + "".join(f"f{i},1,1,1,1\n" for i in range(10))
    inst = parse_dimacs_fm(cnf, attrs)
    X = all_assignments(10)
    sat = np.array([all(any((x[abs(int(t)) - 1] == 1) == (int(t) > 0) for t in ln.split()[:-1])
                        for ln in lines) for x in X])
    assert np.array_equal(np.array([evaluate(inst, x).feasible for x in X]), sat)


def test_dimacs_round_trip():
    fm = generate_fm(15, 0.3, seed=2, name="fm")
    cnf, attrs = serialize_dimacs_fm(fm)
    again = parse_dimacs_fm(cnf, attrs, name="fm")
    X = all_assignments(fm.n)[::7]
    assert np.array_equal(evaluate_batch(fm, X)[1] == 0, evaluate_batch(again, X)[1] == 0)
    assert np.array_equal(fm.objective_matrix, again.objective_matrix)


def test_generate_nrp_deterministic_and_ranges():
    a, b = generate_nrp(5, 5, 0.2, seed=7), generate_nrp(5, 5, 0.2, seed=7)
    assert a == b and a.dumps() == b.dumps()
    big = generate_nrp(30, 30, 0.3, seed=1)
    cost = np.array(big.objectives[0].coefficients[:30])
    profit = np.array(big.objectives[1].coefficients[30:])
    assert cost.min() >= 1 and cost.max() <= 10
    assert profit.min() >= 1 and profit.max() <= 50
    requests = [c for c in big.constraints if c.vars[0] >= 30]
    assert len(requests) == 30 * (1 + 9)


def test_generate_nrp_minimal():
    inst = generate_nrp(1, 1, 0.0, seed=3)
    assert len(inst.constraints) == 1 and inst.constraints[0] == Constraint.implies(1, 0)


def test_generate_nrp_dependencies_acyclic():
    inst = generate_nrp(30, 30, 0.3, seed=1)
    edges = [c.vars for c in inst.constraints if c.vars[0] < 30]
    assert len(edges) == 9
    # Kahn's algorithm consumes every node iff the graph is acyclic
    indeg = {i: 0 for i in range(30)}
    for a, b in edges:
        indeg[b] += 1
    ready = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for a, b in edges:
            if a == v:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
    assert seen == 30


def test_generate_fm_minimal_and_deterministic():
    fm = generate_fm(2, 0.0, seed=3)
    assert fm.n == 2 and len(fm.objectives) == 4
    assert generate_fm(9, 0.3, seed=4) == generate_fm(9, 0.3, seed=4)


def test_generate_fm_attribute_ranges():
    fm = generate_fm(40, 0.2, seed=1)
    ranges = {"richness": (1, 10), "reliability": (1, 10), "defects": (0, 10), "cost": (5, 15)}
    for o in fm.objectives:
        lo, hi = ranges[o.name]
        assert lo <= min(o.coefficients) and max(o.coefficients) <= hi


@pytest.mark.parametrize("seed", [9, 10, 11])
def test_generate_fm_has_feasible_assignment(seed):
    fm = generate_fm(12, 0.25, seed=seed)
    assert feasible_mask(fm, all_assignments(12)).any()
    cross = [c for c in fm.constraints if c.kind == "excludes"]
    assert len(cross) <= 3


def test_evaluate_examples(toy_nrp):
    ev = evaluate(toy_nrp, [0, 0, 0, 0])
    assert ev.objective_values == (0, 0) and ev.feasible
    ev = evaluate(toy_nrp, [1, 0, 1, 0])
    assert ev.objective_values == (1, 3) and ev.feasible
    ev = evaluate(toy_nrp, [0, 0, 1, 0])
    assert not ev.feasible and ev.violations["implies"] == 1


def test_evaluate_length_mismatch(toy_nrp):
    with pytest.raises(ValueError):
        evaluate(toy_nrp, [0, 1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 10))
def test_evaluate_agrees_with_logic_oracle(seed, n):
    inst = random_instance(np.random.default_rng(seed), n, m=3, n_constraints=n)
    X = all_assignments(n)
    objs, viol = evaluate_batch(inst, X)
    assert np.array_equal(viol == 0, feasible_mask(inst, X))
    assert np.allclose(objs, objective_values(inst, X))
    for x in X[:: max(1, len(X) // 16)]:
        ev = evaluate(inst, x)
        assert ev.feasible == (sum(ev.violations.values()) == 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_single_flip_changes_objective_by_coefficient(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 8)
    x = rng.integers(0, 2, 8)
    base = np.array(evaluate(inst, x).objective_values)
    for i in range(8):
        y = x.copy()
        y[i] ^= 1
        delta = np.abs(np.array(evaluate(inst, y).objective_values) - base)
        assert np.all(delta == np.abs(inst.objective_matrix[:, i]))


def test_json_round_trip_and_validation():
    inst = random_instance(np.random.default_rng(1), 6, m=2)
    assert ProblemInstance.loads(inst.dumps()) == inst
    v = (Variable(0, "a", "feature"), Variable(1, "b", "feature"))
    o = (Objective("f", "minimize", (1, 2)), Objective("g", "maximize", (1, 1)))
    with pytest.raises(InvalidInstance):
        ProblemInstance("bad", v, o[:1], ())
    with pytest.raises(InvalidInstance):
        ProblemInstance("bad", v, o, (Constraint.implies(0, 5),))
    with pytest.raises(InvalidInstance):
        ProblemInstance("bad", (v[1], v[0]), o, ())
    with pytest.raises(InvalidInstance):
        Constraint.clause([])
    with pytest.raises(InvalidInstance):
        Constraint.or_group(0, [])


def test_find_feasible(toy_nrp):
    x = find_feasible(toy_nrp)
    assert x is not None and evaluate(toy_nrp, x).feasible
