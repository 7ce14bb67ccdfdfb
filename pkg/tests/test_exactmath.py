"""Exact LP layer: hand-checked programs plus a vertex-enumeration oracle.

The oracle solves small LPs from first principles: every vertex of the
feasible region is the solution of some square subsystem of tight
constraints, so enumerating all of them and keeping the feasible best
gives the exact optimum independently of the simplex code path.
"""

import itertools
import random
from fractions import Fraction as F

import pytest

from caei.exactmath import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpError,
    simplex_solve,
    solve_linear_system,
)


def vertex_oracle(lp):
    """(status, objective) for a bounded-feasible-region LP, by brute force."""
    names = list(lp._variables)
    k = len(names)
    rows = []
    for coeffs, rel, b in lp._constraints:
        rows.append(([coeffs.get(nm, F(0)) for nm in names], rel, b))
    for j, nm in enumerate(names):
        free, upper = lp._variables[nm]
        unit = [F(0)] * k
        unit[j] = F(1)
        if not free:
            rows.append((unit, ">=", F(0)))
        if upper is not None:
            rows.append((unit, "<=", upper))

    def feasible(x):
        for coeffs, rel, b in rows:
            lhs = sum(c * v for c, v in zip(coeffs, x))
            if rel == "<=" and lhs > b:
                return False
            if rel == ">=" and lhs < b:
                return False
            if rel == "==" and lhs != b:
                return False
        return True

    objective = [lp._objective.get(nm, F(0)) for nm in names]
    best = None
    for subset in itertools.combinations(range(len(rows)), k):
        x = solve_linear_system([rows[i][0] for i in subset], [rows[i][2] for i in subset])
        if x is None or not feasible(x):
            continue
        value = sum(c * v for c, v in zip(objective, x))
        if best is None:
            best = value
        elif lp.sense == "max":
            best = max(best, value)
        else:
            best = min(best, value)
    if best is None:
        return INFEASIBLE, None
    return OPTIMAL, best


def test_single_variable_box():
    lp = LinearProgram(sense="max")
    lp.add_variable("x")
    lp.set_objective({"x": 1})
    lp.add_constraint({"x": 1}, "<=", 1)
    out = simplex_solve(lp)
    assert out.status == OPTIMAL
    assert out.objective_value == 1
    assert out.assignment["x"] == 1


def test_contradictory_bounds_infeasible():
    lp = LinearProgram(sense="max")
    lp.add_variable("x")
    lp.set_objective({"x": 1})
    lp.add_constraint({"x": 1}, ">=", 2)
    lp.add_constraint({"x": 1}, "<=", 1)
    assert simplex_solve(lp).status == INFEASIBLE


def test_priced_out_slack_program():
    # max eps  s.t.  p/2 >= 1 + eps,  p <= 3: the optimum pushes p to its
    # cap, eps = 1/2.  Cross-checked against the vertex oracle.
    lp = LinearProgram(sense="max")
    lp.add_variable("p", upper=3)
    lp.add_variable("eps")
    lp.set_objective({"eps": 1})
    lp.add_constraint({"p": F(1, 2), "eps": -1}, ">=", 1)
    out = simplex_solve(lp)
    assert out.status == OPTIMAL
    assert out.objective_value == F(1, 2)
    assert out.assignment == {"p": F(3), "eps": F(1, 2)}
    assert vertex_oracle(lp) == (OPTIMAL, F(1, 2))


def test_unbounded():
    lp = LinearProgram(sense="max")
    lp.add_variable("x")
    lp.set_objective({"x": 1})
    lp.add_constraint({"x": 1}, ">=", 1)
    assert simplex_solve(lp).status == UNBOUNDED


def test_free_variable():
    lp = LinearProgram(sense="min")
    lp.add_variable("x", free=True)
    lp.set_objective({"x": 1})
    lp.add_constraint({"x": 1}, ">=", -5)
    out = simplex_solve(lp)
    assert out.status == OPTIMAL
    assert out.assignment["x"] == -5


def test_equalities_need_phase_one():
    lp = LinearProgram(sense="min")
    for name in ("x", "y"):
        lp.add_variable(name)
    lp.set_objective({"x": 2, "y": 3})
    lp.add_constraint({"x": 1, "y": 1}, "==", 4)
    lp.add_constraint({"x": 1, "y": -1}, "==", 2)
    out = simplex_solve(lp)
    assert out.status == OPTIMAL
    assert out.assignment == {"x": F(3), "y": F(1)}
    assert out.objective_value == 9


def test_row_permutation_same_objective():
    rng = random.Random(7)
    constraints = []
    for _ in range(6):
        coeffs = {nm: rng.randint(-3, 3) for nm in "abc"}
        constraints.append((coeffs, rng.choice(["<=", ">="]), rng.randint(0, 5)))

    def build(order):
        lp = LinearProgram(sense="max")
        for nm in "abc":
            lp.add_variable(nm, upper=4)
        lp.set_objective({"a": 1, "b": 2, "c": 1})
        for i in order:
            lp.add_constraint(*constraints[i])
        return simplex_solve(lp)

    base = build(range(6))
    for _ in range(5):
        order = list(range(6))
        rng.shuffle(order)
        out = build(order)
        assert out.status == base.status
        assert out.objective_value == base.objective_value


def test_deterministic_assignments():
    def build():
        lp = LinearProgram(sense="max")
        lp.add_variable("x", upper=2)
        lp.add_variable("y", upper=2)
        lp.set_objective({"x": 1, "y": 1})
        lp.add_constraint({"x": 1, "y": 1}, "<=", 2)
        return simplex_solve(lp)

    first = build()
    for _ in range(3):
        again = build()
        assert again.assignment == first.assignment


def test_random_programs_match_vertex_oracle():
    rng = random.Random(20260822)
    for trial in range(120):
        k = rng.randint(1, 4)
        names = [f"x{j}" for j in range(k)]
        lp = LinearProgram(sense=rng.choice(["max", "min"]))
        for nm in names:
            lp.add_variable(nm, upper=rng.randint(1, 5))
        lp.set_objective({nm: rng.randint(-3, 3) for nm in names})
        for _ in range(rng.randint(0, 5)):
            coeffs = {nm: rng.randint(-3, 3) for nm in names}
            rel = rng.choice(["<=", ">=", "=="]) if rng.random() < 0.2 else rng.choice(["<=", ">="])
            lp.add_constraint(coeffs, rel, rng.randint(-2, 6))
        expected = vertex_oracle(lp)
        out = simplex_solve(lp)
        assert out.status == expected[0], f"trial {trial}"
        if out.status == OPTIMAL:
            assert out.objective_value == expected[1], f"trial {trial}"


def test_undeclared_variable_is_an_input_error():
    lp = LinearProgram()
    lp.add_variable("x")
    with pytest.raises(LpError):
        lp.add_constraint({"y": 1}, "<=", 1)
    with pytest.raises(LpError):
        lp.set_objective({"z": 1})


def test_floats_rejected():
    lp = LinearProgram()
    lp.add_variable("x")
    with pytest.raises(LpError):
        lp.add_constraint({"x": 0.5}, "<=", 1)
    # decimal strings are exact and fine
    lp.add_constraint({"x": "0.5"}, "<=", 1)
    assert lp._constraints[0][0]["x"] == F(1, 2)


def test_builder_validation():
    with pytest.raises(LpError):
        LinearProgram(sense="maximize")
    lp = LinearProgram()
    lp.add_variable("x")
    with pytest.raises(LpError):
        lp.add_variable("x")
    with pytest.raises(LpError):
        lp.add_constraint({"x": 1}, "<", 1)


def test_linear_system_unique():
    x = solve_linear_system([[F(2), F(1)], [F(1), F(-1)]], [F(5), F(1)])
    assert x == [F(2), F(1)]


def test_linear_system_inconsistent():
    assert solve_linear_system([[F(1), F(1)], [F(2), F(2)]], [F(1), F(3)]) is None


def test_linear_system_underdetermined_pins_free_variables():
    x = solve_linear_system([[F(1), F(1)]], [F(1)])
    assert x == [F(1), F(0)]


def test_linear_system_overdetermined_consistent():
    x = solve_linear_system([[F(1)], [F(2)]], [F(3), F(6)])
    assert x == [F(3)]


def test_linear_system_shape_errors():
    with pytest.raises(ValueError):
        solve_linear_system([[F(1)]], [F(1), F(2)])
    with pytest.raises(ValueError):
        solve_linear_system([[F(1), F(2)], [F(1)]], [F(1), F(2)])
