import json
import math

import numpy as np
import pytest

import cases
from lfac.errors import LfacError
from lfac.network_model import network_from_dict
from lfac.opf_solver import (
    OpfModel,
    OpfProblem,
    SolverOptions,
    frequency_sweep,
    max_transfer,
    solve_opf,
    sweep_csv,
    variable_frequency_solve,
)

HZ = 2 * math.pi


@pytest.fixture(scope="module")
def lfac_net():
    return network_from_dict(cases.three_bus_lfac())


@pytest.fixture(scope="module")
def cable_net():
    return network_from_dict(cases.two_bus_cable())


@pytest.fixture(scope="module")
def lfac_solution(lfac_net):
    return variable_frequency_solve(OpfProblem(lfac_net))


def random_point(model, rng):
    lo = np.where(np.isfinite(model.xmin), model.xmin, -2.0)
    hi = np.where(np.isfinite(model.xmax), model.xmax, 2.0)
    lo, hi = np.maximum(lo, hi - 4.0), np.minimum(hi, lo + 4.0)
    x = lo + rng.uniform(0.05, 0.95, size=model.n) * (hi - lo)
    for name, k in model.name_index.items():
        if name.startswith("th:"):
            x[k] = rng.uniform(-0.5, 0.5)
    return x


def central_jacobian(fun, x, step=1e-6):
    cols = []
    for k in range(len(x)):
        h = step * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        cols.append((fun(xp) - fun(xm)) / (2 * h))
    return np.column_stack(cols)


def _losses_from_flows(sol, net):
    edge = sum(f.p for f in sol.flows)
    shunt = sum(b.g_shunt * sol.bus_v[b.id] ** 2 for b in net.buses)
    conv = sum(p_i + p_j for p_i, p_j in sol.converter_p.values())
    return edge + shunt + conv


# -- closed-form oracles --------------------------------------------------------------------


def test_two_bus_lossless_closed_form():
    # with both magnitudes pinned at 1 the line absorbs (1 - cos d)/x of reactive power,
    # which the load bus must supply for the case to be feasible
    c, p_load, x = 15.0, 0.8, 0.1
    q_line = (1 - math.cos(math.asin(p_load * x))) / x
    net = network_from_dict(
        cases.two_bus_overhead(load_mw=100 * p_load, x_pu=x, cost=(0.0, c, 0.0), vfix=1.0, load_mvar=-100 * q_line)
    )
    sol = solve_opf(OpfProblem(net))
    assert sol.status == "optimal"
    assert sol.gen_p["G1"] == pytest.approx(p_load, abs=1e-6)
    assert sol.objective == pytest.approx(c * p_load, abs=1e-6)
    delta = sol.bus_theta[1] - sol.bus_theta[2]
    assert delta == pytest.approx(math.asin(p_load * x), abs=1e-6)
    assert sol.bus_theta[1] == 0.0


def test_two_bus_free_voltages_obey_power_angle_equation():
    c, p_load, x = 15.0, 1.2, 0.2
    net = network_from_dict(cases.two_bus_overhead(load_mw=100 * p_load, x_pu=x, cost=(0.0, c, 0.0)))
    sol = solve_opf(OpfProblem(net))
    assert sol.ok
    v1, v2 = sol.bus_v[1], sol.bus_v[2]
    assert 0.95 < v1 < 1.05 or math.isclose(v1, 1.05) or math.isclose(v1, 0.95)
    assert sol.objective == pytest.approx(c * p_load, abs=1e-6)
    delta = sol.bus_theta[1] - sol.bus_theta[2]
    assert delta == pytest.approx(math.asin(p_load * x / (v1 * v2)), abs=1e-6)


def test_isolated_bus():
    doc = {
        "format_version": 1,
        "base_mva": 100.0,
        "subnetworks": [{"id": "a", "mode": "fixed", "frequency_hz": 50.0, "buses": ["b"]}],
        "buses": [{"id": "b", "base_kv": 20.0, "pd_mw": 42.0, "qd_mvar": 13.0}],
        "generators": [{"id": "g", "bus": "b", "pmax_mw": 100.0, "qmin_mvar": -50.0, "qmax_mvar": 50.0, "cost": [3.0, 7.0, 1.0]}],
    }
    sol = solve_opf(OpfProblem(network_from_dict(doc)))
    assert sol.ok
    assert sol.gen_p["g"] == pytest.approx(0.42, abs=1e-8)
    assert sol.gen_q["g"] == pytest.approx(0.13, abs=1e-8)
    assert sol.objective == pytest.approx(3 * 0.42**2 + 7 * 0.42 + 1, abs=1e-8)
    assert sol.total_loss == pytest.approx(0.0, abs=1e-8)


# -- derivatives ------------------------------------------------------------------------------


def test_constraint_jacobian_matches_finite_differences(lfac_net):
    model = OpfModel(lfac_net)
    rng = np.random.default_rng(2024)
    w_cols = [model.name_index[n] for n in model.names if n.startswith("w:")]
    assert w_cols
    for _ in range(50):
        x = random_point(model, rng)
        g, h, Jg, Jh = model.constraints(x)
        J = np.vstack([Jg, Jh])
        J_fd = central_jacobian(lambda z: np.concatenate(model.constraints(z)[:2]), x)
        scale = max(1.0, np.abs(J).max())
        assert np.abs(J - J_fd).max() <= 1e-5 * scale
        for k in w_cols:  # frequency column on its own scale
            col_scale = max(1e-3, np.abs(J[:, k]).max())
            assert np.abs(J[:, k] - J_fd[:, k]).max() <= 1e-5 * col_scale


def test_objective_gradient_and_lagrangian_hessian(lfac_net):
    model = OpfModel(lfac_net)
    rng = np.random.default_rng(99)
    for _ in range(10):
        x = random_point(model, rng)
        g, h, _, _ = model.constraints(x)
        lam = rng.normal(size=len(g))
        mu = rng.uniform(0, 1, size=len(h))
        _, df = model.objective(x)
        df_fd = central_jacobian(lambda z: np.array([model.objective(z)[0]]), x)[0]
        np.testing.assert_allclose(df, df_fd, rtol=1e-6, atol=1e-8)

        def grad_lagrangian(z):
            _, dfz = model.objective(z)
            _, _, Jg, Jh = model.constraints(z)
            return dfz + Jg.T @ lam + Jh.T @ mu

        H = model.hessian(x, lam, mu)
        H_fd = central_jacobian(grad_lagrangian, x)
        np.testing.assert_allclose(H, H.T, atol=1e-12 * max(1.0, np.abs(H).max()))
        assert np.abs(H - H_fd).max() <= 1e-5 * max(1.0, np.abs(H).max())


# -- solution properties ----------------------------------------------------------------------


def test_variable_frequency_solution_properties(lfac_net, lfac_solution):
    sol = lfac_solution
    assert sol.ok
    for key, value in sol.kkt.items():
        assert value < 1e-6, key
    assert 0.1 < sol.subnetwork_hz("lf") < 60.0
    assert sol.subnetwork_hz("grid") == pytest.approx(60.0)
    assert sol.total_loss == pytest.approx(_losses_from_flows(sol, lfac_net), abs=1e-6)
    for p_i, p_j in sol.converter_p.values():
        assert p_i + p_j == 0.0
    model = OpfModel(lfac_net)
    x = model.initial_point(sol.start)
    g, h, _, _ = model.constraints(x)
    assert np.abs(g).max() < 1e-6
    assert h.max() < 1e-6


def test_solution_is_feasible_within_bounds(lfac_net, lfac_solution):
    for b in lfac_net.buses:
        assert b.vmin - 1e-8 <= lfac_solution.bus_v[b.id] <= b.vmax + 1e-8
    for g in lfac_net.generators:
        lo, hi = g.p_bounds
        assert lo - 1e-8 <= lfac_solution.gen_p[g.id] <= hi + 1e-8


def test_variable_frequency_beats_sweep(lfac_net, lfac_solution):
    grid = [HZ * f for f in np.arange(0.5, 60.01, 0.5)]
    f_star = lfac_solution.subnetwork_hz("lf")
    grid += [HZ * f for f in np.arange(max(0.1, round(f_star, 1) - 1.0), f_star + 1.0, 0.1)]
    rows = frequency_sweep(OpfProblem(lfac_net), sorted(grid))
    best = min(r.objective for r in rows if r.status == "optimal")
    assert lfac_solution.objective <= best + 1e-6


def test_optimal_frequency_matches_sweep_argmin(cable_net):
    joint = variable_frequency_solve(OpfProblem(cable_net))
    assert joint.ok
    grid = np.arange(0.1, 20.0, 0.1)
    rows = frequency_sweep(OpfProblem(cable_net), [HZ * f for f in grid])
    best = min((r for r in rows if r.status == "optimal"), key=lambda r: r.objective)
    assert abs(joint.subnetwork_hz("lf") - best.hz) <= 0.1 + 1e-9
    assert joint.objective <= best.objective + 1e-6


def test_monotone_losses_drive_frequency_to_lower_bound():
    doc = cases.two_bus_cable()
    doc["subnetworks"][0].update(min_hz=20.0, max_hz=45.0)
    sol = variable_frequency_solve(OpfProblem(network_from_dict(doc)))
    assert sol.ok
    assert sol.subnetwork_hz("lf") == pytest.approx(20.0, abs=1e-6)
    assert any(kind == "bound_lower" and label == "w:lf" for kind, label, _ in sol.binding)


def test_sweep_losses_match_recomputed_physics(cable_net):
    """Sweep losses equal I^2 R(w) + V^2 G(w) and fall as the frequency drops toward ~10 Hz."""
    br = cable_net.branches[0]
    m = br.cable_pu
    losses, warm = [], None
    for f in np.arange(45.0, 9.9, -2.5):
        w = HZ * f
        sol = solve_opf(OpfProblem(cable_net.with_frequency(w)), warm=warm)
        assert sol.ok
        warm = sol.start
        v1 = sol.bus_v[1] * np.exp(1j * sol.bus_theta[1])
        v2 = sol.bus_v[2] * np.exp(1j * sol.bus_theta[2])
        z = complex(m.resistance(w), m.reactance(w))
        i_series = (v1 - v2) / z
        recomputed = abs(i_series) ** 2 * z.real + (abs(v1) ** 2 + abs(v2) ** 2) * m.conductance(w) / 2
        assert sol.total_loss == pytest.approx(recomputed, abs=1e-8)
        losses.append(sol.total_loss)
    assert np.all(np.diff(losses) <= 1e-9)


def test_warm_and_cold_sweeps_agree(lfac_net):
    grid = [HZ * f for f in (2.0, 5.0, 9.0, 16.7, 25.0, 40.0, 60.0)]
    warm = frequency_sweep(OpfProblem(lfac_net), grid, warm_start=True)
    cold = frequency_sweep(OpfProblem(lfac_net), grid, warm_start=False)
    for a, b in zip(warm, cold):
        assert a.status == b.status == "optimal"
        assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_parallel_sweep_keeps_grid_order(lfac_net):
    grid = [HZ * f for f in (1.0, 3.0, 7.0, 11.0, 20.0)]
    serial = frequency_sweep(OpfProblem(lfac_net), grid)
    parallel = frequency_sweep(OpfProblem(lfac_net), grid, workers=2)
    assert [r.omega for r in parallel] == grid
    for a, b in zip(serial, parallel):
        assert a.objective == pytest.approx(b.objective, abs=1e-6)
    assert sweep_csv(serial).splitlines()[0] == "frequency_hz,objective,total_loss_pu,status"


def test_sweep_without_frequency_dependence_is_flat():
    doc = cases.three_bus_lfac()
    # the variable subnetwork keeps a single load bus: nothing in it depends on omega
    doc["subnetworks"][1]["buses"] = [2]
    doc["buses"] = [b for b in doc["buses"] if b["id"] != 3]
    doc["buses"][2]["pd_mw"] = 120.0
    doc["branches"] = doc["branches"][:1]
    doc["generators"] = doc["generators"][:1]
    net = network_from_dict(doc)
    rows = frequency_sweep(OpfProblem(net), [HZ * f for f in (0.1, 5.0, 17.0, 33.3, 60.0)])
    objectives = [r.objective for r in rows]
    assert all(r.status == "optimal" for r in rows)
    assert max(objectives) - min(objectives) < 1e-6


def test_sweep_minimum_bounds_each_point(lfac_net):
    grid = [HZ * f for f in (3.0, 8.0, 30.0)]
    rows = frequency_sweep(OpfProblem(lfac_net), grid)
    best = min(r.objective for r in rows)
    for w in grid:
        fixed = solve_opf(OpfProblem(lfac_net.with_frequency(w)))
        assert best <= fixed.objective + 1e-6


def test_dc_subnetwork_has_no_reactive_quantities(lfac_net):
    sol = solve_opf(OpfProblem(lfac_net.with_frequency(0.0)))
    assert sol.ok
    assert sol.subnetwork_omega["lf"] == 0.0
    for f in sol.flows:
        if f.branch == "C1":
            assert f.q == 0.0
    assert sol.gen_q["G3"] == 0.0
    assert sol.converter_q["M1"][1] == 0.0
    assert sol.total_loss == pytest.approx(_losses_from_flows(sol, lfac_net), abs=1e-6)
    # dc voltage bounds are widened by sqrt(2)
    assert sol.bus_v[3] <= 1.05 * math.sqrt(2) + 1e-8


def test_overloaded_case_flagged_infeasible():
    net = network_from_dict(cases.two_bus_overhead(load_mw=800.0))
    sol = solve_opf(OpfProblem(net))
    assert sol.status == "infeasible"
    assert sol.max_violation > 1e-3
    assert sol.most_violated
    assert "slack" in sol.message


def test_cable_above_its_loadability_is_infeasible(cable_net):
    sol = solve_opf(OpfProblem(cable_net.with_frequency(HZ * 60)))
    assert sol.status == "infeasible"


def test_iteration_limit_reported(lfac_net):
    opts = SolverOptions(max_iter=2, elastic=False)
    sol = solve_opf(OpfProblem(lfac_net, opts))
    assert sol.status == "iteration-limit"


def test_variable_solve_requires_variable_subnetwork():
    net = network_from_dict(cases.two_bus_overhead())
    with pytest.raises(LfacError):
        variable_frequency_solve(OpfProblem(net))


def test_multistart_never_worse(cable_net):
    one = variable_frequency_solve(OpfProblem(cable_net))
    several = variable_frequency_solve(OpfProblem(cable_net, SolverOptions(starts=3)))
    assert several.objective <= one.objective + 1e-9


def test_solution_documents(lfac_solution):
    doc = json.loads(lfac_solution.to_json())
    assert doc["status"] == "optimal"
    tables = lfac_solution.csv_tables()
    assert {"bus", "branch", "generator", "converter", "subnetwork"} <= set(tables)
    for text in tables.values():
        assert text.count("\n") >= 2
    report = lfac_solution.binding_report()
    assert report.splitlines()[0].split()[0] == "constraint"


# -- maximum transfer -------------------------------------------------------------------------------


def test_thermal_regime_transfers_exactly_the_rating(fitted_230):
    res, sol = max_transfer(fitted_230[0], HZ * 10, thermal_limit_mva=525.0)
    assert sol.ok
    assert res.regime == "thermal"
    assert res.s_origin == pytest.approx(5.25, abs=1e-6)
    assert res.p_max == pytest.approx(5.25, rel=1e-3)
    assert abs(res.q_origin) < 0.05 * res.p_max


def test_dc_transfer(fitted_230):
    res, sol = max_transfer(fitted_230[0], 0.0, thermal_limit_mva=525.0)
    assert sol.ok
    assert res.q_origin == 0.0
    assert res.loss > 0


def test_transfer_needs_a_rating(fitted_230):
    with pytest.raises(LfacError):
        max_transfer(fitted_230[0], HZ * 10)
