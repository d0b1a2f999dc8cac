"""OPF drivers: single solve, joint variable-frequency solve, frequency sweep
and the single-cable maximum-transfer study."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..cable_params import CableDesign
from ..errors import LfacError
from ..network_model import (
    DC_VOLTAGE_SCALE,
    Branch,
    Bus,
    Generator,
    Network,
    Subnetwork,
)
from ..poly_fit import PolyCableModel, fit_design
from . import ipm
from .model import OMEGA_SCALE, OpfModel

BIND_TOL = 1e-6
ELASTIC_TOL = 1e-5


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 150
    line_search: bool = True
    elastic: bool = True
    starts: int = 1  # frequency starting points for variable-frequency solves

    def ipm_options(self):
        return ipm.IpmOptions(
            feastol=self.tol,
            gradtol=self.tol,
            comptol=self.tol,
            costtol=self.tol,
            max_iter=self.max_iter,
            line_search=self.line_search,
        )


@dataclass(frozen=True)
class OpfProblem:
    network: Network
    options: SolverOptions = field(default_factory=SolverOptions)
    fixed_voltages: dict = field(default_factory=dict)
    dc_voltage_scale: float = DC_VOLTAGE_SCALE

    def model(self, network=None):
        return OpfModel(
            network or self.network,
            fixed_voltages=self.fixed_voltages,
            dc_voltage_scale=self.dc_voltage_scale,
        )


@dataclass(frozen=True)
class EdgeFlow:
    branch: object
    from_bus: object
    to_bus: object
    p: float
    q: float


@dataclass(frozen=True)
class OpfSolution:
    status: str  # "optimal" | "infeasible" | "iteration-limit"
    objective: float
    bus_v: dict
    bus_theta: dict
    gen_p: dict
    gen_q: dict
    converter_p: dict  # id -> (p_i, p_j), power drawn from each terminal bus
    converter_q: dict  # id -> (q_i, q_j)
    subnetwork_omega: dict
    flows: tuple
    total_loss: float
    binding: tuple
    kkt: dict
    iterations: int
    message: str = ""
    max_violation: float = 0.0
    most_violated: tuple = ()
    start: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ok(self):
        return self.status == "optimal"

    def subnetwork_hz(self, sub_id):
        return self.subnetwork_omega[sub_id] / (2 * math.pi)

    def to_dict(self):
        d = asdict(self)
        d.pop("start")
        d["flows"] = [asdict(f) for f in self.flows]
        d["converter_p"] = {str(k): list(v) for k, v in self.converter_p.items()}
        d["converter_q"] = {str(k): list(v) for k, v in self.converter_q.items()}
        for key in ("bus_v", "bus_theta", "gen_p", "gen_q", "subnetwork_omega"):
            d[key] = {str(k): v for k, v in d[key].items()}
        d["binding"] = [list(b) for b in self.binding]
        d["most_violated"] = [list(b) for b in self.most_violated]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=True) + "\n"

    def csv_tables(self):
        """Flat CSV tables keyed bus, branch, generator, converter, subnetwork."""

        def table(header, rows):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            return buf.getvalue()

        return {
            "bus": table(["bus", "v_pu", "theta_rad"], [(b, _f(v), _f(self.bus_theta[b])) for b, v in self.bus_v.items()]),
            "branch": table(["branch", "from", "to", "p_pu", "q_pu"], [(f.branch, f.from_bus, f.to_bus, _f(f.p), _f(f.q)) for f in self.flows]),
            "generator": table(["generator", "p_pu", "q_pu"], [(g, _f(p), _f(self.gen_q[g])) for g, p in self.gen_p.items()]),
            "converter": table(
                ["converter", "p_i_pu", "p_j_pu", "q_i_pu", "q_j_pu"],
                [(c, _f(p[0]), _f(p[1]), _f(self.converter_q[c][0]), _f(self.converter_q[c][1])) for c, p in self.converter_p.items()],
            ),
            "subnetwork": table(["subnetwork", "omega_rad_s", "frequency_hz"], [(s, _f(w), _f(w / (2 * math.pi))) for s, w in self.subnetwork_omega.items()]),
        }

    def binding_report(self):
        lines = [f"{'constraint':<14} {'element':<30} {'multiplier':>14}"]
        lines += [f"{k:<14} {lab:<30} {m:>14.6g}" for k, lab, m in self.binding]
        return "\n".join(lines) + "\n"


def _f(v):
    return f"{v:.10g}"


# -- single solve --------------------------------------------------------------------


def _run(model, x0, options):
    return ipm.solve(model, x0, model.xmin, model.xmax, options.ipm_options())


def _solution(model, res, status, message="", max_violation=0.0, most_violated=()):
    x = res.x
    V, T = model.state(x)
    S = model.edge_flows(x)
    net = model.network
    pg = dict(zip(model.gen_ids, map(float, _gather(x, model.P_idx, model.P_const))))
    qg = dict(zip(model.gen_ids, map(float, _gather(x, model.Q_idx, model.Q_const))))
    conv_p, conv_q = {}, {}
    for m, cid in enumerate(model.conv_ids):
        p = float(x[model.CP_idx[m]]) if model.CP_idx[m] >= 0 else model.constants.get(f"pc:{cid}", 0.0)
        q = [float(x[k]) if k >= 0 else 0.0 for k in model.CQ_idx[m]]
        conv_p[cid] = (p, -p)
        conv_q[cid] = tuple(q)
    flows = tuple(
        EdgeFlow(
            net.branches[model.edge_branch[e]].id,
            model.bus_ids[model.edge_u[e]],
            model.bus_ids[model.edge_v[e]],
            float(S[e].real),
            0.0 if model.edge_dc[e] else float(S[e].imag),
        )
        for e in range(len(S))
    )
    total_loss = sum(pg.values()) - float(model.p_load.sum())
    binding = _binding(model, res)
    kkt = {
        "stationarity": res.conditions["gradcond"],
        "feasibility": res.conditions["feascond"],
        "complementarity": res.conditions["compcond"],
    }
    return OpfSolution(
        status=status,
        objective=model.true_cost(x),
        bus_v=dict(zip(model.bus_ids, map(float, V))),
        bus_theta=dict(zip(model.bus_ids, map(float, T))),
        gen_p=pg,
        gen_q=qg,
        converter_p=conv_p,
        converter_q=conv_q,
        subnetwork_omega=dict(zip(model.sub_ids, map(float, model.omegas(x)))),
        flows=flows,
        total_loss=total_loss,
        binding=binding,
        kkt=kkt,
        iterations=res.iterations,
        message=message,
        max_violation=max_violation,
        most_violated=tuple(most_violated),
        start=model.named_values(x),
    )


def _gather(x, idx, const):
    out = np.array(const, dtype=float, copy=True)
    m = idx >= 0
    out[m] = x[idx[m]]
    return out


def _binding(model, res):
    out = []
    nh = res.n_nonlinear_ineq
    for r, info in enumerate(model.ineq_rows):
        if res.h[r] > -BIND_TOL * max(1.0, abs(res.h[r] - res.z[r])):
            out.append((info.kind, info.label, float(res.mu[r]) * model.cost_scale))
    for k, (row, sign) in enumerate(zip(res.bound_rows, res.bound_sign)):
        if res.h[nh + k] > -BIND_TOL:
            side = "upper" if sign > 0 else "lower"
            out.append((f"bound_{side}", model.names[row], float(res.mu[nh + k]) * model.cost_scale))
    return tuple(out)


def _most_violated(model, x, top=5):
    g, h, _, _ = model.constraints(x)
    items = [(abs(v), r.kind, r.label) for v, r in zip(g, model.eq_rows)]
    items += [(max(v, 0.0), r.kind, r.label) for v, r in zip(h, model.ineq_rows)]
    items.sort(key=lambda t: -t[0])
    worst = items[0][0] if items else 0.0
    return worst, tuple((k, lab, float(v)) for v, k, lab in items[:top] if v > 0)


def solve_model(model, options, x0=None):
    """Solve with elastic-mode diagnosis of failures."""
    x0 = model.initial_point() if x0 is None else x0
    res = _run(model, x0, options)
    if res.converged:
        return _solution(model, res, "optimal")
    if not options.elastic:
        return _solution(model, res, "iteration-limit", message=f"interior point: {res.status}")
    el = model.elastic()
    xe0 = el.initial_point(model.initial_point() if res.status == "numerical-failure" else x0)
    eres = ipm.solve(el, xe0, el.xmin, el.xmax, options.ipm_options())
    x_el = el.split(eres.x)[0]
    slack = float(eres.x[model.n :].sum())
    if eres.converged and slack > ELASTIC_TOL:
        worst, top = _most_violated(model, x_el)
        return _solution(
            model,
            replace(res, x=x_el),
            "infeasible",
            message=f"elastic mode: minimum total balance slack {slack:.6g} p.u.",
            max_violation=worst,
            most_violated=top,
        )
    res2 = _run(model, x_el, options)
    if res2.converged:
        return _solution(model, res2, "optimal", message="converged after elastic restart")
    worst, top = _most_violated(model, res2.x)
    return _solution(
        model,
        res2,
        "iteration-limit",
        message=f"no convergence after elastic restart (elastic slack {slack:.3g})",
        max_violation=worst,
        most_violated=top,
    )


def solve_opf(problem, warm=None):
    """Locally optimal dispatch for ``problem``; variable frequencies are decision variables."""
    model = problem.model()
    x0 = model.initial_point(warm)
    return solve_model(model, problem.options, x0)


def variable_frequency_solve(problem, warm=None):
    """Joint solve with every variable-frequency subnetwork's omega free.

    With ``options.starts > 1`` the frequency start is spread over the
    allowed band and the best optimum is returned.
    """
    net = problem.network
    if not any(s.is_variable for s in net.subnetworks):
        raise LfacError("variable_frequency_solve needs at least one variable-frequency subnetwork")
    model = problem.model()
    best = None
    for k in range(max(1, problem.options.starts)):
        start = dict(warm or {})
        if k:
            frac = 1 - k / problem.options.starts
            for s in net.subnetworks:
                if s.is_variable:
                    lo, hi = s.omega_bounds
                    start[f"w:{s.id}"] = (lo + frac * (hi - lo)) / OMEGA_SCALE
        sol = solve_model(model, problem.options, model.initial_point(start))
        if best is None or (sol.ok and (not best.ok or sol.objective < best.objective)):
            best = sol
    return best


# -- frequency sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    omega: float
    objective: float
    total_loss: float
    status: str
    kkt: float = math.nan  # largest scaled KKT residual of the point's solution

    @property
    def hz(self):
        return self.omega / (2 * math.pi)


def _sweep_chunk(problem, omegas, sub_ids, warm_start):
    rows, warm = [], None
    for w in omegas:
        net = problem.network.with_frequency(w, sub_ids)
        try:
            sol = solve_opf(replace(problem, network=net), warm=warm if warm_start else None)
        except LfacError as exc:
            rows.append(SweepRow(w, math.nan, math.nan, f"error: {exc}"))
            continue
        rows.append(SweepRow(w, sol.objective, sol.total_loss, sol.status, max(sol.kkt.values(), default=math.nan)))
        if sol.ok:
            warm = sol.start
    return rows


def frequency_sweep(problem, omegas, *, sub_ids=None, workers=1, warm_start=True):
    """One fixed-frequency solve per grid point (rad/s), warm-started along the grid.

    ``omega = 0`` switches the swept subnetworks to dc mode.  With
    ``workers > 1`` the grid is cut into contiguous chunks solved in separate
    processes; rows are returned in grid order.
    """
    omegas = [float(w) for w in omegas]
    if sub_ids is None:
        sub_ids = [s.id for s in problem.network.subnetworks if s.is_variable]
    if not omegas:
        return []
    if workers <= 1 or len(omegas) < 2:
        return _sweep_chunk(problem, omegas, sub_ids, warm_start)
    chunks = [list(c) for c in np.array_split(np.array(omegas), min(workers, len(omegas))) if len(c)]
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(_sweep_chunk, [problem] * len(chunks), chunks, [sub_ids] * len(chunks), [warm_start] * len(chunks))
        return [row for part in parts for row in part]


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frequency_hz", "objective", "total_loss_pu", "status"])
    for r in rows:
        w.writerow([f"{r.hz:.4f}", _f(r.objective), _f(r.total_loss), r.status])
    return buf.getvalue()


# -- single-cable maximum transfer -------------------------------------------------------


@dataclass(frozen=True)
class TransferResult:
    omega: float
    status: str
    p_max: float  # origin active power, p.u.
    regime: str  # "angle" | "thermal+reactive" | "thermal" | ""
    loss: float  # p_origin + p_destination, p.u.
    q_origin: float
    v_destination: float
    angle: float  # theta_o - theta_d, rad
    s_origin: float
    s_destination: float

    @property
    def hz(self):
        return self.omega / (2 * math.pi)


def transfer_network(model, *, base_kv, base_mva=100.0, thermal_limit_mva, vd_bounds=(0.95, 1.05), angle_limit_deg=40.0, omega):
    """Two-bus network of one cable: origin (ref, V = 1) and free destination."""
    if omega == 0:
        sub = Subnetwork("cable", "dc", ("o", "d"))
    else:
        sub = Subnetwork("cable", "fixed", ("o", "d"), frequency_hz=omega / (2 * math.pi))
    buses = (
        Bus("o", base_kv, base_mva, vmin=1.0, vmax=1.0, reference=True),
        Bus("d", base_kv, base_mva, vmin=vd_bounds[0], vmax=vd_bounds[1]),
    )
    branch = Branch(
        "cable", "o", "d", "cable", base_kv, base_mva,
        model_name="cable", rate_mva=thermal_limit_mva, angle_limit_deg=angle_limit_deg, cable=model,
    )
    gens = (
        Generator("origin", "o", base_mva, pmin_mw=-math.inf, cost=(0.0, -1.0, 0.0)),
        Generator("destination", "d", base_mva, pmin_mw=-math.inf, pmax_mw=0.0, cost=(0.0, 0.0, 0.0)),
    )
    return Network(base_mva, (sub,), buses, (branch,), gens, cable_models={"cable": model})


def _fitted(cable, length):
    if isinstance(cable, PolyCableModel):
        return cable, None
    design = cable if length is None else cable.with_length(length)
    return fit_design(design)[0], design


def max_transfer(
    cable,
    omega,
    *,
    length=None,
    base_kv=230.0,
    base_mva=100.0,
    thermal_limit_mva=None,
    vd_bounds=(0.95, 1.05),
    angle_limit_deg=40.0,
    options=None,
    warm=None,
):
    """Maximum origin active power through one cable at ``omega`` rad/s.

    ``cable`` is a :class:`CableDesign` (fitted at ``length``) or a fitted
    :class:`PolyCableModel`.  The origin holds V = 1 at angle 0; the
    destination voltage lies in ``vd_bounds`` and its reactive power is free.
    ``omega = 0`` solves the dc case (no voltage-bound scaling).
    """
    model, design = _fitted(cable, length)
    if thermal_limit_mva is None:
        if design is None or not design.thermal_rating:
            raise LfacError("thermal_limit_mva is required when no design rating is available")
        thermal_limit_mva = design.thermal_rating / 1e6
    net = transfer_network(
        model, base_kv=base_kv, base_mva=base_mva, thermal_limit_mva=thermal_limit_mva,
        vd_bounds=vd_bounds, angle_limit_deg=angle_limit_deg, omega=omega,
    )
    problem = OpfProblem(net, options or SolverOptions(), dc_voltage_scale=1.0)
    sol = solve_opf(problem, warm=warm)
    return _transfer_result(sol, omega, net, vd_bounds, angle_limit_deg), sol


def _transfer_result(sol, omega, net, vd_bounds, angle_limit_deg):
    p_o = sol.gen_p["origin"]
    p_d = sol.gen_p["destination"]
    q_o = sol.gen_q["origin"]
    vd = sol.bus_v["d"]
    angle = sol.bus_theta["o"] - sol.bus_theta["d"]
    fwd = [f for f in sol.flows if f.from_bus == "o"][0]
    rev = [f for f in sol.flows if f.from_bus == "d"][0]
    regime = ""
    if sol.ok:
        if abs(angle) >= math.radians(angle_limit_deg) - 1e-5:
            regime = "angle"
        elif vd <= vd_bounds[0] + 1e-5:
            regime = "thermal+reactive"
        else:
            regime = "thermal"
    return TransferResult(
        omega=omega,
        status=sol.status,
        p_max=p_o,
        regime=regime,
        loss=p_o + p_d,
        q_origin=q_o,
        v_destination=vd,
        angle=angle,
        s_origin=math.hypot(fwd.p, fwd.q),
        s_destination=math.hypot(rev.p, rev.q),
    )


def _transfer_chunk(cable, omegas, kwargs):
    out, warm = [], None
    model, design = _fitted(cable, kwargs.pop("length", None))
    if kwargs.get("thermal_limit_mva") is None and design is not None:
        kwargs["thermal_limit_mva"] = design.thermal_rating / 1e6
    for w in omegas:
        res, sol = max_transfer(model, w, warm=warm, **kwargs)
        out.append(res)
        if sol.ok:
            warm = sol.start
    return out


def max_transfer_sweep(cable, omegas, *, workers=1, **kwargs):
    """:func:`max_transfer` over a frequency grid (rad/s), rows in grid order."""
    omegas = [float(w) for w in omegas]
    if isinstance(cable, CableDesign):
        length = kwargs.pop("length", None)
        model, design = _fitted(cable, length)
        if kwargs.get("thermal_limit_mva") is None:
            kwargs["thermal_limit_mva"] = design.thermal_rating / 1e6
        cable = model
    if workers <= 1 or len(omegas) < 2:
        return _transfer_chunk(cable, omegas, dict(kwargs))
    chunks = [list(c) for c in np.array_split(np.array(omegas), min(workers, len(omegas))) if len(c)]
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(_transfer_chunk, [cable] * len(chunks), chunks, [dict(kwargs) for _ in chunks])
        return [r for part in parts for r in part]


def regime_breakpoints(results):
    """Frequencies (Hz) midway between consecutive grid points whose regime changes."""
    pts = []
    ordered = sorted((r for r in results if r.regime), key=lambda r: r.omega)
    for a, b in zip(ordered, ordered[1:]):
        if a.regime != b.regime:
            pts.append((0.5 * (a.hz + b.hz), a.regime, b.regime))
    return pts


def transfer_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frequency_hz", "status", "p_max_pu", "regime", "loss_pu", "q_origin_pu", "v_destination_pu", "angle_deg"])
    for r in results:
        w.writerow([f"{r.hz:.4f}", r.status, _f(r.p_max), r.regime, _f(r.loss), _f(r.q_origin), _f(r.v_destination), f"{math.degrees(r.angle):.6g}"])
    return buf.getvalue()
