"""Variable-frequency AC OPF as a smooth NLP with analytic derivatives.

Decision variables (any variable whose bounds coincide is held constant):

* bus voltage magnitude V and angle theta (angles of reference buses and of
  dc-subnetwork buses are fixed at zero),
* generator p, q (q absent on dc buses),
* converter active transfer p_m (power entering the converter at terminal i;
  terminal j injects the same amount, so p_i + p_j = 0) and terminal
  reactive powers q_i, q_j,
* the normalised frequency omega / omega_nom of each variable subnetwork.

Directed edge u -> v of a branch carries

    S_uv = A(omega) V_u^2 - B(omega) V_u V_v exp(j (theta_u - theta_v))

with A = conj(y + y_sh/2) / tau^2, B = conj(y) exp(-j phi) / tau at the
from end and A = conj(y + y_sh/2), B = conj(y) exp(j phi) / tau at the to
end, where y = 1 / z(omega) is the series admittance and y_sh the total
shunt admittance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..network_model import (
    DC_VOLTAGE_SCALE,
    NOMINAL_OMEGA,
    bus_shunt_derivs,
    series_impedance,
    shunt_admittance,
)
from .ipm import NlpProblem

OMEGA_SCALE = NOMINAL_OMEGA  # frequency variables are omega / OMEGA_SCALE

# local variable slots of a directed edge
_VU, _VV, _TU, _TV, _W = range(5)


class _VarSpace:
    def __init__(self):
        self.names, self.lo, self.hi, self.x0 = [], [], [], []
        self.const = {}

    def add(self, name, lo, hi, x0):
        """Index of a new variable, or -1 (value recorded) when lo == hi."""
        if lo == hi:
            self.const[name] = lo
            return -1
        x0 = min(max(x0, lo), hi)
        self.names.append(name)
        self.lo.append(lo)
        self.hi.append(hi)
        self.x0.append(x0)
        return len(self.names) - 1

    def fixed(self, name, value):
        self.const[name] = value
        return -1


def _value(x, idx, const):
    """Gather x[idx] where idx >= 0, else the constant."""
    idx = np.asarray(idx)
    out = np.array(const, dtype=float, copy=True)
    m = idx >= 0
    out[m] = x[idx[m]]
    return out


def _add_jac(J, rows, cols, vals):
    """J[rows, cols] += vals over entries whose column index is a variable."""
    rows = np.broadcast_to(rows, cols.shape)
    m = cols >= 0
    np.add.at(J, (rows[m], cols[m]), vals[m])


def _add_hess(H, cols, blocks):
    """Scatter per-item k x k blocks into H using local-to-global ``cols``."""
    I = np.broadcast_to(cols[:, :, None], blocks.shape)
    J = np.broadcast_to(cols[:, None, :], blocks.shape)
    m = (I >= 0) & (J >= 0)
    np.add.at(H, (I[m], J[m]), blocks[m])


@dataclass(frozen=True)
class RowInfo:
    kind: str
    label: str


class OpfModel(NlpProblem):
    """NLP for one network.

    ``fixed_voltages`` maps bus id to a held voltage magnitude.
    ``dc_voltage_scale`` multiplies voltage bounds on dc-subnetwork buses.
    """

    def __init__(self, network, *, fixed_voltages=None, dc_voltage_scale=DC_VOLTAGE_SCALE, cost_scale=None):
        self.network = net = network
        fixed_voltages = dict(fixed_voltages or {})
        vs = _VarSpace()
        buses = net.buses
        nbus = len(buses)
        bidx = net.bus_index()
        self.bus_ids = [b.id for b in buses]
        sub_of = [net.subnetwork_of(b.id) for b in buses]
        self.bus_dc = np.array([s.is_dc for s in sub_of])

        # subnetwork frequencies
        self.sub_ids = [s.id for s in net.subnetworks]
        self.w_idx, self.w_const = [], []
        for s in net.subnetworks:
            if s.is_variable:
                lo, hi = s.omega_bounds
                k = vs.add(f"w:{s.id}", lo / OMEGA_SCALE, hi / OMEGA_SCALE, hi / OMEGA_SCALE)
                self.w_idx.append(k)
                self.w_const.append(hi / OMEGA_SCALE)
            else:
                self.w_idx.append(-1)
                self.w_const.append(s.omega / OMEGA_SCALE)
        sub_pos = {s.id: k for k, s in enumerate(net.subnetworks)}
        self.bus_sub = np.array([sub_pos[s.id] for s in sub_of])
        self.sub_dc = np.array([s.is_dc for s in net.subnetworks])

        # buses
        self.V_idx, self.V_const, self.T_idx = [], [], []
        refs = {net.reference_bus(s) for s in net.subnetworks}
        for b, s in zip(buses, sub_of):
            scale = dc_voltage_scale if s.is_dc else 1.0
            if b.id in fixed_voltages:
                self.V_idx.append(vs.fixed(f"V:{b.id}", fixed_voltages[b.id]))
                self.V_const.append(fixed_voltages[b.id])
            else:
                lo, hi = b.vmin * scale, b.vmax * scale
                self.V_idx.append(vs.add(f"V:{b.id}", lo, hi, min(max(1.0, lo), hi)))
                self.V_const.append(lo)
            if s.is_dc or b.id in refs:
                self.T_idx.append(vs.fixed(f"th:{b.id}", 0.0))
            else:
                self.T_idx.append(vs.add(f"th:{b.id}", -math.inf, math.inf, 0.0))
        self.V_idx, self.T_idx = np.array(self.V_idx), np.array(self.T_idx)
        self.V_const = np.array(self.V_const, dtype=float)

        # generators
        self.gen_ids = [g.id for g in net.generators]
        self.gen_bus = np.array([bidx[g.bus] for g in net.generators], dtype=int)
        self.P_idx, self.P_const, self.Q_idx, self.Q_const = [], [], [], []
        for g, k in zip(net.generators, self.gen_bus):
            lo, hi = g.p_bounds
            mid = 0.5 * (lo + hi) if math.isfinite(lo + hi) else (lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0))
            self.P_idx.append(vs.add(f"pg:{g.id}", lo, hi, mid))
            self.P_const.append(lo)
            if self.bus_dc[k]:
                self.Q_idx.append(vs.fixed(f"qg:{g.id}", 0.0))
                self.Q_const.append(0.0)
            else:
                lo, hi = g.q_bounds
                mid = 0.5 * (lo + hi) if math.isfinite(lo + hi) else min(max(0.0, lo), hi)
                self.Q_idx.append(vs.add(f"qg:{g.id}", lo, hi, mid))
                self.Q_const.append(lo)
        self.P_idx, self.Q_idx = np.array(self.P_idx, dtype=int), np.array(self.Q_idx, dtype=int)
        self.P_const, self.Q_const = np.array(self.P_const, dtype=float), np.array(self.Q_const, dtype=float)
        cost = np.array([g.quadratic_cost for g in net.generators], dtype=float).reshape(-1, 3)
        if cost_scale is None:
            cost_scale = max(1.0, float(np.abs(cost[:, :2]).max())) if len(cost) else 1.0
        self.cost_scale = cost_scale
        self.cost = cost

        # converters
        self.conv_ids = [c.id for c in net.converters]
        self.conv_bus = np.array([[bidx[c.bus_i], bidx[c.bus_j]] for c in net.converters], dtype=int).reshape(-1, 2)
        self.CP_idx, self.CQ_idx = [], []
        for c, (i, j) in zip(net.converters, self.conv_bus):
            s = c.s_limit
            self.CP_idx.append(vs.add(f"pc:{c.id}", -s, s, 0.0))
            qi = vs.fixed(f"qi:{c.id}", 0.0) if self.bus_dc[i] else vs.add(f"qi:{c.id}", -s, s, 0.0)
            qj = vs.fixed(f"qj:{c.id}", 0.0) if self.bus_dc[j] else vs.add(f"qj:{c.id}", -s, s, 0.0)
            self.CQ_idx.append([qi, qj])
        self.CP_idx = np.array(self.CP_idx, dtype=int)
        self.CQ_idx = np.array(self.CQ_idx, dtype=int).reshape(-1, 2)
        self.conv_limit = np.array([c.s_limit for c in net.converters], dtype=float)

        # directed edges
        edges = net.directed_edges()
        self.edge_branch = np.array([e[0] for e in edges], dtype=int)
        self.edge_u = np.array([bidx[e[1]] for e in edges], dtype=int)
        self.edge_v = np.array([bidx[e[2]] for e in edges], dtype=int)
        self.edge_fwd = np.array([e[3] for e in edges], dtype=bool)
        self.edge_sub = self.bus_sub[self.edge_u] if len(edges) else np.zeros(0, dtype=int)
        self.edge_dc = self.sub_dc[self.edge_sub] if len(edges) else np.zeros(0, dtype=bool)
        self.edge_limit = np.array([net.branches[k].thermal_limit for k in self.edge_branch], dtype=float)

        self.n = len(vs.names)
        self.names = vs.names
        self.xmin = np.array(vs.lo, dtype=float)
        self.xmax = np.array(vs.hi, dtype=float)
        self._x0 = np.array(vs.x0, dtype=float)
        self.constants = vs.const
        self.name_index = {nm: k for k, nm in enumerate(vs.names)}
        self.w_idx = np.array(self.w_idx, dtype=int)
        self.w_const = np.array(self.w_const, dtype=float)

        # per-edge local column map: [Vu, Vv, theta_u, theta_v, w]
        E = len(edges)
        self.edge_cols = np.stack(
            [
                self.V_idx[self.edge_u] if E else np.zeros(0, int),
                self.V_idx[self.edge_v] if E else np.zeros(0, int),
                self.T_idx[self.edge_u] if E else np.zeros(0, int),
                self.T_idx[self.edge_v] if E else np.zeros(0, int),
                self.w_idx[self.edge_sub] if E else np.zeros(0, int),
            ],
            axis=1,
        ).reshape(E, 5)

        # equality rows: pbal for all buses, then qbal for ac buses
        self.ac_bus = np.flatnonzero(~self.bus_dc)
        self.qrow = -np.ones(nbus, dtype=int)
        self.qrow[self.ac_bus] = nbus + np.arange(len(self.ac_bus))
        self.eq_rows = [RowInfo("pbal", str(b)) for b in self.bus_ids] + [
            RowInfo("qbal", str(self.bus_ids[k])) for k in self.ac_bus
        ]

        # inequality rows
        self.therm_edges = np.flatnonzero(np.isfinite(self.edge_limit))
        ang = [k for k, br in enumerate(net.branches) if not self.sub_dc[self.bus_sub[bidx[br.from_bus]]]]
        self.ang_branch = np.array(ang, dtype=int)
        self.ang_u = np.array([bidx[net.branches[k].from_bus] for k in ang], dtype=int)
        self.ang_v = np.array([bidx[net.branches[k].to_bus] for k in ang], dtype=int)
        self.ang_limit = np.array([net.branches[k].angle_limit for k in ang], dtype=float)
        conv_rows = []
        for m in np.flatnonzero(np.isfinite(self.conv_limit)):
            for t in (0, 1):
                conv_rows.append((m, t))
        self.conv_rows = conv_rows
        self.ineq_rows = (
            [
                RowInfo("thermal", f"{net.branches[self.edge_branch[e]].id}:{self.bus_ids[self.edge_u[e]]}->{self.bus_ids[self.edge_v[e]]}")
                for e in self.therm_edges
            ]
            + [RowInfo("angle_max", str(net.branches[k].id)) for k in ang]
            + [RowInfo("angle_min", str(net.branches[k].id)) for k in ang]
            + [RowInfo("converter", f"{self.conv_ids[m]}:{'ij'[t]}") for m, t in conv_rows]
        )

        # static per-bus data
        self.p_load = np.array([b.p_load for b in buses])
        self.q_load = np.array([b.q_load for b in buses])
        self.g_shunt = np.array([b.g_shunt for b in buses])

    # -- starting point -----------------------------------------------------------

    def initial_point(self, warm=None):
        """Flat start, overridden by any ``name -> value`` entries of ``warm``."""
        x = self._x0.copy()
        if warm:
            for name, val in warm.items():
                k = self.name_index.get(name)
                if k is not None and np.isfinite(val):
                    x[k] = min(max(val, self.xmin[k]), self.xmax[k])
        return x

    def named_values(self, x):
        d = dict(self.constants)
        d.update(zip(self.names, map(float, x)))
        return d

    # -- state unpacking ----------------------------------------------------------

    def omegas(self, x):
        """Per-subnetwork angular frequency in rad/s."""
        return _value(x, self.w_idx, self.w_const) * OMEGA_SCALE

    def state(self, x):
        V = _value(x, self.V_idx, self.V_const)
        T = _value(x, self.T_idx, np.zeros(len(self.T_idx)))
        return V, T

    # -- edge physics ---------------------------------------------------------------

    def _edge_coefficients(self, omegas):
        """A, B and their first/second derivatives w.r.t. the scaled frequency."""
        E = len(self.edge_u)
        out = np.zeros((6, E), dtype=complex)
        cache = {}
        for e in range(E):
            k = self.edge_branch[e]
            s = self.edge_sub[e]
            key = (k, s)
            if key not in cache:
                br = self.network.branches[k]
                dc = bool(self.sub_dc[s])
                w = omegas[s]
                z, dz, d2z = series_impedance(br, w, dc, check=False)
                ysh, dysh, d2ysh = shunt_admittance(br, w, dc)
                y = 1 / z
                dy = -dz / z**2
                d2y = -d2z / z**2 + 2 * dz**2 / z**3
                c = OMEGA_SCALE
                ys = np.array([y, dy * c, d2y * c * c])
                yh = np.array([ysh, dysh * c, d2ysh * c * c]) / 2
                cache[key] = (br, ys, yh)
            br, ys, yh = cache[key]
            tau = br.tap if br.kind == "transformer" else 1.0
            phi = math.radians(br.shift_deg) if br.kind == "transformer" else 0.0
            if self.edge_fwd[e]:
                A = np.conj(ys + yh) / tau**2
                B = np.conj(ys) * np.exp(-1j * phi) / tau
            else:
                A = np.conj(ys + yh)
                B = np.conj(ys) * np.exp(1j * phi) / tau
            out[:3, e] = A
            out[3:, e] = B
        return out

    def edge_flows(self, x, derivs=0):
        """Complex flows S (E,), and optionally local gradients (E, 5) and Hessians (E, 5, 5)."""
        V, T = self.state(x)
        coef = self._edge_coefficients(self.omegas(x))
        A, dA, d2A, B, dB, d2B = coef
        Vu, Vv = V[self.edge_u], V[self.edge_v]
        Ex = np.exp(1j * (T[self.edge_u] - T[self.edge_v]))
        BE = B * Ex
        S = A * Vu**2 - BE * Vu * Vv
        if derivs == 0:
            return S
        E = len(S)
        G = np.zeros((E, 5), dtype=complex)
        G[:, _VU] = 2 * A * Vu - BE * Vv
        G[:, _VV] = -BE * Vu
        Sd = -1j * BE * Vu * Vv
        G[:, _TU] = Sd
        G[:, _TV] = -Sd
        dBE = dB * Ex
        G[:, _W] = dA * Vu**2 - dBE * Vu * Vv
        if derivs == 1:
            return S, G
        H = np.zeros((E, 5, 5), dtype=complex)
        Sdd = BE * Vu * Vv
        SVud = -1j * BE * Vv
        SVvd = -1j * BE * Vu
        Swd = -1j * dBE * Vu * Vv
        entries = {
            (_VU, _VU): 2 * A,
            (_VU, _VV): -BE,
            (_VU, _TU): SVud,
            (_VU, _TV): -SVud,
            (_VU, _W): 2 * dA * Vu - dBE * Vv,
            (_VV, _TU): SVvd,
            (_VV, _TV): -SVvd,
            (_VV, _W): -dBE * Vu,
            (_TU, _TU): Sdd,
            (_TU, _TV): -Sdd,
            (_TV, _TV): Sdd,
            (_TU, _W): Swd,
            (_TV, _W): -Swd,
            (_W, _W): d2A * Vu**2 - d2B * Ex * Vu * Vv,
        }
        for (i, j), v in entries.items():
            H[:, i, j] = v
            H[:, j, i] = v
        return S, G, H

    def _bus_shunt(self, omegas):
        """B_sh and derivatives w.r.t. the scaled frequency, per bus."""
        out = np.zeros((3, len(self.bus_ids)))
        for k, b in enumerate(self.network.buses):
            s = self.bus_sub[k]
            if self.sub_dc[s] or b.shunt_kind == "none":
                continue
            v = bus_shunt_derivs(b, omegas[s])
            out[:, k] = (v[0], v[1] * OMEGA_SCALE, v[2] * OMEGA_SCALE**2)
        return out

    # -- NLP callbacks -----------------------------------------------------------------

    def objective(self, x):
        p = _value(x, self.P_idx, self.P_const)
        c2, c1, c0 = self.cost.T if len(self.cost) else (np.zeros(0),) * 3
        f = float(np.sum((c2 * p + c1) * p + c0)) / self.cost_scale
        df = np.zeros(self.n)
        _add_jac(df[None, :], np.zeros(len(p), dtype=int), self.P_idx, (2 * c2 * p + c1) / self.cost_scale)
        return f, df

    def true_cost(self, x):
        return self.objective(x)[0] * self.cost_scale

    def constraints(self, x):
        n = self.n
        nbus = len(self.bus_ids)
        V, T = self.state(x)
        om = self.omegas(x)
        S, G = self.edge_flows(x, 1)
        P, Q = S.real, S.imag
        bsh = self._bus_shunt(om)
        neq = nbus + len(self.ac_bus)
        g = np.zeros(neq)
        Jg = np.zeros((neq, n))
        pg = _value(x, self.P_idx, self.P_const)
        qg = _value(x, self.Q_idx, self.Q_const)

        # generation
        np.add.at(g, self.gen_bus, pg)
        _add_jac(Jg, self.gen_bus, self.P_idx, np.ones(len(pg)))
        qrow_g = self.qrow[self.gen_bus]
        ac_g = qrow_g >= 0
        np.add.at(g, qrow_g[ac_g], qg[ac_g])
        _add_jac(Jg, qrow_g[ac_g], self.Q_idx[ac_g], np.ones(int(ac_g.sum())))

        # loads and shunts
        g[:nbus] -= self.p_load + self.g_shunt * V**2
        _add_jac(Jg, np.arange(nbus), self.V_idx, -2 * self.g_shunt * V)
        ac = self.ac_bus
        qr = self.qrow[ac]
        g[qr] += -self.q_load[ac] + bsh[0, ac] * V[ac] ** 2
        _add_jac(Jg, qr, self.V_idx[ac], 2 * bsh[0, ac] * V[ac])
        _add_jac(Jg, qr, self.w_idx[self.bus_sub[ac]], bsh[1, ac] * V[ac] ** 2)

        # branch flows leave bus u
        np.add.at(g, self.edge_u, -P)
        _add_jac(Jg, self.edge_u[:, None], self.edge_cols, -G.real)
        qe = self.qrow[self.edge_u]
        ace = qe >= 0
        np.add.at(g, qe[ace], -Q[ace])
        _add_jac(Jg, qe[ace][:, None], self.edge_cols[ace], -G.imag[ace])

        # converters: p_m enters the converter at i and leaves it at j
        if len(self.conv_ids):
            pc = _value(x, self.CP_idx, np.zeros(len(self.CP_idx)))
            qc = _value(x, self.CQ_idx.ravel(), np.zeros(self.CQ_idx.size)).reshape(-1, 2)
            ci, cj = self.conv_bus[:, 0], self.conv_bus[:, 1]
            np.add.at(g, ci, -pc)
            np.add.at(g, cj, pc)
            _add_jac(Jg, ci, self.CP_idx, -np.ones(len(pc)))
            _add_jac(Jg, cj, self.CP_idx, np.ones(len(pc)))
            for t in (0, 1):
                rows = self.qrow[self.conv_bus[:, t]]
                m = rows >= 0
                np.add.at(g, rows[m], -qc[m, t])
                _add_jac(Jg, rows[m], self.CQ_idx[m, t], -np.ones(int(m.sum())))

        # inequalities
        hs, Jh = [], []
        te = self.therm_edges
        if len(te):
            Pt, Qt, Gt = P[te], Q[te], G[te]
            hs.append(Pt**2 + Qt**2 - self.edge_limit[te] ** 2)
            J = np.zeros((len(te), n))
            _add_jac(J, np.arange(len(te))[:, None], self.edge_cols[te], 2 * (Pt[:, None] * Gt.real + Qt[:, None] * Gt.imag))
            Jh.append(J)
        na = len(self.ang_branch)
        if na:
            d = T[self.ang_u] - T[self.ang_v]
            for sign in (1.0, -1.0):
                hs.append(sign * d - self.ang_limit)
                J = np.zeros((na, n))
                _add_jac(J, np.arange(na), self.T_idx[self.ang_u], np.full(na, sign))
                _add_jac(J, np.arange(na), self.T_idx[self.ang_v], np.full(na, -sign))
                Jh.append(J)
        if self.conv_rows:
            pc = _value(x, self.CP_idx, np.zeros(len(self.CP_idx)))
            rows_h, J = [], np.zeros((len(self.conv_rows), n))
            for r, (m, t) in enumerate(self.conv_rows):
                qk = self.CQ_idx[m, t]
                q = x[qk] if qk >= 0 else 0.0
                rows_h.append(pc[m] ** 2 + q**2 - self.conv_limit[m] ** 2)
                if self.CP_idx[m] >= 0:
                    J[r, self.CP_idx[m]] += 2 * pc[m]
                if qk >= 0:
                    J[r, qk] += 2 * q
            hs.append(np.array(rows_h))
            Jh.append(J)
        h = np.concatenate(hs) if hs else np.zeros(0)
        Jh = np.vstack(Jh) if Jh else np.zeros((0, n))
        return g, h, Jg, Jh

    def hessian(self, x, lam, mu, obj_weight=1.0):
        n = self.n
        nbus = len(self.bus_ids)
        H = np.zeros((n, n))
        if obj_weight and len(self.P_idx):
            m = self.P_idx >= 0
            np.add.at(H, (self.P_idx[m], self.P_idx[m]), obj_weight * 2 * self.cost[m, 0] / self.cost_scale)
        V, _ = self.state(x)
        S, G, HS = self.edge_flows(x, 2)
        lp = lam[:nbus]
        lq = np.zeros(nbus)
        lq[self.ac_bus] = lam[nbus:]

        # balance equations: -P_e in pbal(u), -Q_e in qbal(u)
        w = -lp[self.edge_u][:, None, None] * HS.real - lq[self.edge_u][:, None, None] * HS.imag
        # thermal rows
        te = self.therm_edges
        if len(te):
            mu_t = mu[: len(te)]
            Gt = G[te]
            outer = np.einsum("ei,ej->eij", Gt.real, Gt.real) + np.einsum("ei,ej->eij", Gt.imag, Gt.imag)
            w[te] += 2 * mu_t[:, None, None] * (
                outer + S.real[te][:, None, None] * HS.real[te] + S.imag[te][:, None, None] * HS.imag[te]
            )
        _add_hess(H, self.edge_cols, w)

        # bus shunts: -g_sh V^2 in pbal, +B_sh(w) V^2 in qbal
        om = self.omegas(x)
        bsh = self._bus_shunt(om)
        blocks = np.zeros((nbus, 2, 2))
        blocks[:, 0, 0] = -2 * self.g_shunt * lp + 2 * bsh[0] * lq
        blocks[:, 0, 1] = blocks[:, 1, 0] = 2 * bsh[1] * V * lq
        blocks[:, 1, 1] = bsh[2] * V**2 * lq
        cols = np.stack([self.V_idx, self.w_idx[self.bus_sub]], axis=1)
        _add_hess(H, cols, blocks)

        # converter rating rows
        off = len(te) + 2 * len(self.ang_branch)
        for r, (m, t) in enumerate(self.conv_rows):
            mm = mu[off + r]
            for k in (self.CP_idx[m], self.CQ_idx[m, t]):
                if k >= 0:
                    H[k, k] += 2 * mm
        return H

    # -- elastic (phase-1) wrapper ----------------------------------------------------------

    def elastic(self):
        return ElasticModel(self)


class ElasticModel(NlpProblem):
    """min sum(s+ + s-) s.t. g(x) + s+ - s- = 0, h(x) <= 0, s >= 0."""

    def __init__(self, base):
        self.base = base
        self.neq = len(base.eq_rows)
        self.n = base.n + 2 * self.neq
        self.xmin = np.concatenate([base.xmin, np.zeros(2 * self.neq)])
        self.xmax = np.concatenate([base.xmax, np.full(2 * self.neq, np.inf)])

    def split(self, xe):
        n = self.base.n
        return xe[:n], xe[n : n + self.neq], xe[n + self.neq :]

    def initial_point(self, x):
        g = self.base.constraints(x)[0]
        return np.concatenate([x, np.maximum(-g, 0) + 1e-3, np.maximum(g, 0) + 1e-3])

    def objective(self, xe):
        df = np.zeros(self.n)
        df[self.base.n :] = 1.0
        return float(xe[self.base.n :].sum()), df

    def constraints(self, xe):
        x, sp, sm = self.split(xe)
        g, h, Jg, Jh = self.base.constraints(x)
        I = np.eye(self.neq)
        Jg = np.hstack([Jg, I, -I])
        Jh = np.hstack([Jh, np.zeros((len(h), 2 * self.neq))])
        return g + sp - sm, h, Jg, Jh

    def hessian(self, xe, lam, mu):
        x = self.split(xe)[0]
        H = np.zeros((self.n, self.n))
        H[: self.base.n, : self.base.n] = self.base.hessian(x, lam, mu, obj_weight=0.0)
        return H
