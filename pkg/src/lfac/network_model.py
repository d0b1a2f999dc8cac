"""Multi-frequency network data model, case-file IO and branch parameter evaluation.

A network is split into subnetworks, each running at one electrical frequency
(fixed, variable within bounds, or DC).  Subnetworks exchange power only
through frequency-conversion interfaces (converters).

Entities keep the values exactly as written in the case document (MW, MVAr,
per unit at 60 Hz, ...) so that load/save round trips are lossless; per-unit
quantities used by the solver are derived properties.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

from .cable_params import CableDesign, builtin_design
from .errors import CaseError, FrequencyRangeError
from .poly_fit import OMEGA_MAX, OMEGA_MIN, N_SAMPLES, PolyCableModel, fit_design
from .schemas import validate_document

FORMAT_VERSION = 1
NOMINAL_HZ = 60.0
NOMINAL_OMEGA = 2 * math.pi * NOMINAL_HZ
STANDARD_HZ = (50.0, 60.0)
DEFAULT_ANGLE_LIMIT_DEG = 40.0
DEFAULT_VMIN, DEFAULT_VMAX = 0.95, 1.05
DEFAULT_MIN_HZ, DEFAULT_MAX_HZ = 0.1, 60.0
DC_VOLTAGE_SCALE = math.sqrt(2)


def _opt(value, default):
    return default if value is None else value


@dataclass(frozen=True)
class Subnetwork:
    id: object
    mode: str  # "fixed" | "variable" | "dc"
    buses: tuple
    frequency_hz: float | None = None
    min_hz: float | None = None
    max_hz: float | None = None

    @property
    def is_dc(self):
        return self.mode == "dc"

    @property
    def is_variable(self):
        return self.mode == "variable"

    @property
    def omega(self):
        """Operating angular frequency for fixed and dc subnetworks."""
        if self.mode == "fixed":
            return 2 * math.pi * self.frequency_hz
        if self.mode == "dc":
            return 0.0
        raise ValueError(f"subnetwork {self.id!r} has a variable frequency")

    @property
    def omega_bounds(self):
        if self.mode == "variable":
            return 2 * math.pi * _opt(self.min_hz, DEFAULT_MIN_HZ), 2 * math.pi * _opt(self.max_hz, DEFAULT_MAX_HZ)
        w = self.omega
        return w, w

    def fixed_at(self, omega):
        """Copy of this subnetwork pinned to ``omega`` (rad/s); 0 selects dc mode."""
        if omega == 0:
            return replace(self, mode="dc", frequency_hz=None, min_hz=None, max_hz=None)
        return replace(self, mode="fixed", frequency_hz=omega / (2 * math.pi), min_hz=None, max_hz=None)

    def to_dict(self):
        d = {"id": self.id, "mode": self.mode}
        for key in ("frequency_hz", "min_hz", "max_hz"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        d["buses"] = list(self.buses)
        return d


@dataclass(frozen=True)
class Bus:
    id: object
    base_kv: float
    base_mva: float
    vmin: float = DEFAULT_VMIN
    vmax: float = DEFAULT_VMAX
    pd_mw: float = 0.0
    qd_mvar: float = 0.0
    gs_mw: float = 0.0
    shunt_kind: str = "none"  # "none" | "capacitor" | "inductor"
    shunt_mvar_60hz: float = 0.0
    reference: bool = False

    @property
    def p_load(self):
        return self.pd_mw / self.base_mva

    @property
    def q_load(self):
        return self.qd_mvar / self.base_mva

    @property
    def g_shunt(self):
        return self.gs_mw / self.base_mva

    @property
    def shunt_capacitance(self):
        """C^sh in per unit (so that B = omega * C with omega in rad/s)."""
        if self.shunt_kind != "capacitor":
            return 0.0
        return self.shunt_mvar_60hz / self.base_mva / NOMINAL_OMEGA

    @property
    def shunt_inductance(self):
        """L^sh in per unit (so that B = -1 / (omega * L))."""
        if self.shunt_kind != "inductor":
            return math.inf
        return 1.0 / (NOMINAL_OMEGA * self.shunt_mvar_60hz / self.base_mva)

    def to_dict(self):
        d = {"id": self.id, "base_kv": self.base_kv, "vmin": self.vmin, "vmax": self.vmax}
        for key in ("pd_mw", "qd_mvar", "gs_mw"):
            if getattr(self, key):
                d[key] = getattr(self, key)
        if self.shunt_kind != "none":
            d["shunt"] = {"kind": self.shunt_kind, "mvar_at_60hz": self.shunt_mvar_60hz}
        if self.reference:
            d["reference"] = True
        return d


@dataclass(frozen=True)
class Branch:
    id: object
    from_bus: object
    to_bus: object
    kind: str  # "overhead" | "cable" | "transformer"
    base_kv: float
    base_mva: float
    r_pu: float = 0.0
    x_pu: float = 0.0
    b_pu: float = 0.0
    tap: float = 1.0
    shift_deg: float = 0.0
    model_name: str | None = None
    design_name: str | None = None
    length_km: float | None = None
    rate_mva: float | None = None
    angle_limit_deg: float = DEFAULT_ANGLE_LIMIT_DEG
    cable: PolyCableModel | None = None  # SI units, resolved at load

    @property
    def z_base(self):
        return self.base_kv**2 / self.base_mva

    @property
    def inductance(self):
        """Series L in per unit (X at 60 Hz divided by the nominal omega)."""
        return self.x_pu / NOMINAL_OMEGA

    @property
    def capacitance(self):
        """Total shunt C in per unit."""
        return self.b_pu / NOMINAL_OMEGA

    @property
    def thermal_limit(self):
        return math.inf if self.rate_mva is None else self.rate_mva / self.base_mva

    @property
    def angle_limit(self):
        return math.radians(self.angle_limit_deg)

    @property
    def cable_pu(self):
        return self.cable.scaled(self.z_base)

    def to_dict(self):
        d = {"id": self.id, "from": self.from_bus, "to": self.to_bus, "kind": self.kind}
        if self.kind == "cable":
            if self.model_name is not None:
                d["model"] = self.model_name
            else:
                d["design"] = self.design_name
                d["length_km"] = self.length_km
        else:
            d.update(r_pu=self.r_pu, x_pu=self.x_pu)
            if self.kind == "overhead":
                d["b_pu"] = self.b_pu
            else:
                d.update(tap=self.tap, shift_deg=self.shift_deg)
        if self.rate_mva is not None:
            d["rate_mva"] = self.rate_mva
        d["angle_limit_deg"] = self.angle_limit_deg
        return d


@dataclass(frozen=True)
class Generator:
    id: object
    bus: object
    base_mva: float
    pmin_mw: float = 0.0
    pmax_mw: float | None = None
    qmin_mvar: float | None = None
    qmax_mvar: float | None = None
    cost: tuple = (0.0,)  # polynomial in per-unit p, highest power first

    @property
    def p_bounds(self):
        return self.pmin_mw / self.base_mva, _opt(self.pmax_mw, math.inf) / self.base_mva

    @property
    def q_bounds(self):
        return _opt(self.qmin_mvar, -math.inf) / self.base_mva, _opt(self.qmax_mvar, math.inf) / self.base_mva

    @property
    def quadratic_cost(self):
        """(c2, c1, c0) with missing high-order terms set to zero."""
        padded = (0.0,) * (3 - len(self.cost)) + tuple(self.cost)
        return padded

    def cost_at(self, p):
        c2, c1, c0 = self.quadratic_cost
        return (c2 * p + c1) * p + c0

    def to_dict(self):
        d = {"id": self.id, "bus": self.bus, "pmin_mw": self.pmin_mw}
        for key in ("pmax_mw", "qmin_mvar", "qmax_mvar"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        d["cost"] = list(self.cost)
        return d


@dataclass(frozen=True)
class ConverterInterface:
    """Lossless frequency converter: p_i + p_j = 0, independent reactive power."""

    id: object
    bus_i: object
    bus_j: object
    base_mva: float
    rate_mva: float | None = None

    @property
    def s_limit(self):
        return math.inf if self.rate_mva is None else self.rate_mva / self.base_mva

    def to_dict(self):
        d = {"id": self.id, "bus_i": self.bus_i, "bus_j": self.bus_j}
        if self.rate_mva is not None:
            d["rate_mva"] = self.rate_mva
        return d


@dataclass(frozen=True)
class Network:
    base_mva: float
    subnetworks: tuple
    buses: tuple
    branches: tuple = ()
    generators: tuple = ()
    converters: tuple = ()
    cable_designs: dict = field(default_factory=dict)
    cable_models: dict = field(default_factory=dict)
    fit_options: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        validate_network(self)

    # -- lookups ---------------------------------------------------------------

    def bus_index(self):
        return {b.id: k for k, b in enumerate(self.buses)}

    def bus(self, bus_id):
        return self.buses[self.bus_index()[bus_id]]

    def subnetwork_of(self, bus_id):
        for s in self.subnetworks:
            if bus_id in s.buses:
                return s
        raise KeyError(bus_id)

    def reference_bus(self, sub):
        flagged = [b for b in sub.buses if self.bus(b).reference]
        return flagged[0] if flagged else sub.buses[0]

    def directed_edges(self):
        """Each branch as two directed edges ``(branch_index, from_bus, to_bus, forward)``."""
        out = []
        for k, br in enumerate(self.branches):
            out.append((k, br.from_bus, br.to_bus, True))
            out.append((k, br.to_bus, br.from_bus, False))
        return out

    def with_subnetwork(self, sub_id, **changes):
        subs = tuple(replace(s, **changes) if s.id == sub_id else s for s in self.subnetworks)
        return replace(self, subnetworks=subs)

    def with_frequency(self, omega, sub_ids=None):
        """Pin the chosen (default: all variable) subnetworks to ``omega`` rad/s."""
        subs = []
        for s in self.subnetworks:
            chosen = s.is_variable if sub_ids is None else s.id in sub_ids
            subs.append(s.fixed_at(omega) if chosen else s)
        return replace(self, subnetworks=tuple(subs))

    def to_dict(self):
        d = {"format_version": FORMAT_VERSION}
        if self.name:
            d["name"] = self.name
        d["base_mva"] = self.base_mva
        d["subnetworks"] = [s.to_dict() for s in self.subnetworks]
        d["buses"] = [b.to_dict() for b in self.buses]
        d["branches"] = [b.to_dict() for b in self.branches]
        d["generators"] = [g.to_dict() for g in self.generators]
        d["converters"] = [c.to_dict() for c in self.converters]
        if self.cable_designs:
            d["cable_designs"] = {k: v.to_dict() for k, v in self.cable_designs.items()}
        if self.cable_models:
            d["cable_models"] = {k: v.to_dict() for k, v in self.cable_models.items()}
        if self.fit_options:
            d["fit_options"] = dict(self.fit_options)
        return d


# -- validation ------------------------------------------------------------------


def validate_network(net):
    bus_ids = [b.id for b in net.buses]
    _unique(bus_ids, "buses")
    _unique([s.id for s in net.subnetworks], "subnetworks")
    _unique([b.id for b in net.branches], "branches")
    _unique([g.id for g in net.generators], "generators")
    _unique([c.id for c in net.converters], "converters")
    known = set(bus_ids)

    membership = defaultdict(list)
    for k, s in enumerate(net.subnetworks):
        loc = f"subnetworks/{k}"
        if s.mode == "fixed" and s.frequency_hz is None:
            raise CaseError("fixed-frequency subnetwork needs frequency_hz", loc)
        if s.mode == "variable":
            lo, hi = _opt(s.min_hz, DEFAULT_MIN_HZ), _opt(s.max_hz, DEFAULT_MAX_HZ)
            if not 0 < lo <= hi <= DEFAULT_MAX_HZ:
                raise CaseError(f"variable frequency bounds must satisfy 0 < min <= max <= 60 Hz, got [{lo}, {hi}]", loc)
        if s.mode != "fixed" and s.frequency_hz is not None:
            raise CaseError(f"frequency_hz is only meaningful for fixed subnetworks (mode {s.mode!r})", loc)
        if not s.buses:
            raise CaseError("subnetwork has no buses", loc)
        for b in s.buses:
            if b not in known:
                raise CaseError(f"unknown bus {b!r}", loc)
            membership[b].append(s.id)
    for k, b in enumerate(net.buses):
        loc = f"buses/{k}"
        subs = membership.get(b.id, [])
        if len(subs) != 1:
            raise CaseError(f"bus {b.id!r} belongs to {len(subs)} subnetworks {subs}; exactly one required", loc)
        if not 0 < b.vmin <= b.vmax:
            raise CaseError(f"voltage bounds must satisfy 0 < vmin <= vmax, got [{b.vmin}, {b.vmax}]", loc)
        if b.shunt_kind not in ("none", "capacitor", "inductor"):
            raise CaseError(f"unknown shunt kind {b.shunt_kind!r}", loc)
        if b.shunt_kind == "inductor" and net.subnetwork_of(b.id).is_dc:
            raise CaseError("inductive shunt in a dc subnetwork", loc)
    for s in net.subnetworks:
        refs = [b for b in s.buses if net.bus(b).reference]
        if len(refs) > 1:
            raise CaseError(f"subnetwork {s.id!r} has several reference buses {refs}", "subnetworks")

    for k, br in enumerate(net.branches):
        _validate_branch(net, br, f"branches/{k}", known)
    for k, g in enumerate(net.generators):
        loc = f"generators/{k}"
        if g.bus not in known:
            raise CaseError(f"unknown bus {g.bus!r}", loc)
        plo, phi = g.p_bounds
        qlo, qhi = g.q_bounds
        if plo > phi or qlo > qhi:
            raise CaseError("generator limits must satisfy min <= max", loc)
        if len(g.cost) > 3:
            raise CaseError("only polynomial costs up to quadratic are supported", loc)
        if g.quadratic_cost[0] < 0:
            raise CaseError("generator cost must be convex (non-negative quadratic coefficient)", loc)
    for k, c in enumerate(net.converters):
        loc = f"converters/{k}"
        for b in (c.bus_i, c.bus_j):
            if b not in known:
                raise CaseError(f"unknown bus {b!r}", loc)
        if net.subnetwork_of(c.bus_i).id == net.subnetwork_of(c.bus_j).id:
            raise CaseError("converter terminals must lie in different subnetworks", loc)
    _check_converter_graph(net)


def _unique(ids, section):
    seen = set()
    for k, i in enumerate(ids):
        if i in seen:
            raise CaseError(f"duplicate id {i!r}", f"{section}/{k}")
        seen.add(i)


def _validate_branch(net, br, loc, known):
    for b in (br.from_bus, br.to_bus):
        if b not in known:
            raise CaseError(f"unknown bus {b!r}", loc)
    if br.from_bus == br.to_bus:
        raise CaseError("branch connects a bus to itself", loc)
    sub = net.subnetwork_of(br.from_bus)
    if net.subnetwork_of(br.to_bus).id != sub.id:
        raise CaseError("branch crosses subnetworks; use a converter", loc)
    if br.rate_mva is not None and not br.rate_mva > 0:
        raise CaseError("thermal limit must be positive", loc)
    if br.kind == "transformer":
        if sub.mode != "fixed" or sub.frequency_hz not in STANDARD_HZ:
            raise CaseError("transformers are allowed only in fixed 50/60 Hz subnetworks", loc)
    elif br.kind == "overhead":
        if sub.is_dc and br.r_pu <= 0:
            raise CaseError("overhead branch in a dc subnetwork needs r_pu > 0", loc)
        if not sub.is_dc and br.r_pu <= 0 and br.x_pu <= 0:
            raise CaseError("overhead branch needs r_pu > 0 or x_pu > 0", loc)
    elif br.kind == "cable":
        if br.cable is None:
            raise CaseError("cable branch has no fitted model", loc)
        lo, hi = sub.omega_bounds
        for w in (lo, hi):
            try:
                br.cable.check_range(w)
            except FrequencyRangeError as exc:
                raise CaseError(str(exc), loc) from None
    else:
        raise CaseError(f"unknown branch kind {br.kind!r}", loc)


def _check_converter_graph(net):
    if len(net.subnetworks) < 2:
        return
    adj = defaultdict(set)
    for c in net.converters:
        a, b = net.subnetwork_of(c.bus_i).id, net.subnetwork_of(c.bus_j).id
        adj[a].add(b)
        adj[b].add(a)
    start = net.subnetworks[0].id
    seen, stack = {start}, [start]
    while stack:
        for n in adj[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    missing = [s.id for s in net.subnetworks if s.id not in seen]
    if missing:
        raise CaseError(f"subnetworks {missing} are not connected to {start!r} through converters", "converters")


# -- case IO ------------------------------------------------------------------------


def network_from_dict(doc, location=""):
    validate_document(doc, "case", location)
    base = float(doc["base_mva"])
    designs = {}
    for name, d in doc.get("cable_designs", {}).items():
        try:
            validate_document(d, "cable_design")
            designs[name] = CableDesign.from_dict(d)
        except CaseError as exc:
            raise CaseError(str(exc), f"{location}#cable_designs/{name}") from None
    models = {name: PolyCableModel.from_dict(m) for name, m in doc.get("cable_models", {}).items()}
    fit_options = dict(doc.get("fit_options", {}))

    subs = tuple(
        Subnetwork(
            id=s["id"],
            mode=s["mode"],
            buses=tuple(s["buses"]),
            frequency_hz=s.get("frequency_hz"),
            min_hz=s.get("min_hz"),
            max_hz=s.get("max_hz"),
        )
        for s in doc["subnetworks"]
    )
    buses = []
    for b in doc["buses"]:
        shunt = b.get("shunt")
        buses.append(
            Bus(
                id=b["id"],
                base_kv=b["base_kv"],
                base_mva=base,
                vmin=b.get("vmin", DEFAULT_VMIN),
                vmax=b.get("vmax", DEFAULT_VMAX),
                pd_mw=b.get("pd_mw", 0.0),
                qd_mvar=b.get("qd_mvar", 0.0),
                gs_mw=b.get("gs_mw", 0.0),
                shunt_kind=shunt["kind"] if shunt else "none",
                shunt_mvar_60hz=shunt["mvar_at_60hz"] if shunt else 0.0,
                reference=b.get("reference", False),
            )
        )
    kv = {b.id: b.base_kv for b in buses}
    fit_cache = {}
    branches = []
    for k, br in enumerate(doc.get("branches", [])):
        loc = f"{location}#branches/{k}"
        for end in ("from", "to"):
            if br[end] not in kv:
                raise CaseError(f"unknown bus {br[end]!r}", loc)
        if br["kind"] != "transformer" and kv[br["from"]] != kv[br["to"]]:
            raise CaseError("line/cable ends have different base_kv", loc)
        rate = br.get("rate_mva")
        cable = None
        if br["kind"] == "cable":
            cable, design = _resolve_cable(br, models, designs, fit_options, fit_cache, loc)
            if rate is None and design is not None and design.thermal_rating > 0:
                rate = design.thermal_rating / 1e6
        else:
            for key in ("model", "design", "length_km"):
                if key in br:
                    raise CaseError(f"{key!r} is only valid for cable branches", loc)
        branches.append(
            Branch(
                id=br["id"],
                from_bus=br["from"],
                to_bus=br["to"],
                kind=br["kind"],
                base_kv=kv[br["from"]],
                base_mva=base,
                r_pu=br.get("r_pu", 0.0),
                x_pu=br.get("x_pu", 0.0),
                b_pu=br.get("b_pu", 0.0),
                tap=br.get("tap", 1.0),
                shift_deg=br.get("shift_deg", 0.0),
                model_name=br.get("model"),
                design_name=br.get("design"),
                length_km=br.get("length_km"),
                rate_mva=rate,
                angle_limit_deg=br.get("angle_limit_deg", DEFAULT_ANGLE_LIMIT_DEG),
                cable=cable,
            )
        )
    gens = tuple(
        Generator(
            id=g["id"],
            bus=g["bus"],
            base_mva=base,
            pmin_mw=g.get("pmin_mw", 0.0),
            pmax_mw=g.get("pmax_mw"),
            qmin_mvar=g.get("qmin_mvar"),
            qmax_mvar=g.get("qmax_mvar"),
            cost=tuple(g.get("cost", (0.0,))),
        )
        for g in doc.get("generators", [])
    )
    convs = tuple(
        ConverterInterface(id=c["id"], bus_i=c["bus_i"], bus_j=c["bus_j"], base_mva=base, rate_mva=c.get("rate_mva"))
        for c in doc.get("converters", [])
    )
    try:
        return Network(
            base_mva=base,
            subnetworks=subs,
            buses=tuple(buses),
            branches=tuple(branches),
            generators=gens,
            converters=convs,
            cable_designs=designs,
            cable_models=models,
            fit_options=fit_options,
            name=doc.get("name", ""),
        )
    except CaseError as exc:
        if location and not exc.location.startswith(location):
            raise CaseError(str(exc).split(": ", 1)[-1], f"{location}#{exc.location}") from None
        raise


def _resolve_cable(br, models, designs, fit_options, cache, loc):
    if "model" in br:
        if "design" in br or "length_km" in br:
            raise CaseError("give either 'model' or 'design' + 'length_km', not both", loc)
        try:
            return models[br["model"]], None
        except KeyError:
            raise CaseError(f"unknown cable model {br['model']!r}", loc) from None
    if "design" not in br or "length_km" not in br:
        raise CaseError("cable branch needs 'model' or 'design' + 'length_km'", loc)
    name = br["design"]
    design = designs.get(name)
    if design is None:
        try:
            design = builtin_design(name)
        except CaseError:
            raise CaseError(f"unknown cable design {name!r}", loc) from None
    key = (name, br["length_km"])
    if key not in cache:
        cache[key] = _fitted_model(
            design.with_length(br["length_km"] * 1000.0),
            fit_options.get("omega_min", OMEGA_MIN),
            fit_options.get("omega_max", OMEGA_MAX),
            fit_options.get("n_samples", N_SAMPLES),
        )
    return cache[key], design


@lru_cache(maxsize=64)
def _fitted_model(design, omega_min, omega_max, n):
    # designs are frozen and hashable, so repeated case loads share one fit
    return fit_design(design, omega_min, omega_max, n)[0]


def load_case(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseError(f"invalid JSON: {exc}", str(path)) from None
    return network_from_dict(doc, location=str(path))


def save_case(network, path):
    Path(path).write_text(json.dumps(network.to_dict(), indent=2) + "\n")


# -- per-unit helpers ----------------------------------------------------------------


def ohm_to_pu(z_ohm, base_kv, base_mva):
    return z_ohm / (base_kv**2 / base_mva)


def pu_to_ohm(z_pu, base_kv, base_mva):
    return z_pu * (base_kv**2 / base_mva)


# -- parameter evaluation ------------------------------------------------------------


def series_impedance(branch, omega, dc=False, check=True):
    """Per-unit series impedance z(omega) and its first two omega-derivatives."""
    if branch.kind == "cable":
        m = branch.cable_pu
        if check and not dc:
            m.check_range(omega)
        if dc:
            return complex(m.r0), 0j, 0j
        z = complex(m.resistance(omega), m.reactance(omega))
        dz = complex(m.resistance(omega, 1), m.reactance(omega, 1))
        d2z = complex(m.resistance(omega, 2), m.reactance(omega, 2))
        return z, dz, d2z
    if dc:
        return complex(branch.r_pu), 0j, 0j
    L = branch.inductance
    return complex(branch.r_pu, omega * L), complex(0, L), 0j


def shunt_admittance(branch, omega, dc=False):
    """Per-unit total shunt admittance and its first two omega-derivatives."""
    if branch.kind == "cable":
        m = branch.cable_pu
        if dc:
            return complex(m.g0), 0j, 0j
        y = complex(m.conductance(omega), m.susceptance(omega))
        dy = complex(m.conductance(omega, 1), m.susceptance(omega, 1))
        d2y = complex(m.conductance(omega, 2), m.susceptance(omega, 2))
        return y, dy, d2y
    if dc or branch.kind == "transformer":
        return 0j, 0j, 0j
    C = branch.capacitance
    return complex(0, omega * C), complex(0, C), 0j


def branch_admittance(branch, omega, dc=None):
    """Per-unit (G, B, G_sh, B_sh) of a branch at ``omega`` rad/s.

    G + jB is the series admittance and G_sh + jB_sh the total shunt
    admittance (half at each terminal).  ``omega = 0`` selects the dc limit
    unless ``dc`` is given explicitly.
    """
    dc = omega == 0 if dc is None else dc
    z = series_impedance(branch, omega, dc)[0]
    ysh = shunt_admittance(branch, omega, dc)[0]
    if z == 0:
        raise CaseError(f"branch {branch.id!r} has zero series impedance")
    y = 1 / z
    if dc:
        y, ysh = complex(y.real, 0), complex(ysh.real, 0)
    return y.real, y.imag, ysh.real, ysh.imag


def bus_shunt_susceptance(bus, omega, dc=None):
    """Per-unit bus shunt susceptance B_sh = omega C or -1 / (omega L)."""
    dc = omega == 0 if dc is None else dc
    if bus.shunt_kind == "capacitor":
        return 0.0 if dc else omega * bus.shunt_capacitance
    if bus.shunt_kind == "inductor":
        if dc or omega <= 0:
            raise CaseError(f"inductive shunt at bus {bus.id!r} needs omega > 0")
        return -1.0 / (omega * bus.shunt_inductance)
    return 0.0


def bus_shunt_derivs(bus, omega, dc=False):
    """B_sh(omega) with first and second omega-derivatives."""
    if dc or bus.shunt_kind == "none":
        return 0.0, 0.0, 0.0
    if bus.shunt_kind == "capacitor":
        return omega * bus.shunt_capacitance, bus.shunt_capacitance, 0.0
    L = bus.shunt_inductance
    return -1.0 / (omega * L), 1.0 / (omega**2 * L), -2.0 / (omega**3 * L)


def branch_parameters_csv(network, omega):
    """Table of evaluated per-unit branch parameters.

    Variable-frequency subnetworks are evaluated at ``omega`` (rad/s); fixed
    and dc subnetworks at their own operating frequency.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch", "from", "to", "kind", "subnetwork", "omega_rad_s", "g_pu", "b_pu", "g_sh_pu", "b_sh_pu"])
    for br in network.branches:
        sub = network.subnetwork_of(br.from_bus)
        om = omega if sub.is_variable else sub.omega
        g, b, gsh, bsh = branch_admittance(br, om, dc=sub.is_dc)
        w.writerow([br.id, br.from_bus, br.to_bus, br.kind, sub.id, f"{om:.6g}", f"{g:.10g}", f"{b:.10g}", f"{gsh:.10g}", f"{bsh:.10g}"])
    return buf.getvalue()
