"""Distributed series impedance and shunt admittance of a buried cable system.

Three single-core cables lie side by side (flat formation) at a common depth.
Each cable has a solid central conductor, an inner insulation, a tubular metal
sheath and an outer insulation jacket.  Conductors are ordered

    [core_a, core_b, core_c, sheath_a, sheath_b, sheath_c]

so the returned 6x6 matrices are partitioned into core/sheath 3x3 blocks.

The per-cable impedance is assembled from internal surface impedances
(modified Bessel functions), insulation impedances (logarithmic) and the
earth-return self/mutual impedances in the Wedepohl-Wilcox logarithmic
approximation.  At omega = 0 every component is evaluated at its analytic DC
limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import special

from .errors import BesselEvaluationError, CaseError, GeometryError

MU0 = 4e-7 * math.pi
EPS0 = 8.8541878128e-12
EULER_GAMMA = 0.5772156649015329
GAMMA_E = math.exp(EULER_GAMMA)  # 1.781..., from K0(x) ~ -ln(GAMMA_E x / 2) for small x
REFERENCE_TEMP = 20.0


@dataclass(frozen=True)
class MaterialProperties:
    name: str
    resistivity_20C: float  # ohm*m
    temp_coefficient: float = 0.0  # 1/K
    permeability: float = MU0  # H/m
    permittivity_rel: float = 1.0

    def __post_init__(self):
        if not self.resistivity_20C > 0:
            raise GeometryError(f"material {self.name!r}: resistivity must be positive")
        if not self.permeability > 0:
            raise GeometryError(f"material {self.name!r}: permeability must be positive")
        if self.permittivity_rel < 1:
            raise GeometryError(f"material {self.name!r}: relative permittivity below 1")

    def resistivity(self, temp_c):
        """Resistivity at ``temp_c`` using the linear temperature law."""
        return self.resistivity_20C * (1.0 + self.temp_coefficient * (temp_c - REFERENCE_TEMP))


# Material constants at 20 C.  Temperature coefficients are the usual
# handbook values for annealed copper and EC-grade aluminium.
MATERIALS = {
    "copper": MaterialProperties("copper", 1.68e-8, 3.93e-3, 1.25663e-6),
    "aluminum": MaterialProperties("aluminum", 2.65e-8, 4.03e-3, 1.25667e-6),
    "xlpe": MaterialProperties("xlpe", 2.00e11, 0.0, MU0, 2.3),
}
MATERIALS["aluminium"] = MATERIALS["aluminum"]


def material(name_or_props):
    """Resolve a material by name against :data:`MATERIALS` or pass it through."""
    if isinstance(name_or_props, MaterialProperties):
        return name_or_props
    if isinstance(name_or_props, dict):
        return MaterialProperties(**name_or_props)
    try:
        return MATERIALS[str(name_or_props).lower()]
    except KeyError:
        raise CaseError(f"unknown material {name_or_props!r}; known: {sorted(MATERIALS)}") from None


@dataclass(frozen=True)
class CableDesign:
    """Geometry and materials of a flat three-phase single-core cable circuit.

    Radii and lengths are in metres, resistivities in ohm*m, temperatures in
    Celsius, ``voltage_rating`` in volts (line-to-line rms) and
    ``thermal_rating`` in volt-amperes.
    """

    R1: float
    R2: float
    R3: float
    R4: float
    spacing_d: float
    depth_h: float
    conductor: MaterialProperties = field(default_factory=lambda: MATERIALS["copper"])
    sheath: MaterialProperties = field(default_factory=lambda: MATERIALS["aluminum"])
    insulation: MaterialProperties = field(default_factory=lambda: MATERIALS["xlpe"])
    soil_resistivity: float = 100.0
    operating_temp: float = REFERENCE_TEMP
    voltage_rating: float = 0.0
    thermal_rating: float = 0.0
    length: float = 1000.0
    name: str = ""

    def __post_init__(self):
        validate_design(self)

    def with_length(self, length):
        return replace(self, length=length)

    def with_temperature(self, temp_c):
        return replace(self, operating_temp=temp_c)

    def to_dict(self):
        d = asdict(self)
        for key in ("conductor", "sheath", "insulation"):
            mat = getattr(self, key)
            known = MATERIALS.get(mat.name)
            d[key] = mat.name if known == mat else asdict(mat)
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ("conductor", "sheath", "insulation"):
            if key in data:
                data[key] = material(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise CaseError(f"unknown cable design fields {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise CaseError(str(exc)) from None


def validate_design(design):
    d = design
    radii = (d.R1, d.R2, d.R3, d.R4, d.spacing_d)
    if not all(math.isfinite(r) for r in radii):
        raise GeometryError("cable radii and spacing must be finite")
    if not (0 < d.R1 < d.R2 < d.R3 < d.R4 < d.spacing_d):
        raise GeometryError(
            "require 0 < R1 < R2 < R3 < R4 < spacing_d, got "
            f"R1={d.R1}, R2={d.R2}, R3={d.R3}, R4={d.R4}, d={d.spacing_d}"
        )
    if not d.depth_h > d.R4:
        raise GeometryError(f"depth {d.depth_h} m must exceed outer radius {d.R4} m")
    if not d.length > 0:
        raise GeometryError(f"cable length must be positive, got {d.length}")
    if not d.soil_resistivity > 0:
        raise GeometryError("soil resistivity must be positive")
    for key in ("conductor", "sheath"):
        if getattr(d, key).resistivity(d.operating_temp) <= 0:
            raise GeometryError(f"{key} resistivity non-positive at {d.operating_temp} C")


def load_design(path):
    """Read a cable design document (JSON)."""
    from .schemas import validate_document

    with open(path) as fh:
        doc = json.load(fh)
    validate_document(doc, "cable_design", location=str(path))
    return CableDesign.from_dict(doc)


def save_design(design, path):
    Path(path).write_text(json.dumps(design.to_dict(), indent=2) + "\n")


def builtin_design(name):
    """Return one of the packaged designs: ``"cable_230kv"`` or ``"cable_138kv"``."""
    ref = resources.files("lfac.data.designs").joinpath(f"{name}.json")
    if not ref.is_file():
        raise CaseError(f"no packaged design named {name!r}")
    return CableDesign.from_dict(json.loads(ref.read_text()))


# -- Bessel helpers -----------------------------------------------------------


def _check(value, what, arg):
    if not np.all(np.isfinite(value)):
        raise BesselEvaluationError(f"{what} did not evaluate to a finite value at argument {arg}")
    return value


def bessel_ratio_i0_i1(x):
    """I0(x)/I1(x) computed from exponentially scaled functions."""
    return _check(special.ive(0, x) / special.ive(1, x), "I0/I1", x)


def _tube_terms(a, b):
    """Scaled Bessel combinations for a tube with inner/outer arguments a, b.

    Every product I_n(u) K_k(v) is written as ive*kve*exp(Re u - v); the
    common factor exp(Re b - a) is removed so nothing overflows.  Returns the
    bracketed numerators of the inner and outer surface impedances, the
    bracketed denominator, and the removed factor.
    """
    i0a, i1a = special.ive(0, a), special.ive(1, a)
    i0b, i1b = special.ive(0, b), special.ive(1, b)
    k0a, k1a = special.kve(0, a), special.kve(1, a)
    k0b, k1b = special.kve(0, b), special.kve(1, b)
    e = np.exp((a.real + a) - (b.real + b))
    den = i1b * k1a - i1a * k1b * e
    num_inner = i0a * k1b * e + k0a * i1b
    num_outer = i0b * k1a + k0b * i1a * e
    factor = np.exp(b.real - a)
    return _check(num_inner, "tube", a), _check(num_outer, "tube", b), _check(den, "tube", a), factor


# -- impedance components -----------------------------------------------------


def z_conductor(design, omega):
    """Internal impedance of the solid central conductor (ohm/m)."""
    rho = design.conductor.resistivity(design.operating_temp)
    r1 = design.R1
    if omega == 0:
        return complex(rho / (math.pi * r1**2))
    m = np.sqrt(1j * omega * design.conductor.permeability / rho)
    return complex(rho * m / (2 * math.pi * r1) * bessel_ratio_i0_i1(m * r1))


def z_inner_insulation(design, omega):
    return 1j * omega * design.insulation.permeability / (2 * math.pi) * math.log(design.R2 / design.R1)


def z_outer_insulation(design, omega):
    return 1j * omega * design.insulation.permeability / (2 * math.pi) * math.log(design.R4 / design.R3)


def z_sheath(design, omega):
    """Sheath inner-surface, mutual and outer-surface impedances (ohm/m)."""
    rho = design.sheath.resistivity(design.operating_temp)
    r2, r3 = design.R2, design.R3
    if omega == 0:
        rdc = complex(rho / (math.pi * (r3**2 - r2**2)))
        return rdc, rdc, rdc
    m = np.sqrt(1j * omega * design.sheath.permeability / rho)
    num_in, num_out, den, factor = _tube_terms(m * r2, m * r3)
    z_in = rho * m / (2 * math.pi * r2) * num_in / den
    z_out = rho * m / (2 * math.pi * r3) * num_out / den
    z_mut = rho / (2 * math.pi * r2 * r3) / (den * factor)
    return complex(z_in), complex(z_mut), complex(z_out)


def _earth_m(design, omega):
    # soil permeability taken as mu0
    return np.sqrt(1j * omega * MU0 / design.soil_resistivity)


def z_earth_self(design, omega):
    """Earth-return self impedance of one buried cable (ohm/m)."""
    if omega == 0:
        return 0j
    m = _earth_m(design, omega)
    r, h = design.R4, design.depth_h
    return complex(
        1j * omega * MU0 / (2 * math.pi) * (-np.log(GAMMA_E * m * r / 2) + 0.5 - 4 * m * h / 3)
    )


def z_earth_mutual(design, omega, distance):
    """Earth-return mutual impedance between two cables ``distance`` apart."""
    if omega == 0:
        return 0j
    m = _earth_m(design, omega)
    h = design.depth_h
    return complex(
        1j * omega * MU0 / (2 * math.pi) * (-np.log(GAMMA_E * m * distance / 2) + 0.5 - 2 * m * (2 * h) / 3)
    )


def y_inner_insulation(design, omega):
    """Core-to-sheath leakage admittance (S/m)."""
    k = 2 * math.pi / math.log(design.R2 / design.R1)
    ins = design.insulation
    return complex(k / ins.resistivity_20C, omega * k * ins.permittivity_rel * EPS0)


def y_outer_insulation(design, omega):
    """Sheath-to-ground leakage admittance (S/m)."""
    k = 2 * math.pi / math.log(design.R4 / design.R3)
    ins = design.insulation
    return complex(k / ins.resistivity_20C, omega * k * ins.permittivity_rel * EPS0)


def components(design, omega):
    """All impedance/admittance components as a dict keyed z1..z7, y1, y2.

    ``z_ij`` is returned as a dict keyed by inter-cable distance.
    """
    if omega < 0:
        raise ValueError(f"omega must be non-negative, got {omega}")
    z3, z4, z5 = z_sheath(design, omega)
    d = design.spacing_d
    return {
        "z1": z_conductor(design, omega),
        "z2": z_inner_insulation(design, omega),
        "z3": z3,
        "z4": z4,
        "z5": z5,
        "z6": z_outer_insulation(design, omega),
        "z7": z_earth_self(design, omega),
        "z_ij": {d: z_earth_mutual(design, omega, d), 2 * d: z_earth_mutual(design, omega, 2 * d)},
        "y1": y_inner_insulation(design, omega),
        "y2": y_outer_insulation(design, omega),
    }


def build_z_matrix(design, omega):
    """Series impedance matrix Z(omega) in ohm/m, cores first then sheaths."""
    c = components(design, omega)
    z_loop_outer = c["z5"] + c["z6"] + c["z7"]
    z_cc = c["z1"] + c["z2"] + c["z3"] - 2 * c["z4"] + z_loop_outer
    z_cs = z_loop_outer - c["z4"]
    z_ss = z_loop_outer
    Z = np.zeros((6, 6), dtype=complex)
    for i in range(3):
        Z[i, i] = z_cc
        Z[i, 3 + i] = Z[3 + i, i] = z_cs
        Z[3 + i, 3 + i] = z_ss
        for j in range(3):
            if i == j:
                continue
            zm = c["z_ij"][abs(i - j) * design.spacing_d]
            Z[i, j] = Z[i, 3 + j] = Z[3 + i, j] = Z[3 + i, 3 + j] = zm
    return Z


def build_y_matrix(design, omega):
    """Shunt admittance matrix Y(omega) in S/m; inter-cable blocks are zero."""
    y1 = y_inner_insulation(design, omega)
    y2 = y_outer_insulation(design, omega)
    Y = np.zeros((6, 6), dtype=complex)
    for i in range(3):
        Y[i, i] = y1
        Y[i, 3 + i] = Y[3 + i, i] = -y1
        Y[3 + i, 3 + i] = y1 + y2
    return Y


@dataclass(frozen=True)
class DistributedMatrices:
    omega: float
    Z: np.ndarray
    Y: np.ndarray


def distributed_matrices(design, omega):
    return DistributedMatrices(omega, build_z_matrix(design, omega), build_y_matrix(design, omega))
