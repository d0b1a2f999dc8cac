"""Polynomial frequency models of the positive-sequence Pi parameters.

Over a sampling grid the exact Pi values are fitted by unweighted least
squares with

    R(w) = r2 w^2 + r1 w + r0
    X(w) = x2 w^2 + x1 w
    G(w) = g4 w^4 + g3 w^3 + g2 w^2 + g1 w + g0
    B(w) = b2 w^2 + b1 w

R, X are in ohm and G, B are the total shunt conductance/susceptance in S.
X and B carry no constant term so both vanish at DC.
"""

from __future__ import annotations

import csv
import json
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import FitError, FrequencyRangeError, LfacError, SamplingError
from .sequence_reduction import cable_pi

OMEGA_MIN = 0.001
OMEGA_MAX = 60 * 2 * math.pi
N_SAMPLES = 500

R_POWERS = (2, 1, 0)
X_POWERS = (2, 1)
G_POWERS = (4, 3, 2, 1, 0)
B_POWERS = (2, 1)
MAX_COEFFS = len(G_POWERS)


@dataclass(frozen=True)
class ReferenceData:
    """Exact Pi samples: ``omega`` (rad/s), ``z_series`` (ohm), ``y_shunt`` (S)."""

    omega: np.ndarray
    z_series: np.ndarray
    y_shunt: np.ndarray

    def __len__(self):
        return len(self.omega)

    def __iter__(self):
        return iter(zip(self.omega, self.z_series, self.y_shunt))


def frequency_grid(omega_min=OMEGA_MIN, omega_max=OMEGA_MAX, n=N_SAMPLES):
    if n < MAX_COEFFS:
        raise FitError(f"n = {n} samples cannot determine a {MAX_COEFFS}-coefficient fit")
    if not 0 < omega_min < omega_max:
        raise ValueError(f"need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]")
    return np.linspace(omega_min, omega_max, n)


def sample_reference(design, omega_min=OMEGA_MIN, omega_max=OMEGA_MAX, n=N_SAMPLES, *, workers=1, **pi_options):
    """Evaluate the exact Pi model on ``n`` evenly spaced frequencies.

    ``pi_options`` are forwarded to :func:`lfac.sequence_reduction.cable_pi`.
    """
    omegas = frequency_grid(omega_min, omega_max, n)

    def one(w):
        try:
            pi = cable_pi(design, float(w), **pi_options)
        except LfacError as exc:
            raise SamplingError(str(exc), float(w)) from exc
        return pi.z_series, pi.y_shunt

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(one, omegas))
    else:
        values = [one(w) for w in omegas]
    z = np.array([v[0] for v in values], dtype=complex)
    y = np.array([v[1] for v in values], dtype=complex)
    return ReferenceData(omegas, z, y)


def least_squares(omega, values, powers):
    """Coefficients (ordered like ``powers``) minimising the squared residual.

    Columns are scaled to unit max-norm and the system is solved by QR.
    """
    omega = np.asarray(omega, dtype=float)
    A = np.column_stack([omega**p for p in powers])
    scale = np.abs(A).max(axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    q, r = np.linalg.qr(As)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * diag.max():
        raise FitError(f"rank-deficient design matrix for powers {powers} (degenerate grid)")
    coef = solve_triangular(r, q.T @ np.asarray(values, dtype=float))
    return coef / scale


def _poly(coeffs, powers, w, deriv=0):
    out = 0.0
    for c, p in zip(coeffs, powers):
        if p < deriv:
            continue
        k = math.perm(p, deriv)
        out = out + c * k * w ** (p - deriv)
    return out


@dataclass(frozen=True)
class PolyCableModel:
    """Fitted coefficients of a cable's frequency-dependent Pi parameters.

    Units are SI: R, X in ohm, G, B in siemens, omega in rad/s.
    """

    r2: float
    r1: float
    r0: float
    x2: float
    x1: float
    b2: float
    b1: float
    g4: float
    g3: float
    g2: float
    g1: float
    g0: float
    omega_min: float = OMEGA_MIN
    omega_max: float = OMEGA_MAX
    n_samples: int = N_SAMPLES
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def r_coeffs(self):
        return (self.r2, self.r1, self.r0)

    @property
    def x_coeffs(self):
        return (self.x2, self.x1)

    @property
    def g_coeffs(self):
        return (self.g4, self.g3, self.g2, self.g1, self.g0)

    @property
    def b_coeffs(self):
        return (self.b2, self.b1)

    def resistance(self, w, deriv=0):
        return _poly(self.r_coeffs, R_POWERS, w, deriv)

    def reactance(self, w, deriv=0):
        return _poly(self.x_coeffs, X_POWERS, w, deriv)

    def conductance(self, w, deriv=0):
        return _poly(self.g_coeffs, G_POWERS, w, deriv)

    def susceptance(self, w, deriv=0):
        return _poly(self.b_coeffs, B_POWERS, w, deriv)

    def z_series(self, w):
        return self.resistance(w) + 1j * self.reactance(w)

    def y_shunt(self, w):
        return self.conductance(w) + 1j * self.susceptance(w)

    def check_range(self, w, rel_tol=1e-9):
        """Raise if ``w`` is outside the fitted range; DC (w = 0) is accepted."""
        if w == 0:
            return
        lo = self.omega_min * (1 - rel_tol)
        hi = self.omega_max * (1 + rel_tol)
        if not lo <= w <= hi:
            raise FrequencyRangeError(f"omega {w} outside fitted range [{self.omega_min}, {self.omega_max}] rad/s")

    def scaled(self, z_base):
        """Copy with impedances divided and admittances multiplied by ``z_base``."""
        d = asdict(self)
        for k in ("r2", "r1", "r0", "x2", "x1"):
            d[k] = d[k] / z_base
        for k in ("b2", "b1", "g4", "g3", "g2", "g1", "g0"):
            d[k] = d[k] * z_base
        return PolyCableModel(**d)

    def to_dict(self):
        d = asdict(self)
        if not d["meta"]:
            del d["meta"]
        return d

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def fit(samples, *, meta=None):
    """Fit all four parameter curves to reference samples."""
    w = np.asarray(samples.omega, dtype=float)
    if len(w) < MAX_COEFFS:
        raise FitError(f"{len(w)} samples cannot determine a {MAX_COEFFS}-coefficient fit")
    z = np.asarray(samples.z_series)
    y = np.asarray(samples.y_shunt)
    r = least_squares(w, z.real, R_POWERS)
    x = least_squares(w, z.imag, X_POWERS)
    g = least_squares(w, y.real, G_POWERS)
    b = least_squares(w, y.imag, B_POWERS)
    coeffs = [float(c) for c in (*r, *x, *b, *g)]
    return PolyCableModel(
        *coeffs,
        omega_min=float(w.min()),
        omega_max=float(w.max()),
        n_samples=len(w),
        meta=dict(meta or {}),
    )


def fit_design(design, omega_min=OMEGA_MIN, omega_max=OMEGA_MAX, n=N_SAMPLES, *, workers=1, **pi_options):
    """Sample and fit ``design``; returns ``(model, samples)``."""
    samples = sample_reference(design, omega_min, omega_max, n, workers=workers, **pi_options)
    meta = {"design": design.name, "length_m": design.length, "temperature_c": design.operating_temp}
    return fit(samples, meta=meta), samples


@dataclass(frozen=True)
class FitErrorRow:
    parameter: str
    unit: str
    largest_error: float
    largest_relative_pct: float
    frequency_hz: float
    rms_relative_pct: float


@dataclass(frozen=True)
class FitReport:
    rows: tuple

    def __getitem__(self, name):
        for row in self.rows:
            if row.parameter == name:
                return row
        raise KeyError(name)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["parameter", "unit", "largest_error", "largest_relative_error_pct", "frequency_of_largest_error_hz", "rms_error_pct"]
        )
        for r in self.rows:
            writer.writerow(
                [r.parameter, r.unit, f"{r.largest_error:.6g}", f"{r.largest_relative_pct:.4g}", f"{r.frequency_hz:.1f}", f"{r.rms_relative_pct:.4g}"]
            )
        return buf.getvalue()


def fit_report(model, samples):
    """Approximate-minus-detailed error statistics for R, X, G and B.

    Relative errors are percentages of the largest magnitude the detailed
    parameter reaches on the grid.
    """
    w = np.asarray(samples.omega, dtype=float)
    model.check_range(float(w.min()))
    model.check_range(float(w.max()))
    z = np.asarray(samples.z_series)
    y = np.asarray(samples.y_shunt)
    curves = (
        ("R", "ohm", model.resistance(w), z.real),
        ("X", "ohm", model.reactance(w), z.imag),
        ("G", "S", model.conductance(w), y.real),
        ("B", "S", model.susceptance(w), y.imag),
    )
    rows = []
    for name, unit, approx, exact in curves:
        err = approx - exact
        k = int(np.argmax(np.abs(err)))
        peak = np.abs(exact).max()
        if peak == 0:  # relative errors are undefined for an all-zero curve
            peak = 1.0 if not np.any(err) else math.inf
        rows.append(
            FitErrorRow(
                parameter=name,
                unit=unit,
                largest_error=float(err[k]),
                largest_relative_pct=float(100 * err[k] / peak),
                frequency_hz=float(w[k] / (2 * math.pi)),
                rms_relative_pct=float(100 * np.sqrt(np.mean(err**2)) / peak),
            )
        )
    return FitReport(tuple(rows))


def save_model(model, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path):
    with open(path) as fh:
        return PolyCableModel.from_dict(json.load(fh))
