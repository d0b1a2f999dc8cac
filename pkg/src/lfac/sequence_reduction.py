"""Exact terminal relations of a six-conductor cable and its positive-sequence Pi model.

The distributed-parameter solution relates origin quantities to destination
quantities,

    [V_o; I_o] = [[B, C (ZY)^-1/2 Z], [Z^-1 (ZY)^1/2 C, Z^-1 B Z]] [V_d; I_d]

with B = cosh(l sqrt(ZY)) and C = sinh(l sqrt(ZY)).  Partitioned into 3x3
core/sheath blocks this is the 12x12 ``TerminalMatrix``.  Single-point bonding
at the origin (origin sheath voltages and destination sheath currents are
zero) removes the sheath variables, and the Fortescue transform picks out the
positive-sequence two-port [[a, b], [c, d]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cable_params import build_y_matrix, build_z_matrix
from .errors import BranchCutError, ExtractionError, IllConditionedError

ALPHA = np.exp(2j * np.pi / 3)
# positive-sequence row of A^-1 and column of A
A_S1 = np.array([1.0, ALPHA, ALPHA.conjugate()]) / 3.0
A_S2 = np.array([1.0, ALPHA.conjugate(), ALPHA])

EIGVEC_COND_LIMIT = 1e10
ALPHA22_COND_LIMIT = 1e12
MIN_C = 1e-14

_CORE = slice(0, 3)
_SHEATH = slice(3, 6)


def fortescue_matrix():
    """A such that V_abc = A V_012, with a = exp(j 2 pi / 3)."""
    a = ALPHA
    return np.array([[1, 1, 1], [1, a * a, a], [1, a, a * a]], dtype=complex)


@dataclass(frozen=True)
class TerminalMatrix:
    """12x12 terminal relation partitioned as alpha[i][j], i, j in 0..3.

    Row/column groups are (core voltage, sheath voltage, core current, sheath
    current).
    """

    omega: float
    length: float
    matrix: np.ndarray
    deviation: np.ndarray | None = None  # matrix - I, free of cancellation for short cables

    def block(self, i, j):
        """The (i, j) 3x3 partition using 1-based indices, e.g. block(2, 2)."""
        return self.matrix[3 * (i - 1) : 3 * i, 3 * (j - 1) : 3 * j]

    def deviation_block(self, i, j):
        dev = self.matrix - np.eye(12) if self.deviation is None else self.deviation
        return dev[3 * (i - 1) : 3 * i, 3 * (j - 1) : 3 * j]


@dataclass(frozen=True)
class PiModel:
    omega: float
    z_series: complex  # ohm
    y_shunt: complex  # S, total; each terminal carries y_shunt / 2
    abcd: tuple

    @property
    def y_shunt_half(self):
        return self.y_shunt / 2


def _eigen(Z, Y, on_branch_cut, cond_limit):
    lam, vec = np.linalg.eig(Z @ Y)
    cond = np.linalg.cond(vec)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(f"ZY eigenbasis condition number {cond:.3g} exceeds {cond_limit:.3g}", cond)
    scale = max(np.abs(lam).max(), np.finfo(float).tiny)
    on_cut = (lam.real < 0) & (np.abs(lam.imag) <= 1e-14 * scale)
    if on_cut.any() and on_branch_cut == "raise":
        raise BranchCutError(f"ZY eigenvalue(s) {lam[on_cut]} on the negative real axis")
    return lam, vec


def terminal_solution(Z, Y, length, *, on_branch_cut="raise", cond_limit=EIGVEC_COND_LIMIT, omega=float("nan")):
    """Exact 12x12 terminal relation for a cable of ``length`` metres.

    Matrix functions are evaluated through the eigendecomposition of ZY with
    the principal square root of each eigenvalue.  Only even functions of the
    root appear (cosh, sinh(s)/s, s sinh(s)), so the result does not depend on
    the branch; ``on_branch_cut="principal"`` accepts eigenvalues on the
    negative real axis instead of raising :class:`BranchCutError`.
    """
    Z = np.asarray(Z, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if length < 0:
        raise ValueError("length must be non-negative")
    lam, vec = _eigen(Z, Y, on_branch_cut, cond_limit)
    vinv = np.linalg.inv(vec)
    s = np.sqrt(lam)
    ls = length * s
    cosh_m1 = 2 * np.sinh(ls / 2) ** 2
    small = np.abs(ls) < 1e-8
    sinh_over_s = np.where(small, length * (1 + ls**2 / 6), np.sinh(ls) / np.where(small, 1, s))
    s_sinh = s * np.sinh(ls)

    def fn(values):
        return (vec * values) @ vinv

    B_m1 = fn(cosh_m1)
    top_right = fn(sinh_over_s) @ Z
    bottom_left = np.linalg.solve(Z, fn(s_sinh))
    bottom_right_m1 = np.linalg.solve(Z, B_m1 @ Z)
    dev = np.block([[B_m1, top_right], [bottom_left, bottom_right_m1]])
    return TerminalMatrix(omega=omega, length=length, matrix=dev + np.eye(12), deviation=dev)


def eliminate_sheaths(tm, cond_limit=ALPHA22_COND_LIMIT, *, deviation=False):
    """Remove sheath voltages/currents for single-point bonding at the origin.

    Returns the 6x6 matrix mapping [V_d_abc; I_d_abc] to [V_o_abc; I_o_abc].
    With ``deviation=True`` the result minus the identity is returned instead,
    computed without forming I + (small) so short cables keep full precision.
    """
    a = tm.block
    a22 = a(2, 2)
    cond = np.linalg.cond(a22)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(f"sheath block alpha_22 is singular (condition {cond:.3g})", cond)
    left = a(1, 2) @ np.linalg.inv(a22)
    lower = a(3, 2) @ np.linalg.inv(a22)
    diag = tm.deviation_block if deviation else a
    return np.block(
        [
            [diag(1, 1) - left @ a(2, 1), a(1, 3) - left @ a(2, 3)],
            [a(3, 1) - lower @ a(2, 1), diag(3, 3) - lower @ a(2, 3)],
        ]
    )


def _cyclic_average(block):
    P = np.roll(np.eye(3), 1, axis=0)
    out = np.zeros_like(block)
    for k in range(3):
        Pk = np.linalg.matrix_power(P, k)
        out += Pk @ block @ Pk.T
    return out / 3


def transpose_average(M):
    """Average a matrix made of 3x3 blocks over the three cyclic phase rotations."""
    n = M.shape[0] // 3
    out = np.empty_like(M)
    for i in range(n):
        for j in range(n):
            out[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = _cyclic_average(M[3 * i : 3 * i + 3, 3 * j : 3 * j + 3])
    return out


def sequence_two_port(reduced):
    """Positive-sequence (a, b, c, d) of a reduced 6x6 phase-domain matrix."""
    return tuple(complex(A_S1 @ reduced[r, c] @ A_S2) for r in (_CORE, _SHEATH) for c in (_CORE, _SHEATH))


def positive_sequence_pi(reduced, omega, *, transposition="after", deviation=None):
    """Series impedance and total shunt admittance of the positive-sequence Pi.

    The Pi reproduces the current equation I_o = c V_d + d I_d exactly:

        Z_ser = (d - 1)(d + 1) / c,   Y_sh = 2 c / (d + 1)

    ``Y_sh`` is the total shunt admittance, split equally between terminals.
    ``deviation`` optionally supplies ``reduced - I`` (see
    :func:`eliminate_sheaths`) so that d - 1 is free of cancellation.
    """
    reduced = np.asarray(reduced, dtype=complex)
    if transposition == "after":
        reduced = transpose_average(reduced)
    a, b, c, d = sequence_two_port(reduced)
    if deviation is None:
        d_m1 = d - 1
    else:
        dev = np.asarray(deviation, dtype=complex)
        if transposition == "after":
            dev = transpose_average(dev)
        d_m1 = complex(A_S1 @ dev[_SHEATH, _SHEATH] @ A_S2)
    if abs(c) < MIN_C:
        raise ExtractionError(f"|c| = {abs(c):.3g} S: electrically too short for Pi extraction")
    det = a * d - b * c
    if abs(det - 1) > 1e-4:
        raise ExtractionError(f"positive-sequence two-port is not reciprocal (ad - bc = {det:.9g})")
    z_ser = d_m1 * (d_m1 + 2) / c
    y_sh = 2 * c / (d_m1 + 2)
    if omega == 0:  # every dc quantity is real; drop round-off residue
        z_ser, y_sh = complex(z_ser.real), complex(y_sh.real)
    return PiModel(omega=omega, z_series=z_ser, y_shunt=y_sh, abcd=(a, b, c, d))


def cable_pi(design, omega, length=None, *, transposition="before"):
    """Exact positive-sequence Pi model of ``design`` at one frequency.

    ``transposition`` selects where a balanced, uniformly transposed layout is
    imposed.  ``"before"`` (default) averages Z and Y over the cyclic phase
    rotations, which decouples the sequences so the positive-sequence two-port
    is reciprocal.  ``"after"`` averages the sheath-reduced blocks instead;
    for this extraction that leaves a, b, c, d unchanged, i.e. it behaves like
    ``"none"`` on the untransposed flat layout.
    """
    if transposition not in ("after", "before", "none"):
        raise ValueError(f"unknown transposition mode {transposition!r}")
    length = design.length if length is None else length
    if length <= 0:
        raise ExtractionError("zero-length cable has no Pi model")
    Z = build_z_matrix(design, omega)
    Y = build_y_matrix(design, omega)
    if transposition == "before":
        Z, Y = transpose_average(Z), transpose_average(Y)
    tm = terminal_solution(Z, Y, length, omega=omega)
    reduced = eliminate_sheaths(tm)
    dev = eliminate_sheaths(tm, deviation=True)
    mode = "after" if transposition == "after" else "none"
    return positive_sequence_pi(reduced, omega, transposition=mode, deviation=dev)
