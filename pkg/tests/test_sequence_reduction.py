import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from lfac.cable_params import build_y_matrix, build_z_matrix, builtin_design
from lfac.errors import BranchCutError, ExtractionError, IllConditionedError
from lfac.sequence_reduction import (
    A_S1,
    A_S2,
    TerminalMatrix,
    cable_pi,
    eliminate_sheaths,
    positive_sequence_pi,
    sequence_two_port,
    terminal_solution,
    transpose_average,
)
from oracles import POSITIVE_SEQUENCE, bonded_solve, rk4_terminal_matrix

W60 = 2 * math.pi * 60
DESIGNS = ["cable_230kv", "cable_138kv"]


def _matrices(design, omega, averaged=True):
    Z, Y = build_z_matrix(design, omega), build_y_matrix(design, omega)
    return (transpose_average(Z), transpose_average(Y)) if averaged else (Z, Y)


def _rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max() / np.abs(np.asarray(b)).max()


# -- terminal solution -------------------------------------------------------------------


def test_zero_length_gives_identity(design_230):
    Z, Y = _matrices(design_230, W60, averaged=False)
    tm = terminal_solution(Z, Y, 0.0)
    np.testing.assert_array_equal(tm.matrix, np.eye(12))
    for i in range(1, 5):
        for j in range(1, 5):
            expected = np.eye(3) if i == j else np.zeros((3, 3))
            np.testing.assert_array_equal(tm.block(i, j), expected)


def test_matches_fine_grid_ode_integration(design_230):
    Z, Y = _matrices(design_230, W60, averaged=False)
    tm = terminal_solution(Z, Y, 135e3)
    ref = rk4_terminal_matrix(Z, Y, 135e3)
    rng = np.random.default_rng(7)
    for _ in range(5):
        u = rng.normal(size=12) + 1j * rng.normal(size=12)
        assert _rel(tm.matrix @ u, ref @ u) < 1e-6


def test_assembled_matrix_matches_matrix_function_definition(design_230):
    Z, Y = _matrices(design_230, W60, averaged=False)
    L = 135e3
    root = scipy.linalg.sqrtm(Z @ Y)
    B = scipy.linalg.coshm(L * root)
    C = scipy.linalg.sinhm(L * root)
    Zinv = np.linalg.inv(Z)
    expected = np.block([[B, C @ np.linalg.inv(root) @ Z], [Zinv @ root @ C, Zinv @ B @ Z]])
    assert _rel(terminal_solution(Z, Y, L).matrix, expected) < 1e-9


def test_short_line_taylor_error_is_second_order(design_138):
    w = 2 * math.pi * 50
    Z, Y = _matrices(design_138, w, averaged=False)
    A = np.block([[np.zeros((6, 6)), Z], [Y, np.zeros((6, 6))]])
    errs = []
    for L in (1000.0, 500.0):
        tm = terminal_solution(Z, Y, L)
        errs.append(np.abs(tm.matrix - (np.eye(12) + L * A)).max())
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)


def test_deviation_matches_matrix_minus_identity(design_230):
    Z, Y = _matrices(design_230, W60)
    tm = terminal_solution(Z, Y, 135e3)
    np.testing.assert_allclose(tm.deviation + np.eye(12), tm.matrix, rtol=0, atol=1e-12 * np.abs(tm.matrix).max())


def test_ill_conditioned_eigenbasis_reported():
    Z = np.eye(6, dtype=complex) + np.diag(np.ones(5), 1)  # Jordan block: not diagonalizable
    with pytest.raises(IllConditionedError) as err:
        terminal_solution(Z, np.eye(6, dtype=complex), 10.0)
    assert err.value.condition > 1e10


def test_negative_real_eigenvalue_is_a_distinct_failure():
    Z, Y = 1j * np.eye(6), 1j * np.eye(6)  # ZY = -I: lossless, on the branch cut
    with pytest.raises(BranchCutError):
        terminal_solution(Z, Y, 10.0)
    tm = terminal_solution(Z, Y, 10.0, on_branch_cut="principal")
    np.testing.assert_allclose(tm.block(1, 1), math.cos(10.0) * np.eye(3), atol=1e-14)


def test_negative_length_rejected(design_230):
    Z, Y = _matrices(design_230, W60)
    with pytest.raises(ValueError):
        terminal_solution(Z, Y, -1.0)


# -- sheath elimination ----------------------------------------------------------------------


def test_elimination_without_sheath_coupling_is_identity_map():
    rng = np.random.default_rng(3)
    M = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    M[0:3, 3:6] = 0  # alpha_12
    M[6:9, 3:6] = 0  # alpha_32
    M[3:6, 3:6] += 5 * np.eye(3)
    reduced = eliminate_sheaths(TerminalMatrix(W60, 1.0, M))
    expected = np.block([[M[0:3, 0:3], M[0:3, 6:9]], [M[6:9, 0:3], M[6:9, 6:9]]])
    np.testing.assert_array_equal(reduced, expected)


def test_singular_sheath_block_reported_with_condition():
    M = np.eye(12, dtype=complex)
    M[3:6, 3:6] = 0
    with pytest.raises(IllConditionedError) as err:
        eliminate_sheaths(TerminalMatrix(W60, 1.0, M))
    assert err.value.condition > 1e12


@pytest.mark.parametrize(
    "name, length, hz",
    [("cable_230kv", 135e3, 60.0), ("cable_138kv", 22e3, 16.7)],
)
@pytest.mark.parametrize("averaged", [True, False])
def test_elimination_matches_explicit_constrained_solve(name, length, hz, averaged):
    design = builtin_design(name)
    w = 2 * math.pi * hz
    tm = terminal_solution(*_matrices(design, w, averaged), length)
    reduced = eliminate_sheaths(tm)
    rng = np.random.default_rng(11)
    excitations = [(1.3e5 * POSITIVE_SEQUENCE, 800 * np.exp(-0.3j) * POSITIVE_SEQUENCE)]
    excitations += [
        (1e5 * (rng.normal(size=3) + 1j * rng.normal(size=3)), 1e3 * (rng.normal(size=3) + 1j * rng.normal(size=3)))
        for _ in range(3)
    ]
    for v, i in excitations:
        v_o, i_o = bonded_solve(tm.matrix, v, i)
        out = reduced @ np.concatenate([v, i])
        assert _rel(out[:3], v_o) < 1e-9
        assert _rel(out[3:], i_o) < 1e-9


def test_deviation_form_of_elimination(design_138):
    tm = terminal_solution(*_matrices(design_138, W60), 22e3)
    full = eliminate_sheaths(tm)
    dev = eliminate_sheaths(tm, deviation=True)
    np.testing.assert_allclose(dev + np.eye(6), full, rtol=0, atol=1e-12 * np.abs(full).max())


# -- Pi extraction -----------------------------------------------------------------------------


def test_lossless_decoupled_system_matches_long_line_formula():
    x, b, L = 4.0e-4, 3.0e-9, 250e3  # ohm/m, S/m
    z, y = 1j * x, 1j * b
    Z, Y = z * np.eye(6), y * np.eye(6)
    tm = terminal_solution(Z, Y, L, on_branch_cut="principal")
    pi = positive_sequence_pi(eliminate_sheaths(tm), 1.0)
    gl = np.sqrt(z * y) * L
    z_exact = z * L * np.sinh(gl) / gl
    y_exact = y * L * np.tanh(gl / 2) / (gl / 2)
    assert abs(pi.z_series - z_exact) <= 1e-9 * abs(z_exact)
    assert abs(pi.y_shunt - y_exact) <= 1e-9 * abs(y_exact)
    assert pi.y_shunt_half == pi.y_shunt / 2


@given(
    r=st.floats(1e-6, 1e-3),
    x=st.floats(1e-5, 1e-3),
    g=st.floats(0.0, 1e-9),
    b=st.floats(1e-10, 1e-7),
    L=st.floats(1e3, 3e5),
)
@settings(max_examples=40, deadline=None)
def test_lossy_decoupled_system_matches_long_line_formula(r, x, g, b, L):
    z, y = complex(r, x), complex(g, b)
    tm = terminal_solution(z * np.eye(6), y * np.eye(6), L)
    pi = positive_sequence_pi(eliminate_sheaths(tm), 1.0, deviation=eliminate_sheaths(tm, deviation=True))
    gl = np.sqrt(z * y) * L
    z_exact = z * L * np.sinh(gl) / gl
    y_exact = y * L * np.tanh(gl / 2) / (gl / 2)
    assert abs(pi.z_series - z_exact) <= 1e-9 * abs(z_exact)
    assert abs(pi.y_shunt - y_exact) <= 1e-9 * abs(y_exact)


@pytest.mark.parametrize("name, expected", [("cable_230kv", 0.0161), ("cable_138kv", 0.0323)])
def test_datasheet_resistance_at_90c(name, expected):
    design = builtin_design(name).with_temperature(90.0)
    pi = cable_pi(design, 2 * math.pi * 50, 1000.0)
    assert pi.z_series.real == pytest.approx(expected, rel=0.05)


def test_zero_length_rejected(design_230):
    with pytest.raises(ExtractionError):
        cable_pi(design_230, W60, 0.0)


def test_electrically_short_two_port_rejected():
    with pytest.raises(ExtractionError, match="too short"):
        positive_sequence_pi(np.eye(6, dtype=complex), W60)


def test_unknown_transposition_mode(design_230):
    with pytest.raises(ValueError):
        cable_pi(design_230, W60, transposition="sideways")


def _grid():
    return np.linspace(0.001, W60, 41)


@pytest.mark.parametrize("name", DESIGNS)
def test_determinant_is_one(name):
    design = builtin_design(name)
    for w in _grid():
        a, b, c, d = cable_pi(design, w).abcd
        assert abs(a * d - b * c - 1) < 1e-8


@pytest.mark.parametrize("name", DESIGNS)
def test_pi_circuit_reproduces_current_equation(name):
    """I_o computed through the Pi equals c V_d + d I_d from the reduced two-port."""
    design = builtin_design(name)
    rng = np.random.default_rng(5)
    for w in _grid():
        pi = cable_pi(design, w)
        a, b, c, d = pi.abcd
        v_d = 1e5 * complex(*rng.normal(size=2))
        i_d = 1e3 * complex(*rng.normal(size=2))
        i_series = i_d + pi.y_shunt_half * v_d
        v_o = v_d + pi.z_series * i_series
        i_o = i_series + pi.y_shunt_half * v_o
        ref = c * v_d + d * i_d
        assert abs(i_o - ref) <= 1e-6 * abs(ref)


def test_pi_voltage_equation_differs_under_single_point_bonding(design_230):
    # Bonding only the origin end makes the two-port asymmetric (a != d); a
    # symmetric Pi can match only one of its rows.
    a, b, c, d = cable_pi(design_230, W60).abcd
    assert abs(a - d) > 0.1 * abs(d)


def test_before_and_after_transposition_agree_at_low_frequency(design_138):
    w = 2 * math.pi * 0.5
    p1 = cable_pi(design_138, w, transposition="before")
    p2 = cable_pi(design_138, w, transposition="after")
    assert abs(p1.z_series - p2.z_series) < 1e-3 * abs(p1.z_series)


@pytest.mark.parametrize("name", DESIGNS)
def test_short_cable_limit_by_richardson(name):
    design = builtin_design(name)
    w = 2 * math.pi * 50
    Z, Y = _matrices(design, w)
    lengths = [1.0, 10.0, 100.0]
    pis = [cable_pi(design, w, L) for L in lengths]
    zs = [p.z_series / L for p, L in zip(pis, lengths)]
    ys = [p.y_shunt / (2 * L) for p, L in zip(pis, lengths)]

    def extrapolate(v):  # error ~ L^2: two Richardson levels with ratio 10
        r1 = [(100 * v[0] - v[1]) / 99, (100 * v[1] - v[2]) / 99]
        return r1[0] + (r1[0] - r1[1]) / (1e4 - 1)

    def pos(M):
        return complex(A_S1 @ M @ A_S2)

    z_limit = pos(Z[0:3, 0:3] + Z[3:6, 0:3])
    y_limit = pos(Y[0:3, 0:3]) / 2
    assert abs(extrapolate(zs) - z_limit) < 1e-7 * abs(z_limit)
    assert abs(extrapolate(ys) - y_limit) < 1e-7 * abs(y_limit)


def _pi_curves(design, grid):
    pis = [cable_pi(design, w) for w in grid]
    z = np.array([p.z_series for p in pis])
    y = np.array([p.y_shunt for p in pis])
    return {"R": z.real, "X": z.imag, "G": y.real, "B": y.imag}


def _max_jump(v):
    # measured against the curve's largest magnitude: X and B start at zero,
    # so a pointwise ratio is meaningless at the first samples
    return np.max(np.abs(np.diff(v))) / np.abs(v).max()


@pytest.mark.parametrize("name", DESIGNS)
def test_no_jumps_across_sample_grid(name):
    curves = _pi_curves(builtin_design(name), np.linspace(0.001, W60, 500))
    for key in ("R", "X", "B"):
        assert _max_jump(curves[key]) < 0.01, key
    # G climbs steeply near 60 Hz on the long cable (about 1.3 % per step)
    assert _max_jump(curves["G"]) < 0.02


@pytest.mark.parametrize("name", DESIGNS)
def test_jumps_shrink_with_grid_spacing(name):
    """A branch-cut discontinuity would keep its jump size under refinement."""
    design = builtin_design(name)
    lo, hi = 0.95 * W60, W60
    coarse = _pi_curves(design, np.linspace(lo, hi, 21))
    fine = _pi_curves(design, np.linspace(lo, hi, 41))
    for key in coarse:
        ratio = _max_jump(coarse[key]) / _max_jump(fine[key])
        assert ratio == pytest.approx(2.0, rel=0.1), key


@pytest.mark.parametrize("name", DESIGNS)
def test_pi_sign_invariants(name):
    design = builtin_design(name)
    for w in [0.0, *_grid()]:
        pi = cable_pi(design, w)
        assert pi.z_series.real > 0
        assert pi.y_shunt_half.imag >= 0


def test_sequence_two_port_of_balanced_blocks():
    zs, zm = 3 + 1j, 0.5 + 0.2j
    blk = zm * np.ones((3, 3)) + (zs - zm) * np.eye(3)
    M = np.block([[blk, 2 * blk], [3 * blk, 4 * blk]])
    a, b, c, d = sequence_two_port(M)
    assert a == pytest.approx(zs - zm)
    assert d == pytest.approx(4 * (zs - zm))
