import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scarsim import cr_engine as cr
from scarsim.cr_engine import CRCoeffs, DeviceParams
from scarsim.scar_models import Variant, scar_state, simplified_annihilator, verify_annihilation
from scarsim.spin_ops import mhz, pauli_string, to_mhz

R_PAPER = -330 / 5114


# -- epsilon and charge matrix elements ---------------------------------------


def test_epsilon_harmonic_limit():
    assert cr.epsilon_of(0.0) == 0.0


def test_epsilon_paper_value():
    eps = cr.epsilon_of(R_PAPER)
    assert eps == pytest.approx(0.217, abs=5e-4)
    assert abs(cr.eps_residual(R_PAPER, eps)) < 1e-12


def test_epsilon_positive_anharmonicity_rejected():
    with pytest.raises(ValueError, match="anharmonicity sign"):
        cr.epsilon_of(330 / 5114)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(-0.2, -1e-4))
def test_epsilon_root_contract(r):
    eps = cr.epsilon_of(r)
    assert eps > 0
    assert abs(cr.eps_residual(r, eps)) < 1e-12


def test_nu_leading_terms():
    nu = cr.nu_of(0.0)
    assert (nu.nu01, nu.nu12, nu.nu23, nu.nu03) == pytest.approx((1, math.sqrt(2), math.sqrt(3), 0))


def test_nu01_paper_value():
    assert cr.nu_of(0.217).nu01 == pytest.approx(1 - 0.0271 - 0.00202, abs=2e-4)
    assert cr.nu_of(0.217).nu01 == pytest.approx(0.9708, abs=2e-4)


@settings(max_examples=50, deadline=None)
@given(eps=st.floats(1e-6, 1.0))
def test_nu03_negative(eps):
    assert cr.nu_of(eps).nu03 < 0


# -- couplings ----------------------------------------------------------------


def test_first_row_against_table():
    params = DeviceParams(num_sites=3)
    c = cr.cr_coeffs(1, 2, params, Variant.XPOLARIZED).in_mhz()
    assert c["c_z"] == pytest.approx(-14.4, rel=0.02)
    assert c["c_x"] == pytest.approx(1.25, rel=0.02)
    assert c["c_zz"] == pytest.approx(0.115, rel=0.03)


def test_zero_coupling_leaves_only_cz():
    params = DeviceParams(J_mhz=0.0, num_sites=3)
    c = cr.cr_coeffs(1, 2, params, Variant.XPOLARIZED)
    assert c.c_x == c.c_zx == c.c_zz == 0.0
    assert c.c_z != 0.0


@settings(max_examples=25, deadline=None)
@given(k=st.floats(0.2, 2.5))
def test_scaling_laws(k):
    base = DeviceParams(num_sites=3)
    c0 = cr.cr_coeffs(1, 2, base, "x-polarized")
    cj = cr.cr_coeffs(1, 2, DeviceParams(J_mhz=3.8 * k, num_sites=3), "x-polarized")
    co = cr.cr_coeffs(1, 2, DeviceParams(Omega_mhz=50 * k, num_sites=3), "x-polarized")
    assert cj.c_zz == pytest.approx(k**2 * c0.c_zz, rel=1e-12)
    assert cj.c_x == pytest.approx(k * c0.c_x, rel=1e-12)
    assert cj.c_zx == pytest.approx(k * c0.c_zx, rel=1e-12)
    assert cj.c_z == pytest.approx(c0.c_z, rel=1e-12)
    assert co.c_z == pytest.approx(k**2 * c0.c_z, rel=1e-12)
    assert co.c_x == pytest.approx(k * c0.c_x, rel=1e-12)


def test_resonance_guard():
    params = DeviceParams(num_sites=3)
    with pytest.raises(ValueError, match="near-resonant"):
        cr.cr_coeffs_from_freqs(5.0, 5.0 - 0.330, params)


def test_device_validation():
    with pytest.raises(ValueError, match="L mod 3"):
        DeviceParams(num_sites=10)
    with pytest.raises(ValueError, match="detuned"):
        DeviceParams(freqs_ghz=(5.0, 5.02, 5.1))


def test_table_rejects_other_device():
    params = DeviceParams(J_mhz=2.0, num_sites=3)
    with pytest.raises(ValueError, match="eq6"):
        cr.block_coeffs(Variant.XPOLARIZED, 1, params, "table")
    cr.block_coeffs(Variant.XPOLARIZED, 1, params, "eq6")


def test_driven_pairs():
    assert cr.driven_pair("x-polarized", 6, 6) == (6, 1)
    assert cr.driven_pair("cluster", 6, 6) == (1, 6)
    with pytest.raises(ValueError):
        cr.driven_pair("ghz", 1, 6)


def test_table_rows_by_chain_position():
    params = DeviceParams(num_sites=6)
    xp = [round(to_mhz(cr.block_coeffs("x-polarized", i, params).c_zx), 2) for i in (1, 2, 3)]
    cl = [round(to_mhz(cr.block_coeffs("cluster", i, params).c_zx), 2) for i in (1, 2, 3)]
    assert xp == [-8.47, 5.43, 5.44]
    # the cluster drive with the w1 control sits on block i = 2
    assert cl == [5.43, -8.47, 5.44]


# -- corrections --------------------------------------------------------------


def test_xpol_first_row_corrections():
    params = DeviceParams(num_sites=6)
    c = cr.block_coeffs("x-polarized", 1, params)
    corr = cr.corrections_for("x-polarized", 1, c, 6)
    assert to_mhz(corr.d_z[1]) == pytest.approx(22.87, abs=1e-9)
    assert corr.d_x == -c.c_x
    assert corr.x_site == 2


def test_cluster_first_row_corrections():
    params = DeviceParams(num_sites=6)
    c = cr.block_coeffs("cluster", 2, params)
    corr = cr.corrections_for("cluster", 2, c, 6)
    assert to_mhz(corr.d_z[1]) == pytest.approx(-8.47, abs=1e-9)
    assert to_mhz(corr.d_z[3]) == pytest.approx(14.4, abs=1e-9)


def test_zero_cx_means_no_x_drive():
    c = CRCoeffs(1, 2, mhz(-14.4), 0.0, mhz(-8.47), mhz(0.115))
    corr = cr.corrections_for("x-polarized", 1, c, 6)
    assert corr.d_x == 0.0 and corr.Omega_x == 0.0


# -- blocks -------------------------------------------------------------------


def _block(variant, i, L, **override):
    params = DeviceParams(num_sites=L)
    c = cr.block_coeffs(variant, i, params)
    if override:
        c = CRCoeffs(**{**c.__dict__, **override})
    return cr.build_block(variant, i, c, cr.corrections_for(variant, i, c, L), L), c


def test_xpol_block_reduces_to_annihilator():
    H, c = _block("x-polarized", 1, 6)
    expect = c.c_zx * simplified_annihilator("x-polarized", 1, 6).matrix + c.c_zz * pauli_string("ZZ")
    np.testing.assert_allclose(H.matrix, expect, atol=1e-14)


def test_cluster_block_reduces_to_annihilator():
    H, c = _block("cluster", 2, 6)
    expect = -c.c_zx * simplified_annihilator("cluster", 1, 6).matrix + c.c_zz * pauli_string("IZZ")
    np.testing.assert_allclose(H.matrix, expect, atol=1e-14)
    assert H.sites == (1, 2, 3)


def test_xpol_block_residual_ratio():
    H, _ = _block("x-polarized", 1, 6)
    plus2 = np.full(4, 0.5)
    ratio = np.linalg.norm(H.matrix @ plus2) / np.linalg.norm(H.matrix, 2)
    assert ratio <= 0.115 / 8.47 + 1e-12


@pytest.mark.parametrize("variant,i", [("x-polarized", 1), ("cluster", 2)])
def test_zero_czz_annihilates(variant, i):
    L = 6
    H, _ = _block(variant, i, L, c_zz=0.0)
    s = scar_state(variant, L)
    assert verify_annihilation([H], s) < 1e-12


@pytest.mark.parametrize("variant", ["x-polarized", "cluster"])
def test_blocks_hermitian(variant):
    for i in range(1, 7):
        for source in ("table", "eq6"):
            params = DeviceParams(num_sites=6)
            c = cr.block_coeffs(variant, i, params, source)
            H = cr.build_block(variant, i, c, cr.corrections_for(variant, i, c, 6), 6)
            assert np.max(np.abs(H.matrix - H.matrix.conj().T)) < 1e-12


# -- report -------------------------------------------------------------------


def test_report_verdicts():
    rows = cr.coefficient_report()
    assert len(rows) == 24
    for r in rows:
        if r.name == "c_zx":
            assert r.verdict == "flag" and r.rel_dev > 0.10
        else:
            assert r.verdict == "pass", r
    text = cr.format_report(rows)
    assert "flag" in text and "FAIL" not in text


@pytest.mark.parametrize("variant", ["x-polarized", "cluster"])
def test_block_residual_bounded_by_czz(variant):
    L = 6
    s = scar_state(variant, L)
    for i in range(1, L + 1):
        H, c = _block(variant, i, L)
        assert verify_annihilation([H], s) <= 2 * abs(c.c_zz) + 1e-15


@pytest.mark.parametrize("variant", ["x-polarized", "cluster"])
def test_coefficients_repeat_with_period_three(variant):
    params = DeviceParams(num_sites=12)
    for source in ("table", "eq6"):
        c = [cr.block_coeffs(variant, i, params, source) for i in range(1, 13)]
        for i in range(3, 12):
            assert (c[i].c_z, c[i].c_x, c[i].c_zx, c[i].c_zz) == (c[i - 3].c_z, c[i - 3].c_x, c[i - 3].c_zx, c[i - 3].c_zz)
