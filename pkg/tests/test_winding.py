import json
import math

import numpy as np
import pytest

import shiftlab.expressions as ex
import shiftlab.winding as wn

Z = ex.var()


def test_winding_monomials():
    for d in range(1, 7):
        res = wn.winding_number(Z**d, 0j, 1.3)
        assert res.value == d
        assert res.residual < 1e-9


def test_winding_zero_free():
    assert wn.winding_number(ex.Exp(Z), 0j, 2.0).value == 0
    f = Z**2 - ex.const(4.0)
    assert wn.winding_number(f, 0j, 3.0).value == 2
    assert wn.winding_number(f, 0j, 1.0).value == 0


def test_winding_about_shifted_value():
    # z^2 = 1 has both roots inside radius 1.5, none inside 0.5
    assert wn.winding_number(Z**2, 0j, 1.5, about=1.0 + 0j).value == 2
    assert wn.winding_number(Z**2, 0j, 0.5, about=1.0 + 0j).value == 0


def test_winding_additivity_on_products():
    f = Z**2 - ex.const(4.0)
    g = Z**3
    prod = f * g
    r = 3.0
    total = wn.winding_number(prod, 0j, r).value
    assert total == wn.winding_number(f, 0j, r).value + wn.winding_number(g, 0j, r).value
    assert total == 5


def test_zero_count_examples():
    # zeros of sin(2 pi z) sit at half-integers; only 0 is inside
    assert wn.zero_count(ex.Sine(2.0 * math.pi * Z), 0j, 0j, 0.4) == 1
    assert wn.zero_count(Z**2, 1.0 + 0j, 0j, 1.5) == 2
    assert wn.zero_count(Z**2, 9.0 + 0j, 0j, 1.5) == 0


def test_zero_count_random_polynomials():
    rng = np.random.default_rng(31)
    for _ in range(20):
        deg = int(rng.integers(1, 5))
        roots = rng.uniform(-2, 2, deg) + 1j * rng.uniform(-2, 2, deg)
        radius = 1.0
        # keep every root away from the contour so the count is stable
        while np.abs(np.abs(roots) - radius).min() < 0.15:
            roots = rng.uniform(-2, 2, deg) + 1j * rng.uniform(-2, 2, deg)
        f = ex.const(1.0)
        for root in roots:
            f = f * (Z - ex.const(complex(root)))
        inside = int((np.abs(roots) < radius).sum())
        assert wn.zero_count(f, 0j, 0j, radius) == inside


def test_inconclusive_contours():
    # a zero sitting exactly on the sampled circle
    with pytest.raises(wn.InconclusiveContour):
        wn.winding_number(Z - ex.const(1.0), 0j, 1.0)
    # evaluation overflow along the contour
    with pytest.raises(wn.InconclusiveContour):
        wn.winding_number(ex.Exp(ex.Exp(Z)), 0j, 8.0)
    with pytest.raises(ValueError):
        wn.winding_number(Z, 0j, -1.0)


def test_horseshoe_certificate_valid():
    cert = wn.horseshoe_certificate(4.0 * Z**2, 0.5 + 0j, 1.0)
    assert cert.conclusive and cert.valid
    assert cert.degree == 2
    assert abs(cert.min_modulus - 4.0) < 1e-9
    assert cert.threshold == 1.5
    assert cert.entropy_lower == math.log(2)


def test_horseshoe_certificate_invalid():
    cert = wn.horseshoe_certificate(Z, 1.0 + 0j, 1.0)
    assert cert.conclusive and not cert.valid
    assert cert.degree == 1
    assert cert.threshold == 2.0
    assert abs(cert.min_modulus - 1.0) < 1e-9
    assert cert.entropy_lower is None


def test_horseshoe_certificate_cubic():
    cert = wn.horseshoe_certificate(10.0 * Z**3, 0.5 + 0j, 1.0)
    assert cert.valid and cert.degree == 3
    assert cert.entropy_lower == math.log(3)


def test_horseshoe_certificate_inconclusive():
    cert = wn.horseshoe_certificate(Z - ex.const(1.0), 0.5 + 0j, 1.0)
    assert not cert.conclusive and not cert.valid
    assert cert.degree is None and cert.entropy_lower is None


def test_biholo_preimage_cases():
    five = 5.0 * Z
    assert wn.biholo_preimage_test(five, 0j, 1.0, 0j, 1.0) == wn.YES
    # perturbing by a small constant keeps every preimage in the source
    assert wn.biholo_preimage_test(five + ex.const(0.3), 0j, 1.0, 0j, 1.0) == wn.YES
    # square root branch near 1 is single valued
    assert wn.biholo_preimage_test(Z**2, 1.0 + 0j, 0.2, 1.0 + 0j, 0.3) == wn.YES
    # around the critical point both square roots land in the source
    assert wn.biholo_preimage_test(Z**2, 0j, 0.5, 0.01 + 0j, 0.1) == wn.NO
    with pytest.raises(ValueError):
        wn.biholo_preimage_test(Z, 0j, -1.0, 0j, 1.0)


def test_transition_table_identity_map_is_empty():
    table = wn.build_transition_table(
        Z, 0.5 + 0j, [0j, 2.0 + 0j, 4.0 + 0j], 0.2, 0.45, n_r=5, n_theta=7
    )
    assert table.k == 3
    assert wn.transition_min_cardinality(table) == 0
    assert all(cell == () for row in table.allowed for cell in row)


SIN_TABLE_ARGS = (8.0 * ex.Sine(2.0 * math.pi * Z), 0.5 + 0j, [0j, 1.0 + 0j, 2.0 + 0j, 3.0 + 0j], 0.2, 0.45)


def test_transition_table_periodic_sine_is_full():
    table = wn.build_transition_table(*SIN_TABLE_ARGS, n_r=7, n_theta=9)
    assert table.k == 4
    # 1-periodicity makes every source disk cover every shifted target
    assert wn.transition_min_cardinality(table) == 4
    assert all(len(cell) == 4 for row in table.allowed for cell in row)
    assert wn.dominated_cells(table) == ()


def test_transition_table_threads_agree():
    t1 = wn.build_transition_table(*SIN_TABLE_ARGS, n_r=5, n_theta=7, threads=1)
    t2 = wn.build_transition_table(*SIN_TABLE_ARGS, n_r=5, n_theta=7, threads=2)
    assert t1 == t2


def test_transition_table_geometry_errors():
    with pytest.raises(ValueError):
        wn.build_transition_table(Z, 0.5 + 0j, [0j, 1.0 + 0j], 0.5, 0.4)
    with pytest.raises(ValueError):
        wn.build_transition_table(Z, 3.0 + 0j, [0j, 2.0 + 0j], 0.2, 0.45)
    with pytest.raises(ValueError):
        wn.build_transition_table(Z, 0.5 + 0j, [0j, 0.5 + 0j], 0.2, 0.45)


def test_synthetic_table_cardinality_and_domination():
    table = wn.TransitionTable(
        centers=(0j, 1.0 + 0j, 2.0 + 0j, 3.0 + 0j),
        small_radius=0.2,
        big_radius=0.45,
        a=0.5 + 0j,
        allowed=tuple(
            tuple(tuple(range(2)) for _ in range(4)) for _ in range(4)
        ),
        inconclusive=tuple(
            tuple((2, 3) if (i, l) == (1, 2) else () for l in range(4))
            for i in range(4)
        ),
    )
    assert wn.transition_min_cardinality(table) == 2
    # cell (1, 2) has as many unsettled entries as settled, not more
    assert wn.dominated_cells(table) == ()
    worse = wn.TransitionTable(
        centers=table.centers,
        small_radius=0.2,
        big_radius=0.45,
        a=0.5 + 0j,
        allowed=tuple(
            tuple(() if (i, l) == (0, 0) else (0,) for l in range(4))
            for i in range(4)
        ),
        inconclusive=tuple(
            tuple((1,) if (i, l) == (0, 0) else () for l in range(4))
            for i in range(4)
        ),
    )
    assert wn.dominated_cells(worse) == ((0, 0),)


def test_table_json_roundtrip():
    table = wn.build_transition_table(*SIN_TABLE_ARGS, n_r=5, n_theta=7)
    text = wn.table_to_json(table)
    doc = json.loads(text)
    assert doc["k"] == 4
    assert doc["min_cardinality"] == wn.transition_min_cardinality(table)
    assert "dominated" in doc
    back = wn.table_from_json(text)
    assert back == table


def test_probe_canonical_crossing():
    report = wn.rescaled_family_probe(Z**2, 0.5, 10.0, 2, 36, 44)
    assert report.first_passing == 40
    by_n = {row.n: row for row in report.rows}
    assert not by_n[39].passed
    assert by_n[40].passed and by_n[40].winding == 2
    csv = report.to_csv()
    assert csv.splitlines()[0] == "n,min_modulus,winding,pass"
    assert len(csv.splitlines()) == 1 + len(report.rows)


def test_probe_never_passes():
    # f = z rescales to itself: the modulus bar is never reached
    report = wn.rescaled_family_probe(Z, 0.5, 10.0, 1, 1, 30)
    assert report.first_passing is None
    assert not any(row.passed for row in report.rows)
    # winding degree of z^3 can never reach four
    report = wn.rescaled_family_probe(Z**3, 0.5, 10.0, 4, 1, 30)
    assert report.first_passing is None
    assert all(row.winding == 3 for row in report.rows if row.conclusive)


def test_probe_tail_rule():
    # first_passing demands every later member pass as well
    report = wn.rescaled_family_probe(Z**2, 0.5, 10.0, 2, 36, 39)
    assert report.first_passing is None
