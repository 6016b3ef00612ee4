from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, model, pipeline, structure
from oracles import binomial_series, scalar_idempotent_defect
from quasiquant.categorical_engine import (Q_LEG, TruncModel, _solve, check_counit_repair,
                                           check_g_equivariance, coalgebra_on_summand,
                                           compute_twist, compute_uhg_structure,
                                           difference_valuation, dump_model, expected_twist,
                                           hom_basis, hom_basis_inverse, hom_c_unit_rank,
                                           p_phi, stabilization_audit, u_vanishes_mod_h2)
from quasiquant.errors import TruncationError
from quasiquant.scalar_series import HSeries, inv_sqrt_taylor_coeff

NONTRIVIAL = ["F1", "F2", "F3"]


def g_mono(M, *exps):
    return tuple(exps) + (0,) * (M.alg.m - len(exps))


# ------------------------------------------------------------------ model

@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_model_construction_checks(name):
    M = model(name)
    assert M.report.passed
    assert M.action_tables


def test_bad_crossing_rejected():
    with pytest.raises(ValueError):
        TruncModel(structure("F1"), crossing="over")


def test_dump_model_lists_action_tables():
    out = dump_model(model("F1"))
    assert out and isinstance(out, dict)


# ------------------------------------------------------------------ the idempotent

def test_idempotent_coefficients_via_scalar_oracle():
    # p = 1 + eps, u = p^2 - p: the deformed p is idempotent iff the series is (1 + 4u)^(-1/2)
    good = [4 ** k * inv_sqrt_taylor_coeff(k) for k in range(8)]
    assert good == [Fraction(4) ** k * c for k, c in enumerate(binomial_series(Fraction(-1, 2), 8))]
    assert not any(scalar_idempotent_defect(good, 8))
    halved = [inv_sqrt_taylor_coeff(k) / 2 for k in range(8)]
    assert any(scalar_idempotent_defect(halved, 8))


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_p_phi_is_idempotent_and_close_to_p(name):
    M = model(name)
    pphi, p = p_phi(M).idem, M.p()
    assert M.equal(M.compose_phi(pphi, pphi), pphi)
    assert difference_valuation(M, pphi, p) >= 2
    assert u_vanishes_mod_h2(M)


def test_abelian_double_needs_no_correction():
    M = model("F0")
    assert M.equal(p_phi(M).idem, M.p())


def test_plain_p_is_not_phi_idempotent_on_sl2():
    M = model("F3")
    p = M.p()
    assert difference_valuation(M, M.compose_phi(p, p), p) == 2
    assert difference_valuation(M, p_phi(M).idem, p) == 2


def test_flavors_agree_to_the_expected_order():
    M = model("F3")
    p = M.p()
    assert difference_valuation(M, M.compose_phi(p, p), M.compose_plain(p, p)) == 2
    assert difference_valuation(M, M.tensor_phi(p, p), M.tensor_plain(p, p)) == 1


# ------------------------------------------------------------------ quasi-coalgebra

@pytest.mark.parametrize("name", NONTRIVIAL)
def test_counit_repair(name):
    assert check_counit_repair(model(name)).passed


@pytest.mark.parametrize("name", NONTRIVIAL)
def test_r_and_s_are_p_phi_to_first_order(name):
    M = model(name)
    C = coalgebra_on_summand(M)
    pphi = C.p_phi
    assert difference_valuation(M, C.r, pphi) >= 2
    assert difference_valuation(M, C.s, pphi) >= 2


def test_unrepaired_counit_fails_at_second_order():
    # negative control: (eps (x) id) o Delta' differs from p^Phi at h^2 on sl2
    M = model("F3")
    C = coalgebra_on_summand(M)
    assert difference_valuation(M, C.r, C.p_phi) == 2


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_structure_maps_are_g_equivariant(name):
    M = model(name)
    C = coalgebra_on_summand(M)
    for f in (C.p_phi, C.r, C.delta_phi, hom_basis(M, {g_mono(M, 1): 1})):
        assert check_g_equivariance(M, f)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_hom_from_summand_to_unit_has_rank_one(name):
    assert hom_c_unit_rank(model(name)) == 1


# ------------------------------------------------------------------ End(C)

@pytest.mark.parametrize("name", ["F0", "F1", "F2"])
def test_hom_basis_of_one_is_p_phi(name):
    M = model(name)
    assert M.equal(hom_basis(M, {M.unit: 1}), p_phi(M).idem)


def test_hom_basis_of_one_on_sl2_only_to_first_order():
    M = model("F3")
    assert difference_valuation(M, hom_basis(M, {M.unit: 1}), p_phi(M).idem) == 2


@pytest.mark.parametrize("name", ["F2", "F3"])
def test_hom_basis_round_trip(name):
    M = model(name)
    z = {g_mono(M, 1, 1): Fraction(2), g_mono(M, 0, 1): Fraction(-1)}
    back = hom_basis_inverse(M, hom_basis(M, z))
    assert back == {m: HSeries.const(c, M.order) for m, c in z.items()}


def test_solve_reports_non_convergence():
    M = model("F1").with_order(2)
    target = {(M.unit,): HSeries.one(2)}
    with pytest.raises(TruncationError):
        _solve(M, target, lambda X: {k: v.scale(2) for k, v in X.items()})


# ------------------------------------------------------------------ twist and U(g)

@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_twist_formula(name):
    M2 = model(name).with_order(2)
    assert compute_twist(M2) == expected_twist(M2)


@pytest.mark.parametrize("name", NONTRIVIAL)
def test_inverse_crossing_flips_the_twist(name):
    M2 = model(name, 3, "inverse").with_order(2)
    want = expected_twist(M2)
    flipped = {k: (v if k == (M2.unit, M2.unit) else -v) for k, v in want.items()}
    assert compute_twist(M2) == flipped


def test_borel_bialgebra_cobracket_recovered():
    Q = structure("F2")
    M2 = model("F2").with_order(2)
    skew = compute_uhg_structure(M2, with_phi=False).skew_first_order(M2.alg)
    for x in Q.letters:
        assert skew[x] == Q.delta_of(x)


def test_inverse_crossing_recovers_minus_the_cobracket():
    Q = structure("F2")
    M2 = model("F2", 3, "inverse").with_order(2)
    skew = compute_uhg_structure(M2, with_phi=False).skew_first_order(M2.alg)
    for x in Q.letters:
        assert skew[x] == Q.delta_of(x).scale(-1)


def test_abelian_structure_is_undeformed():
    U = pipeline("F0").uhg
    M2 = pipeline("F0").model2
    u = M2.unit
    one = HSeries.one(2)
    for i, x in enumerate(structure("F0").letters):
        g = M2.alg.gen(i)
        assert U.deltas[x] == {(g, u): one, (u, g): one}
        assert not U.counit[x]
    assert U.phi == {(u, u, u): one}


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_pipeline_passes_and_phi_h_is_trivial(name):
    res = pipeline(name)
    assert res.report.passed, [c.name for c in res.report.failures()]
    u = res.model2.unit
    assert res.uhg.phi == {(u, u, u): HSeries.one(2)}


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_stabilization_audit(name):
    assert stabilization_audit(structure(name), pipeline(name)).passed


# ------------------------------------------------------------------ properties

g_elements = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 1)),
    st.fractions(min_value=-2, max_value=2, max_denominator=3), min_size=1, max_size=3)


@given(g_elements)
@settings(max_examples=10, deadline=None)
def test_right_multiplication_is_equivariant(z):
    M = model("F2")
    zz = {g_mono(M, a, b): c for (a, b), c in z.items()}
    assert check_g_equivariance(M, M.right_mult(zz))


@given(g_elements, g_elements)
@settings(max_examples=10, deadline=None)
def test_phi_composition_agrees_with_plain_to_first_order(z1, z2):
    M = model("F3")
    f = M.right_mult({g_mono(M, a, b): c for (a, b), c in z1.items()})
    g = M.right_mult({g_mono(M, a, b): c for (a, b), c in z2.items()})
    assert difference_valuation(M, M.compose_phi(f, g), M.compose_plain(f, g)) >= 2


@given(g_elements)
@settings(max_examples=10, deadline=None)
def test_hom_basis_is_linear(z):
    M = model("F1")
    zz = {g_mono(M, a, b): c for (a, b), c in z.items()}
    pieces = [(c, hom_basis(M, {m: 1})) for m, c in zz.items()]
    assert M.equal(hom_basis(M, zz), M.lincomb(pieces))


def test_zero_dimensional_algebra_has_trivial_twist():
    from quasiquant.categorical_engine import run_pipeline
    from quasiquant.fixtures import abelian
    res = run_pipeline(abelian(0))
    assert res.report.passed
    assert res.twist == {((), ()): HSeries.one(2)}
