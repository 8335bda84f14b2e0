import pytest
from hypothesis import given, strategies as st

import micropolar as mp
from micropolar.errors import ConfigurationError
from micropolar.exponents import (
    BASE,
    CLASSICAL,
    REGULARITY,
    equality_branches,
    select_intermediate,
)

BASE_OK = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.5, beta0=0.5, gamma0=0.0)
BASE_BAD = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.5, beta0=0.5, gamma0=0.5)
CLASSICAL_OK = mp.ExponentConfig(p=8, q=8, r=4, alpha0=0.0, beta0=0.0, gamma0=0.0)
BOUNDARY = mp.ExponentConfig(p=2, q=2, r=1.2, alpha0=0.75, beta0=0.25, gamma0=0.25)


def test_worked_example_base_passes():
    assert mp.check_config(BASE_OK, BASE).passed


def test_worked_example_base_fails():
    result = mp.check_config(BASE_BAD, BASE)
    assert not result.passed
    labels = {v.label for v in result.violations}
    assert any("alpha0-gamma0/2" in s for s in labels)
    viol = next(v for v in result.violations if "alpha0-gamma0/2" in v.label)
    assert viol.lhs == pytest.approx(-0.125)


def test_worked_example_classical_passes():
    assert mp.check_config(CLASSICAL_OK, CLASSICAL).passed


def test_classical_requires_q_equal_p():
    bad = mp.ExponentConfig(p=8, q=6, r=4, alpha0=0.0, beta0=0.0, gamma0=0.0)
    assert not mp.check_config(bad, CLASSICAL).passed


def test_check_is_pure():
    a = mp.check_config(BASE_OK, BASE)
    b = mp.check_config(BASE_OK, BASE)
    assert a.passed == b.passed and a.checked == b.checked


def test_out_of_range_raises():
    with pytest.raises(ConfigurationError):
        mp.check_config(mp.ExponentConfig(p=0.5, q=2, r=2, alpha0=0, beta0=0,
                                          gamma0=0), BASE)
    with pytest.raises(ConfigurationError):
        mp.check_config(mp.ExponentConfig(p=2, q=2, r=2, alpha0=float("nan"),
                                          beta0=0, gamma0=0), BASE)


def test_selection_on_worked_example():
    sel = select_intermediate(BASE_OK)
    assert sel.feasible
    cfg = sel.config
    assert cfg.delta1 == 0.0 and cfg.delta2 == 0.0 and cfg.delta3 > 0.0
    for a in cfg.alphas():
        assert cfg.alpha0 < a < 1 - cfg.delta1
    for b in cfg.betas():
        assert cfg.beta0 < b < 1 - cfg.delta2
    for g in cfg.gammas():
        assert cfg.gamma0 < g < 1 - cfg.delta3
    assert mp.check_config(cfg, BASE).passed


def test_selection_equality_branches_pinned():
    d49, d50, d51 = mp.exponents.branch_values(BOUNDARY)
    assert d49 == pytest.approx(0.5)
    assert d50 == pytest.approx(1.0)
    eq = equality_branches(BOUNDARY)
    assert eq[0] and eq[1] and not eq[2]
    sel = select_intermediate(BOUNDARY)
    assert sel.feasible
    cfg = sel.config
    assert cfg.beta1 + cfg.delta1 == pytest.approx(1 - cfg.alpha0 + cfg.beta0, abs=1e-14)
    assert cfg.gamma1 == pytest.approx(1 - cfg.alpha0 + cfg.gamma0, abs=1e-14)
    assert mp.check_config(cfg, BASE).passed


def test_selection_infeasible_reports_not_raises():
    bad = mp.ExponentConfig(p=1.1, q=8, r=2, alpha0=0.9, beta0=0.0, gamma0=0.0)
    sel = select_intermediate(bad)
    assert not sel.feasible
    assert sel.binding  # names the violated base inequalities


def test_selection_pinched_corner_reported():
    # p = 2r with zero base exponents pins the dissipation exponent where a
    # recursion weight would vanish
    sel = select_intermediate(CLASSICAL_OK)
    assert not sel.feasible
    assert "pinched" in sel.notes


def test_selection_feasible_zero_exponents():
    cfg = mp.ExponentConfig(p=9, q=9, r=4, alpha0=0.0, beta0=0.0, gamma0=0.0)
    sel = select_intermediate(cfg)
    assert sel.feasible
    assert sel.config.delta1 > 0 and sel.config.delta2 > 0 and sel.config.delta3 > 0
    assert mp.check_config(sel.config, BASE).passed


def test_selection_determinism():
    a = select_intermediate(BASE_OK).config
    b = select_intermediate(BASE_OK).config
    assert a.to_dict() == b.to_dict()


def test_regularity_level():
    cfg = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.75, beta0=0.75, gamma0=0.5)
    result = mp.check_config(cfg, REGULARITY)
    assert result.checked > mp.check_config(cfg, BASE).checked
    # beta0 - alpha0 > -1/2 violated here
    bad = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.9, beta0=0.3, gamma0=0.3)
    res = mp.check_config(bad, REGULARITY)
    assert any("beta0-alpha0" in v.label for v in res.violations)


def test_lambda_chain_checked():
    cfg = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.5, beta0=0.5, gamma0=0.0,
                            lam=0.5, lam1=0.75, lam2=0.9)  # lam2 >= min(2 lam, lam1)
    res = mp.check_config(cfg, BASE)
    assert any("lambda2" in v.label for v in res.violations)


@given(st.floats(0.51, 0.99))
def test_monotone_violation_under_tightening(gamma0):
    """Raising gamma0 beyond the worked failure point never flips the
    violated inequality back to a pass."""
    cfg = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.5, beta0=0.5, gamma0=gamma0)
    res = mp.check_config(cfg, BASE)
    assert any("alpha0-gamma0/2" in v.label for v in res.violations)


def test_serialization_roundtrip():
    sel = select_intermediate(BASE_OK)
    d = sel.config.to_dict()
    assert "lambda" in d and "alpha1" in d
    back = mp.ExponentConfig.from_dict(d)
    assert back == sel.config
