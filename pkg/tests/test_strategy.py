import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

import golden
from relaydmt import ChannelExponents, DomainError, ValidationError, exponent_order
from relaydmt.solver import full_duplex_region, static_qmf_region
from relaydmt.solver.bounds import parallel_inner_region
from relaydmt.solver.expr import evaluate
from relaydmt.strategy import (
    FadingDraw,
    ParallelFadingDraw,
    ParallelSchedule,
    Schedule,
    ddf_listen_fraction,
    ddf_outage,
    dynamic_qmf_schedule,
    parallel_cut_rates,
    parallel_dynamic_schedule,
    parallel_outage,
    qmf_outage,
    rate_full_duplex,
    rate_half_duplex_cutset,
)

X = ChannelExponents
FIG = X(1, 1, 0.2)
ONES = FadingDraw(1.0, 1.0, 1.0)
RHO = 1e4

gains = st.floats(1e-6, 1e3)
snrs = st.floats(2.0, 1e8)


# -- worked values ---------------------------------------------------------


def test_full_duplex_rate_value():
    assert rate_full_duplex(ONES, FIG, RHO) == pytest.approx(golden.RATE_FD_ONES, rel=1e-12)
    assert rate_full_duplex(ONES, FIG, RHO) == pytest.approx(9.211, abs=1e-3)


def test_full_duplex_rate_dead_relay_link():
    d = FadingDraw(1e-300, 1.0, 1.0)
    assert rate_full_duplex(d, FIG, RHO) == pytest.approx(math.log1p(RHO**0.2), rel=1e-12)


def test_full_duplex_rate_symmetric():
    d = FadingDraw(0.3, 0.3, 2.0)
    v = rate_full_duplex(d, FIG, RHO)
    assert v == pytest.approx(math.log1p(0.3 * RHO + 2.0 * RHO**0.2))


def test_half_duplex_rate_value():
    v = rate_half_duplex_cutset(ONES, FIG, RHO, Schedule(0.5))
    assert v == pytest.approx(golden.RATE_HD_ONES_HALF, rel=1e-12)
    assert v == pytest.approx(5.599, abs=2e-3)


@pytest.mark.parametrize("t", [0.0, 1.0])
def test_half_duplex_rate_endpoints(t):
    v = rate_half_duplex_cutset(FadingDraw(0.4, 2.0, 0.7), FIG, RHO, Schedule(t))
    assert v == pytest.approx(math.log1p(0.7 * RHO**0.2), rel=1e-12)


def test_ddf_listen_fraction_values():
    assert ddf_listen_fraction(ONES, FIG, RHO, 0.5) == pytest.approx(golden.DDF_FRACTION_G1, rel=1e-12)
    assert ddf_listen_fraction(ONES, FIG, RHO, 0.0) == 0.0
    weak = FadingDraw(1 / RHO, 1.0, 1.0)
    assert ddf_listen_fraction(weak, FIG, RHO, 0.5) == pytest.approx(golden.DDF_FRACTION_G_INV_RHO, rel=1e-12)
    assert ddf_listen_fraction(weak, FIG, RHO, 0.5) > 1


def test_ddf_outage_examples():
    assert not ddf_outage(FadingDraw(1e3, 1e3, 1e3), FIG, RHO, 0.3)
    assert ddf_outage(FadingDraw(1 / RHO, 1.0, RHO**-0.2), FIG, RHO, 0.3)


def test_ddf_outage_exponent_crossover():
    rho = 1e8
    x = FIG
    crossing = 0.32 / 0.6

    def draw(beta):
        # alpha = 1, gamma = 0.2: relay decodes after 0.4 of the block
        return FadingDraw(1.0, rho ** (beta - 1.0), 1.0)

    assert ddf_outage(draw(0.5), x, rho, 0.4)
    assert not ddf_outage(draw(0.6), x, rho, 0.4)
    betas = np.linspace(0.45, 0.65, 2001)
    flags = ddf_outage(FadingDraw(np.ones_like(betas), rho ** (betas - 1.0), np.ones_like(betas)), x, rho, 0.4)
    edge = betas[np.argmin(flags)]
    assert abs(edge - crossing) < 0.02


def test_dynamic_schedule_values():
    assert float(dynamic_qmf_schedule(1.0, 0.5).t) == pytest.approx(0.5)
    assert float(dynamic_qmf_schedule(0.0, 0.3).t) == 1.0
    r = 1 / 3
    alpha = r / (1 - r)
    assert float(dynamic_qmf_schedule(alpha, r).t) == pytest.approx(2 / 3)
    assert r / alpha == pytest.approx(2 / 3)
    for a in np.linspace(alpha + 1e-3, 1.0, 50):
        assert float(dynamic_qmf_schedule(a, r).t) > r / a - 1e-12


def test_qmf_outage_examples():
    assert not qmf_outage(ONES, FIG, RHO, 0.3, Schedule(0.5))
    assert golden.RATE_HD_ONES_HALF >= 0.3 * math.log(RHO)
    tiny = FadingDraw(1.0, 1e-12 / RHO, 1e-12 / RHO)
    assert qmf_outage(tiny, FIG, RHO, 0.3, Schedule(0.5))
    assert not qmf_outage(FadingDraw(1e-9, 1e-9, 1e-9), FIG, RHO, 0.0, Schedule(0.5))


def test_parallel_cut_values():
    ones = ParallelFadingDraw(1.0, 1.0, 1.0, 1.0)
    assert parallel_cut_rates(ones, RHO, 0.5, 0.5) == pytest.approx(golden.PARALLEL_CUT_ONES, rel=1e-12)
    assert parallel_cut_rates(ones, RHO, 0.5, 0.5) == pytest.approx(9.2110, abs=1e-3)
    assert parallel_cut_rates(ones, RHO, 1.0, 1.0) == 0.0
    d = ParallelFadingDraw(1e-300, 1.0, 1.0, 1.0)
    s = parallel_dynamic_schedule(d, RHO, 1 / 3)
    assert float(s.t1) == pytest.approx(1.0)
    assert parallel_cut_rates(d, RHO, s.t1, s.t2) == pytest.approx(golden.PARALLEL_CUT_DYNAMIC, rel=1e-9)
    assert parallel_cut_rates(d, RHO, s.t1, s.t2) == pytest.approx(3.07, abs=5e-3)


# -- validation ------------------------------------------------------------


@pytest.mark.parametrize("bad", [(0.0, 1, 1), (-1, 1, 1), (math.inf, 1, 1), (math.nan, 1, 1)])
def test_draw_validation(bad):
    with pytest.raises(ValidationError):
        FadingDraw(*bad)
    with pytest.raises(ValidationError):
        ParallelFadingDraw(*bad, 1.0)


@pytest.mark.parametrize("t", [-0.1, 1.1, math.nan])
def test_schedule_validation(t):
    with pytest.raises(ValidationError):
        Schedule(t)
    with pytest.raises(ValidationError):
        ParallelSchedule(0.5, t)


@pytest.mark.parametrize("rho", [1.0, 0.5, -3.0])
def test_snr_domain(rho):
    with pytest.raises(DomainError):
        rate_full_duplex(ONES, FIG, rho)
    with pytest.raises(DomainError):
        ddf_outage(ONES, FIG, rho, 0.2)


# -- invariants ------------------------------------------------------------


@given(gains, gains, gains, snrs, st.floats(0.0, 1.0), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2))
def test_half_duplex_below_full_duplex(g1, g2, g3, rho, t, a, b, c):
    d, x = FadingDraw(g1, g2, g3), X(a, b, c)
    assert rate_half_duplex_cutset(d, x, rho, Schedule(t)) <= rate_full_duplex(d, x, rho) + 1e-12


@given(gains, gains, gains, snrs, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_half_duplex_concave_in_t(g1, g2, g3, rho, s, u):
    d = FadingDraw(g1, g2, g3)
    f = lambda t: float(rate_half_duplex_cutset(d, FIG, rho, Schedule(t)))  # noqa: E731
    assert f((s + u) / 2) >= (f(s) + f(u)) / 2 - 1e-9 * max(1.0, f(s), f(u))


def test_half_duplex_max_over_t_golden():
    d = FadingDraw(0.7, 2.3, 0.4)
    x = X(1, 1, 0.5)
    f = lambda t: float(rate_half_duplex_cutset(d, x, RHO, Schedule(t)))  # noqa: E731
    lo, hi = 0.0, 1.0
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        lo, hi = (m1, hi) if f(m1) < f(m2) else (lo, m2)
    assert f((lo + hi) / 2) == pytest.approx(golden.HD_MAX_OVER_T, abs=1e-9)
    assert (lo + hi) / 2 == pytest.approx(golden.HD_ARGMAX_T, abs=1e-9)
    # a bounded Brent search lands on the same kink
    res = minimize_scalar(lambda t: -f(t), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    assert -res.fun == pytest.approx(golden.HD_MAX_OVER_T, abs=1e-7)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_dynamic_schedule_in_unit_interval(alpha, r):
    assert 0.0 <= float(dynamic_qmf_schedule(alpha, r).t) <= 1.0


def test_ddf_and_dynamic_qmf_agree_at_high_snr():
    rho, r, x = 1e8, 0.3, FIG
    rng = np.random.default_rng(2024)
    d = FadingDraw(*rng.standard_exponential((3, 100_000)))
    keep = ddf_listen_fraction(d, x, rho, r) <= 1.0
    ddf = ddf_outage(d, x, rho, r)
    dq = qmf_outage(d, x, rho, r, dynamic_qmf_schedule(exponent_order(d.g_sr, rho, 1.0), r))
    assert keep.sum() > 90_000
    assert np.mean(ddf[keep] != dq[keep]) < 0.01


# -- finite SNR vs exponent-level regions ----------------------------------

RHO_HI = 1e8
# largest gap between log(1 + rho^x + rho^y) / log(rho) and max(x, y); a link
# at order 0 still carries log(2) / log(rho), so a fixed 0.02 band is too thin
BAND = math.log(3.0) / math.log(RHO_HI)
# a parallel cut adds two order-0 links, each carrying log(2) / log(rho)
PARALLEL_BAND = math.log(4.0) / math.log(RHO_HI)
R_VALUES = (0.15, 0.3, 0.45, 0.6, 0.85)


def _corner_draws(x):
    """Every link at order 0 or at its full exponent: g = rho^(theta - e)."""
    for theta in itertools.product((0.0, 1.0), repeat=3):
        orders = np.array(theta) * np.array(x.as_tuple())
        g = RHO_HI ** (orders - np.array(x.as_tuple()))
        yield orders, FadingDraw(*g)


def _lhs(region, point):
    (cmp,) = region.constraints
    return float(evaluate(cmp.expr, list(point)))


@pytest.mark.parametrize("cfg", [(1, 1, 1), (1, 1, 0.2), (2, 1, 0.5)])
def test_single_relay_predicates_match_exponent_regions(cfg):
    x = X(*cfg)
    checked = 0
    for r in R_VALUES:
        for orders, d in _corner_draws(x):
            fd_region = full_duplex_region(x, r, strict=True)
            if abs(_lhs(fd_region, orders) - r) >= BAND:
                want = fd_region.contains(orders, tol=0.0)
                assert bool(rate_full_duplex(d, x, RHO_HI) < r * math.log(RHO_HI)) == want
                checked += 1
            q_region = static_qmf_region(x, r, strict=True)
            if abs(_lhs(q_region, orders) - r) >= BAND:
                want = q_region.contains(orders, tol=0.0)
                assert bool(qmf_outage(d, x, RHO_HI, r, Schedule(0.5))) == want
                checked += 1
    assert checked > 40


def _ddf_exponent_rate(alpha, beta, gamma, r):
    if alpha <= r:
        return gamma
    t = r / alpha
    return t * gamma + (1 - t) * max(beta, gamma)


R_DENSE = np.round(np.arange(0.05, 1.0, 0.01), 2)


@pytest.mark.parametrize("cfg", [(1, 1, 0.2), (2, 1, 0.5), (1, 2, 0.3)])
def test_ddf_predicate_matches_exponent_region_at_corners(cfg):
    x = X(*cfg)
    checked = 0
    for r in R_DENSE:
        for (al, be, ga), d in _corner_draws(x):
            if abs(al - r) < BAND or abs(_ddf_exponent_rate(al, be, ga, r) - r) < BAND:
                continue
            assert bool(ddf_outage(d, x, RHO_HI, r)) == (_ddf_exponent_rate(al, be, ga, r) < r)
            checked += 1
    assert checked > 400


@pytest.mark.parametrize("cfg", [(1, 1, 0.2), (2, 1, 0.5)])
def test_ddf_predicate_matches_exponent_region_inside(cfg):
    x = X(*cfg)
    rng = np.random.default_rng(11)
    checked = 0
    for r in R_VALUES:
        orders = rng.uniform(0, 1, (400, 3)) * np.array(x.as_tuple())
        for al, be, ga in orders:
            if abs(al - r) < BAND or abs(_ddf_exponent_rate(al, be, ga, r) - r) < BAND:
                continue
            g = RHO_HI ** (np.array([al, be, ga]) - np.array(x.as_tuple()))
            got = bool(ddf_outage(FadingDraw(*g), x, RHO_HI, r))
            assert got == (_ddf_exponent_rate(al, be, ga, r) < r)
            checked += 1
    assert checked > 1000


def test_parallel_predicate_matches_exponent_region_at_corners():
    checked = 0
    for r in R_DENSE:
        for theta in itertools.product((0.0, 1.0), repeat=4):
            al, ga, be, de = theta
            t1, t2 = 1 - al * (1 - r), 1 - ga * (1 - r)
            region = parallel_inner_region(r, al, ga, t1, t2)
            if abs(_lhs(region, (be, de)) - r) < PARALLEL_BAND:
                continue
            d = ParallelFadingDraw(*(RHO_HI ** (np.array(theta) - 1.0)))
            got = bool(parallel_outage(d, RHO_HI, r, parallel_dynamic_schedule(d, RHO_HI, r)))
            assert got == region.contains((be, de), tol=0.0)
            checked += 1
    assert checked > 1000


def test_parallel_predicate_matches_exponent_region():
    rng = np.random.default_rng(5)
    checked = 0
    for r in (0.2, 1 / 3, 0.45, 0.7):
        pts = rng.uniform(0, 1, (500, 4))
        for al, ga, be, de in pts:
            t1, t2 = 1 - al * (1 - r), 1 - ga * (1 - r)
            region = parallel_inner_region(r, al, ga, t1, t2)
            if abs(_lhs(region, (be, de)) - r) < PARALLEL_BAND:
                continue
            d = ParallelFadingDraw(*(RHO_HI ** (np.array([al, ga, be, de]) - 1.0)))
            got = bool(parallel_outage(d, RHO_HI, r, parallel_dynamic_schedule(d, RHO_HI, r)))
            assert got == region.contains((be, de), tol=0.0)
            checked += 1
    assert checked > 1000
