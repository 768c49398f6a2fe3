import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from scatret.signature import Signature, SignatureConfig
from scatret.similarity import (SimilarityError, bc_numeric, ggd_cross_entropy, ggd_kld, ggd_kld_sm, ggd_pdf,
                                kernel_distance, log_weibull_kernel, signature_distance, sm_scat,
                                weibull_bc_numeric, weibull_kernel)
from scatret.statmodel import GGDParams, WeibullParams

lams = st.floats(0.05, 20)
shapes = st.floats(0.3, 6)
weibulls = st.builds(WeibullParams, lams, shapes)


def wsig(params, labels=None, method="nwst-weibull", config=None):
    config = config or SignatureConfig(1, 1, 1, True, 1e-6)
    labels = labels or tuple(f"s{i}" for i in range(len(params)))
    return Signature(method, config, labels, np.array(params, dtype=float))


def gsig(params):
    return Signature("fwt-ggd", SignatureConfig(0, 0, 1, False, 0.0), ("L1-H", "L1-V", "L1-D")[:len(params)],
                     np.array(params, dtype=float))


# -- kernel ----------------------------------------------------------------------

def test_kernel_identity():
    p = WeibullParams(1.7, 2.3)
    assert weibull_kernel(p, p) == 1.0


def test_kernel_hand_value():
    # equal shapes: 2 sqrt(1 * 4) / (1 + 4)
    assert weibull_kernel(WeibullParams(1, 2), WeibullParams(2, 2)) == pytest.approx(0.8, abs=1e-15)


def test_kernel_close_shapes_vs_quadrature():
    p, q = WeibullParams(1, 2), WeibullParams(1, 2.2)
    assert weibull_kernel(p, q) == pytest.approx(weibull_bc_numeric(p, q), rel=0.01)


@given(weibulls, weibulls)
def test_kernel_range_and_symmetry(p, q):
    k = weibull_kernel(p, q)
    assert 0 < k <= 1
    assert k == weibull_kernel(q, p)
    if p != q:
        assert k < 1


@given(lams, lams, shapes)
def test_equal_shapes_exact(l1, l2, k):
    p, q = WeibullParams(l1, k), WeibullParams(l2, k)
    assert abs(weibull_kernel(p, q) - weibull_bc_numeric(p, q)) <= 1e-8


@given(lams, shapes, st.floats(-0.2, 0.2), st.floats(-2, 2))
def test_close_shapes_within_five_percent(l1, k1, gap, spread):
    # shape gap <= 20%, scales within k |d ln lambda| <= 2 of each other
    k2 = k1 * (1 + gap)
    p, q = WeibullParams(l1, k1), WeibullParams(l1 * math.exp(spread / (0.5 * (k1 + k2))), k2)
    bc = weibull_bc_numeric(p, q)
    assert abs(weibull_kernel(p, q) - bc) / bc <= 0.05


def test_approximation_degrades_for_distant_scales():
    # same 20% shape gap, but k |d ln lambda| = 6: the closed form drifts from the true overlap
    k1, k2 = 2.0, 2.4
    p, q = WeibullParams(1.0, k1), WeibullParams(math.exp(6 / 2.2), k2)
    bc = weibull_bc_numeric(p, q)
    assert abs(weibull_kernel(p, q) - bc) / bc > 0.1


def test_log_kernel_extreme_scales():
    value = log_weibull_kernel(1e-300, 50.0, 1e300, 50.0)
    assert np.isfinite(value) and value < -1e4
    assert weibull_kernel(WeibullParams(1e-300, 50.0), WeibullParams(1e300, 50.0)) == 0.0


def test_log_kernel_broadcasts():
    out = log_weibull_kernel(np.ones((3, 1)), 2.0, np.array([1.0, 2.0]), 2.0)
    assert out.shape == (3, 2)
    np.testing.assert_allclose(out[:, 1], math.log(0.8))


@given(st.lists(st.tuples(lams, st.just(1.7)), min_size=2, max_size=8))
def test_gram_psd_equal_shapes(params):
    ps = [WeibullParams(*p) for p in params]
    gram = np.array([[weibull_kernel(a, b) for b in ps] for a in ps])
    assert np.linalg.eigvalsh(gram).min() >= -1e-9


def test_gram_not_psd_for_spread_shapes():
    # the closed form is only a kernel in the equal-shape case; with one subband and
    # widely spread shapes a negative eigenvalue appears
    ps = [WeibullParams(1.0, 0.5), WeibullParams(1.0, 5.0), WeibullParams(30.0, 0.5), WeibullParams(30.0, 5.0),
          WeibullParams(5.0, 1.6)]
    gram = np.array([[weibull_kernel(a, b) for b in ps] for a in ps])
    assert np.linalg.eigvalsh(gram).min() < -1e-3


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.5, 4))
def test_kernel_distance_triangle_equal_shapes(a, b, c, k):
    p, q, r = (WeibullParams(x, k) for x in (a, b, c))
    assert kernel_distance(p, r) <= kernel_distance(p, q) + kernel_distance(q, r) + 1e-12
    assert kernel_distance(p, p) == 0.0


# -- quadrature oracle -------------------------------------------------------------

def test_bc_numeric_identity_and_disjoint():
    p = WeibullParams(0.3, 1.4)
    assert weibull_bc_numeric(p, p) == pytest.approx(1.0, abs=1e-9)

    def box(lo, hi):
        return lambda x: 1.0 / (hi - lo) if lo <= x <= hi else 0.0

    assert bc_numeric(box(0, 1), box(2, 3), (0, 3), breakpoints=(1, 2)) == 0.0
    assert bc_numeric(box(0, 2), box(1, 3), (0, 3), breakpoints=(1, 2)) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(SimilarityError):
        bc_numeric(box(0, 1), box(0, 1), (1, 1))


# -- SM over signatures -------------------------------------------------------------

def test_sm_scat_examples():
    a = wsig([(1, 2), (3, 1)])
    assert sm_scat(a, a) == 0.0
    b = wsig([(1, 2), (2, 2)])
    c = wsig([(2, 2), (1, 2)])
    assert sm_scat(b, c) == pytest.approx(-2 * math.log(0.8), abs=1e-12)
    assert sm_scat(b, c) == pytest.approx(0.4463, abs=1e-4)


@given(st.lists(st.tuples(weibulls, weibulls), min_size=1, max_size=5),
       st.lists(st.tuples(weibulls, weibulls), min_size=1, max_size=5))
def test_sm_scat_additive_and_symmetric(part_a, part_b):
    def split(pairs):
        return [(p.lam, p.k) for p, _ in pairs], [(q.lam, q.k) for _, q in pairs]

    a1, a2 = split(part_a)
    b1, b2 = split(part_b)
    whole = sm_scat(wsig(a1 + b1), wsig(a2 + b2))
    assert whole == pytest.approx(sm_scat(wsig(a1), wsig(a2)) + sm_scat(wsig(b1), wsig(b2)), rel=1e-12, abs=1e-12)
    assert whole == sm_scat(wsig(a2 + b2), wsig(a1 + b1))
    assert whole >= 0


def test_sm_scat_mismatch():
    a = wsig([(1, 2), (3, 1)])
    with pytest.raises(SimilarityError, match="subband-count"):
        sm_scat(a, wsig([(1, 2)]))
    with pytest.raises(SimilarityError, match="config"):
        sm_scat(a, wsig([(1, 2), (3, 1)], config=SignatureConfig(1, 1, 1, True, 1e-3)))
    with pytest.raises(SimilarityError, match="config"):
        sm_scat(a, wsig([(1, 2), (3, 1)], method="wst-weibull"))
    with pytest.raises(SimilarityError, match="Weibull"):
        sm_scat(gsig([(1, 2)]), gsig([(1, 2)]))


# -- GGD baseline ---------------------------------------------------------------------

def test_cross_entropy_hand_value():
    h = ggd_cross_entropy(GGDParams(1, 2), GGDParams(1, 2))
    assert h == pytest.approx(math.log(math.sqrt(math.pi)) + 0.5, abs=1e-14)
    assert h == pytest.approx(1.0724, abs=1e-4)


def test_cross_entropy_asymmetric():
    p, q = GGDParams(1, 2), GGDParams(2, 2)
    assert ggd_cross_entropy(p, q) != pytest.approx(ggd_cross_entropy(q, p))


def test_cross_entropy_minimized_at_self():
    p = GGDParams(1.3, 1.1)
    own = ggd_cross_entropy(p, p)
    for a in np.linspace(0.5, 3, 21):
        for b in np.linspace(0.4, 4, 19):
            assert ggd_cross_entropy(p, GGDParams(a, b)) >= own - 1e-12


def test_cross_entropy_vs_quadrature():
    p, q = GGDParams(0.7, 1.3), GGDParams(1.9, 0.8)
    f, g = ggd_pdf(p), ggd_pdf(q)
    ref = integrate.quad(lambda x: -f(x) * math.log(g(x)), -np.inf, np.inf, epsabs=1e-12)[0]
    assert ggd_cross_entropy(p, q) == pytest.approx(ref, rel=1e-8)


def test_kld_sm():
    a = gsig([(1, 2), (0.5, 1)])
    assert ggd_kld_sm(a, a) == 0.0
    p, q = GGDParams(1, 2), GGDParams(2, 2)
    f, g = ggd_pdf(p), ggd_pdf(q)
    ref = integrate.quad(lambda x: f(x) * (math.log(f(x)) - math.log(g(x))) if f(x) > 0 else 0.0,
                         -40, 40, epsabs=1e-13, limit=200)[0]
    assert ggd_kld_sm(gsig([(1, 2)]), gsig([(2, 2)])) == pytest.approx(ref, abs=1e-6)
    assert signature_distance(gsig([(1, 2)]), gsig([(2, 2)])) == ggd_kld_sm(gsig([(1, 2)]), gsig([(2, 2)]))
    with pytest.raises(SimilarityError):
        ggd_kld_sm(wsig([(1, 2)]), wsig([(1, 2)]))


@given(st.lists(st.tuples(st.floats(0.05, 20), st.floats(0.3, 6)), min_size=2, max_size=6))
def test_kld_nonnegative(params):
    half = len(params) // 2
    a, b = params[:half], params[half:2 * half]
    assert ggd_kld_sm(gsig(a[:3]), gsig(b[:3])) >= -1e-12
    assert all(ggd_kld(GGDParams(*x), GGDParams(*y)) >= -1e-12 for x, y in zip(a, b))
