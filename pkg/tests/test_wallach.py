import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from besqlab import wallach
from besqlab.errors import InvalidInputError, InvalidPointError, InvalidSigmaError
from besqlab.sde import RngStream
from besqlab.wallach import LaplaceQuery, WallachPoint


def reference_central(beta: Fraction, p: int) -> bool:
    return beta >= Fraction(p - 1, 2) or (2 * beta).denominator == 1 and 0 <= 2 * beta <= p - 2


def reference_noncentral(beta: Fraction, p: int, rank: int) -> bool:
    if beta >= Fraction(p - 1, 2):
        return True
    return (2 * beta).denominator == 1 and 0 <= 2 * beta <= p - 2 and rank <= 2 * beta


@pytest.mark.parametrize(
    "beta,p,expected",
    [(0.0, 3, True), (0.5, 3, True), (0.75, 3, False), (1.0, 3, True), (0.3, 1, True), (-0.5, 2, False),
     (1.0, 5, True), (1.25, 5, False), (2.0, 5, True)],
)
def test_central_examples(beta, p, expected):
    assert wallach.central_member(beta, p) is expected


def test_central_bad_dimension():
    with pytest.raises(InvalidInputError):
        wallach.central_member(1.0, 0)


def test_discrete_index_tolerance():
    assert wallach.discrete_index(0.5 + 1e-14, 3) == 1
    assert wallach.discrete_index(0.5 + 1e-6, 3) is None
    assert wallach.discrete_index(1.0, 3) is None


@pytest.mark.parametrize(
    "diag,beta,member,branch,rank",
    [((1, 0, 0), 0.5, True, "discrete", 1), ((1, 1, 0), 0.5, False, "none", 2), ((1, 1, 1), 1.0, True, "threshold", 3),
     ((0, 0, 0), 0.0, True, "discrete", 0), ((1, 0, 0), 0.0, False, "none", 1), ((2, 3), 0.2, False, "none", 2)],
)
def test_classify_examples(diag, beta, member, branch, rank):
    m = wallach.classify(WallachPoint(np.diag(np.array(diag, float)), beta))
    assert (m.member, m.branch, m.rank) == (member, branch, rank)


def test_classify_rejects_indefinite():
    with pytest.raises(InvalidPointError):
        wallach.classify(WallachPoint(np.diag([1.0, -1.0]), 1.0))


@given(st.integers(1, 6), st.integers(-4, 14), st.data())
def test_noncentral_matches_reference(p, four_beta, data):
    beta = Fraction(four_beta, 4)
    rank = data.draw(st.integers(0, p))
    x0 = np.diag([1.0] * rank + [0.0] * (p - rank))
    assert wallach.noncentral_member(WallachPoint(x0, float(beta))) is reference_noncentral(beta, p, rank)
    assert wallach.central_member(float(beta), p) is reference_central(beta, p)


@given(st.integers(1, 6), st.integers(0, 14), st.data())
def test_rotation_invariance(p, four_beta, data):
    rank = data.draw(st.integers(0, p))
    seed = data.draw(st.integers(0, 1000))
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(p, p)))
    d = np.diag([1.0 + i for i in range(rank)] + [0.0] * (p - rank))
    a = wallach.classify(WallachPoint(d, four_beta / 4))
    b = wallach.classify(WallachPoint(q @ d @ q.T, four_beta / 4))
    assert a == b


def test_cone_sde_solvable():
    assert wallach.cone_sde_solvable(np.eye(3), 2.0)
    assert wallach.cone_sde_solvable(np.diag([1.0, 0, 0]), 1.0)
    assert not wallach.cone_sde_solvable(np.diag([1.0, 2.0, 0]), 1.0)
    assert not wallach.cone_sde_solvable(np.eye(2), 0.5)


def test_laplace_dimension_one_is_noncentral_chi2_transform():
    # X_t = t * ncx2(df=2 beta, nc=x/t)
    x, beta, t, u = 0.7, 1.3, 0.8, 0.4
    val = wallach.laplace_closed_form([[x]], beta, LaplaceQuery([[u]], t=t))
    s = t * u
    expect = (1 + 2 * s) ** (-beta) * math.exp(-(x / t) * s / (1 + 2 * s))
    assert math.isclose(val, expect, rel_tol=1e-13)
    # cross-check the last expression numerically against scipy's density
    from scipy import integrate

    dist = stats.ncx2(df=2 * beta, nc=x / t)
    num, _ = integrate.quad(lambda y: math.exp(-u * t * y) * dist.pdf(y), 0, np.inf)
    assert math.isclose(val, num, rel_tol=1e-7)


def test_laplace_diagonal_factorizes():
    x0, u, t, beta = np.diag([1.0, 0.5]), np.diag([0.3, 0.1]), 1.0, 1.5
    val = wallach.laplace_closed_form(x0, beta, LaplaceQuery(u, t=t))
    expect = 1.0
    for xi, ui in [(1.0, 0.3), (0.5, 0.1)]:
        expect *= (1 + 2 * t * ui) ** (-beta) * math.exp(-xi * ui / (1 + 2 * t * ui))
    assert math.isclose(val, expect, rel_tol=1e-13)


def test_laplace_trivial_cases():
    q = LaplaceQuery(np.eye(2), t=1.0)
    assert wallach.laplace_closed_form(np.zeros((2, 2)), 0.0, q) == 1.0
    assert math.isclose(wallach.laplace_closed_form(np.zeros((2, 2)), 1.0, q), 1 / 9)


def _spd(g, p):
    a = g.normal(size=(p, p))
    return a @ a.T + 0.5 * np.eye(p)


@given(st.integers(1, 4), st.integers(0, 10_000), st.floats(0.0, 3.0))
def test_laplace_sigma_reduction(p, seed, beta):
    g = np.random.default_rng(seed)
    x0 = _spd(g, p) - 0.5 * np.eye(p)
    S, u = _spd(g, p), _spd(g, p)
    direct = wallach.laplace_closed_form(x0, beta, LaplaceQuery(u, Sigma=S))
    h = np.linalg.cholesky(S)
    # with Sigma = h h^T: L(x0, Sigma, u) = L(h^{-1} x0 h^{-T}, I, h^T u h)
    hinv = np.linalg.inv(h)
    reduced = wallach.laplace_closed_form(hinv @ x0 @ hinv.T, beta, LaplaceQuery(h.T @ u @ h, t=1.0))
    assert math.isclose(direct, reduced, rel_tol=1e-8, abs_tol=1e-300)


@given(st.integers(1, 4), st.integers(0, 10_000), st.floats(0.1, 3.0))
def test_laplace_scalar_sigma_matches_time(p, seed, t):
    g = np.random.default_rng(seed)
    x0, u = _spd(g, p), _spd(g, p)
    a = wallach.laplace_closed_form(x0, 1.5, LaplaceQuery(u, t=t))
    b = wallach.laplace_closed_form(x0, 1.5, LaplaceQuery(u, Sigma=t * np.eye(p)))
    assert math.isclose(a, b, rel_tol=1e-10, abs_tol=1e-300)


def test_reduce_sigma():
    S = np.diag([4.0, 1.0])
    assert np.allclose(wallach.reduce_sigma(np.diag([8.0, 3.0]), S), np.diag([2.0, 3.0]))
    with pytest.raises(InvalidSigmaError):
        wallach.reduce_sigma(np.eye(2), np.diag([1.0, 0.0]))


def test_query_validation():
    with pytest.raises(InvalidInputError):
        LaplaceQuery(np.diag([1.0, 0.0]), t=1.0)
    with pytest.raises(InvalidInputError):
        LaplaceQuery(np.eye(2))
    with pytest.raises(InvalidInputError):
        LaplaceQuery(np.eye(2), t=1.0, Sigma=np.eye(2))
    with pytest.raises(InvalidInputError):
        LaplaceQuery(np.eye(2), t=-1.0)
    with pytest.raises(InvalidInputError):
        wallach.laplace_closed_form(np.eye(2), -1.0, LaplaceQuery(np.eye(2), t=1.0))


def test_means_for_reconstructs():
    x0 = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
    m = wallach.means_for(x0, 2)
    assert m.shape == (2, 3)
    assert np.allclose(m.T @ m, x0, atol=1e-12)
    with pytest.raises(InvalidInputError):
        wallach.means_for(np.eye(3), 2)


def test_sample_exact_mean():
    # E[sum xi xi^T] = n Sigma + x0
    g = RngStream(77)
    n, Sigma, x0 = 3, np.array([[1.0, 0.3], [0.3, 0.5]]), np.diag([1.0, 0.5])
    means = wallach.means_for(x0, n)
    z = g.standard_normal((50_000, n, 2))
    X = wallach.sample_exact_batch(means, Sigma, z)
    se = X.std(axis=0, ddof=1) / math.sqrt(len(X))
    assert np.all(np.abs(X.mean(axis=0) - (n * Sigma + x0)) <= 4 * se)


def test_sample_exact_single_matches_batch():
    means = wallach.means_for(np.eye(2), 2)
    a = wallach.sample_exact(2, means, np.eye(2), RngStream(5))
    b = wallach.sample_exact_batch(means, np.eye(2), RngStream(5).standard_normal((1, 2, 2)))[0]
    assert np.array_equal(a, b)
    with pytest.raises(InvalidInputError):
        wallach.sample_exact(0, None, np.eye(2), RngStream(5))


def test_sample_exact_laplace_general_sigma():
    # strongly non-commuting Sigma and u
    n, Sigma, u = 2, np.array([[1.0, 0.8], [0.8, 1.0]]), np.diag([0.6, 0.05])
    x0 = np.array([[1.0, -0.6], [-0.6, 1.5]])
    z = RngStream(3).standard_normal((100_000, n, 2))
    X = wallach.sample_exact_batch(wallach.means_for(x0, n), Sigma, z)
    vals = np.exp(-np.einsum("nij,ji->n", X, u))
    exact = wallach.laplace_closed_form(x0, n / 2, LaplaceQuery(u, Sigma=Sigma))
    assert abs(vals.mean() - exact) <= 4 * vals.std(ddof=1) / math.sqrt(vals.size)


def test_membership_json():
    out = wallach.membership_json({"p": 3, "beta": 0.5, "x0": [1, 0, 0, 0, 0, 0]})
    assert out == {"member": True, "branch": "discrete", "rank": 1}
    with pytest.raises(InvalidInputError):
        wallach.x0_from_upper(2, [1, 2])
