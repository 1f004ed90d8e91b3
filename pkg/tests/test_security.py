"""Security indices against enumeration oracles and their paper-level
structure."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridrisk.attack import perturb_model
from gridrisk.security import (
    IndexQuery,
    SecurityIndexError,
    brute_force_index,
    combined_index,
    cost_weighted_index,
    fdi_index,
    format_index_csv,
    index_sweep,
    parallel_classes,
    verify_theorem2,
)

from oracles import certificate_for_set, enumeration_alpha, enumeration_family, random_observable_matrix

# independently derived by rank enumeration over all subsets
CHAIN3_ALPHA = 4
RING4_ALPHA = 7


def _assert_result_shape(res, h, j, mu):
    assert j in res.integrity_set
    assert not set(res.integrity_set) & set(res.availability_set)
    assert res.support == tuple(sorted(res.integrity_set + res.availability_set))
    assert res.verified_stealth
    # the certificate moves the target by exactly mu and nothing off-support
    a = h @ res.certificate_c
    assert a[j - 1] == pytest.approx(mu, rel=1e-7)
    comp = [i for i in range(h.shape[0]) if i + 1 not in res.support]
    if comp:
        assert np.max(np.abs(a[comp])) <= 1e-6 * abs(mu) * 1e4


def test_chain3_all_measurements(chain3):
    for j in range(1, chain3.m + 1):
        q = IndexQuery(chain3.H, j)
        res_a = fdi_index(q)
        res_b = combined_index(q)
        assert res_a.objective == res_b.objective == CHAIN3_ALPHA
        _assert_result_shape(res_b, chain3.H, j, q.mu)


def test_ring4_all_measurements(ring4):
    for j in range(1, ring4.m + 1):
        q = IndexQuery(ring4.H, j)
        assert fdi_index(q).objective == RING4_ALPHA
        assert combined_index(q).objective == RING4_ALPHA


def test_toy_cases_match_rank_oracle(chain3, ring4):
    for model in (chain3, ring4):
        for j in range(1, model.m + 1):
            size, _ = enumeration_alpha(model.H, j - 1)
            assert fdi_index(IndexQuery(model.H, j)).objective == size


def test_brute_force_agrees_with_external_oracle(chain3, ring4):
    for model in (chain3, ring4):
        for j in range(1, model.m + 1):
            ours = brute_force_index(model.H, j)
            size, _ = enumeration_alpha(model.H, j - 1)
            family = enumeration_family(model.H, j - 1)
            assert ours.objective == size
            assert frozenset(
                frozenset(i - 1 for i in s) for s in ours.family
            ) == family


def test_ieee14_target_nine_values(ieee14):
    # flow measurement 9: the classic 11-measurement critical tuple
    q = IndexQuery(ieee14.H, 9)
    res_a = fdi_index(q)
    res_g = cost_weighted_index(q)
    assert res_a.objective == 11
    assert res_g.objective == pytest.approx(6.0)
    assert len(res_g.integrity_set) == 1 and len(res_g.availability_set) == 10
    assert res_a.support == (9, 10, 15, 29, 30, 35, 44, 45, 46, 47, 49)
    _assert_result_shape(res_a, ieee14.H, 9, q.mu)


def test_injection_target_has_smaller_index(ieee14):
    # the bus-9 injection (row 49) rides a leaf of the grid: seven rows
    q = IndexQuery(ieee14.H, 49)
    assert fdi_index(q).objective == 7


def test_random_matrices_match_oracle():
    rng = np.random.default_rng(101)
    for trial in range(10):
        m = int(rng.integers(5, 11))
        n = int(rng.integers(2, min(m - 1, 5) + 1))
        h = random_observable_matrix(rng, m, n)
        for j in range(1, m + 1):
            size, _ = enumeration_alpha(h, j - 1)
            q = IndexQuery(h, j, mu=0.3)
            assert fdi_index(q).objective == size, f"trial {trial} j {j}"
            assert combined_index(q).objective == size


def test_combined_equals_fdi_by_construction():
    # withdrawing instead of corrupting can never lower the count
    rng = np.random.default_rng(55)
    h = random_observable_matrix(rng, 9, 4)
    for j in (1, 4, 9):
        q = IndexQuery(h, j)
        assert combined_index(q).objective == fdi_index(q).objective


def test_cost_weighted_closed_form():
    # optimal split keeps the target written and prices every other
    # support row at the cheaper of the two actions
    rng = np.random.default_rng(77)
    for _ in range(6):
        h = random_observable_matrix(rng, 8, 3)
        ci = float(rng.uniform(0.5, 2.0))
        ca = float(rng.uniform(0.1, 3.0))
        j = int(rng.integers(1, 9))
        q = IndexQuery(h, j, cost_integrity=ci, cost_availability=ca)
        beta = combined_index(q).objective
        expected = ci + (beta - 1) * min(ci, ca)
        assert cost_weighted_index(q).objective == pytest.approx(expected, rel=1e-9)


def test_cost_weighted_without_availability_is_scaled_alpha(ring4):
    q = IndexQuery(ring4.H, 3, cost_integrity=1.7)
    res = cost_weighted_index(q, availability=False)
    assert res.objective == pytest.approx(1.7 * RING4_ALPHA, rel=1e-12)
    assert res.availability_set == ()


def test_magnitude_homogeneity(ring4):
    small = combined_index(IndexQuery(ring4.H, 5, mu=0.1))
    large = combined_index(IndexQuery(ring4.H, 5, mu=1.0))
    assert small.objective == large.objective
    assert small.support == large.support
    np.testing.assert_allclose(
        large.certificate_c, 10.0 * small.certificate_c, rtol=1e-6
    )


def test_big_m_insensitivity(chain3, ring4):
    for model, j in ((chain3, 2), (ring4, 7)):
        base = IndexQuery(model.H, j)
        forced = IndexQuery(model.H, j, big_m=10.0 * base.resolved_big_m)
        a, b = fdi_index(base), fdi_index(forced)
        assert a.objective == b.objective
        assert a.support == b.support


def test_warm_start_equivalence(ring4):
    q = IndexQuery(ring4.H, 1)
    cold = combined_index(q)
    warm = combined_index(q, warm_support=fdi_index(q).support)
    assert cold.objective == warm.objective
    assert cold.support == warm.support


def test_theorem2_on_chain3(chain3):
    perturbed = perturb_model(chain3, 0.2, seed=3)
    report = verify_theorem2(chain3.H, perturbed.H, target_j=1)
    assert report.indices_equal
    assert report.assumption1_holds is True
    assert report.alpha == report.beta == CHAIN3_ALPHA
    assert report.alpha_perturbed == report.beta_perturbed == CHAIN3_ALPHA


def test_parallel_classes_structure(ieee14):
    classes, row_class = parallel_classes(ieee14.H)
    assert sum(len(c) for c in classes) == ieee14.m
    # flow_from and flow_to of the same line are antiparallel rows
    assert row_class[0] == row_class[20]
    for cls in classes:
        lead = ieee14.H[cls[0]]
        for i in cls[1:]:
            cross = np.outer(lead, ieee14.H[i]) - np.outer(ieee14.H[i], lead)
            assert np.max(np.abs(cross)) <= 1e-8 * max(np.abs(lead).max(), 1e-30)


def test_index_sweep_consistent_with_single_solves(chain3):
    rows = index_sweep(chain3, cost_availability=0.5)
    assert [r["j"] for r in rows] == list(range(1, 8))
    for r in rows:
        assert r["alpha"] == r["beta"] == CHAIN3_ALPHA
        assert r["gamma_fdi"] == pytest.approx(float(CHAIN3_ALPHA))
        assert r["gamma_combined"] == pytest.approx(1.0 + (CHAIN3_ALPHA - 1) * 0.5)
        assert r["k_a"] == 1 and r["k_d"] == CHAIN3_ALPHA - 1
        assert r["j"] in r["integrity_set"]
        assert not set(r["integrity_set"]) & set(r["availability_set"])


def test_index_sweep_mapper_matches_serial(chain3):
    from concurrent.futures import ThreadPoolExecutor

    serial = index_sweep(chain3)
    with ThreadPoolExecutor(max_workers=3) as pool:
        threaded = index_sweep(chain3, mapper=pool.map)
    assert serial == threaded


def test_csv_shape(chain3):
    text = format_index_csv(index_sweep(chain3))
    lines = text.splitlines()
    assert lines[0] == (
        "j,alpha,beta,gamma_fdi,gamma_combined,k_a,k_d,integrity_set,availability_set"
    )
    assert len(lines) == 1 + chain3.m
    assert text.endswith("\n") and "\r" not in text


def test_certificate_matches_oracle_refit(chain3):
    res = combined_index(IndexQuery(chain3.H, 1, mu=0.2))
    rows0 = [i - 1 for i in res.support]
    c_ref = certificate_for_set(chain3.H, rows0, 0, 0.2)
    np.testing.assert_allclose(
        chain3.H @ res.certificate_c, chain3.H @ c_ref, atol=1e-9
    )


def test_query_validation(chain3):
    with pytest.raises(SecurityIndexError):
        IndexQuery(chain3.H, 0)
    with pytest.raises(SecurityIndexError):
        IndexQuery(chain3.H, 8)
    with pytest.raises(SecurityIndexError):
        IndexQuery(chain3.H, 1, mu=0.0)
    with pytest.raises(SecurityIndexError):
        IndexQuery(chain3.H, 1, cost_integrity=-1.0)
    with pytest.raises(SecurityIndexError):
        brute_force_index(np.zeros((30, 2)), 1)


@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    scale=st.floats(min_value=0.05, max_value=20.0),
)
@settings(max_examples=12, deadline=None)
def test_row_scaling_leaves_index_unchanged(seed, scale):
    rng = np.random.default_rng(seed)
    h = random_observable_matrix(rng, 7, 3)
    j = int(rng.integers(1, 8))
    base = fdi_index(IndexQuery(h, j)).objective
    h2 = h.copy()
    other = (j % 7)  # scale some row, possibly the target itself
    h2[other] *= scale
    assert fdi_index(IndexQuery(h2, j)).objective == base
