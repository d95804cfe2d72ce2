import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri
from sklearn.decomposition import PCA
from sklearn.metrics import calinski_harabasz_score
from statsmodels.stats import _lilliefors
from statsmodels.stats.diagnostic import lilliefors

from aaspectra.aaindex import AMINO_ACIDS, PropertyRecord
from aaspectra.propgroups import (ASYMPTOTIC_KS_C, GROUP_IDS, KEYWORDS, LILLIEFORS_N20,
                                  DegeneratePartitionError, DescriptorTable, PropertyGroup,
                                  assign_keyword_groups, build_descriptors, calinski_harabasz,
                                  classify_description, group_pca_descriptor, kmeans_cluster,
                                  ks_critical_value, ks_normality_filter, ks_statistic)


def rec(values, acc="R", desc="x"):
    return PropertyRecord(acc, desc, dict(zip(AMINO_ACIDS, map(float, values))))


NORMAL_QUANTILES = ndtri((np.arange(1, 21) - 0.5) / 20)


# ---- normality filter ------------------------------------------------------

def test_normal_quantiles_are_kept():
    d = ks_statistic(NORMAL_QUANTILES)
    # by hand: standardize, then sup |F_n - Phi| over the sample points
    z = np.sort((NORMAL_QUANTILES - NORMAL_QUANTILES.mean()) / NORMAL_QUANTILES.std(ddof=1))
    from scipy.special import ndtr
    i = np.arange(1, 21)
    by_hand = max((i / 20 - ndtr(z)).max(), (ndtr(z) - (i - 1) / 20).max())
    assert d == pytest.approx(by_hand, abs=1e-15)
    assert d < 0.05
    for method in ("lilliefors", "asymptotic"):
        assert ks_normality_filter([rec(NORMAL_QUANTILES)], 0.05, method) != []


def test_constant_record_removed():
    assert ks_normality_filter([rec([3.0] * 20)]) == []


def test_spike_record_removed_and_statistic_matches_statsmodels():
    v = np.array([0.0] * 19 + [100.0])
    d = ks_statistic(v)
    assert d == pytest.approx(lilliefors(v, "norm")[0], abs=1e-12)
    assert d > 1.358 / math.sqrt(20)
    assert ks_normality_filter([rec(v)], 0.05) == []
    assert ks_normality_filter([rec(v)], 0.05, "asymptotic") == []


def test_ks_statistic_matches_statsmodels(rng):
    for _ in range(50):
        v = rng.standard_t(3, 20) * rng.uniform(0.1, 10) + rng.normal()
        assert ks_statistic(v) == pytest.approx(lilliefors(v, "norm")[0], abs=1e-12)


@pytest.mark.parametrize("alpha", [0.10, 0.05, 0.01])
def test_tabulated_critical_values_agree_with_statsmodels_table(alpha):
    table = _lilliefors.lilliefors_table_norm
    assert ks_critical_value(alpha) == pytest.approx(table.crit(alpha, 20), abs=1e-3)
    assert ks_critical_value(alpha, method="asymptotic") == ASYMPTOTIC_KS_C[alpha] / math.sqrt(20)


def test_critical_value_rejects_other_alpha():
    with pytest.raises(ValueError):
        ks_critical_value(0.2)
    with pytest.raises(ValueError):
        ks_critical_value(0.05, n=30)


def test_filter_requires_complete_records():
    bad = rec([1.0] * 19 + [math.nan])
    with pytest.raises(AssertionError):
        ks_normality_filter([bad])


def test_stricter_alpha_keeps_more(aaindex_records):
    from aaspectra.aaindex import drop_incomplete
    complete = drop_incomplete(aaindex_records)
    kept = {a: {r.accession for r in ks_normality_filter(complete, a)} for a in LILLIEFORS_N20}
    assert kept[0.10] <= kept[0.05] <= kept[0.01]


# ---- clustering ------------------------------------------------------------

def _sse(X, labels):
    return sum(((X[labels == c] - X[labels == c].mean(0)) ** 2).sum() for c in np.unique(labels))


def test_kmeans_matches_brute_force_two_partition():
    X = np.array([(0, 0), (0, 0.1), (10, 10), (10, 10.1)])
    part = kmeans_cluster(X, 2, seed=0)
    best = min((np.array(lab) for lab in itertools.product([0, 1], repeat=4) if 0 < sum(lab) < 4),
               key=lambda lab: _sse(X, lab))
    assert _sse(X, part.labels) == pytest.approx(_sse(X, best))
    assert part.labels[0] == part.labels[1] != part.labels[2] == part.labels[3]


def test_kmeans_preconditions():
    X = np.random.default_rng(0).normal(size=(10, 2))
    with pytest.raises(ValueError):
        kmeans_cluster(X, 1)
    with pytest.raises(ValueError):
        kmeans_cluster(np.zeros((0, 2)), 2)
    with pytest.raises(ValueError):
        kmeans_cluster(np.ones((5, 2)), 2)


def test_kmeans_deterministic_and_well_formed(rng):
    X = rng.normal(size=(60, 3))
    a, b = kmeans_cluster(X, 4, seed=11), kmeans_cluster(X, 4, seed=11)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert set(a.labels) <= set(range(4)) and len(set(a.labels)) >= 2
    assert a.score == pytest.approx(calinski_harabasz_score(X, a.labels), rel=1e-12)


def test_ch_hand_values():
    X = np.array([(0, 0), (1, 0), (10, 0), (11, 0)], float)
    assert calinski_harabasz(X, [0, 0, 1, 1]) == pytest.approx(200.0)
    assert calinski_harabasz(X, [0, 1, 0, 1]) < 200.0
    with pytest.raises(DegeneratePartitionError, match="degenerate partition"):
        calinski_harabasz(np.array([(0, 0), (0, 0), (4, 4), (4, 4)], float), [0, 0, 1, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.floats(0.1, 100), st.floats(-50, 50))
def test_ch_matches_sklearn_and_is_similarity_invariant(seed, k, scale, shift):
    r = np.random.default_rng(seed)
    X = r.normal(size=(30, 3))
    labels = np.arange(30) % k
    r.shuffle(labels)
    ch = calinski_harabasz(X, labels)
    assert ch == pytest.approx(calinski_harabasz_score(X, labels), rel=1e-10)
    assert calinski_harabasz(scale * X + shift, labels) == pytest.approx(ch, rel=1e-9)


# ---- keyword grouping ------------------------------------------------------

@pytest.mark.parametrize("desc, kw", [
    ("Normalized frequency of alpha-helix", "alpha_structure"),
    ("Average volumes of residues", "volume"),
    ("Normalized frequency of beta-sheet", "beta_structure"),
    ("Hydrophobicity index", "hydrophobicity"),
    ("Something nobody wrote a rule for", "other_indexes"),
])
def test_classify_description(desc, kw):
    assert classify_description(desc) == kw


def test_custom_mapping_lexicon_priority():
    lex = {"volume": ["size"], "energy": ["size", "energy"]}
    assert classify_description("SIZE of things", lex) == "volume"
    with pytest.raises(ValueError):
        classify_description("x", {"colour": ["red"]})


def test_groups_partition_the_records(aaindex_records):
    groups = assign_keyword_groups(aaindex_records)
    assert [g.group_id for g in groups] == [f"ID-0{i}" for i in range(1, 9)]
    assert [g.keyword for g in groups] == list(KEYWORDS)
    members = [m.accession for g in groups for m in g.members]
    assert sorted(members) == sorted(r.accession for r in aaindex_records)


# ---- PCA descriptor --------------------------------------------------------

def test_identical_properties_fully_explained(rng):
    v = rng.normal(size=20)
    d = group_pca_descriptor(PropertyGroup("ID-01", "alpha_structure", [rec(v, "a"), rec(v, "b")]))
    assert d.explained_variance == pytest.approx(1.0)


def test_negated_property_fully_explained(rng):
    v = rng.normal(size=20)
    d = group_pca_descriptor(PropertyGroup("ID-01", "alpha_structure", [rec(v, "a"), rec(-3 * v + 1, "b")]))
    assert d.explained_variance == pytest.approx(1.0)
    z = (v - v.mean()) / v.std(ddof=1)
    w = d.vector()
    ratio = w / z
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)
    assert w[0] >= 0


def test_group_needs_two_members(rng):
    with pytest.raises(ValueError):
        group_pca_descriptor(PropertyGroup("ID-01", "alpha_structure", [rec(rng.normal(size=20))]))


def test_real_groups_against_sklearn_pca(descriptor_table, aaindex_records):
    by_acc = {r.accession: r for r in aaindex_records}
    for d in descriptor_table:
        M = np.column_stack([by_acc[a].vector() for a in d.member_accessions])
        Z = (M - M.mean(0)) / M.std(0, ddof=1)
        pca = PCA(n_components=1, svd_solver="full").fit(Z)
        assert d.explained_variance == pytest.approx(pca.explained_variance_ratio_[0], abs=1e-10)
        proj = pca.transform(Z)[:, 0]
        np.testing.assert_allclose(np.abs(d.vector()), np.abs(proj), atol=1e-8)
        assert d.weights["A"] >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_pca_invariant_to_member_order_and_maximal(seed, m):
    r = np.random.default_rng(seed)
    base = r.normal(size=(20, 1))
    M = base + 0.7 * r.normal(size=(20, m))
    recs = [rec(M[:, j], f"p{j}") for j in range(m)]
    d1 = group_pca_descriptor(PropertyGroup("ID-01", "volume", recs))
    d2 = group_pca_descriptor(PropertyGroup("ID-01", "volume", recs[::-1]))
    assert d1.explained_variance == pytest.approx(d2.explained_variance, abs=1e-12)
    np.testing.assert_allclose(d1.vector(), d2.vector(), atol=1e-9)
    assert 0 < d1.explained_variance <= 1
    # no unit direction captures more variance than the leading component
    Z = (M - M.mean(0)) / M.std(0, ddof=1)
    total = (Z ** 2).sum()
    for _ in range(20):
        u = r.normal(size=m)
        u /= np.linalg.norm(u)
        assert ((Z @ u) ** 2).sum() / total <= d1.explained_variance + 1e-12


# ---- descriptor table ------------------------------------------------------

def test_table_shape(descriptor_table):
    assert len(descriptor_table) == 8
    assert [d.group_id for d in descriptor_table] == list(GROUP_IDS.values())
    assert sum(descriptor_table.group_sizes.values()) == sum(len(d.member_accessions) for d in descriptor_table)
    for d in descriptor_table:
        assert sorted(d.weights) == sorted(AMINO_ACIDS)


def test_table_round_trip(tmp_path, descriptor_table):
    p = tmp_path / "d.json"
    descriptor_table.save(p)
    back = DescriptorTable.load(p)
    for a, b in zip(descriptor_table, back):
        assert a == b
    doc = descriptor_table.to_dict()
    doc["schema_version"] = 99
    with pytest.raises(ValueError, match="99"):
        DescriptorTable.from_dict(doc)


def test_small_input_flags_empty_groups(rng):
    recs = [rec(rng.normal(size=20), f"v{i}", "Average volume of residue") for i in range(3)]
    table = build_descriptors(recs)
    kept = sum(table.group_sizes.values())
    assert len(table.empty_groups) >= 7
    assert len(table) == (1 if kept >= 2 else 0)


_values20 = st.lists(st.floats(-100, 100, allow_nan=False, allow_subnormal=False), min_size=20, max_size=20)


@settings(max_examples=50, deadline=None)
@given(st.lists(_values20, min_size=1, max_size=12), st.sampled_from([0.10, 0.05, 0.01]))
def test_ks_filter_idempotent(rows, alpha):
    recs = [rec(v, f"r{i}") for i, v in enumerate(rows)]
    once = ks_normality_filter(recs, alpha)
    assert ks_normality_filter(once, alpha) == once
    assert all(r in recs for r in once)
