import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clsklab.dynsys import X1_TO_X2
from clsklab.errors import NoRangeError, SymmetryError
from clsklab.topology import (
    ClusterPattern,
    ControlNetwork,
    CouplingTopology,
    PermutationSymmetry,
    alpha_thresholds,
    augmented_coupling,
    block_diagonalize,
    channel_links,
    check_eigenvalue_condition,
    check_requirements,
    control_weights,
    epsilon_range,
    is_symmetry,
    pattern_from_symmetry,
    symmetry_of_pattern,
    validate_topology,
)

D1 = PermutationSymmetry.from_pairs([(1, 8), (2, 7), (3, 6), (4, 5)], 8, base=1)
D2 = PermutationSymmetry.from_pairs([(1, 4), (2, 3), (5, 8), (6, 7)], 8, base=1)


@st.composite
def diffusive(draw, n_min=2, n_max=7):
    """Random connected symmetric zero-row-sum matrix (path backbone plus extras)."""
    n = draw(st.integers(n_min, n_max))
    w = np.zeros((n, n))
    for i in range(n - 1):
        w[i, i + 1] = w[i + 1, i] = draw(st.floats(0.1, 3.0))
    for i in range(n):
        for j in range(i + 2, n):
            if draw(st.booleans()):
                w[i, j] = w[j, i] = draw(st.floats(0.1, 3.0))
    return w - np.diag(w.sum(axis=1))


@st.composite
def symmetric_network(draw):
    """Diffusive matrix with a random involutory symmetry built in."""
    n = draw(st.integers(2, 8))
    perm = list(range(n))
    order = draw(st.permutations(range(n)))
    npairs = draw(st.integers(1, n // 2))
    for k in range(npairs):
        i, j = order[2 * k], order[2 * k + 1]
        perm[i], perm[j] = j, i
    d = PermutationSymmetry.from_permutation(perm)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                v = draw(st.floats(0.1, 3.0))
                for a, b in ((i, j), (perm[i], perm[j])):
                    w[a, b] = w[b, a] = v
    return w - np.diag(w.sum(axis=1)), d


# ------------------------------------------------------------- validation ---


def test_validate_example(xi1, xi2):
    assert validate_topology(CouplingTopology(xi1, X1_TO_X2, 7.0))
    assert validate_topology(CouplingTopology(xi2, X1_TO_X2, 7.0))


def test_validate_identity_fails_row_sums():
    rep = validate_topology(CouplingTopology(np.eye(3), X1_TO_X2))
    assert not rep
    assert not rep["zero_row_sums"].passed
    assert "[0, 1, 2]" in rep["zero_row_sums"].detail


def test_validate_perturbed_entry(xi1):
    bad = xi1.copy()
    bad[0, 1] = 2.0
    rep = validate_topology(CouplingTopology(bad, X1_TO_X2))
    assert not rep["zero_row_sums"].passed
    assert "0" in rep["zero_row_sums"].detail
    assert not rep["symmetric"].passed


def test_validate_disconnected_fails_spectrum():
    xi = np.zeros((3, 3))
    xi[:2, :2] = [[-1, 1], [1, -1]]
    assert not validate_topology(CouplingTopology(xi, X1_TO_X2))["spectrum_ordering"].passed


@settings(max_examples=50, deadline=None)
@given(diffusive())
def test_valid_topologies_have_negative_lambda2(xi):
    rep = validate_topology(CouplingTopology(xi, X1_TO_X2))
    assert rep
    lam = np.sort(np.linalg.eigvalsh(xi))[::-1]
    assert lam[1] < 0


def test_links(xi1):
    links = CouplingTopology(xi1, X1_TO_X2).links()
    assert (0, 7) in links and (0, 3) not in links
    assert len(links) == 10


# --------------------------------------------------------------- symmetry ---


def test_symmetries_of_examples(xi1, xi2):
    assert is_symmetry(xi1, D1)
    assert is_symmetry(xi2, D2)
    assert is_symmetry(xi1, np.eye(8))


def test_d2_is_also_a_symmetry_of_xi1(xi1):
    # Swapping (1,4)(2,3)(5,8)(6,7) maps every link of the first ring onto a link
    assert is_symmetry(xi1, D2)


def test_non_symmetry(xi1):
    swap12 = PermutationSymmetry.from_pairs([(1, 2)], 8, base=1)
    assert not is_symmetry(xi1, swap12)


def test_symmetry_size_mismatch(xi1):
    with pytest.raises(ValueError):
        is_symmetry(xi1, np.eye(5))


def test_permutation_validation():
    with pytest.raises(SymmetryError):
        PermutationSymmetry(np.ones((2, 2)))
    with pytest.raises(SymmetryError):
        PermutationSymmetry(np.array([[0.5, 0.5], [0.5, 0.5]]))


def test_patterns_from_symmetries():
    assert pattern_from_symmetry(D1).canonical() == ClusterPattern.from_labels(
        [[1, 8], [2, 7], [3, 6], [4, 5]]).canonical()
    assert pattern_from_symmetry(D2).canonical() == ClusterPattern.from_labels(
        [[1, 4], [2, 3], [5, 8], [6, 7]]).canonical()
    assert len(pattern_from_symmetry(np.eye(8))) == 8


def test_pattern_from_non_involution():
    cycle = PermutationSymmetry.from_permutation([1, 2, 0])
    with pytest.raises(SymmetryError):
        pattern_from_symmetry(cycle)


def test_pattern_symmetry_round_trip(ex1):
    for s in ex1.symbols:
        p = pattern_from_symmetry(symmetry_of_pattern(s.pattern))
        assert p.canonical() == s.pattern.canonical()
        assert pattern_from_symmetry(symmetry_of_pattern(p)).canonical() == p.canonical()


def test_cluster_pattern_invariants():
    with pytest.raises(ValueError):
        ClusterPattern(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        ClusterPattern(((0,), ()))
    with pytest.raises(ValueError):
        ClusterPattern(((0,), (2,)))
    p = ClusterPattern.from_labels([[1, 3], [2]])
    assert p.labels() == [[1, 3], [2]]
    assert p.same_cluster(0, 2) and not p.same_cluster(0, 1)
    assert p.indicator().sum(axis=1).tolist() == [1, 1, 1]


# ---------------------------------------------------------------- spectra ---


def test_split_example1(xi1):
    sp = block_diagonalize(xi1, D1)
    np.testing.assert_allclose(sp.reconstruct(), xi1, atol=1e-10)
    np.testing.assert_allclose(sp.all_eigs(), np.sort(np.linalg.eigvalsh(xi1)), atol=1e-8)
    assert abs(sp.sync_eigs[0]) < 1e-12
    assert sp.lambda_min == pytest.approx(2.0, abs=1e-10)
    assert sp.lambda_s2 == pytest.approx(-(2 - np.sqrt(2)), abs=1e-10)
    assert abs(sp.lambda_s2) < sp.lambda_min
    assert check_eigenvalue_condition(sp)


def test_split_extra_symmetry_fails_condition(xi1):
    sp = block_diagonalize(xi1, D2)
    assert not check_eigenvalue_condition(sp)
    with pytest.raises(NoRangeError):
        epsilon_range(-10.3, sp)


def test_split_rejects_non_symmetry(xi1):
    with pytest.raises(SymmetryError):
        block_diagonalize(xi1, PermutationSymmetry.from_pairs([(1, 2)], 8, base=1))


def test_split_rejects_inconsistent_pattern(xi1):
    with pytest.raises(SymmetryError):
        block_diagonalize(xi1, D1, ClusterPattern.from_labels([[1, 4], [2, 3], [5, 8], [6, 7]]))


def test_condition_is_strict(xi1):
    sp = block_diagonalize(xi1, D1)
    from dataclasses import replace
    tie = replace(sp, sync_eigs=np.array([0.0, -sp.lambda_min]))
    assert not check_eigenvalue_condition(tie)


@settings(max_examples=50, deadline=None)
@given(symmetric_network(), st.integers(0, 2**32 - 1))
def test_split_properties(net, seed):
    xi, d = net
    sp = block_diagonalize(xi, d)
    np.testing.assert_allclose(sp.reconstruct(), xi, atol=1e-10)
    v = np.random.default_rng(seed).standard_normal(xi.shape[0])
    np.testing.assert_allclose(sp.psi @ (sp.psi.T @ v), v, atol=1e-10)
    np.testing.assert_allclose(sp.all_eigs(), np.sort(np.linalg.eigvalsh(xi)), atol=1e-8)
    assert abs(sp.sync_eigs[0]) < 1e-8
    # ordering of the coupling range agrees with the eigenvalue condition
    if check_eigenvalue_condition(sp):
        lo, hi = epsilon_range(-10.0, sp)
        assert lo < hi
    else:
        with pytest.raises(NoRangeError):
            epsilon_range(-10.0, sp)


def test_epsilon_range_example1(xi1):
    lo, hi = epsilon_range(-10.3, block_diagonalize(xi1, D1))
    assert lo == pytest.approx(5.15, rel=0.02)
    assert hi == pytest.approx(17.46, rel=0.02)


def test_epsilon_range_unit_lower_bound(xi1):
    sp = block_diagonalize(xi1, D1)
    assert epsilon_range(-sp.lambda_min, sp)[0] == pytest.approx(1.0)


def test_epsilon_range_positive_threshold_rejected(xi1):
    with pytest.raises(NoRangeError):
        epsilon_range(1.0, block_diagonalize(xi1, D1))


# ---------------------------------------------------------------- control ---


def test_control_weights_example2(ex2):
    xi = ex2.symbols[0].xi
    p = ClusterPattern.from_labels([[1, 2], [3, 4], [5]])
    np.testing.assert_allclose(control_weights(xi, p), [[-1, 0, 1], [0, -1, 1], [2, 2, -4]])


def test_control_weights_single_cluster(xi1):
    np.testing.assert_allclose(control_weights(xi1, ClusterPattern((tuple(range(8)),))), [[0.0]])


@settings(max_examples=50, deadline=None)
@given(diffusive(), st.data())
def test_control_weights_zero_row_sums(xi, data):
    n = xi.shape[0]
    labels = data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))
    groups = {}
    for i, l in enumerate(labels):
        groups.setdefault(l, []).append(i)
    W = control_weights(xi, ClusterPattern(tuple(tuple(g) for g in groups.values())))
    np.testing.assert_allclose(W.sum(axis=1), 0.0, atol=1e-9)


def test_alpha_thresholds():
    t = alpha_thresholds(-10.5, 3.0, 2.0)
    assert t.alpha2 == pytest.approx(3.5)
    assert t.alpha1 == pytest.approx(1.5)
    assert t.regime(1.0) == "none" and t.regime(2.0) == "induced" and t.regime(4.0) == "controlled"
    z = alpha_thresholds(-10.5, 3.0, 0.0)
    assert z.alpha1 == z.alpha2
    d = alpha_thresholds(-10.5, 6.0, 0.0)
    assert d.alpha2 == pytest.approx(t.alpha2 / 2)
    with pytest.raises(ValueError):
        alpha_thresholds(-10.5, 0.0, 1.0)


def test_control_network_pin_rows():
    with pytest.raises(ValueError):
        ControlNetwork(np.zeros((2, 2)), np.array([[1, 1], [0, 1]]), 1.0)
    c = ControlNetwork(np.zeros((2, 2)), np.array([[1, 0], [0, 1], [0, 1]]), 1.0)
    assert c.L == 2


def test_augmented_coupling_links(ex2):
    adj = augmented_coupling(ex2.symbols[1].xi, ex2.control(1))
    assert adj.shape == (8, 8)
    assert adj[5, 6] != 0  # 1'-2' coupled for the second symbol
    assert adj[0, 5] != 0 and adj[4, 7] != 0


# ----------------------------------------------------------- requirements ---


def test_requirements_example1(ex1):
    rep = ex1.requirements()
    assert rep, str(rep)
    assert [c.name for c in rep.checks] == [
        "node_partition", "i_capacity", "ii_switchable", "iii_channel_unsynchronized",
        "iv_controls_in_transmitter"]
    assert sorted(ex1.channel_links()) == [(0, 1), (2, 3), (4, 5), (6, 7)]


def test_requirements_example2(ex2):
    assert ex2.requirements()


def test_requirements_split_across_cluster(xi1, xi2, ex1):
    # 1 on the transmitter side and 8 on the receiver side: link (1,8) shares a cluster of the first pattern
    tx = [0, 3, 4, 1]
    rx = [2, 5, 6, 7]
    rep = check_requirements([xi1, xi2], ex1.patterns(), tx, rx)
    assert not rep["iii_channel_unsynchronized"].passed
    assert "(1,8)" in rep["iii_channel_unsynchronized"].detail


def test_requirements_single_pattern(xi1, ex1):
    rep = check_requirements([xi1], ex1.patterns()[:1], [0, 3, 4, 7], [1, 2, 5, 6])
    assert not rep["i_capacity"].passed


def test_requirements_non_transmitter_control(xi1, xi2, ex1):
    alt = xi2.copy()
    alt[1, 6] = alt[6, 1] = 2.0  # receiver link 2-7 changes weight
    alt[1, 1] -= 1.0
    alt[6, 6] -= 1.0
    rep = check_requirements([xi1, alt], ex1.patterns(), [0, 3, 4, 7], [1, 2, 5, 6])
    assert not rep["iv_controls_in_transmitter"].passed


def test_requirements_undesignated_control(xi1, xi2, ex1):
    rep = check_requirements([xi1, xi2], ex1.patterns(), [0, 3, 4, 7], [1, 2, 5, 6],
                             control_links=[(0, 3), (3, 4)])
    assert not rep["ii_switchable"].passed


def test_channel_links(xi1):
    assert channel_links(xi1, [0, 3, 4, 7]) == [(0, 1), (2, 3), (4, 5), (6, 7)]
