import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_continuum import instances as I
from ising_continuum.instances import (Dist, InstanceError, IsingInstance, absorb_fields,
                                       energy, frustration, maxcut_value)

from conftest import dense_energy, naive_ground


def _degrees(inst):
    return np.bincount(np.concatenate([inst.rows, inst.cols]), minlength=inst.n)


# -- construction -----------------------------------------------------------


def test_mobius_eight_is_ring_plus_diameters():
    inst = I.gen_mobius_ladder(4)
    ring = {(i, (i + 1) % 8) for i in range(8)}
    chords = {(i, i + 4) for i in range(4)}
    want = {tuple(sorted(e)) for e in ring | chords}
    assert inst.n == 8 and inst.num_edges == 12
    assert inst.edge_set() == want
    assert np.all(inst.weights == -1)


def test_smallest_mobius_is_k4():
    assert I.gen_mobius_ladder(2).edge_set() == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}


def test_large_mobius_is_cubic():
    inst = I.gen_mobius_ladder(500)
    assert inst.num_edges == 1500
    assert np.all(_degrees(inst) == 3)


@pytest.mark.parametrize("bad", [0, 1, -3])
def test_mobius_rejects_tiny(bad):
    with pytest.raises(InstanceError):
        I.gen_mobius_ladder(bad)


def test_four_cycle_circulant():
    inst = I.gen_circulant(4, [1], -1.0)
    assert inst.num_edges == 4
    assert np.all(_degrees(inst) == 2)


@pytest.mark.parametrize("offsets", [[1, 1], [0], [3]])
def test_circulant_rejects_bad_offsets(offsets):
    with pytest.raises(InstanceError):
        I.gen_circulant(5, offsets)


@pytest.mark.parametrize("N,k", [(30, 3), (30, 8), (31, 10), (30, 29), (50, 41)])
def test_random_circulant_degree(N, k):
    inst = I.gen_random_circulant(N, k, seed=3)
    assert np.all(_degrees(inst) == k)
    assert I.circulant_first_row(inst) is not None


def test_odd_degree_circulant_needs_even_n():
    with pytest.raises(InstanceError):
        I.gen_random_circulant(31, 5, seed=0)


@pytest.mark.parametrize("k", [3, 4, 7])
def test_random_regular_is_simple_and_regular(k):
    inst = I.gen_random_regular(40, k, "bimodal", seed=11)
    assert np.all(_degrees(inst) == k)
    assert len(inst.edge_set()) == inst.num_edges
    assert set(np.unique(inst.weights)) <= {-1.0, 1.0}


def test_regular_rejects_odd_stub_count():
    with pytest.raises(InstanceError):
        I.gen_random_regular(9, 3, seed=0)


def test_sk_is_complete():
    inst = I.gen_sk(12, "gaussian", seed=4)
    assert inst.num_edges == 66
    assert np.all(_degrees(inst) == 11)


def test_gaussian_parameters_parse():
    d = Dist.parse("gaussian(1.5, 4)")
    assert (d.kind, d.mean, d.variance) == ("gaussian", 1.5, 4.0)
    with pytest.raises(InstanceError):
        Dist.parse("bimodal(0,1)")
    with pytest.raises(InstanceError):
        Dist.parse("cauchy")


def test_torus_lattice_shape():
    inst = I.gen_torus(4, 6)
    assert inst.n == 24 and inst.num_edges == 48
    assert np.all(_degrees(inst) == 4)
    with pytest.raises(InstanceError):
        I.gen_torus(2, 5)


@pytest.mark.parametrize("topo,size", [("complete", 14), ("torus", (4, 5)), ("regular", 20)])
@pytest.mark.parametrize("dist", ["bimodal", "gaussian"])
def test_mattis_planted_state_is_unfrustrated(topo, size, dist):
    inst, eps = I.gen_mattis(topo, size, dist, seed=9)
    assert frustration(inst, eps) == (0, 0.0)
    assert energy(inst, eps) == -inst.num_edges


def test_chimera_single_cell():
    inst = I.gen_chimera_bf(1, 1, seed=2)
    assert inst.n == 8 and inst.num_edges == 16
    assert np.all(inst.weights == 1)
    assert inst.fields.any()
    assert set(np.unique(inst.fields)) <= {0.0, 1.0}


def test_chimera_two_by_two():
    inst = I.gen_chimera_bf(2, 2, seed=2)
    # 4 cells x 16 intra + 2 rows x 4 vertical + 2 cols x 4 horizontal
    assert inst.n == 32 and inst.num_edges == 64 + 16


def test_chimera_rejects_inverted_bias():
    with pytest.raises(InstanceError):
        I.gen_chimera_bf(1, 1, p0=0.1, p1=0.9)


def test_ladder_field_is_planar_prism():
    inst = I.gen_ladder_field(7)
    assert np.all(_degrees(inst) == 3)
    assert np.all(inst.fields == -1)
    assert I.is_planar(inst)
    assert not I.is_planar(I.gen_mobius_ladder(7))


def test_ladder_field_ground_matches_dense_enumeration():
    inst = I.gen_ladder_field(4)
    best, _ = naive_ground(inst)
    from ising_continuum.exact import brute_force

    assert brute_force(inst).best_energy == best


# -- energy, frustration, fields ----------------------------------------------


def test_energy_matches_dense_form(rng):
    inst = I.gen_sk(9, "gaussian(0.3,2)", seed=1)
    inst = IsingInstance(inst.n, inst.rows, inst.cols, inst.weights, rng.normal(size=9))
    J = inst.matrix()
    for _ in range(50):
        s = rng.choice([-1, 1], size=9)
        assert energy(inst, s) == pytest.approx(dense_energy(J, inst.fields, s), abs=1e-12)


def test_batch_energy_matches_rows(rng):
    inst = I.gen_random_regular(20, 3, "gaussian", seed=5)
    S = rng.choice([-1, 1], size=(7, 20))
    assert np.allclose(energy(inst, S), [energy(inst, s) for s in S])


def test_energy_rejects_wrong_length():
    with pytest.raises(InstanceError):
        energy(I.gen_mobius_ladder(3), np.ones(5))


def test_maxcut_counts_cut_edges():
    inst = I.gen_circulant(4, [1])
    assert maxcut_value(inst, [1, -1, 1, -1]) == 4
    assert maxcut_value(inst, [1, 1, 1, 1]) == 0


def test_frustration_of_antiferro_square():
    inst = I.gen_circulant(4, [1])
    assert frustration(inst, [1, 1, -1, -1]) == (2, 0.5)


def test_absorb_ladder_edge_count():
    assert absorb_fields(I.gen_ladder_field(3)).num_edges == 15


def test_absorb_without_fields_adds_isolated_spin():
    inst = I.gen_mobius_ladder(4)
    ext = absorb_fields(inst)
    assert ext.n == 9 and ext.num_edges == 12
    assert 0 not in set(ext.rows.tolist())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 14))
def test_absorbed_energy_identity(seed, n):
    g = np.random.default_rng(seed)
    base = I.gen_sk(n, "gaussian", seed=seed)
    inst = IsingInstance(n, base.rows, base.cols, base.weights, g.normal(size=n))
    ext = absorb_fields(inst)
    S = g.choice([-1, 1], size=(20, n))
    lifted = np.hstack([np.ones((20, 1), dtype=int), S])
    assert np.allclose(energy(inst, S), energy(ext, lifted))
    assert np.allclose(energy(ext, lifted), energy(ext, -lifted))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_zero_field_flip_symmetry(seed):
    inst = I.gen_random_regular(16, 3, "gaussian", seed=seed)
    s = np.random.default_rng(seed).choice([-1, 1], size=16)
    assert energy(inst, s) == pytest.approx(energy(inst, -s))


# -- serialization ------------------------------------------------------------


@pytest.mark.parametrize("make", [
    lambda: I.gen_sk(7, "gaussian", seed=3),
    lambda: I.gen_chimera_bf(1, 1, seed=3),
    lambda: I.gen_ladder_field(5),
])
def test_json_round_trip_is_bit_exact(make, tmp_path):
    inst = make()
    text = inst.to_json()
    back = IsingInstance.from_json(text)
    assert back.to_json() == text
    assert np.array_equal(back.weights, inst.weights)
    inst.save(tmp_path / "x.json")
    assert IsingInstance.load(tmp_path / "x.json").to_json() == text


def test_json_edges_sorted():
    import json

    doc = json.loads(I.gen_random_regular(12, 3, seed=1).to_json())
    pairs = [(i, j) for i, j, _ in doc["edges"]]
    assert pairs == sorted(pairs)
    assert all(i < j for i, j in pairs)


# -- rewiring -----------------------------------------------------------------


def test_rewire_zero_is_identity():
    base = I.gen_mobius_ladder(10)
    assert I.rewire(base, 0, seed=1).edge_set() == base.edge_set()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), count=st.integers(1, 40))
def test_rewire_preserves_degrees_and_simplicity(seed, count):
    base = I.gen_mobius_ladder(15)
    out = I.rewire(base, count, seed=seed)
    assert np.array_equal(_degrees(out), _degrees(base))
    assert len(out.edge_set()) == out.num_edges
    assert np.all(out.rows < out.cols)


def test_rewire_is_seeded():
    base = I.gen_mobius_ladder(20)
    a, b = I.rewire(base, 6, seed=42), I.rewire(base, 6, seed=42)
    assert a.edge_set() == b.edge_set()
    assert a.edge_set() != I.rewire(base, 6, seed=43).edge_set()


def test_full_rewire_moves_most_edges():
    base = I.gen_mobius_ladder(50)
    out = I.rewire(base, base.num_edges // 2, seed=3)
    assert out.meta["rewired_percent"] > 90


def test_odd_swap_recipe_edges():
    inst = I.mobius_odd_swap(5)
    es = inst.edge_set()
    assert (0, 1) not in es and (6, 7) not in es
    assert (0, 6) in es and (1, 7) in es
    assert np.all(_degrees(inst) == 3)


def test_odd_swap_rejects_even():
    with pytest.raises(InstanceError):
        I.mobius_odd_swap(6)


def test_planar_generator_stays_planar_cubic():
    inst = I.gen_planar3r_field(20, seed=7)
    assert I.is_planar(inst)
    assert np.all(_degrees(inst) == 3)
    assert np.all(inst.fields == -1)
    assert I.gen_planar3r_field(12, rewire_count=0).edge_set() == I.gen_ladder_field(6).edge_set()


def test_planarity_agrees_with_kuratowski_graphs():
    k5 = IsingInstance.from_edges(5, [(i, j, -1) for i in range(5) for j in range(i + 1, 5)])
    k33 = IsingInstance.from_edges(6, [(i, j, -1) for i in range(3) for j in range(3, 6)])
    assert not I.is_planar(k5) and not I.is_planar(k33)
    g = nx.random_labeled_tree(30, seed=1)
    tree = IsingInstance.from_edges(30, [(min(a, b), max(a, b), -1) for a, b in g.edges])
    assert I.is_planar(tree)
