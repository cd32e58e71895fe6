import filecmp

import numpy as np
import pytest

from conftest import brute_has_cycle
from recongnn.canon import canonical_form
from recongnn.datasets import (CSL_SKIPS, Dataset, DatasetSpec, build_dataset, check_hereditary, cycle_item,
                               cycle_twin_pair, kfold_splits, load_dataset, save_dataset)
from recongnn.errors import InvalidArgument, InvalidDataset
from recongnn.generators import has_cycle_of_length, is_connected, label_oracles, random_tree
from recongnn.graph import Graph
from recongnn.wl import wl_distinguishes


@pytest.fixture(scope="module")
def csl():
    return build_dataset(DatasetSpec("csl"))


@pytest.fixture(scope="module")
def cycles4():
    return build_dataset(DatasetSpec("cycles-4", size=2000))


def test_csl_dataset(csl):
    assert len(csl) == 150 and csl.num_classes == 10
    assert all(g.n == 41 and g.m == 82 and set(g.degrees()) == {4} and is_connected(g) for g, _ in csl.items)
    assert sorted(np.bincount([t for _, t in csl.items]).tolist()) == [15] * 10
    assert len(CSL_SKIPS) == 10


def test_csl_classes_pairwise_non_isomorphic(csl):
    reps = {}
    for g, t in csl.items:
        reps.setdefault(t, g)
    forms = {canonical_form(g, cap=41) for g in reps.values()}
    assert len(forms) == 10


def test_cycles4_balanced(cycles4):
    labels = np.array([t for _, t in cycles4.items])
    assert len(labels) == 2000 and labels.sum() == 1000


def test_cycles4_labels_match_oracle(cycles4):
    for g, t in cycles4.items:
        assert has_cycle_of_length(g, 4) == bool(t)


def test_cycles_degree_matching(cycles4):
    avg = {0: [], 1: []}
    for g, t in cycles4.items:
        avg[t].append(2 * g.m / g.n)
    assert abs(np.mean(avg[0]) - np.mean(avg[1])) <= 1.0


@pytest.mark.parametrize("length", [4, 6])
def test_cycle_labels_vs_factorial_oracle(length):
    rng = np.random.default_rng(length)
    for i in range(200):
        n = int(rng.integers(length + 1, length + 4))
        g = cycle_item(length, i % 2, n, False, rng)
        assert brute_has_cycle(g, length) == bool(i % 2) == has_cycle_of_length(g, length)


def test_cycle_twin_pair_is_wl1_equivalent(rng):
    base = random_tree(5, rng)
    pos, neg = cycle_twin_pair(base, 4)
    assert pos.n == neg.n and pos.m == neg.m
    assert not wl_distinguishes(pos, neg, 1)
    assert has_cycle_of_length(pos, 4) and not has_cycle_of_length(neg, 4)


def test_multitask_targets_are_oracles():
    ds = build_dataset(DatasetSpec("multitask", size=200))
    mu, sd = np.array(ds.meta["mean"]), np.array(ds.meta["std"])
    for g, t in ds.items:
        raw = np.asarray(t) * sd + mu
        c, d, r = label_oracles(g)
        assert raw == pytest.approx([float(c), d, r], abs=1e-9)
    _, y = ds.split("train")
    assert np.allclose(y.mean(axis=0), 0.0, atol=1e-9) and np.allclose(y.std(axis=0), 1.0, atol=1e-9)


def test_padded_connectivity_is_hereditary():
    ds = build_dataset(DatasetSpec("padded-connectivity", size=60, ell=1))
    check_hereditary(ds, 1)
    labels = [t for _, t in ds.items]
    assert sum(labels) == 30


def test_check_hereditary_rejects():
    path = Graph(4, [(0, 1), (1, 2), (2, 3)])
    ds = Dataset("x", [(path, 1)], {"train": [0]}, "classification", 0, 2)
    with pytest.raises(InvalidDataset):
        check_hereditary(ds, 1)


def test_unknown_dataset():
    with pytest.raises(InvalidArgument):
        build_dataset(DatasetSpec("zinc"))
    with pytest.raises(InvalidArgument):
        build_dataset(DatasetSpec("cycles-5"))


def test_splits_partition(cycles4):
    cycles4.validate()
    assert len(cycles4.splits["test"]) == 200 and len(cycles4.splits["val"]) == 200


def test_kfold_partition_and_stratified(csl):
    labels = [t for _, t in csl.items]
    tests = []
    for fold in range(5):
        s = kfold_splits(labels, 5, fold)
        assert sorted(s["train"] + s["val"] + s["test"]) == list(range(150))
        assert np.bincount([labels[i] for i in s["test"]]).tolist() == [3] * 10
        tests.extend(s["test"])
    assert sorted(tests) == list(range(150))
    with pytest.raises(InvalidArgument):
        kfold_splits(labels, 5, 5)


def test_validate_catches_bad_splits():
    ds = Dataset("x", [(Graph(1), 0), (Graph(1), 1)], {"train": [0]}, "classification", 0, 2)
    with pytest.raises(InvalidDataset):
        ds.validate()


@pytest.mark.parametrize("name", ["cycles-6", "multitask", "csl"])
def test_dataset_serialization_byte_identical(tmp_path, name):
    spec = DatasetSpec(name, size=100 if name != "csl" else None, seed=3)
    save_dataset(build_dataset(spec), tmp_path / "a")
    save_dataset(build_dataset(spec), tmp_path / "b")
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert cmp.left_list == cmp.right_list and not cmp.diff_files
    for f in cmp.left_list:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_dataset_roundtrip(tmp_path):
    ds = build_dataset(DatasetSpec("cycles-4", size=50, seed=1))
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert [g for g, _ in back.items] == [g for g, _ in ds.items]
    assert [t for _, t in back.items] == [t for _, t in ds.items]
    assert back.splits == ds.splits


def test_different_seeds_differ():
    a = build_dataset(DatasetSpec("cycles-4", size=20, seed=0))
    b = build_dataset(DatasetSpec("cycles-4", size=20, seed=1))
    assert [g for g, _ in a.items] != [g for g, _ in b.items]
