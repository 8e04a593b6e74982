import copy

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from spk import fold_views, validate_batch


def test_validate_well_formed():
    batch = {"image": torch.zeros(4, 3, 32, 32), "label": torch.arange(4)}
    assert validate_batch(batch, ["image", "label"]) == []


def test_validate_missing_key():
    diags = validate_batch({"label": torch.arange(4)}, ["image", "label"])
    assert len(diags) == 1 and "missing-key" in diags[0] and "'image'" in diags[0]


def test_validate_non_scalar_loss():
    diags = validate_batch({"loss": torch.zeros(2)})
    assert len(diags) == 1 and "non-scalar" in diags[0] and "'loss'" in diags[0]


def test_validate_nonfinite_loss_and_row_mismatch():
    batch = {"loss": torch.tensor(float("nan")), "sample_idx": torch.arange(3), "image": torch.zeros(4, 2)}
    diags = validate_batch(batch)
    assert any("non-finite" in d for d in diags)
    assert any("row-mismatch 'image'" in d for d in diags)


def test_validate_is_pure():
    batch = {"loss": torch.zeros(2), "x": [1, 2]}
    before = copy.deepcopy(batch)
    assert validate_batch(batch) == validate_batch(batch)
    assert batch.keys() == before.keys() and torch.equal(batch["loss"], before["loss"])


def test_validate_passes_unknown_keys():
    assert validate_batch({"whatever": "ok", "nested": [[1.0]]}) == []


def _rows(*names):
    # encode symbolic rows as distinct vectors
    table = {n: float(i) for i, n in enumerate(sorted(set(names)))}
    return torch.tensor([[table[n], -table[n]] for n in names]), table


def test_fold_views_grouped_layout():
    rows, t = _rows("a1", "a2", "b1", "b2")
    v0, v1 = fold_views(rows, torch.tensor([0, 0, 1, 1]))
    assert v0[:, 0].tolist() == [t["a1"], t["b1"]]
    assert v1[:, 0].tolist() == [t["a2"], t["b2"]]


def test_fold_views_interleaved_layout():
    rows, t = _rows("a1", "b1", "a2", "b2")
    v0, v1 = fold_views(rows, [0, 1, 0, 1])
    assert v0[:, 0].tolist() == [t["a1"], t["b1"]]
    assert v1[:, 0].tolist() == [t["a2"], t["b2"]]


def test_fold_views_single_row_identity():
    rows = torch.tensor([[3.0, 4.0]])
    (out,) = fold_views(rows, [7])
    assert torch.equal(out, rows)


def test_fold_views_first_appearance_order():
    rows = torch.arange(4.0)[:, None]
    v0, v1 = fold_views(rows, [9, 2, 9, 2])
    assert v0[:, 0].tolist() == [0.0, 1.0] and v1[:, 0].tolist() == [2.0, 3.0]


def test_fold_views_errors():
    with pytest.raises(ValueError, match="sample_idx value 1"):
        fold_views(torch.zeros(3, 2), [0, 0, 1])
    with pytest.raises(ValueError, match="empty"):
        fold_views(torch.zeros(0, 2), [])


@st.composite
def grouped_batches(draw):
    n = draw(st.integers(1, 12))
    v = draw(st.integers(1, 4))
    ids = draw(st.lists(st.integers(-1000, 1000), min_size=n, max_size=n, unique=True))
    idx = [i for i in ids for _ in range(v)]
    order = draw(st.permutations(range(n * v)))
    idx = [idx[o] for o in order]
    return idx, v


@settings(max_examples=200, deadline=None)
@given(grouped_batches())
def test_fold_views_round_trip(case):
    idx, v = case
    rows = torch.randn(len(idx), 3)
    views = fold_views(rows, idx)
    assert len(views) == v
    # scatter back by occurrence number
    firsts = list(dict.fromkeys(idx))
    seen: dict[int, int] = {}
    rebuilt = torch.empty_like(rows)
    for pos, value in enumerate(idx):
        k = seen.get(value, 0)
        seen[value] = k + 1
        rebuilt[pos] = views[k][firsts.index(value)]
    assert torch.equal(rebuilt, rows)


@settings(max_examples=100, deadline=None)
@given(grouped_batches(), st.randoms(use_true_random=False))
def test_fold_views_group_permutation_covariance(case, rnd):
    idx, v = case
    rows = torch.randn(len(idx), 2)
    firsts = list(dict.fromkeys(idx))
    perm = firsts[:]
    rnd.shuffle(perm)
    # rebuild the batch so groups appear in permuted first-appearance order
    positions = {g: [p for p, x in enumerate(idx) if x == g] for g in firsts}
    order = [p for k in range(v) for g in perm for p in [positions[g][k]]]
    new_rows, new_idx = rows[order], [idx[p] for p in order]
    old = fold_views(rows, idx)
    new = fold_views(new_rows, new_idx)
    mapping = [firsts.index(g) for g in perm]
    for a, b in zip(old, new):
        assert torch.equal(a[mapping], b)
