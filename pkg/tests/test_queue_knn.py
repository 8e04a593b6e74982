import random

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from spk.callbacks import FeatureQueue, QueueRegistry, knn_predict


def test_register_dedups_and_grows():
    reg = QueueRegistry()
    a = reg.register("embedding", 10000, 512)
    b = reg.register("embedding", 20000, 512)
    assert a is b and a.capacity == 20000 and len(reg) == 1


def test_first_registration_is_empty():
    q = QueueRegistry().register("embedding", 8, 4)
    assert q.fill == 0 and q.contents()[0].shape == (0, 4)


def test_dim_mismatch():
    reg = QueueRegistry()
    reg.register("embedding", 10, 512)
    with pytest.raises(ValueError, match="dim 512"):
        reg.register("embedding", 10, 256)


def test_ring_by_hand():
    q = FeatureQueue("e", 4, 1)
    q.append(torch.tensor([[1.0], [2.0], [3.0]]), torch.tensor([1, 2, 3]))
    q.append(torch.tensor([[4.0], [5.0], [6.0]]), torch.tensor([4, 5, 6]))
    feats, labels = q.contents()
    assert q.fill == 4 and feats[:, 0].tolist() == [3.0, 4.0, 5.0, 6.0] and labels.tolist() == [3, 4, 5, 6]


def test_empty_append_and_width_check():
    q = FeatureQueue("e", 4, 2)
    q.append(torch.zeros(0, 2))
    assert q.fill == 0
    with pytest.raises(ValueError):
        q.append(torch.zeros(1, 3))


def test_append_detaches():
    q = FeatureQueue("e", 4, 2)
    x = torch.ones(2, 2, requires_grad=True)
    q.append(x * 2)
    assert not q.features.requires_grad


def test_push_dedups_per_step():
    reg = QueueRegistry()
    reg.register("embedding", 8, 2)
    x = torch.ones(3, 2)
    reg.push("embedding", x, None, step=0)
    reg.push("embedding", x, None, step=0)
    assert reg.queues["embedding"].fill == 3
    reg.push("embedding", x, None, step=1)
    assert reg.queues["embedding"].fill == 6


def test_grow_keeps_order():
    q = FeatureQueue("e", 3, 1)
    q.append(torch.arange(5.0)[:, None])
    q.grow(6)
    q.append(torch.tensor([[9.0]]))
    assert q.contents()[0][:, 0].tolist() == [2.0, 3.0, 4.0, 9.0]


def _check_against_list(capacity, chunks):
    q = FeatureQueue("e", capacity, 1)
    model: list[float] = []
    counter = 0.0
    for size in chunks:
        rows = torch.arange(counter, counter + size)[:, None]
        counter += size
        q.append(rows, torch.arange(size))
        model.extend(rows[:, 0].tolist())
        assert q.contents()[0][:, 0].tolist() == model[-capacity:]
        assert q.fill == min(capacity, len(model))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 64), st.lists(st.integers(0, 100), max_size=20))
def test_fifo_matches_list_model(capacity, chunks):
    _check_against_list(capacity, chunks)


def test_state_round_trip():
    q = FeatureQueue("e", 5, 2)
    q.append(torch.randn(7, 2), torch.arange(7))
    r = FeatureQueue.from_state_dict(q.state_dict())
    assert all(torch.equal(a, b) for a, b in zip(q.contents(), r.contents()))


def brute_knn(queries, feats, labels, k, distance="euclidean"):
    out = []
    for q in queries.tolist():
        ds = []
        for j, f in enumerate(feats.tolist()):
            if distance == "euclidean":
                d = sum((a - b) ** 2 for a, b in zip(q, f)) ** 0.5
            else:
                nq = sum(a * a for a in q) ** 0.5
                nf = sum(b * b for b in f) ** 0.5
                d = 1 - sum(a * b for a, b in zip(q, f)) / (nq * nf)
            ds.append((d, j))
        ds.sort()
        top = [int(labels[j]) for _, j in ds[:k]]
        counts = {lab: top.count(lab) for lab in top}
        best = max(counts.values())
        out.append(next(lab for lab in top if counts[lab] == best))
    return out


def test_knn_exact_match():
    feats = torch.tensor([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]])
    labels = torch.tensor([4, 7, 2])
    assert knn_predict(torch.tensor([[1.0, 1.0]]), feats, labels, k=1).tolist() == [7]


def test_knn_majority_beats_nearest():
    # distances 0.1 (a), 0.2 (a), 0.05 (b) along one axis
    feats = torch.tensor([[0.1], [0.2], [-0.05]])
    labels = torch.tensor([0, 0, 1])
    assert knn_predict(torch.tensor([[0.0]]), feats, labels, k=3).tolist() == [0]


def test_knn_tie_goes_to_nearest():
    feats = torch.tensor([[0.1], [0.2]])
    labels = torch.tensor([0, 1])
    assert knn_predict(torch.tensor([[0.0]]), feats, labels, k=2).tolist() == [0]
    assert knn_predict(torch.tensor([[0.3]]), feats, labels, k=2).tolist() == [1]


@pytest.mark.parametrize("distance", ["euclidean", "cosine"])
@pytest.mark.parametrize("seed", range(8))
def test_knn_matches_brute_force(seed, distance):
    rnd = random.Random(seed)
    g = torch.Generator().manual_seed(seed)
    m, fill, d, k = rnd.randint(1, 40), rnd.randint(10, 256), rnd.randint(1, 6), rnd.randint(1, 10)
    queries, feats = torch.randn(m, d, generator=g, dtype=torch.float64), torch.randn(fill, d, generator=g, dtype=torch.float64)
    labels = torch.randint(0, 4, (fill,), generator=g)
    pred = knn_predict(queries, feats.float(), labels, k, distance)
    # the brute force runs on the float32-rounded values the kernel sees
    assert pred.tolist() == brute_knn(queries.float().double(), feats.float().double(), labels, k, distance)


def test_knn_needs_k_rows():
    with pytest.raises(ValueError):
        knn_predict(torch.zeros(1, 2), torch.zeros(2, 2), torch.zeros(2, dtype=torch.long), k=3)
