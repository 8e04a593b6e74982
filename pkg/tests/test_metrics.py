import math

import numpy as np
import pytest
import scipy.linalg
import torch

from spk.metrics import lidar, rankme


def entropy_rank(values, eps=1e-7):
    values = np.clip(np.asarray(values, dtype=np.float64), 0, None)
    if values.sum() <= 0:
        return 1.0
    p = values / (values.sum() + eps)
    p = p[p > 0]
    return float(np.exp(-(p * np.log(p)).sum()))


def gram_rankme(z, eps=1e-7):
    """Singular values via eigenvalues of the smaller Gram matrix."""
    z = np.asarray(z, dtype=np.float64)
    gram = z @ z.T if z.shape[0] <= z.shape[1] else z.T @ z
    return entropy_rank(np.sqrt(np.clip(np.linalg.eigvalsh(gram), 0, None)), eps)


def test_rank_one():
    z = torch.tensor([[1.0, 2.0, 3.0]]).repeat(10, 1)
    assert rankme(z) == pytest.approx(1.0, abs=1e-6)


def test_identity():
    assert rankme(torch.eye(4)) == pytest.approx(4.0, abs=1e-6)


def test_prescribed_spectrum():
    z = torch.diag(torch.tensor([2.0, 1.0, 1.0, 0.0]))
    expected = 2 ** 1.5
    assert entropy_rank([2, 1, 1, 0]) == pytest.approx(expected, abs=1e-6)
    assert rankme(z) == pytest.approx(expected, abs=1e-4)
    q, _ = torch.linalg.qr(torch.randn(4, 4, generator=torch.Generator().manual_seed(0)))
    assert rankme(q @ z) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("seed", range(10))
def test_bounds_scale_and_gram_route(seed):
    g = torch.Generator().manual_seed(seed)
    z = torch.randn(64, 32, generator=g)
    r = rankme(z)
    assert 1 - 1e-6 <= r <= 32 + 1e-6
    assert rankme(3.7 * z) == pytest.approx(r, rel=1e-5)
    assert r == pytest.approx(gram_rankme(z.numpy()), rel=1e-5)


def test_rankme_rejects_nonfinite():
    with pytest.raises(ValueError):
        rankme(torch.tensor([[float("inf"), 0.0]]))


def lda_oracle(e, delta=1e-4, eps=1e-7):
    """Generalized symmetric eigenproblem Sb v = l Sw v (scipy), same spectrum as the whitened LDA matrix."""
    e = np.asarray(e, dtype=np.float64)
    n, q, d = e.shape
    mu = e.mean(axis=1)
    cb = mu - mu.mean(axis=0)
    sb = cb.T @ cb / (n - 1)
    cw = (e - mu[:, None]).reshape(n * q, d)
    sw = cw.T @ cw / (n * q) + delta * np.eye(d)
    return entropy_rank(scipy.linalg.eigh(sb, sw, eigvals_only=True), eps)


def test_lidar_collapsed():
    assert lidar(torch.ones(5, 3, 4)) == 1.0


def test_lidar_two_classes():
    e = torch.zeros(2, 3, 4)
    e[0, :, 0] = 1.0
    e[1, :, 0] = -1.0
    assert lidar(e) == pytest.approx(1.0, abs=1e-3)
    assert lda_oracle(e.numpy()) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_lidar_orthogonal_classes_give_n_minus_one(n):
    d = n + 2
    g = torch.Generator().manual_seed(n)
    e = torch.zeros(n, 4, d)
    for i in range(n):
        e[i, :, i] = 10.0
    e += 1e-4 * torch.randn(e.shape, generator=g)
    value = lidar(e)
    assert value == pytest.approx(lda_oracle(e.numpy()), rel=1e-6)
    assert value == pytest.approx(n - 1, abs=1e-2)


@pytest.mark.parametrize("seed", range(5))
def test_lidar_orthogonal_invariance_and_oracle(seed):
    g = torch.Generator().manual_seed(seed)
    e = torch.randn(20, 3, 6, generator=g, dtype=torch.float64)
    r, _ = torch.linalg.qr(torch.randn(6, 6, generator=g, dtype=torch.float64))
    assert abs(lidar(e @ r.T) - lidar(e)) <= 1e-6
    assert lidar(e) == pytest.approx(lda_oracle(e.numpy()), rel=1e-6)


def test_lidar_errors():
    with pytest.raises(ValueError):
        lidar(torch.zeros(1, 3, 2))
    with pytest.raises(ValueError):
        lidar(torch.full((3, 2, 2), float("nan")))
    with pytest.raises(ValueError):
        lidar(torch.zeros(3, 2, 2), delta=0.0)
