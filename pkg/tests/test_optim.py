import math

import pytest
import torch
from torch import nn

from spk.optim import LARS, OptimConfig, build_optimizer, lars_update, warmup_cosine_lr


def test_trust_ratio_half():
    w = torch.tensor([1.0, 0.0])
    g = torch.tensor([0.0, 2.0])
    lr = 0.3
    new = lars_update(w, g, lr, weight_decay=0.0, eps=0.0)
    # r = 1 / 2, step = 0.5 * lr * g
    assert torch.equal(new, w - 0.5 * lr * g)


def test_zero_weight_is_plain_sgd():
    w, g = torch.zeros(3), torch.tensor([1.0, -2.0, 0.5])
    assert torch.equal(lars_update(w, g, 0.1, weight_decay=0.0), w - 0.1 * g)


def test_zero_grad_is_fixed_point():
    w = torch.tensor([1.0, 2.0])
    assert torch.equal(lars_update(w, torch.zeros(2), 0.1, weight_decay=0.0), w)


def test_equal_norms_reduce_to_sgd():
    w, g = torch.tensor([3.0, 4.0]), torch.tensor([0.0, 5.0])
    assert torch.allclose(lars_update(w, g, 0.2), w - 0.2 * g, atol=0, rtol=0)


@pytest.mark.parametrize("c", [0.01, 1.0, 37.0])
def test_gradient_scale_cancels(c):
    g0 = torch.Generator().manual_seed(1)
    w, g = torch.randn(5, generator=g0), torch.randn(5, generator=g0)
    a = w - lars_update(w, g, 0.1)
    b = w - lars_update(w, c * g, 0.1)
    assert torch.allclose(a, b, rtol=1e-5, atol=1e-7)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        lars_update(torch.zeros(2), torch.zeros(3), 0.1)


def test_lars_optimizer_first_step_matches_functional():
    torch.manual_seed(0)
    layer = nn.Linear(4, 3)
    w0, b0 = layer.weight.detach().clone(), layer.bias.detach().clone()
    opt = LARS(layer.parameters(), lr=0.5, weight_decay=1e-3, momentum=0.9, trust_coefficient=1.0, eps=0.0)
    layer(torch.randn(8, 4)).pow(2).sum().backward()
    gw, gb = layer.weight.grad.clone(), layer.bias.grad.clone()
    opt.step()
    assert torch.allclose(layer.weight, lars_update(w0, gw, 0.5, 1e-3, 0.0), atol=1e-7)
    # 1-D bias: no adaptation, no weight decay
    assert torch.allclose(layer.bias, b0 - 0.5 * gb, atol=1e-7)


def test_warmup_cosine_boundaries():
    assert warmup_cosine_lr(0, 10, 110, 2.0) == 0.0
    assert warmup_cosine_lr(10, 10, 110, 2.0) == 2.0
    assert warmup_cosine_lr(60, 10, 110, 2.0) == pytest.approx(1.0, abs=1e-15)
    assert warmup_cosine_lr(110, 10, 110, 2.0, eta_min=0.1) == pytest.approx(0.1)
    assert warmup_cosine_lr(5, 0, 10, 1.0) == pytest.approx(0.5)


def test_warmup_cosine_clamps_past_end(caplog):
    assert warmup_cosine_lr(200, 10, 110, 2.0, eta_min=0.05) == 0.05
    assert "clamping" in caplog.text


def test_warmup_cosine_continuous_and_monotone():
    w, t, lr = 7, 50, 3.0
    left = lr * (w - 1e-9) / w
    assert abs(warmup_cosine_lr(w, w, t, lr) - left) < 1e-8
    tail = [warmup_cosine_lr(s, w, t, lr, eta_min=0.2) for s in range(w, t + 1)]
    assert all(a >= b for a, b in zip(tail, tail[1:]))


class _Toy(nn.Module):
    def __init__(self):
        super().__init__()
        self.a = nn.Linear(3, 3)
        self.b = nn.Linear(3, 1)


@pytest.mark.filterwarnings("ignore:Detected call of")
def test_build_lars_with_epoch_warmup():
    cfg = {"optimizer": {"type": "LARS", "lr": 5, "weight_decay": 1e-6},
           "scheduler": {"type": "LinearWarmupCosineAnnealing", "warmup_steps": 2, "total_steps": 10},
           "interval": "epoch"}
    handle = build_optimizer(_Toy(), cfg)
    assert isinstance(handle.optimizer, LARS) and handle.interval == "epoch"
    lrs = []
    for _ in range(4):
        lrs.append(handle.lr())
        handle.scheduler.step()
    assert lrs[:3] == [0.0, 2.5, 5.0]
    assert lrs[3] == pytest.approx(warmup_cosine_lr(3, 2, 10, 5.0))


def test_build_sgd_constant():
    handle = build_optimizer(_Toy(), {"optimizer": {"type": "SGD", "lr": 0.1}, "interval": "step"})
    assert handle.scheduler is None and handle.lr() == 0.1


def test_build_registers_all_params_only():
    toy = _Toy()
    probe = nn.Linear(3, 10)  # lives outside the module, like a monitor head
    handle = build_optimizer(toy, OptimConfig(optimizer="AdamW", lr=1e-3, scheduler="none"))
    registered = {id(p) for g in handle.optimizer.param_groups for p in g["params"]}
    assert registered == {id(p) for p in toy.parameters()}
    assert not registered & {id(p) for p in probe.parameters()}


def test_unknown_types():
    with pytest.raises(ValueError, match="Adagrab.*LARS"):
        OptimConfig.from_dict({"optimizer": {"type": "Adagrab", "lr": 1.0}})
    with pytest.raises(ValueError, match="supported"):
        OptimConfig(scheduler="Step")


def test_no_trainable_params():
    frozen = nn.Linear(2, 2).requires_grad_(False)
    with pytest.raises(ValueError):
        build_optimizer(frozen, {"optimizer": {"type": "SGD", "lr": 0.1}})


def test_default_schedule_spans_run():
    handle = build_optimizer(_Toy(), {"optimizer": {"type": "SGD", "lr": 1.0},
                                      "scheduler": {"type": "LinearWarmupCosineAnnealing"},
                                      "interval": "step"}, steps_per_epoch=10, max_epochs=3)
    assert handle.scheduler.total_steps == 30 and handle.scheduler.warmup_steps == 3
