import hashlib

import pytest
import torch

import spk
from spk.callbacks import OnlineKNN, OnlineProbe
from spk.data import transforms as T


def tiny_data(n_train=80, n_val=32, batch_size=16, n_views=2, seed=0, size=16):
    aug = T.Compose(T.ToImage(), T.RandomResizedCrop((size, size), scale=(0.5, 1.0)), T.RandomHorizontalFlip())
    train_ds = spk.data.FromDataset(spk.data.SyntheticShapes(n_train, size=size, seed=0),
                                    names=["image", "label"], transform=aug)
    val_ds = spk.data.FromDataset(spk.data.SyntheticShapes(n_val, size=size, seed=1),
                                  names=["image", "label"], transform=T.ToImage())
    sampler = spk.data.RepeatedRandomSampler(train_ds, n_views=n_views, seed=seed)
    return spk.data.DataModule(
        train=spk.data.make_loader(train_ds, batch_size, sampler=sampler, drop_last=True, seed=seed),
        val=spk.data.make_loader(val_ds, batch_size, seed=seed),
    )


def tiny_module(seed=0, optim=None, forward=None):
    torch.manual_seed(seed)
    optim = optim or {
        "optimizer": {"type": "LARS", "lr": 5.0, "weight_decay": 1e-6},
        "scheduler": {"type": "LinearWarmupCosineAnnealing", "warmup_steps": 2, "total_steps": 20},
        "interval": "step",
    }
    return spk.Module(
        backbone=spk.backbones.SmallConvNet(widths=(8, 16, 16, 16)),
        projector=spk.backbones.mlp(16, 32, 16),
        simclr_loss=spk.losses.NTXEntLoss(0.5),
        forward=forward or spk.forwards.simclr_forward,
        optim=optim,
    )


def tiny_callbacks():
    return [
        OnlineKNN("knn_probe", "embedding", queue_length=64, k=5),
        OnlineProbe("linear_probe", "embedding", num_classes=10, metrics={"top1": 1, "top5": 5}),
    ]


def param_hash(module: torch.nn.Module) -> str:
    h = hashlib.sha256()
    for name, p in sorted(module.named_parameters()):
        h.update(name.encode())
        h.update(p.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


@pytest.fixture
def run_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("SPK_RUN_DIR", raising=False)
    monkeypatch.delenv("SPK_RESUME", raising=False)
    return tmp_path / "run"


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record a one-line verdict for the acceptance summary."""
    def _report(criterion: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        assert ok, detail
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
