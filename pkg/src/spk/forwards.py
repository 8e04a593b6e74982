"""Ready-made forward functions, selectable by name from configs."""

from __future__ import annotations

from .batch import Stage, fold_views


def simclr_forward(self, batch, stage):
    out = {"embedding": self.backbone(batch["image"])}
    if self.training and stage == Stage.TRAIN:
        proj = self.projector(out["embedding"])
        views = fold_views(proj, batch["sample_idx"])
        out["loss"] = self.simclr_loss(views[0], views[1])
    return out


def embedding_forward(self, batch, stage):
    """Backbone features only; no loss, so nothing but callbacks train."""
    return {"embedding": self.backbone(batch["image"])}
