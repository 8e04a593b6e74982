from __future__ import annotations


class Callback:
    """Hook points called synchronously by the trainer, in registration order.

    ``trainer`` exposes ``log(name, value)``, ``queues``, ``global_step``,
    ``current_epoch`` and ``device``.
    """

    name: str = "callback"

    def setup(self, trainer, module) -> None:
        pass

    def on_train_epoch_start(self, trainer, module) -> None:
        pass

    def on_train_batch_end(self, trainer, module, outputs: dict, batch: dict) -> None:
        pass

    def on_train_epoch_end(self, trainer, module) -> None:
        pass

    def on_validation_epoch_start(self, trainer, module) -> None:
        pass

    def on_validation_batch_end(self, trainer, module, outputs: dict, batch: dict) -> None:
        pass

    def on_validation_epoch_end(self, trainer, module) -> None:
        pass

    def state_dict(self) -> dict:
        return {}

    def load_state_dict(self, state: dict) -> None:
        pass


def lookup(key: str, outputs: dict, batch: dict, owner: str):
    """Fetch ``key`` from the forward outputs, falling back to the input batch."""
    if key in outputs:
        return outputs[key]
    if key in batch:
        return batch[key]
    raise KeyError(
        f"{owner}: key '{key}' not found; forward emitted {sorted(outputs)}, batch has {sorted(batch)}"
    )
