"""Metric records and sinks.

Names follow ``{stage}/{source}/{metric}`` (``train/loss`` and ``train/lr``
are the two-segment exceptions).
"""

from __future__ import annotations

import csv
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

STAGES = ("train", "val", "test", "predict")


@dataclass(frozen=True)
class LogRecord:
    name: str
    value: float
    step: int
    epoch: int


def check_name(name: str) -> None:
    parts = name.split("/")
    if len(parts) < 2 or parts[0] not in STAGES or not all(parts):
        raise ValueError(f"metric name {name!r} must look like '<stage>/<source>/<metric>' "
                         f"with stage in {STAGES}")


class Sink:
    def write(self, record: LogRecord) -> None:
        raise NotImplementedError

    def flush(self) -> None:
        pass

    def close(self) -> None:
        self.flush()


class MemorySink(Sink):
    def __init__(self):
        self.records: list[LogRecord] = []

    def write(self, record: LogRecord) -> None:
        self.records.append(record)

    def values(self, name: str) -> list[float]:
        return [r.value for r in self.records if r.name == name]


class ConsoleSink(Sink):
    """Prints epoch-level records; per-step records are too chatty."""

    def __init__(self, every_n_steps: int | None = None):
        self.every_n_steps = every_n_steps

    def write(self, record: LogRecord) -> None:
        per_step = record.name in ("train/loss", "train/lr") or record.name.endswith("/loss")
        if per_step and record.name.startswith("train/"):
            if not self.every_n_steps or record.step % self.every_n_steps:
                return
        logger.info("epoch %d step %d  %s = %.6g", record.epoch, record.step, record.name, record.value)


class CSVSink(Sink):
    header = ("name", "value", "step", "epoch")

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        if new:
            self._writer.writerow(self.header)

    def write(self, record: LogRecord) -> None:
        self._writer.writerow((record.name, repr(record.value), record.step, record.epoch))

    def flush(self) -> None:
        if not self._fh.closed:
            self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def read_csv(path: str | Path) -> list[LogRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [LogRecord(r["name"], float(r["value"]), int(r["step"]), int(r["epoch"]))
                for r in csv.DictReader(fh)]


class MetricLogger:
    """Fans records out to every sink; a failing sink is warned about once and dropped."""

    def __init__(self, sinks=()):
        self.sinks: list[Sink] = list(sinks)
        self._lock = threading.Lock()

    def log(self, name: str, value: float, step: int, epoch: int = 0) -> LogRecord:
        check_name(name)
        value = float(value)
        if not math.isfinite(value):
            record = LogRecord(f"{name}/nonfinite", 1.0, step, epoch)
        else:
            record = LogRecord(name, value, step, epoch)
        with self._lock:
            for sink in list(self.sinks):
                try:
                    sink.write(record)
                except Exception as exc:  # sink failures must not stop training
                    logger.warning("dropping metric sink %r after error: %s", sink, exc)
                    self.sinks.remove(sink)
        return record

    def flush(self) -> None:
        with self._lock:
            for sink in self.sinks:
                sink.flush()

    def close(self) -> None:
        with self._lock:
            for sink in self.sinks:
                sink.close()
