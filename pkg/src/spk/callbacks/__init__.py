from .base import Callback
from .collapse import LiDAR, RankMe
from .depth import attach_depth_probes, depth_probes, resolve_layer
from .knn import OnlineKNN, knn_predict
from .probe import OnlineProbe
from .queue import FeatureQueue, QueueRegistry

__all__ = [
    "Callback",
    "FeatureQueue",
    "LiDAR",
    "OnlineKNN",
    "OnlineProbe",
    "QueueRegistry",
    "RankMe",
    "attach_depth_probes",
    "depth_probes",
    "knn_predict",
    "resolve_layer",
]
