from . import sampler, transforms
from ..batch import fold_views
from .adapter import FromDataset, FromTorchDataset, adapt_item
from .collate import DataLoader, IndexedDataset, assemble_batch, make_loader
from .module import DataModule
from .sampler import RepeatedRandomSampler, derive_seed, sampler_indices
from .synthetic import SyntheticShapes

__all__ = [
    "DataLoader",
    "DataModule",
    "FromDataset",
    "FromTorchDataset",
    "IndexedDataset",
    "RepeatedRandomSampler",
    "SyntheticShapes",
    "adapt_item",
    "assemble_batch",
    "derive_seed",
    "fold_views",
    "make_loader",
    "sampler",
    "sampler_indices",
    "transforms",
]
