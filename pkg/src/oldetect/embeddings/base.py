from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """One real vector per node.

    ``struct_dim`` is set for fused (structure + attribute) embeddings and
    marks where the attribute part starts.
    """

    vectors: np.ndarray
    method: str = ""
    struct_dim: int | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ValidationError("embedding matrix must be 2-D")
        if not np.isfinite(self.vectors).all():
            raise ValidationError("embedding contains non-finite entries")
        self.vectors.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.node_count

    def __getitem__(self, item):
        return self.vectors[item]
