"""Few-shot example store: a directory of program snippets."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import EmptyDataset


class FewShotStore:
    """Holds example programs and hands out random subsets."""

    def __init__(self, shots: list[str]):
        cleaned = [s.strip() for s in shots if s and s.strip()]
        if not cleaned:
            raise EmptyDataset("few-shot store is empty")
        self._shots = cleaned

    def __len__(self) -> int:
        return len(self._shots)

    @property
    def shots(self) -> tuple[str, ...]:
        return tuple(self._shots)

    @classmethod
    def from_dir(cls, root) -> "FewShotStore":
        """Load every *.txt under root, sorted by filename."""
        files = sorted(Path(root).glob("*.txt"))
        return cls([f.read_text(encoding="utf-8") for f in files])

    @classmethod
    def bundled(cls) -> "FewShotStore":
        """The example corpus shipped with the package."""
        pkg = resources.files("evocad").joinpath("data/fewshot")
        names = sorted(p.name for p in pkg.iterdir() if p.name.endswith(".txt"))
        return cls([pkg.joinpath(n).read_text(encoding="utf-8") for n in names])

    def sample(self, k: int, rng: np.random.Generator) -> list[str]:
        """k distinct shots in draw order."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if k > len(self._shots):
            raise ValueError(f"asked for {k} shots, store holds {len(self._shots)}")
        idx = rng.choice(len(self._shots), size=k, replace=False)
        return [self._shots[i] for i in idx]
