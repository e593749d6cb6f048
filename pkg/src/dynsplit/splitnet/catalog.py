from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .network import NetworkSpec, ShapeError


@dataclass(frozen=True)
class SplitEntry:
    cut_layers: int  # layers executed on the device
    r_req: float
    t_req: float
    load_fraction: float


@dataclass(frozen=True)
class SplitCatalog:
    entries: tuple[SplitEntry, ...]

    @property
    def K(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: int) -> SplitEntry:
        """1-based access: ``catalog[1]`` is the shallowest split."""
        if not 1 <= k <= len(self.entries):
            raise IndexError(f"split index {k} outside [1, {len(self.entries)}]")
        return self.entries[k - 1]

    def __iter__(self):
        return iter(self.entries)


def client_layers(k: int, n_layers: int, K: int) -> int:
    # ceil(k * L / (K + 1)) in integer arithmetic
    return -(-k * n_layers // (K + 1))


def catalog_cuts(spec: NetworkSpec, K: int, capacity_range: Sequence[float],
                 cost_table: Sequence[Sequence[float]] | None = None) -> SplitCatalog:
    """Place ``K`` cuts and price them.

    Cost defaults to a linear map of client-side MAC share onto the capacity
    range; ``cost_table`` rows ``(R_req, T_req)`` replace it when given.
    """
    L = spec.n_layers
    if K < 1:
        raise ValueError("K must be >= 1")
    if K > L - 1:
        raise ShapeError(f"{K} splits need at least {K + 1} layers, network has {L}")
    low, high = float(capacity_range[0]), float(capacity_range[1])
    macs = spec.macs()
    total = float(sum(macs))
    entries = []
    for k in range(1, K + 1):
        cut = client_layers(k, L, K)
        load = sum(macs[:cut]) / total
        if cost_table is not None:
            r_req, t_req = (float(v) for v in cost_table[k - 1])
        else:
            r_req = t_req = low + (high - low) * load
        entries.append(SplitEntry(cut, r_req, t_req, load))
    return SplitCatalog(tuple(entries))
