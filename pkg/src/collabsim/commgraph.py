"""Per-round directed communication graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProtocolError
from .gridcore import SelectionMask, max_element


@dataclass(frozen=True, eq=False)
class CommGraph:
    round: int
    adjacency: np.ndarray  # (N, N) bool, entry (i, j) means i sends to j

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got {a.shape}")
        np.fill_diagonal(a, False)
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def num_agents(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def senders_to(self, j: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.adjacency[:, j])]

    def to_dict(self) -> dict:
        return {"round": self.round, "edges": [list(e) for e in self.edges()]}


def build_graph(round_k: int, masks=None, num_agents: int | None = None) -> CommGraph:
    """Complete graph at round 0, otherwise an edge wherever a mask selects anything.

    ``masks`` is an N x N table (nested lists or dict keyed by ``(i, j)``) of
    :class:`SelectionMask`; diagonal entries are ignored.
    """
    if round_k == 0:
        n = num_agents if num_agents is not None else _table_size(masks)
        if n is None:
            raise ProtocolError("round 0 graph needs the agent count")
        return CommGraph(0, ~np.eye(n, dtype=bool))
    if masks is None:
        raise ProtocolError(f"round {round_k} graph needs the selection masks")
    n = _table_size(masks)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            m = _lookup(masks, i, j)
            if m is not None and max_element(m):
                adj[i, j] = True
    return CommGraph(round_k, adj)


def _table_size(masks) -> int | None:
    if masks is None:
        return None
    if isinstance(masks, dict):
        return 1 + max((max(i, j) for i, j in masks), default=-1)
    return len(masks)


def _lookup(masks, i: int, j: int) -> SelectionMask | None:
    if isinstance(masks, dict):
        return masks.get((i, j))
    return masks[i][j]
