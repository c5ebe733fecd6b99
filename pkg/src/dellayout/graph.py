"""Simple undirected graphs, dataset ingestion and hop-distance APSP."""

from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyGraphError, FormatError, ParseError

log = logging.getLogger(__name__)

#: Marker for unreachable pairs in a :class:`DistanceMatrix`.
UNREACHABLE = -1


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``edges`` is kept in canonical form: each pair ``(u, v)`` has ``u < v``
    and the tuple is sorted lexicographically. Every per-edge array produced
    downstream follows this order. Use :meth:`from_edges` to build a graph
    from arbitrary pairs.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    graph_id: str = "graph"
    label: int | None = None
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise EmptyGraphError("graph has no nodes")
        prev = None
        for u, v in self.edges:
            if not 0 <= u < v < self.n:
                raise ValueError(f"edge {(u, v)} is not canonical for n={self.n}")
            if prev is not None and (u, v) <= prev:
                raise ValueError("edges must be strictly sorted")
            prev = (u, v)

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[Sequence[int]], graph_id="graph", label=None):
        """Canonicalize ``pairs``; self-loops and duplicates are dropped and counted."""
        seen = set()
        dropped = 0
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                dropped += 1
                continue
            key = (u, v) if u < v else (v, u)
            if key in seen:
                dropped += 1
                continue
            seen.add(key)
        return cls(n, tuple(sorted(seen)), graph_id, label, dropped)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """``(m, 2)`` int64 array of the canonical edge list."""
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 float adjacency matrix."""
        a = np.zeros((self.n, self.n))
        e = self.edge_array
        a[e[:, 0], e[:, 1]] = 1.0
        a[e[:, 1], e[:, 0]] = 1.0
        a.flags.writeable = False
        return a

    def degrees(self) -> list[int]:
        return [len(s) for s in self.neighbors]

    def relabel(self, perm: Sequence[int], graph_id: str | None = None) -> Graph:
        """Return the graph with node ``i`` renamed to ``perm[i]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        return Graph.from_edges(
            self.n,
            ((perm[u], perm[v]) for u, v in self.edges),
            graph_id or self.graph_id,
            self.label,
        )


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric hop-distance matrix; unreachable pairs hold ``UNREACHABLE``."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def connected(self) -> bool:
        return not (self.values == UNREACHABLE).any()


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: tuple[Graph, ...]

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


_HEADER = re.compile(r"^n\s*=\s*(\d+)$")


def parse_edge_list(text: str, graph_id: str = "graph", label: int | None = None) -> Graph:
    """Parse a whitespace separated edge list.

    Lines starting with ``#`` are comments; an optional ``n=<int>`` header
    fixes the node count, otherwise it is ``max id + 1``.
    """
    n_declared = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header = _HEADER.match(line)
        if header:
            if n_declared is not None or pairs:
                raise ParseError("node-count header must precede edges", lineno)
            n_declared = int(header.group(1))
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two node ids, got {raw!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {raw!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError("negative node id", lineno)
        if n_declared is not None and max(u, v) >= n_declared:
            raise ParseError(f"node id exceeds declared n={n_declared}", lineno)
        pairs.append((u, v))

    n = n_declared if n_declared is not None else (max(max(p) for p in pairs) + 1 if pairs else 0)
    if n == 0:
        raise EmptyGraphError("edge list defines no nodes")
    g = Graph.from_edges(n, pairs, graph_id, label)
    if g.dropped:
        log.warning("%s: dropped %d self-loops/duplicate edges", graph_id, g.dropped)
    return g


def read_edge_list(path, graph_id: str | None = None) -> Graph:
    path = Path(path)
    return parse_edge_list(path.read_text(encoding="utf-8"), graph_id or path.stem)


def format_edge_list(g: Graph) -> str:
    lines = [f"n={g.n}"] + [f"{u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def _read_int_rows(path: Path, width: int) -> list[list[int]]:
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p for p in re.split(r"[,\s]+", line) if p]
        if len(parts) != width:
            raise ParseError(f"{path.name}: expected {width} values", lineno)
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            raise ParseError(f"{path.name}: non-integer value in {raw!r}", lineno) from None
    return rows


def _dataset_name(directory: Path) -> str:
    found = sorted(p.name[: -len("_A.txt")] for p in directory.glob("*_A.txt"))
    if not found:
        raise FormatError(f"no *_A.txt file in {directory}")
    if len(found) > 1:
        raise FormatError(f"ambiguous dataset directory, found {found}")
    return found[0]


def parse_tudataset(directory, name: str | None = None) -> Dataset:
    """Load a TUDataset-style directory (``DS_A.txt``, ``DS_graph_indicator.txt``,
    optional ``DS_graph_labels.txt``). File ids are 1-based; nodes are renumbered
    per graph in file order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"{directory} is not a directory")
    name = name or _dataset_name(directory)
    a_path = directory / f"{name}_A.txt"
    ind_path = directory / f"{name}_graph_indicator.txt"
    lab_path = directory / f"{name}_graph_labels.txt"
    for p in (a_path, ind_path):
        if not p.exists():
            raise FormatError(f"missing {p.name}")

    indicator = [r[0] for r in _read_int_rows(ind_path, 1)]
    if not indicator:
        return Dataset(name, ())
    graph_values = sorted(set(indicator))
    slot = {gv: i for i, gv in enumerate(graph_values)}
    local = []
    sizes = [0] * len(graph_values)
    for gv in indicator:
        s = slot[gv]
        local.append(sizes[s])
        sizes[s] += 1

    pairs = [[] for _ in graph_values]
    n_total = len(indicator)
    for lineno, (u, v) in enumerate(_read_int_rows(a_path, 2), start=1):
        if not (1 <= u <= n_total and 1 <= v <= n_total):
            raise FormatError(f"{a_path.name} line {lineno}: node id out of range")
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise FormatError(f"{a_path.name} line {lineno}: edge ({u}, {v}) spans graphs {gu} and {gv}")
        pairs[slot[gu]].append((local[u - 1], local[v - 1]))

    labels = None
    if lab_path.exists():
        labels = [r[0] for r in _read_int_rows(lab_path, 1)]
        if len(labels) != len(graph_values):
            raise FormatError(f"{lab_path.name}: {len(labels)} labels for {len(graph_values)} graphs")

    graphs = []
    for i in range(len(graph_values)):
        # both directions of an edge are normally listed, so `dropped` is not a warning count here
        graphs.append(Graph.from_edges(sizes[i], pairs[i], f"{name}#{i}", labels[i] if labels else None))
    return Dataset(name, tuple(graphs))


def write_tudataset(ds: Dataset, directory) -> None:
    """Write ``ds`` in TUDataset layout, each undirected edge in both directions."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_lines, ind_lines, lab_lines = [], [], []
    offset = 0
    for gi, g in enumerate(ds.graphs, start=1):
        ind_lines.extend([str(gi)] * g.n)
        for u, v in g.edges:
            a_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            a_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        if g.label is not None:
            lab_lines.append(str(g.label))
        offset += g.n
    (directory / f"{ds.name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{ds.name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    if lab_lines:
        if len(lab_lines) != len(ds.graphs):
            raise ValueError("either all or no graphs must carry labels")
        (directory / f"{ds.name}_graph_labels.txt").write_text("\n".join(lab_lines) + "\n")


def load_dataset(path) -> Dataset:
    """Dispatch on ``path``: a directory is a TUDataset, a file an edge list."""
    path = Path(path)
    if path.is_dir():
        return parse_tudataset(path)
    if path.is_file():
        g = read_edge_list(path, f"{path.stem}#0")
        return Dataset(path.stem, (g,))
    raise FormatError(f"input {path} does not exist")


def shortest_paths(g: Graph) -> DistanceMatrix:
    """All-pairs hop distances by BFS from every source (exact for unit weights)."""
    n = g.n
    dist = np.full((n, n), UNREACHABLE, dtype=np.int64)
    nbrs = g.neighbors
    for s in range(n):
        row = dist[s]
        row[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = row[u] + 1
            for w in nbrs[u]:
                if row[w] == UNREACHABLE:
                    row[w] = du
                    queue.append(w)
    dist.flags.writeable = False
    return DistanceMatrix(dist)


def random_sparse_graph(n: int, m: int, rng: np.random.Generator, graph_id="random") -> Graph:
    """Random connected graph: a uniform random recursive tree plus ``m - (n-1)`` extra edges."""
    if m < n - 1 or m > n * (n - 1) // 2:
        raise ValueError(f"cannot build a connected simple graph with n={n}, m={m}")
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    while len(edges) < m:
        u, v = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((u, v))
    return Graph(n, tuple(sorted(edges)), graph_id)


def gnp_graph(n: int, p: float, rng: np.random.Generator, graph_id="gnp") -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())), graph_id)


def complete_graph(n: int, graph_id="complete") -> Graph:
    iu, ju = np.triu_indices(n, 1)
    return Graph(n, tuple(zip(iu.tolist(), ju.tolist())), graph_id)


def path_graph(n: int, graph_id="path") -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)), graph_id)


def cycle_graph(n: int, graph_id="cycle") -> Graph:
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)), graph_id)
