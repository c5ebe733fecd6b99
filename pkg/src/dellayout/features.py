"""Per-edge length features from layout ensembles, and their serialization.

A feature tensor for a graph with ``m`` edges and ``k`` layouts is an
``(m, k)`` float64 matrix: row ``e`` holds the Euclidean length of the
``e``-th canonical edge in every layout. Values are exported raw; any
projection or normalisation belongs to the downstream model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .binfmt import Reader, Writer
from .errors import DataError, FormatError
from .graph import Graph
from .layout import Layout
from .sampler import LayoutEnsemble

FEATURE_MAGIC = b"DELF"
FEATURE_VERSION = 1
FEATURE_SUFFIX = ".delf"


@dataclass(frozen=True, eq=False)
class EdgeLengthVector:
    graph_id: str
    layout_index: int
    lengths: np.ndarray


@dataclass(frozen=True, eq=False)
class EdgeFeatureTensor:
    graph_id: str
    n: int
    edges: np.ndarray  # (m, 2) int
    lengths: np.ndarray  # (m, k) float64

    @property
    def m(self) -> int:
        return self.lengths.shape[0]

    @property
    def k(self) -> int:
        return self.lengths.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.lengths[:, j]

    def equals(self, other: EdgeFeatureTensor) -> bool:
        """Bitwise equality."""
        return (
            self.graph_id == other.graph_id
            and self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and self.lengths.shape == other.lengths.shape
            and self.lengths.tobytes() == other.lengths.tobytes()
        )


def edge_length_array(positions: np.ndarray, g: Graph) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[0] != g.n:
        raise DataError(f"{g.graph_id}: layout has {positions.shape[0]} rows, graph has {g.n} nodes")
    e = g.edge_array
    delta = positions[e[:, 0]] - positions[e[:, 1]]
    return np.sqrt(np.einsum("ij,ij->i", delta, delta))


def edge_lengths(layout: Layout, g: Graph, layout_index: int = 0) -> EdgeLengthVector:
    """Lengths of the canonical edges of ``g`` in ``layout``."""
    return EdgeLengthVector(g.graph_id, layout_index, edge_length_array(layout.positions, g))


def feature_tensor(ens: LayoutEnsemble, g: Graph) -> EdgeFeatureTensor:
    if ens.graph_id != g.graph_id:
        raise DataError(f"ensemble {ens.graph_id!r} does not belong to graph {g.graph_id!r}")
    if ens.k == 0:
        raise DataError(f"{g.graph_id}: ensemble has no layouts")
    columns = [edge_length_array(lay.positions, g) for lay in ens.layouts]
    lengths = np.ascontiguousarray(np.stack(columns, axis=1).reshape(g.m, ens.k))
    return EdgeFeatureTensor(g.graph_id, g.n, g.edge_array.copy(), lengths)


def feature_tensors(ensembles: Sequence[LayoutEnsemble], graphs: Sequence[Graph]) -> list[EdgeFeatureTensor]:
    by_id = {g.graph_id: g for g in graphs}
    out = []
    for ens in ensembles:
        if ens.graph_id not in by_id:
            raise DataError(f"archive graph {ens.graph_id!r} is not in the input dataset")
        out.append(feature_tensor(ens, by_id[ens.graph_id]))
    return out


def encode_features(tensors: Sequence[EdgeFeatureTensor]) -> bytes:
    """Header (magic, version, graph count) then per graph: id, n, m, k,
    int32 edge pairs and the k float64 length columns; CRC32 trailer."""
    w = Writer(FEATURE_MAGIC, FEATURE_VERSION)
    w.u32(len(tensors))
    for t in tensors:
        w.text(t.graph_id)
        w.u32(t.n)
        w.u32(t.m)
        w.u32(t.k)
        w.array(t.edges, "<i4")
        # column-major: one contiguous block per layout
        w.array(t.lengths.T, "<f8")
    return w.getvalue()


def decode_features(data: bytes) -> list[EdgeFeatureTensor]:
    r = Reader(data, FEATURE_MAGIC, FEATURE_VERSION, "feature file")
    out = []
    for _ in range(r.u32()):
        graph_id = r.text()
        n, m, k = r.u32(), r.u32(), r.u32()
        edges = r.array(2 * m, "<i4").astype(np.int64).reshape(m, 2)
        lengths = np.ascontiguousarray(r.array(m * k, "<f8").reshape(k, m).T)
        out.append(EdgeFeatureTensor(graph_id, n, edges, lengths))
    r.finish()
    return out


def write_features(path, tensors: Sequence[EdgeFeatureTensor]) -> None:
    Path(path).write_bytes(encode_features(tensors))


def read_features(path) -> list[EdgeFeatureTensor]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"feature file {path} not found")
    return decode_features(path.read_bytes())


def write_features_csv(path, tensors: Sequence[EdgeFeatureTensor]) -> None:
    """CSV mirror with columns ``graph_id,u,v,len_0..len_{k-1}`` at 17 significant digits."""
    ks = {t.k for t in tensors}
    if len(ks) > 1:
        raise DataError(f"CSV mirror needs a common layout count, got {sorted(ks)}")
    k = ks.pop() if ks else 0
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["graph_id", "u", "v"] + [f"len_{j}" for j in range(k)])
        for t in tensors:
            for (u, v), row in zip(t.edges.tolist(), t.lengths):
                out.writerow([t.graph_id, u, v] + [f"{x:.17g}" for x in row])


def read_features_csv(path, node_counts: dict[str, int] | None = None) -> list[EdgeFeatureTensor]:
    """Decode a CSV mirror. ``n`` is not stored there; it is taken from
    ``node_counts`` when given, else ``max id + 1``."""
    rows: dict[str, list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["graph_id", "u", "v"]:
            raise FormatError(f"{path}: unexpected CSV header {header[:3]}")
        for rec in reader:
            rows.setdefault(rec[0], []).append(rec[1:])
    out = []
    for gid, recs in rows.items():
        edges = np.array([[int(r[0]), int(r[1])] for r in recs], dtype=np.int64)
        lengths = np.array([[float(x) for x in r[2:]] for r in recs], dtype=np.float64)
        n = node_counts[gid] if node_counts else int(edges.max()) + 1
        out.append(EdgeFeatureTensor(gid, n, edges, np.ascontiguousarray(lengths)))
    return out
