"""Reproducible sampling of k steady-state layouts per graph."""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .binfmt import Reader, Writer
from .errors import ConfigError, DelError, FormatError
from .graph import Dataset, Graph
from .layout import EnergyTrace, Layout, LayoutParams, compute_layout

log = logging.getLogger(__name__)

ARCHIVE_MAGIC = b"DELA"
ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class SampleConfig:
    layouts_per_graph: int = 8
    base_seed: int = 0
    layout_params: LayoutParams = field(default_factory=LayoutParams)
    thread_budget: int | str = 1

    def __post_init__(self):
        if int(self.layouts_per_graph) != self.layouts_per_graph or self.layouts_per_graph < 1:
            raise ConfigError("layouts_per_graph must be an integer >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.thread_budget != "auto" and (
            not isinstance(self.thread_budget, int) or self.thread_budget < 1
        ):
            raise ConfigError("thread_budget must be a positive integer or 'auto'")

    @property
    def threads(self) -> int:
        if self.thread_budget == "auto":
            return os.cpu_count() or 1
        return self.thread_budget

    def with_(self, **changes) -> SampleConfig:
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class LayoutEnsemble:
    graph_id: str
    layouts: tuple[Layout, ...]
    traces: tuple[EnergyTrace, ...]

    def __post_init__(self):
        if len(self.layouts) != len(self.traces):
            raise ValueError("one trace per layout required")
        shapes = {lay.positions.shape for lay in self.layouts}
        if len(shapes) > 1:
            raise ValueError(f"layouts disagree on (n, d): {sorted(shapes)}")

    @property
    def k(self) -> int:
        return len(self.layouts)


class SamplingError(DelError):
    """Aggregate of per-layout failures; raised only after every task has run."""

    def __init__(self, failures: Sequence[tuple[str, int, Exception]]):
        self.failures = list(failures)
        lines = [f"{gid} layout {i}: {type(e).__name__}: {e}" for gid, i, e in self.failures]
        super().__init__(f"{len(self.failures)} layout(s) failed:\n  " + "\n  ".join(lines))

    @property
    def exit_code(self):
        return getattr(self.failures[0][2], "exit_code", 1)


def layout_seed(base_seed: int, graph_id: str, index: int) -> int:
    """64-bit seed keyed on (base seed, graph id, layout index), independent of scheduling."""
    key = f"{base_seed}\x1f{graph_id}\x1f{index}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _run_task(task):
    g, params, seed = task
    try:
        return compute_layout(g, params, seed)
    except Exception as exc:  # collected and re-raised in aggregate
        return exc


def _run_all(tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(_run_task, tasks))


def sample_dataset(graphs: Dataset | Sequence[Graph], cfg: SampleConfig) -> list[LayoutEnsemble]:
    """Sample ``cfg.layouts_per_graph`` layouts for every graph, preserving order.

    (graph, layout) tasks run on up to ``cfg.threads`` threads; outputs do not
    depend on the thread count.
    """
    graphs = list(graphs)
    k = cfg.layouts_per_graph
    tasks = [
        (g, cfg.layout_params, layout_seed(cfg.base_seed, g.graph_id, i))
        for g in graphs
        for i in range(k)
    ]
    results = _run_all(tasks, cfg.threads)
    failures = []
    ensembles = []
    for gi, g in enumerate(graphs):
        chunk = results[gi * k : (gi + 1) * k]
        bad = [(g.graph_id, i, r) for i, r in enumerate(chunk) if isinstance(r, Exception)]
        failures.extend(bad)
        if not bad:
            ensembles.append(
                LayoutEnsemble(g.graph_id, tuple(r[0] for r in chunk), tuple(r[1] for r in chunk))
            )
    if failures:
        raise SamplingError(failures)
    return ensembles


def sample_ensemble(g: Graph, cfg: SampleConfig) -> LayoutEnsemble:
    return sample_dataset([g], cfg)[0]


# ---------------------------------------------------------------------------
# layout archive (.dela)


def encode_archive(ensembles: Sequence[LayoutEnsemble]) -> bytes:
    """Binary archive: per ensemble the graph id, n, d, k, then per layout its
    seed, iteration count, final energy, algorithm tag, positions and trace."""
    w = Writer(ARCHIVE_MAGIC, ARCHIVE_VERSION)
    w.u32(len(ensembles))
    for ens in ensembles:
        n, d = ens.layouts[0].positions.shape if ens.layouts else (0, 0)
        w.text(ens.graph_id)
        w.u32(n)
        w.u32(d)
        w.u32(ens.k)
        for lay, tr in zip(ens.layouts, ens.traces):
            w.u64(lay.seed)
            w.u32(lay.iterations_run)
            w.f64(lay.final_energy)
            w.text(lay.algorithm)
            w.array(lay.positions, "<f8")
            w.u32(len(tr))
            w.array(tr.values, "<f8")
    return w.getvalue()


def decode_archive(data: bytes) -> list[LayoutEnsemble]:
    r = Reader(data, ARCHIVE_MAGIC, ARCHIVE_VERSION, "layout archive")
    ensembles = []
    for _ in range(r.u32()):
        graph_id = r.text()
        n, d, k = r.u32(), r.u32(), r.u32()
        layouts, traces = [], []
        for _ in range(k):
            seed, iters, energy, algo = r.u64(), r.u32(), r.f64(), r.text()
            positions = r.array(n * d, "<f8").reshape(n, d)
            traces.append(EnergyTrace(r.array(r.u32(), "<f8")))
            layouts.append(Layout(positions, seed, iters, energy, algo))
        ensembles.append(LayoutEnsemble(graph_id, tuple(layouts), tuple(traces)))
    r.finish()
    return ensembles


def write_archive(path, ensembles: Sequence[LayoutEnsemble]) -> None:
    Path(path).write_bytes(encode_archive(ensembles))


def read_archive(path) -> list[LayoutEnsemble]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"layout archive {path} not found")
    return decode_archive(path.read_bytes())


def write_traces_csv(path, ensembles: Sequence[LayoutEnsemble]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["graph_id", "layout_idx", "iteration", "energy"])
        for ens in ensembles:
            for li, tr in enumerate(ens.traces):
                for t, e in enumerate(tr.values):
                    out.writerow([ens.graph_id, li, t, repr(float(e))])


def ensembles_equal(a: LayoutEnsemble, b: LayoutEnsemble) -> bool:
    """Exact equality of two ensembles (positions compared bitwise)."""
    if a.graph_id != b.graph_id or a.k != b.k:
        return False
    return encode_archive([a]) == encode_archive([b])
