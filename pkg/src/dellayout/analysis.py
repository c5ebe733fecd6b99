"""Expressivity and diagnostic analyses over sampled layouts.

Graph total weight (GTW) of a layout is the sum of the full symmetric edge
length matrix, i.e. twice the sum of the per-edge lengths. Repeated sampling
gives a GTW distribution; a Gaussian KDE over it and a two-sample KS test
compare graphs.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .features import EdgeLengthVector, edge_length_array
from .graph import Dataset, Graph
from .sampler import LayoutEnsemble, SampleConfig, sample_dataset, sample_ensemble

BANDWIDTH_FLOOR = 1e-6
MODE_GRID = 512
DISTINGUISH_ALPHA = 0.01
STABILITY_ALPHA = 0.05
STABILITY_REPEATS = 5
STABILITY_MIN_PASS = 4


def gtw(lengths) -> float:
    """Graph total weight: ``2 * sum(lengths)`` (each undirected edge appears twice in L)."""
    if isinstance(lengths, EdgeLengthVector):
        lengths = lengths.lengths
    return 2.0 * float(np.sum(lengths))


# ---------------------------------------------------------------------------
# kernel density estimation


def scott_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    std = x.std(ddof=1) if x.size > 1 else 0.0
    return max(std * x.size ** (-0.2), BANDWIDTH_FLOOR)


class GaussianKDE:
    """Gaussian kernel density estimate with a fixed bandwidth."""

    def __init__(self, samples, bandwidth: float | None = None):
        self.samples = np.asarray(samples, dtype=float).ravel()
        if self.samples.size == 0:
            raise ValueError("KDE needs at least one sample")
        if bandwidth is None:
            bandwidth = scott_bandwidth(self.samples)
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        self.bandwidth = float(bandwidth)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.samples) / self.bandwidth
        norm = self.samples.size * self.bandwidth * math.sqrt(2.0 * math.pi)
        return np.exp(-0.5 * z * z).sum(axis=-1) / norm

    def grid(self, points: int = MODE_GRID, pad: float = 3.0):
        """Evaluate on ``points`` equispaced values over ``[min - pad*h, max + pad*h]``."""
        h = self.bandwidth
        x = np.linspace(self.samples.min() - pad * h, self.samples.max() + pad * h, points)
        return x, self(x)


def kde(samples, bandwidth: float | None = None) -> GaussianKDE:
    return GaussianKDE(samples, bandwidth)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # theta-function form converges fast for small arguments
        s = sum(math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8 * lam * lam)) for j in range(1, 12))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = sum((-1) ** (j - 1) * math.exp(-2 * j * j * lam * lam) for j in range(1, 101))
    return min(1.0, max(0.0, 2.0 * s))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic two-sided p-value."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    en = a.size * b.size / (a.size + b.size)
    return stat, kolmogorov_sf(math.sqrt(en) * stat)


# ---------------------------------------------------------------------------
# GTW distributions


@dataclass(frozen=True, eq=False)
class GtwDistribution:
    graph_id: str
    samples: np.ndarray
    bandwidth: float
    minimum: float
    maximum: float
    mode: float

    @classmethod
    def from_samples(cls, graph_id: str, samples, bandwidth: float | None = None) -> GtwDistribution:
        samples = np.asarray(samples, dtype=float)
        if not (np.isfinite(samples).all() and (samples > 0).all()):
            raise DataError(f"{graph_id}: GTW samples must be positive and finite")
        density = GaussianKDE(samples, bandwidth)
        x, y = density.grid(MODE_GRID, 3.0)
        lo, hi = float(samples.min()), float(samples.max())
        mode = float(np.clip(x[int(np.argmax(y))], lo, hi))
        return cls(graph_id, samples, density.bandwidth, lo, hi, mode)

    def kde(self) -> GaussianKDE:
        return GaussianKDE(self.samples, self.bandwidth)

    def summary(self) -> dict:
        return {"min": self.minimum, "max": self.maximum, "mode": self.mode}


def ensemble_gtws(ens: LayoutEnsemble, g: Graph) -> np.ndarray:
    return np.array([gtw(edge_length_array(lay.positions, g)) for lay in ens.layouts])


def gtw_distribution(g: Graph, n_samples: int, cfg: SampleConfig) -> GtwDistribution:
    """Sample ``n_samples`` layouts of ``g`` and summarise their GTWs."""
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    ens = sample_ensemble(g, cfg.with_(layouts_per_graph=n_samples))
    return GtwDistribution.from_samples(g.graph_id, ensemble_gtws(ens, g))


# ---------------------------------------------------------------------------
# layout distances and MDS


@dataclass(frozen=True, eq=False)
class LayoutDistanceMatrix:
    values: np.ndarray  # normalised to [0, 1]
    raw: np.ndarray  # mean absolute edge-length difference

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class MdsEmbedding:
    coords: np.ndarray
    variance_fraction: float
    eigenvalues: np.ndarray


def layout_distance_matrix(ens: LayoutEnsemble, g: Graph) -> LayoutDistanceMatrix:
    """Mean absolute edge-length difference between every pair of layouts, max-normalised."""
    if ens.k < 2:
        raise ConfigError("layout distances need at least two layouts")
    if g.m == 0:
        raise DataError(f"{g.graph_id}: layout distance undefined for an edgeless graph")
    lengths = np.stack([edge_length_array(lay.positions, g) for lay in ens.layouts])
    raw = np.abs(lengths[:, None, :] - lengths[None, :, :]).mean(axis=2)
    raw = 0.5 * (raw + raw.T)
    np.fill_diagonal(raw, 0.0)
    lo, hi = raw.min(), raw.max()
    values = (raw - lo) / (hi - lo) if hi > lo else np.zeros_like(raw)
    np.fill_diagonal(values, 0.0)
    return LayoutDistanceMatrix(values, raw)


def classical_mds(D, dim: int = 2) -> MdsEmbedding:
    """Torgerson classical MDS of a distance matrix (``LayoutDistanceMatrix`` or array).

    Coordinates come from the top ``dim`` eigenpairs of the double-centred
    squared distances, with negative eigenvalues clamped to zero.
    ``variance_fraction`` is the share of the positive spectrum retained.
    """
    D = np.asarray(D.values if isinstance(D, LayoutDistanceMatrix) else D, dtype=float)
    k = D.shape[0]
    if D.shape != (k, k) or k < 2:
        raise ConfigError("classical_mds needs a square matrix with at least two points")
    J = np.eye(k) - np.full((k, k), 1.0 / k)
    B = -0.5 * J @ np.square(D) @ J
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = np.clip(evals[:dim], 0.0, None)
    coords = evecs[:, :dim] * np.sqrt(top)
    if coords.shape[1] < dim:
        coords = np.hstack([coords, np.zeros((k, dim - coords.shape[1]))])
    # fix the sign of each axis so output is reproducible across LAPACK builds
    for j in range(coords.shape[1]):
        pivot = np.argmax(np.abs(coords[:, j]))
        if coords[pivot, j] < 0:
            coords[:, j] = -coords[:, j]
    positive = evals[evals > 0].sum()
    fraction = float(top[top > 0].sum() / positive) if positive > 0 else 1.0
    return MdsEmbedding(coords, min(fraction, 1.0), evals)


# ---------------------------------------------------------------------------
# energy curves


def _pad(values, length):
    values = np.asarray(values, dtype=float)
    if values.size >= length:
        return values[:length]
    return np.concatenate([values, np.full(length - values.size, values[-1])])


def energy_curve(graphs: Dataset | Sequence[Graph], cfg: SampleConfig, iterations: int) -> np.ndarray:
    """Mean energy at each iteration ``0..iterations`` over all graphs and layouts.

    Kamada-Kawai traces that stopped early are extended with their final value.
    """
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    params = cfg.layout_params.with_(iterations=iterations)
    ensembles = sample_dataset(graphs, cfg.with_(layout_params=params))
    traces = [_pad(tr.values, iterations + 1) for ens in ensembles for tr in ens.traces]
    if not traces:
        raise DataError("energy curve of an empty dataset")
    return np.mean(traces, axis=0)


# ---------------------------------------------------------------------------
# 1-WL and the built-in pair


def builtin_wl_pair() -> tuple[Graph, Graph]:
    """Decalin (two hexagons sharing an edge) and bicyclopentyl (two pentagons
    joined by a bridge): 10 nodes, 11 edges each, equal under 1-WL."""
    decalin = Graph.from_edges(
        10,
        [(i, (i + 1) % 6) for i in range(6)] + [(0, 6), (6, 7), (7, 8), (8, 9), (9, 1)],
        "decalin",
    )
    bicyclopentyl = Graph.from_edges(
        10,
        [(i, (i + 1) % 5) for i in range(5)] + [(5 + i, 5 + (i + 1) % 5) for i in range(5)] + [(0, 5)],
        "bicyclopentyl",
    )
    return decalin, bicyclopentyl


def wl_equivalent(g1: Graph, g2: Graph) -> bool:
    """True when 1-WL colour refinement cannot tell the graphs apart.

    Both graphs are refined jointly with a shared palette, so colour ids are
    comparable; stops once the partition no longer splits.
    """
    if g1.n != g2.n:
        return False
    colors = ([0] * g1.n, [0] * g2.n)
    classes = 1
    for _ in range(g1.n + 1):
        sigs = [
            [(c[v], tuple(sorted(c[u] for u in g.neighbors[v]))) for v in range(g.n)]
            for g, c in zip((g1, g2), colors)
        ]
        palette = {sig: i for i, sig in enumerate(sorted(set(sigs[0]) | set(sigs[1])))}
        colors = tuple([palette[s] for s in sg] for sg in sigs)
        if Counter(colors[0]) != Counter(colors[1]):
            return False
        if len(palette) == classes:
            return True
        classes = len(palette)
    return True


# ---------------------------------------------------------------------------
# expressivity report


@dataclass
class ExpressivityReport:
    """GTW comparison of a graph pair plus per-graph rerun checks.

    ``stability[gid]`` holds one (statistic, p) per independent rerun pair; a
    graph is stable when at least ``STABILITY_MIN_PASS`` of them exceed
    ``STABILITY_ALPHA``. A single rerun at 5% would false-alarm one run in ten
    across two graphs, so a majority vote is used instead.
    """

    distributions: list[GtwDistribution]
    ks_between: tuple[float, float]
    stability: dict[str, list[tuple[float, float]]]
    wl_equivalent: bool | None = None
    n_samples: int = 50

    @property
    def distinguishable(self) -> bool:
        return self.ks_between[1] < DISTINGUISH_ALPHA

    def stable_passes(self, graph_id: str) -> int:
        return sum(p > STABILITY_ALPHA for _, p in self.stability[graph_id])

    @property
    def stable(self) -> bool:
        return all(self.stable_passes(gid) >= STABILITY_MIN_PASS for gid in self.stability)

    @property
    def passed(self) -> bool:
        return self.distinguishable and self.stable

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "graphs": [
                {"graph_id": d.graph_id, "bandwidth": d.bandwidth, **d.summary()}
                for d in self.distributions
            ],
            "ks_between": {"statistic": self.ks_between[0], "p_value": self.ks_between[1]},
            "ks_p_between": self.ks_between[1],
            "stability": {
                gid: {
                    "reruns": [{"statistic": s, "p_value": p} for s, p in runs],
                    "passes": self.stable_passes(gid),
                    "required": STABILITY_MIN_PASS,
                }
                for gid, runs in self.stability.items()
            },
            "wl_equivalent": self.wl_equivalent,
            "distinguishable": self.distinguishable,
            "stable": self.stable,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"GTW distributions over {self.n_samples} layouts"]
        for d in self.distributions:
            lines.append(
                f"  {d.graph_id:<16} min={d.minimum:.4f} max={d.maximum:.4f} mode={d.mode:.4f}"
            )
        s, p = self.ks_between
        lines.append(f"  between graphs: KS={s:.3f} p={p:.3g} -> "
                     + ("distinguishable" if self.distinguishable else "NOT distinguishable"))
        for gid, runs in self.stability.items():
            ps = " ".join(f"{p:.3g}" for _, p in runs)
            lines.append(f"  reruns {gid:<10} p=[{ps}] {self.stable_passes(gid)}/{len(runs)} > {STABILITY_ALPHA}")
        lines.append("  stable across seeds" if self.stable else "  NOT stable across seeds")
        return "\n".join(lines) + "\n"


_SEED_STRIDE = 0x9E3779B97F4A7C15


def expressivity_report(
    cfg: SampleConfig, n_samples: int = 50, pair: tuple[Graph, Graph] | None = None
) -> ExpressivityReport:
    """Compare the GTW distributions of two graphs (the built-in 1-WL pair by default)
    and check each graph against ``STABILITY_REPEATS`` pairs of independently seeded reruns."""
    g1, g2 = pair if pair is not None else builtin_wl_pair()
    if g1.graph_id == g2.graph_id:
        raise ConfigError("the two graphs need distinct graph ids")
    first = [gtw_distribution(g, n_samples, cfg) for g in (g1, g2)]

    def rerun(g, j):
        seed = (cfg.base_seed + j * _SEED_STRIDE) % 2**64
        return gtw_distribution(g, n_samples, cfg.with_(base_seed=seed)).samples

    stability = {}
    for g in (g1, g2):
        stability[g.graph_id] = [
            ks_two_sample(rerun(g, 2 * r + 1), rerun(g, 2 * r + 2)) for r in range(STABILITY_REPEATS)
        ]
    return ExpressivityReport(
        distributions=first,
        ks_between=ks_two_sample(first[0].samples, first[1].samples),
        stability=stability,
        wl_equivalent=wl_equivalent(g1, g2),
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# CSV exports


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_energy_curve_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(["iteration", "mean_energy"])
        for t, e in enumerate(curve):
            out.writerow([t, repr(float(e))])


def write_gtw_samples_csv(path, dists: Sequence[GtwDistribution]) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(["graph_id", "sample_idx", "gtw"])
        for d in dists:
            for i, x in enumerate(d.samples):
                out.writerow([d.graph_id, i, repr(float(x))])


def write_kde_csv(path, dist: GtwDistribution, points: int = MODE_GRID) -> None:
    x, y = dist.kde().grid(points, 3.0)
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(["x", "density"])
        for a, b in zip(x, y):
            out.writerow([repr(float(a)), repr(float(b))])


def write_distance_matrix_csv(path, D: LayoutDistanceMatrix) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow([f"layout_{j}" for j in range(D.k)])
        for row in D.values:
            out.writerow([repr(float(x)) for x in row])


def write_mds_csv(path, emb: MdsEmbedding) -> None:
    with open(path, "w", newline="") as fh:
        out = _writer(fh)
        out.writerow(["layout_idx", "x", "y"])
        for i, (x, y) in enumerate(emb.coords[:, :2]):
            out.writerow([i, repr(float(x)), repr(float(y))])
