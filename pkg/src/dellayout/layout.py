"""Energy models, forces and single-layout optimizers.

Three families are supported:

* ``fr``: Fruchterman-Reingold spring-electrical model. Attraction
  ``k_attr * d**2`` along edges and repulsion ``k_rep / d`` between all
  pairs; the matching energy is ``k_attr * sum(d**3 / 3) - k_rep * sum(log d)``.
* ``ar``: the (a, r)-power generalisation (attraction ``d**a``, repulsion
  ``d**r``). ``(2, -1)`` is FR, ``(0, -1)`` LinLog, ``(1, -1)`` ForceAtlas.
* ``kk``: Kamada-Kawai springs between all pairs with hop-distance rest
  lengths, minimised one node at a time by Newton-Raphson.

FR and AR layouts are advanced with a Langevin-style update
``P + step * F(P) + sqrt(noise_scale) * eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, NumericDegeneracyError
from .graph import UNREACHABLE, DistanceMatrix, Graph, shortest_paths

ALGORITHMS = ("fr", "kk", "ar", "random")

JITTER = 1e-6


@dataclass(frozen=True)
class LayoutParams:
    """All sampler and optimizer knobs.

    ``max_displacement`` caps the per-node norm of the deterministic part of
    each FR/AR step (the classic FR "temperature"); ``None`` disables it.
    """

    algorithm: str = "fr"
    dim: int = 2
    iterations: int = 50
    k_attr: float = 1.0
    k_rep: float = 1.0
    a_exp: float = 2.0
    r_exp: float = -1.0
    step_size: float = 0.1
    cooling: float = 0.95
    noise_scale: float = 1e-4
    max_displacement: float | None = 0.1
    kk_spring_k: float = 1.0
    kk_tolerance: float = 1e-4
    init_box: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ConfigError("dim must be an integer >= 2")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError("iterations must be an integer >= 1")
        for name in ("k_attr", "k_rep", "step_size", "kk_spring_k", "kk_tolerance", "init_box"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value}")
        if not 0 < self.cooling <= 1:
            raise ConfigError("cooling must lie in (0, 1]")
        if not (self.noise_scale >= 0 and math.isfinite(self.noise_scale)):
            raise ConfigError("noise_scale must be >= 0")
        if self.max_displacement is not None and not self.max_displacement > 0:
            raise ConfigError("max_displacement must be positive or None")
        for name in ("a_exp", "r_exp"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    def with_(self, **changes) -> LayoutParams:
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Layout:
    positions: np.ndarray
    seed: int
    iterations_run: int
    final_energy: float
    algorithm: str

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Total energy per iteration; index 0 is the random initial configuration."""

    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


# ---------------------------------------------------------------------------
# pairwise geometry


def _geometry(P):
    """Return pairwise difference vectors ``p_i - p_j`` and squared distances.

    The diagonal of the squared distances is set to 1 so that it can be used
    in divisions and logarithms without special-casing.
    """
    diff = P[:, None, :] - P[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 1.0)
    return diff, d2


def separate_coincident(P: np.ndarray, rng: np.random.Generator, magnitude: float = JITTER) -> np.ndarray:
    """Jitter the later-indexed node of every coincident pair by a uniform offset."""
    _, d2 = _geometry(P)
    if d2.all():
        return P
    _, later = np.nonzero(np.triu(d2 == 0.0, 1))
    P = P.copy()
    for node in np.unique(later):
        P[node] += rng.uniform(-magnitude, magnitude, P.shape[1])
    return P


def _require_separated(d2):
    if not d2.all():
        raise NumericDegeneracyError("coincident nodes: pairwise distance is zero")


# ---------------------------------------------------------------------------
# spring-electrical family (FR and AR)


def _power_energy(dist, exponent):
    """Antiderivative of ``d**exponent`` evaluated elementwise."""
    if exponent == -1.0:
        return np.log(dist)
    return dist ** (exponent + 1.0) / (exponent + 1.0)


def _spring_electrical(P, g, params, general, need_energy, geometry=None):
    diff, d2 = geometry if geometry is not None else _geometry(P)
    _require_separated(d2)
    dist = np.sqrt(d2)
    if general:
        attract = params.k_attr * dist**params.a_exp
        repel = params.k_rep * dist**params.r_exp
    else:
        attract = params.k_attr * np.square(dist)
        repel = params.k_rep * np.reciprocal(dist)
    coef = (repel - g.adjacency * attract) / dist
    forces = np.einsum("ij,ijk->ik", coef, diff)
    if not need_energy:
        return forces, None

    e = g.edge_array
    edge_d = dist[e[:, 0], e[:, 1]]
    n = P.shape[0]
    if general:
        e_attr = params.k_attr * _power_energy(edge_d, params.a_exp).sum()
        pair = _power_energy(dist, params.r_exp)
        # diagonal entries hold dist == 1
        e_rep = params.k_rep * 0.5 * (pair.sum() - n * _power_energy(np.ones(1), params.r_exp)[0])
    else:
        e_attr = params.k_attr * (edge_d**3).sum() / 3.0
        e_rep = params.k_rep * 0.25 * np.log(d2).sum()
    return forces, float(e_attr - e_rep)


def fr_forces(P: np.ndarray, g: Graph, params: LayoutParams) -> np.ndarray:
    """Fruchterman-Reingold forces (the negative energy gradient), shape ``(n, d)``."""
    return _spring_electrical(np.asarray(P, dtype=float), g, params, False, False)[0]


def ar_forces(P: np.ndarray, g: Graph, params: LayoutParams) -> np.ndarray:
    """Forces of the (a, r)-energy model with exponents ``params.a_exp``, ``params.r_exp``.

    Node ``i`` is pulled towards each neighbour ``j`` with magnitude
    ``k_attr * d_ij**a`` and pushed away from every other node ``k`` with
    magnitude ``k_rep * d_ik**r``.
    """
    return _spring_electrical(np.asarray(P, dtype=float), g, params, True, False)[0]


def fr_energy(P: np.ndarray, g: Graph, params: LayoutParams) -> float:
    return _spring_electrical(np.asarray(P, dtype=float), g, params, False, True)[1]


def ar_energy(P: np.ndarray, g: Graph, params: LayoutParams) -> float:
    """Energy whose negative gradient is :func:`ar_forces` (log terms at exponent -1)."""
    return _spring_electrical(np.asarray(P, dtype=float), g, params, True, True)[1]


def _advance(P, forces, step, params, rng):
    drift = step * forces
    cap = params.max_displacement
    if cap is not None:
        norms = np.sqrt(np.einsum("ij,ij->i", drift, drift))
        over = norms > cap
        if over.any():
            drift[over] *= (cap / norms[over])[:, None]
    out = P + drift
    if params.noise_scale > 0:
        out += math.sqrt(params.noise_scale) * rng.standard_normal(P.shape)
    if not np.isfinite(out).all():
        raise NumericDegeneracyError("layout update produced non-finite coordinates")
    return out


def langevin_step(P, g: Graph, params: LayoutParams, step: float, rng: np.random.Generator) -> np.ndarray:
    """One noisy descent step ``P + step * F(P) + sqrt(noise_scale) * eps``.

    With ``noise_scale == 0`` the generator is not consumed and the step is a
    plain (displacement-capped) gradient step.
    """
    if not step > 0:
        raise ConfigError("step must be positive")
    P = np.asarray(P, dtype=float)
    forces = ar_forces(P, g, params) if params.algorithm == "ar" else fr_forces(P, g, params)
    return _advance(P, forces, step, params, rng)


def initial_positions(n: int, params: LayoutParams, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-params.init_box, params.init_box, size=(n, params.dim))


def _start(g, params, seed, init):
    rng = np.random.default_rng(seed)
    if init is None:
        P = initial_positions(g.n, params, rng)
    else:
        P = np.array(init, dtype=float)
        if P.shape != (g.n, params.dim):
            raise ConfigError(f"init must have shape {(g.n, params.dim)}, got {P.shape}")
    return rng, P


def _spring_electrical_layout(g, params, seed, init, general, tag):
    rng, P = _start(g, params, seed, init)
    trace = np.empty(params.iterations + 1)
    step = params.step_size
    for t in range(params.iterations + 1):
        geometry = _geometry(P)
        if not geometry[1].all():
            P = separate_coincident(P, rng)
            geometry = _geometry(P)
        forces, energy = _spring_electrical(P, g, params, general, True, geometry)
        trace[t] = energy
        if t == params.iterations:
            break
        P = _advance(P, forces, step, params, rng)
        step *= params.cooling
    layout = Layout(P, seed, params.iterations, float(trace[-1]), tag)
    return layout, EnergyTrace(trace)


def fr_layout(g: Graph, params: LayoutParams, seed: int, init=None) -> tuple[Layout, EnergyTrace]:
    """Run ``params.iterations`` Langevin steps of the FR model from a seeded random start.

    The step size decays geometrically, ``step_size * cooling**t``. ``init``
    overrides the random initial positions.
    """
    return _spring_electrical_layout(g, params, seed, init, False, "fr")


def ar_layout(g: Graph, params: LayoutParams, seed: int, init=None) -> tuple[Layout, EnergyTrace]:
    return _spring_electrical_layout(g, params, seed, init, True, "ar")


# ---------------------------------------------------------------------------
# Kamada-Kawai


def kk_ideal_lengths(dm: DistanceMatrix) -> np.ndarray:
    """Hop distances as floats; unreachable pairs get the surrogate ``2 * (n - 1)``."""
    ideal = dm.values.astype(float)
    ideal[dm.values == UNREACHABLE] = 2.0 * (dm.n - 1)
    return ideal


def kk_energy(P: np.ndarray, ideal: np.ndarray, spring_k: float) -> float:
    """``sum_{i<j} spring_k / 2 * (d_ij - l_ij)**2``."""
    P = np.asarray(P, dtype=float)
    diff = P[:, None, :] - P[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return float(0.25 * spring_k * np.square(dist - ideal).sum())


def kk_gradient(P: np.ndarray, ideal: np.ndarray, spring_k: float) -> np.ndarray:
    """Gradient of :func:`kk_energy` with respect to every node position."""
    P = np.asarray(P, dtype=float)
    diff, d2 = _geometry(P)
    _require_separated(d2)
    coef = 1.0 - ideal / np.sqrt(d2)
    np.fill_diagonal(coef, 0.0)
    return spring_k * np.einsum("ij,ijk->ik", coef, diff)


def kk_delta(P: np.ndarray, ideal: np.ndarray, spring_k: float, m: int) -> float:
    """Norm of the energy gradient with respect to node ``m``."""
    return float(np.linalg.norm(_kk_node_terms(np.asarray(P, dtype=float), m, ideal, spring_k)[1]))


def _kk_node_terms(P, m, ideal, spring_k, p=None, hessian=False):
    """Local energy, gradient and (optionally) Hessian for node ``m`` at position ``p``."""
    p = P[m] if p is None else p
    others = np.arange(P.shape[0]) != m
    diff = p - P[others]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if not dist.all():
        raise NumericDegeneracyError(f"node {m} coincides with another node")
    ideal_m = ideal[m, others]
    energy = 0.5 * spring_k * np.square(dist - ideal_m).sum()
    ratio = ideal_m / dist
    grad = spring_k * ((1.0 - ratio)[:, None] * diff).sum(axis=0)
    if not hessian:
        return energy, grad, None
    u = diff / dist[:, None]
    dim = P.shape[1]
    H = spring_k * ((1.0 - ratio).sum() * np.eye(dim) + np.einsum("i,ij,ik->jk", ratio, u, u))
    return energy, grad, H


def _kk_relax_node(P, m, ideal, spring_k, tol, max_inner=50):
    """Minimise the energy over ``p_m`` with the other nodes fixed.

    Newton-Raphson steps, replaced by a scaled gradient step when the local
    Hessian is not positive definite, each followed by backtracking so the
    energy never increases.
    """
    p = P[m].copy()
    n_others = P.shape[0] - 1
    for _ in range(max_inner):
        energy, grad, H = _kk_node_terms(P, m, ideal, spring_k, p, hessian=True)
        if np.linalg.norm(grad) < 0.1 * tol:
            break
        try:
            np.linalg.cholesky(H)
            direction = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            direction = -grad / (spring_k * n_others)
        t = 1.0
        while t > 1e-12:
            trial = p + t * direction
            try:
                trial_energy = _kk_node_terms(P, m, ideal, spring_k, trial)[0]
            except NumericDegeneracyError:
                trial_energy = math.inf
            if trial_energy <= energy:
                break
            t *= 0.5
        else:
            break
        p = trial
    return p


def kk_layout(g: Graph, params: LayoutParams, seed: int, init=None) -> tuple[Layout, EnergyTrace]:
    """Kamada-Kawai layout.

    Each outer sweep performs up to ``n`` single-node relaxations, always on
    the node with the largest gradient norm. Stops once every gradient norm
    is below ``kk_tolerance`` or after ``params.iterations`` sweeps. The trace
    holds the energy after each sweep.
    """
    rng, P = _start(g, params, seed, init)
    P = separate_coincident(P, rng)
    ideal = kk_ideal_lengths(shortest_paths(g))
    k = params.kk_spring_k
    tol = params.kk_tolerance
    trace = [kk_energy(P, ideal, k)]
    sweeps = 0
    converged = g.n == 1
    while not converged and sweeps < params.iterations:
        grad = kk_gradient(P, ideal, k)
        for _ in range(g.n):
            norms = np.sqrt(np.einsum("ij,ij->i", grad, grad))
            m = int(np.argmax(norms))
            if norms[m] < tol:
                converged = True
                break
            old = P[m].copy()
            P[m] = _kk_relax_node(P, m, ideal, k, tol)
            _kk_update_gradient(grad, P, m, old, ideal, k)
        sweeps += 1
        trace.append(kk_energy(P, ideal, k))
    if not np.isfinite(P).all():
        raise NumericDegeneracyError("Kamada-Kawai produced non-finite coordinates")
    return Layout(P, seed, sweeps, float(trace[-1]), "kk"), EnergyTrace(np.array(trace))


def _kk_update_gradient(grad, P, m, old, ideal, k):
    others = np.arange(P.shape[0]) != m
    Q = P[others]
    l_m = ideal[m, others]
    d_old = Q - old
    d_new = Q - P[m]
    dist_old = np.sqrt(np.einsum("ij,ij->i", d_old, d_old))
    dist_new = np.sqrt(np.einsum("ij,ij->i", d_new, d_new))
    grad[others] += k * (
        (1.0 - l_m / dist_new)[:, None] * d_new - (1.0 - l_m / dist_old)[:, None] * d_old
    )
    grad[m] = _kk_node_terms(P, m, ideal, k)[1]


# ---------------------------------------------------------------------------


def layout_energy(P: np.ndarray, g: Graph, params: LayoutParams) -> float:
    """Energy of ``P`` under ``params.algorithm`` (random layouts are scored with FR)."""
    if params.algorithm == "kk":
        return kk_energy(P, kk_ideal_lengths(shortest_paths(g)), params.kk_spring_k)
    if params.algorithm == "ar":
        return ar_energy(P, g, params)
    return fr_energy(P, g, params)


def random_layout(g: Graph, params: LayoutParams, seed: int) -> Layout:
    """Uniform positions in ``[-init_box, init_box]**dim``; identical to every optimizer's start."""
    rng, P = _start(g, params, seed, None)
    P = separate_coincident(P, rng)
    return Layout(P, seed, 0, layout_energy(P, g, params), "random")


def compute_layout(g: Graph, params: LayoutParams, seed: int, init=None) -> tuple[Layout, EnergyTrace]:
    if params.algorithm == "fr":
        return fr_layout(g, params, seed, init)
    if params.algorithm == "ar":
        return ar_layout(g, params, seed, init)
    if params.algorithm == "kk":
        return kk_layout(g, params, seed, init)
    layout = random_layout(g, params, seed)
    return layout, EnergyTrace(np.array([layout.final_energy]))
