"""
Swendsen-Wang dynamics for the ferromagnetic Potts model.

One step from a coloring: keep each monochromatic edge with probability
1 - 1/B, find the connected components of the kept edges, and recolor every
component with a uniform color.  Self-loops are monochromatic by definition
(they count toward the monochromatic edge total) but never affect components.

The module also carries the disordered/ordered expected monochromatic edge
densities E_u and E_m, the U/M/T configuration classes built from them, an
exact transition kernel for tiny instances, and conductance evaluation for
the phase bottleneck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import treefix
from .graphs import RegularGraph, all_colorings, brute_gibbs
from .spinsys import SizeGuardError, build_potts_matrix

EXACT_KERNEL_GUARD = 20000


class UnionFind:
    """Array union-find with path compression, sized once per step."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class SWState:
    colors: np.ndarray
    mono_edges: int


@dataclass(frozen=True)
class SWTrace:
    """Per-step summary statistics of a Swendsen-Wang run."""

    phase: np.ndarray  # dominant color per recorded step
    freqs: np.ndarray  # color frequency vectors, one row per step
    mono_density: np.ndarray  # monochromatic edges / n
    seed: int
    params: dict


@dataclass(frozen=True)
class GapCheck:
    holds: bool
    ratio: float
    threshold: float


def _edge_arrays(g: RegularGraph):
    uv = [(u, v) for u, v in g.edges if u != v]
    loops = sum(1 for u, v in g.edges if u == v)
    u = np.array([e[0] for e in uv], dtype=np.int64)
    v = np.array([e[1] for e in uv], dtype=np.int64)
    return u, v, loops


def mono_edge_count(g: RegularGraph, colors) -> int:
    colors = np.asarray(colors)
    u, v, loops = _edge_arrays(g)
    return int(np.count_nonzero(colors[u] == colors[v])) + loops


def _step_arrays(u, v, loops, n, q, B, colors, rng):
    mono = np.nonzero(colors[u] == colors[v])[0]
    kept = mono[rng.random(mono.size) < (1.0 - 1.0 / B)]
    uf = UnionFind(n)
    for a, b in zip(u[kept].tolist(), v[kept].tolist()):
        uf.union(a, b)
    comp_of = np.empty(n, dtype=np.int64)
    index_of_root: dict = {}
    for w in range(n):
        r = uf.find(w)
        if r not in index_of_root:
            # roots are discovered in vertex order, so component indices are
            # ordered by smallest member; recoloring is seed-deterministic
            index_of_root[r] = len(index_of_root)
        comp_of[w] = index_of_root[r]
    fresh = rng.integers(0, q, size=len(index_of_root))
    new_colors = fresh[comp_of]
    mono_after = int(np.count_nonzero(new_colors[u] == new_colors[v])) + loops
    return new_colors, mono_after


def sw_step(g: RegularGraph, q: int, B: float, state: SWState, rng) -> SWState:
    """One Swendsen-Wang update; requires B >= 1."""
    if B < 1:
        raise ValueError("Swendsen-Wang step requires B >= 1")
    u, v, loops = _edge_arrays(g)
    colors, mono = _step_arrays(u, v, loops, g.n, q, B, np.asarray(state.colors), rng)
    return SWState(colors=colors, mono_edges=mono)


def phase_of(colors, q: int, members=None) -> int:
    """Dominant color among the given vertex set (all vertices by default);
    ties break to the lowest color index."""
    colors = np.asarray(colors)
    if members is not None:
        members = list(members)
        if not members:
            raise ValueError("phase is undefined for an empty vertex set")
        colors = colors[members]
    return int(np.argmax(np.bincount(colors, minlength=q)))


def expected_mono(q: int, delta: int, B: float):
    """Per-vertex expected monochromatic edge counts (E_u, E_m); E_m is None
    below the uniqueness threshold where no majority fixpoint exists."""
    E_u = 0.5 * delta * B / (q + B - 1.0)
    fp = treefix.majority_fixpoint(q, delta, B) if B > 1 else None
    if fp is None:
        return E_u, None
    x = fp.potts_structure[1]
    E_m = 0.5 * delta * B * (x**2 + q - 1) / ((x + q - 1) ** 2 + (B - 1) * (x**2 + q - 1))
    return E_u, E_m


def sw_gap_check(q: int, delta: int) -> GapCheck:
    """At the coexistence activity Bo, whether E_m/E_u exceeds 1/(1 - 1/B);
    guaranteed to hold for q >= 2*delta/log(delta)."""
    if q < 3 or delta < 3:
        raise ValueError("gap check needs q >= 3 and delta >= 3")
    Bo = treefix.potts_thresholds(q, delta).Bo
    E_u, E_m = expected_mono(q, delta, Bo)
    ratio = E_m / E_u
    threshold = Bo / (Bo - 1.0)
    return GapCheck(holds=bool(ratio > threshold), ratio=ratio, threshold=threshold)


def ordered_phase_vector(q: int, delta: int, B: float, color: int = 0) -> np.ndarray:
    """Color-frequency vector of the ordered phase dominated by `color`,
    with the majority weight taken from the attractive majority fixpoint."""
    fp = treefix.majority_fixpoint(q, delta, B)
    if fp is None:
        raise ValueError("no ordered phase below the uniqueness threshold")
    a = float(np.max(fp.alpha))
    vec = np.full(q, (1.0 - a) / (q - 1.0))
    vec[color] = a
    return vec


def default_epsilon(q: int, delta: int, B: float) -> float:
    """Half of half the separation between the disordered and ordered
    reference statistics."""
    E_u, E_m = expected_mono(q, delta, B)
    if E_m is None:
        raise ValueError("epsilon default needs the ordered phase (B >= Bu)")
    u = np.full(q, 1.0 / q)
    m = ordered_phase_vector(q, delta, B)
    return 0.25 * min(float(np.max(np.abs(u - m))), abs(E_m - E_u))


def classify_UMT(
    colors, g: RegularGraph, q: int, delta: int, B: float, eps: float = None, eps_edge: float = None
) -> str:
    """U / M / T classification by color frequencies and monochromatic edge
    density; one epsilon serves both conditions unless eps_edge is given."""
    if eps is None:
        eps = default_epsilon(q, delta, B)
    if eps_edge is None:
        eps_edge = eps
    colors = np.asarray(colors)
    c = np.bincount(colors, minlength=q) / g.n
    density = mono_edge_count(g, colors) / g.n
    E_u, E_m = expected_mono(q, delta, B)
    u = np.full(q, 1.0 / q)
    if np.max(np.abs(c - u)) <= eps and abs(density - E_u) < eps_edge:
        return "U"
    if E_m is not None:
        base = ordered_phase_vector(q, delta, B)
        for j in range(q):
            m_j = np.roll(base, j)
            if np.max(np.abs(c - m_j)) <= eps and abs(density - E_m) < eps_edge:
                return "M"
    return "T"


def chain_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def initial_state(g: RegularGraph, q: int, B: float, delta: int, start, rng) -> np.ndarray:
    """Starting coloring: 'disordered' draws iid uniform colors, ('ordered', i)
    draws iid from the ordered phase vector, and an array is used as given."""
    if isinstance(start, str) and start == "disordered":
        return rng.integers(0, q, size=g.n)
    if isinstance(start, tuple) and start[0] == "ordered":
        vec = ordered_phase_vector(q, delta, B, color=start[1])
        return rng.choice(q, size=g.n, p=vec)
    colors = np.asarray(start, dtype=np.int64)
    if colors.shape != (g.n,):
        raise ValueError("explicit start must assign one color per vertex")
    return colors


def run_chain(
    g: RegularGraph,
    q: int,
    B: float,
    steps: int,
    start="disordered",
    seed: int = 0,
    members=None,
) -> SWTrace:
    """Run Swendsen-Wang and record phase label, color frequencies and
    monochromatic edge density at t = 0..steps.  Deterministic per seed."""
    delta = g.delta
    rng = chain_rng(seed)
    colors = initial_state(g, q, B, delta, start, rng)
    u, v, loops = _edge_arrays(g)
    phases = np.zeros(steps + 1, dtype=np.int64)
    freqs = np.zeros((steps + 1, q))
    mono = np.zeros(steps + 1)
    for t in range(steps + 1):
        counts = np.bincount(colors, minlength=q)
        freqs[t] = counts / g.n
        phases[t] = phase_of(colors, q, members)
        mono[t] = (int(np.count_nonzero(colors[u] == colors[v])) + loops) / g.n
        if t < steps:
            colors, _ = _step_arrays(u, v, loops, g.n, q, B, colors, rng)
    return SWTrace(
        phase=phases,
        freqs=freqs,
        mono_density=mono,
        seed=seed,
        params={"q": q, "B": B, "steps": steps, "start": str(start), "n": g.n},
    )


# ---------------------------------------------------------------------------
# exact kernel and conductance
# ---------------------------------------------------------------------------


def exact_sw_kernel(g: RegularGraph, q: int, B: float) -> np.ndarray:
    """The full transition matrix over q^n states, by summing over all subsets
    of kept monochromatic edges and all component recolorings."""
    if B < 1:
        raise ValueError("Swendsen-Wang kernel requires B >= 1")
    n = g.n
    if q**n > EXACT_KERNEL_GUARD:
        raise SizeGuardError(f"{q}^{n} states exceed the exact-kernel guard")
    states = all_colorings(n, q)
    n_states = len(states)
    u, v, _ = _edge_arrays(g)
    powers = q ** np.arange(n)
    keep_p = 1.0 - 1.0 / B
    assignments_cache = {}
    P = np.zeros((n_states, n_states))
    for s in range(n_states):
        colors = states[s]
        mono = np.nonzero(colors[u] == colors[v])[0]
        m = len(mono)
        for mask in range(2**m):
            kept = [mono[k] for k in range(m) if mask >> k & 1]
            prob = keep_p ** len(kept) * (1.0 - keep_p) ** (m - len(kept))
            uf = UnionFind(n)
            for e in kept:
                uf.union(int(u[e]), int(v[e]))
            comp_of = np.empty(n, dtype=np.int64)
            index_of_root: dict = {}
            for w in range(n):
                r = uf.find(w)
                if r not in index_of_root:
                    index_of_root[r] = len(index_of_root)
                comp_of[w] = index_of_root[r]
            c = len(index_of_root)
            if c not in assignments_cache:
                assignments_cache[c] = all_colorings(c, q)
            assign = assignments_cache[c]
            targets = assign[:, comp_of] @ powers
            np.add.at(P[s], targets, prob / q**c)
    return P


def gibbs_distribution(g: RegularGraph, q: int, B: float) -> np.ndarray:
    oracle = brute_gibbs(g, build_potts_matrix(q, B))
    return oracle.probabilities()


def conductance(g: RegularGraph, q: int, B: float, S, kernel=None, pi=None) -> float:
    """Phi(S) = sum_{s in S} pi(s) P(s, S^c) / (pi(S) pi(S^c)) for a proper
    nonempty state subset S (indices into the q^n state enumeration)."""
    if kernel is None:
        kernel = exact_sw_kernel(g, q, B)
    if pi is None:
        pi = gibbs_distribution(g, q, B)
    n_states = kernel.shape[0]
    mask = np.zeros(n_states, dtype=bool)
    mask[np.asarray(list(S), dtype=np.int64)] = True
    if not mask.any() or mask.all():
        raise ValueError("conductance needs a proper nonempty subset of states")
    flow = float(pi[mask] @ kernel[np.ix_(mask, ~mask)].sum(axis=1))
    pS = float(pi[mask].sum())
    return flow / (pS * (1.0 - pS))


def phase_cut(g: RegularGraph, q: int, color: int, members=None) -> np.ndarray:
    """Indices of the configurations whose phase label equals `color`."""
    states = all_colorings(g.n, q)
    keep = [s for s in range(len(states)) if phase_of(states[s], q, members) == color]
    return np.array(keep, dtype=np.int64)
