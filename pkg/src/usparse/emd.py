"""Expectation-maximization sparsifier: alternate edge swaps with descent.

The swap phase walks the backbone; each edge is taken out, the vertex with
the worst discrepancy is looked up in a max-heap, and the best-gain edge
among that vertex's excluded neighbors (or the removed edge itself at its
prior probability) takes the freed slot.  The descent phase then re-optimizes
probabilities on the new backbone.  Only degree discrepancies are supported;
the gain of an edge against all k-cuts would need exponential enumeration.
"""

from __future__ import annotations

import heapq

from usparse.backbone import BackboneGraph
from usparse.gdb import (
    DEFAULT_H,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TAU_FRACTION,
    Rule,
    SparsifierState,
    apply_step,
    degree_objective,
    descend,
)
from usparse.graph import DiscrepancyMode, UncertainGraph

DEFAULT_MAX_ITERS = 50


class VertexHeap:
    """Max-heap of vertices keyed by |discrepancy|, with lazy invalidation.

    update() pushes a fresh entry stamped with a per-vertex version; stale
    entries are discarded when they surface.  Ties break toward the smaller
    vertex id, keeping the traversal deterministic.
    """

    __slots__ = ("_heap", "_version")

    def __init__(self, keys):
        self._version = [0] * len(keys)
        self._heap = [(-abs(k), u, 0) for u, k in enumerate(keys)]
        heapq.heapify(self._heap)

    def update(self, u: int, key: float) -> None:
        self._version[u] += 1
        heapq.heappush(self._heap, (-abs(key), u, self._version[u]))

    def top(self) -> int:
        heap = self._heap
        while heap and heap[0][2] != self._version[heap[0][1]]:
            heapq.heappop(heap)
        if not heap:
            raise IndexError("heap is empty")
        return heap[0][1]

    def top_key(self) -> float:
        self.top()
        return -self._heap[0][0]


def gain_value(delta_u: float, delta_v: float, candidate_p: float) -> float:
    """Objective improvement from inserting an edge at candidate_p.

    delta_u and delta_v are the endpoint discrepancies with the edge absent;
    inserting mass w shrinks both by w, improving the squared objective by
    delta^2 - (delta - w)^2 per endpoint.
    """
    w = candidate_p
    return (delta_u**2 - (delta_u - w) ** 2) + (delta_v**2 - (delta_v - w) ** 2)


def insertion_gain(state: SparsifierState, idx: int, candidate_p: float) -> float:
    """Gain of inserting the currently excluded edge idx at candidate_p."""
    if state.in_backbone[idx]:
        raise ValueError("gain is defined for edges currently outside the backbone")
    u, v, _ = state.g.edges[idx]
    return gain_value(state.vertex_disc[u], state.vertex_disc[v], candidate_p)


def _candidate_probability(state, idx, norms, h):
    # Rule-optimal clamped (and entropy-gated) probability for an excluded edge.
    u, v, _ = state.g.edges[idx]
    nu, nv = norms[u], norms[v]
    step = (nv * state.vertex_disc[u] + nu * state.vertex_disc[v]) / (nu + nv)
    return apply_step(0.0, step, h)


def e_phase(
    state: SparsifierState,
    h: float,
    mode: DiscrepancyMode = DiscrepancyMode.ABSOLUTE,
) -> int:
    """One swap pass over the backbone; returns the number of actual swaps.

    For each backbone edge e in canonical order: remove it, read the top
    vertex off the heap, and insert the maximum-gain edge among the excluded
    edges incident to that vertex plus e itself at its prior probability.
    Gains tie toward keeping e, then toward the canonically smallest edge.
    The backbone size is invariant across every step.
    """
    g = state.g
    if mode is DiscrepancyMode.RELATIVE:
        d = g.degree_vector()
        norms = [x if x > 0.0 else 1.0 for x in d.tolist()]
    else:
        norms = [1.0] * g.n
    disc = state.vertex_disc
    heap = VertexHeap(disc)
    swaps = 0
    for idx in state.backbone_indices():
        u, v, _ = g.edges[idx]
        prior = state.exclude(idx)
        heap.update(u, disc[u])
        heap.update(v, disc[v])
        top = heap.top()

        # (-gain, keep-preference, canonical pair) ordering picks the winner.
        best = (-gain_value(disc[u], disc[v], prior), 0, (u, v), idx, prior)
        for _, eidx in g.neighbors(top):
            if state.in_backbone[eidx]:
                continue
            a, b, _ = g.edges[eidx]
            w = _candidate_probability(state, eidx, norms, h)
            entry = (-gain_value(disc[a], disc[b], w), 1, (a, b), eidx, w)
            if entry < best:
                best = entry
        _, _, (a, b), chosen, w = best
        state.include(chosen, w)
        heap.update(a, disc[a])
        heap.update(b, disc[b])
        if chosen != idx:
            swaps += 1
    return swaps


def emd_run(
    g: UncertainGraph,
    backbone: BackboneGraph,
    h: float = DEFAULT_H,
    mode: DiscrepancyMode = DiscrepancyMode.ABSOLUTE,
    tau: float | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[UncertainGraph, dict]:
    """Alternate swap and descent phases until the objective stalls.

    The descent phase continues from the probabilities the swap phase left
    behind, so the objective is non-increasing across a full iteration.  The
    output always has exactly as many edges as the input backbone.
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError("h must lie in [0, 1]")
    rule = Rule("degree-rel" if mode is DiscrepancyMode.RELATIVE else "degree-abs")
    state = SparsifierState(g, backbone.edges)
    previous = degree_objective(state, mode)
    tau_eff = tau if tau is not None else DEFAULT_TAU_FRACTION * previous
    history = [previous]
    swap_counts = []
    iterations = 0
    for _ in range(max_iters):
        swap_counts.append(e_phase(state, h, mode))
        state.resync()
        descend(state, rule, h, tau=tau_eff, max_sweeps=max_sweeps)
        current = degree_objective(state, mode)
        history.append(current)
        iterations += 1
        if abs(previous - current) <= tau_eff:
            break
        previous = current
    info = {
        "iterations": iterations,
        "swap_counts": swap_counts,
        "objective_history": history,
        "objective_initial": history[0],
        "objective_final": history[-1],
        "tau": tau_eff,
    }
    return state.to_graph(), info
