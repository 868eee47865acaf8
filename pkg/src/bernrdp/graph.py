"""Inhomogeneous Erdos-Renyi adapter.

Independent edges make an ER graph a Bernoulli vector source: the
n(n-1)/2 upper-triangle edge probabilities become the component
probabilities, and the graph RDP function is the vector solver applied to
that source.  Allocation results are reported per edge (i, j); the
distortion and perception shares are invariant under the normalization
flips, so undoing them is purely an indexing matter.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .solver import BernoulliVectorSource, RdpResult, normalize, rdp

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class EdgeProbabilityMatrix:
    """Symmetric matrix of edge probabilities with a zero diagonal."""

    n_vertices: int
    probs: np.ndarray

    def __post_init__(self):
        n = int(self.n_vertices)
        probs = np.asarray(self.probs, dtype=float)
        if n < 2:
            raise DomainError("a graph source needs at least 2 vertices")
        if probs.shape != (n, n):
            raise DomainError(f"probs must be {n}x{n}, got {probs.shape}")
        asym = np.abs(probs - probs.T)
        if np.any(asym > _SYM_TOL):
            i, j = np.unravel_index(int(np.argmax(asym)), probs.shape)
            raise DomainError(
                f"probs[{i}][{j}]={probs[i, j]!r} != probs[{j}][{i}]={probs[j, i]!r}")
        if np.any(np.abs(np.diag(probs)) > _SYM_TOL):
            i = int(np.argmax(np.abs(np.diag(probs))))
            raise DomainError(f"diagonal must be zero; probs[{i}][{i}]={probs[i, i]!r}")
        if np.any(probs < -_SYM_TOL) or np.any(probs > 1.0 + _SYM_TOL):
            raise DomainError("edge probabilities must lie in [0, 1]")
        sym = 0.5 * (probs + probs.T)
        np.fill_diagonal(sym, 0.0)
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "probs", np.clip(sym, 0.0, 1.0))


def load_matrix(source) -> EdgeProbabilityMatrix:
    """Parse the documented matrix format: a JSON object with
    ``n_vertices`` (int) and ``probs`` (dense row list).

    Accepts bytes, text, or a readable file object.  Symmetry is enforced
    within 1e-12 and then made exact; any larger mismatch or a nonzero
    diagonal is a validation error naming the offending entry.
    """
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise DomainError(f"cannot read matrix from {type(source).__name__}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"matrix file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "n_vertices" not in doc or "probs" not in doc:
        raise DomainError('matrix file needs keys "n_vertices" and "probs"')
    return EdgeProbabilityMatrix(int(doc["n_vertices"]), np.asarray(doc["probs"], dtype=float))


def edge_list(n_vertices: int) -> list[tuple[int, int]]:
    """Upper-triangle edges (i, j), i < j, in row-major order; this is the
    component order used by flatten."""
    return [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)]


def flatten(matrix: EdgeProbabilityMatrix) -> tuple[BernoulliVectorSource, list[tuple[int, int]]]:
    """View the graph as a Bernoulli vector source: one component per
    upper-triangle edge.  Returns the normalized source and the edge list
    mapping raw component index -> (i, j)."""
    edges = edge_list(matrix.n_vertices)
    raw_q = np.array([matrix.probs[i, j] for i, j in edges])
    return normalize(raw_q), edges


@dataclass(frozen=True)
class EdgeAllocation:
    """One edge's share of the budgets and its rate contribution (nats)."""

    i: int
    j: int
    q: float
    d: float
    p: float
    rate: float


@dataclass(frozen=True)
class GraphRdpResult:
    """Vector-solver result plus the allocation indexed by edge."""

    result: RdpResult
    edges: tuple[EdgeAllocation, ...]

    @property
    def rate(self) -> float:
        return self.result.rate


def graph_rdp(matrix: EdgeProbabilityMatrix, budget) -> GraphRdpResult:
    """RDP function of the ER graph at budgets (D, P): the vector solver on
    the flattened source, with the allocation reported per original edge."""
    source, edges = flatten(matrix)
    result = rdp(source, budget)
    by_raw_d = np.empty(source.n)
    by_raw_p = np.empty(source.n)
    by_raw_r = np.empty(source.n)
    by_raw_d[source.permutation] = result.allocation.d
    by_raw_p[source.permutation] = result.allocation.p
    by_raw_r[source.permutation] = result.allocation.per_component_rate
    rows = tuple(
        EdgeAllocation(i=e[0], j=e[1], q=float(matrix.probs[e[0], e[1]]),
                       d=float(by_raw_d[k]), p=float(by_raw_p[k]),
                       rate=float(by_raw_r[k]))
        for k, e in enumerate(edges))
    return GraphRdpResult(result=result, edges=rows)
