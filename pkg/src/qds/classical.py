"""Classical Markov chains as diagonal quantum channels, plus the
graph-theoretic classification oracle used for cross-validation.

A chain P embeds as the channel with one Kraus operator
sqrt(P[i, j]) |j><i| per positive entry, so that the Heisenberg action on
diagonal observables is f -> P f.  Closed communicating classes of the
chain are exactly the supports of the recurrent projections of the
embedded channel, and the transient states are the support of the
metastable remainder -- :func:`compare_resolutions` checks that equality.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph as csgraph

from .errors import StructuralError
from .models import (
    DEFAULT_SEED, DEFAULT_TOL, kraus_model, stochastic_kraus_ops,
)

__all__ = ["ChainClassification", "ComparisonResult", "stochastic_to_channel",
           "classical_classify", "compare_resolutions"]


@dataclass(frozen=True)
class ChainClassification:
    """Closed communicating classes and transient states (0-based)."""

    closed_classes: tuple
    transient_states: frozenset


@dataclass(frozen=True)
class ComparisonResult:
    agree: bool
    detail: dict
    resolution: object
    chain: ChainClassification


def _check_stochastic(p, tol):
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise StructuralError("stochastic matrix must be square")
    if p.size and p.min() < -tol.alg_tol:
        raise StructuralError(f"negative transition probability {p.min():.3g}")
    sums = p.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 100 * tol.alg_tol:
        raise StructuralError(
            f"rows must sum to one (max deviation {np.max(np.abs(sums - 1.0)):.3g})")
    return np.clip(p, 0.0, None)


def stochastic_to_channel(p, tol=DEFAULT_TOL):
    """Kraus model of the diagonal embedding of a stochastic matrix."""
    p = _check_stochastic(p, tol)
    return kraus_model(stochastic_kraus_ops(p))


def classical_classify(p, tol=DEFAULT_TOL):
    """Closed classes and transient states via strongly connected
    components of the transition digraph."""
    p = _check_stochastic(p, tol)
    d = p.shape[0]
    adjacency = scipy.sparse.csr_matrix(p > tol.alg_tol)
    n_comp, labels = csgraph.connected_components(
        adjacency, directed=True, connection="strong")
    members = [np.flatnonzero(labels == c) for c in range(n_comp)]
    closed = []
    transient = set()
    for c in range(n_comp):
        inside = members[c]
        mask = np.zeros(d, dtype=bool)
        mask[inside] = True
        leaves = np.any(p[np.ix_(inside, ~mask)] > tol.alg_tol)
        if leaves:
            transient.update(int(i) for i in inside)
        else:
            closed.append(frozenset(int(i) for i in inside))
    closed.sort(key=lambda s: sorted(s))
    return ChainClassification(closed_classes=tuple(closed),
                               transient_states=frozenset(transient))


def compare_resolutions(p, seed=DEFAULT_SEED, tol=DEFAULT_TOL):
    """Resolve the embedded channel and compare against the SCC oracle.

    Agreement means: the diagonal supports of the recurrent projections
    equal the closed classes as sets, and the support of the metastable
    remainder equals the transient states.
    """
    from .resolution import resolve

    p = _check_stochastic(p, tol)
    model = stochastic_to_channel(p, tol)
    res = resolve(model, seed=seed, tol=tol)
    chain = classical_classify(p, tol)

    supports = {proj.diagonal_support() for proj in res.recurrent_projections}
    remainder = res.metastable_remainder.diagonal_support()
    oracle = set(chain.closed_classes)
    agree = supports == oracle and remainder == chain.transient_states
    detail = {
        "resolved_supports": sorted(sorted(s) for s in supports),
        "closed_classes": sorted(sorted(s) for s in oracle),
        "resolved_transient": sorted(remainder),
        "transient_states": sorted(chain.transient_states),
    }
    return ComparisonResult(agree=agree, detail=detail, resolution=res,
                            chain=chain)
