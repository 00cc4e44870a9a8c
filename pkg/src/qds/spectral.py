"""Spectral analysis of superoperators.

Provides the clustered eigendecomposition of a superoperator matrix, time
evolution in either picture, and the asymptotic operator
y = lim_t tau_t(p) for a sub-harmonic projection p, computed as the
ergodic (Cesaro) spectral projection applied to p and cross-checked
against a long-horizon evolution.
"""

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import dagger, hermitize, spectral_norm, unvec, vec
from .errors import ConvergenceError, CrossCheckError, StructuralError
from .models import (
    CONTINUOUS_GENERATOR, DEFAULT_TOL, DISCRETE_STEP, KIND_LINDBLAD,
    Superoperator, apply_map, heisenberg_superoperator, predual_superoperator,
)

__all__ = ["SpectralData", "spectral_split", "evolve_heisenberg",
           "evolve_predual", "asymptotic_operator"]

# Radius used to group eigenvalues into clusters and to detect the
# peripheral set; pure numerics, independent of the user tolerances.
CLUSTER_TOL = 1e-7


@dataclass(frozen=True)
class SpectralData:
    """Clustered eigendecomposition of a superoperator matrix.

    eigenvalues[i] is the mean of cluster i, clusters[i] the column
    indices of its (orthonormalized within the cluster) right eigenvectors
    in ``right_basis``; ``left_rows`` holds the matching rows of the
    inverse basis, so the spectral projection of cluster i is
    ``right_basis[:, c] @ left_rows[c, :]``.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    clusters: tuple
    right_basis: np.ndarray
    left_rows: np.ndarray
    peripheral: tuple
    ergodic_index: int
    time_kind: str
    schur_projections: dict

    def projection(self, i):
        if i in self.schur_projections:
            return self.schur_projections[i]
        c = self.clusters[i]
        return self.right_basis[:, c] @ self.left_rows[c, :]

    def apply_projection(self, i, v):
        if i in self.schur_projections:
            return self.schur_projections[i] @ v
        c = self.clusters[i]
        return self.right_basis[:, c] @ (self.left_rows[c, :] @ v)

    @property
    def spectral_projections(self):
        return [self.projection(i) for i in range(len(self.clusters))]

    def subperipheral_extreme(self):
        """Largest modulus (discrete) or real part (continuous) among
        non-peripheral clusters; None if every cluster is peripheral."""
        vals = [self.eigenvalues[i] for i in range(len(self.clusters))
                if i not in self.peripheral]
        if not vals:
            return None
        if self.time_kind == DISCRETE_STEP:
            return max(abs(v) for v in vals)
        return max(v.real for v in vals)

    def gap(self):
        """Distance of the sub-peripheral spectrum from the boundary
        (infinite when there is none)."""
        ext = self.subperipheral_extreme()
        if ext is None:
            return math.inf
        if self.time_kind == DISCRETE_STEP:
            return 1.0 - float(abs(ext))
        return float(-np.real(ext))


def _cluster_indices(values, radius):
    """Connected components of the 'within radius' graph on eigenvalues."""
    unassigned = set(range(len(values)))
    clusters = []
    while unassigned:
        seed = min(unassigned, key=lambda k: (values[k].real, values[k].imag, k))
        group = [seed]
        unassigned.discard(seed)
        frontier = [seed]
        while frontier:
            base = frontier.pop()
            near = [k for k in unassigned
                    if abs(values[k] - values[base]) <= radius]
            for k in near:
                unassigned.discard(k)
                group.append(k)
                frontier.append(k)
        clusters.append(np.array(sorted(group)))
    return clusters


def _schur_cluster_projection(matrix, in_cluster):
    """Spectral projector onto a cluster via a sorted Schur form and a
    Sylvester solve; robust when eigenvectors elsewhere are defective."""
    t, z, sdim = scipy.linalg.schur(matrix, output="complex", sort=in_cluster)
    n = matrix.shape[0]
    if sdim == 0:
        return np.zeros_like(matrix)
    if sdim == n:
        return np.eye(n, dtype=complex)
    t11 = t[:sdim, :sdim]
    t12 = t[:sdim, sdim:]
    t22 = t[sdim:, sdim:]
    r = scipy.linalg.solve_sylvester(t11, -t22, t12)
    block = np.zeros((n, n), dtype=complex)
    block[:sdim, :sdim] = np.eye(sdim)
    block[:sdim, sdim:] = r
    return z @ block @ dagger(z)


def _geometric_multiplicity(matrix, eigenvalue, rank_tol):
    n = matrix.shape[0]
    s = np.linalg.svd(matrix - eigenvalue * np.eye(n), compute_uv=False)
    if s[0] == 0.0:
        return n
    return int(np.sum(s <= rank_tol * s[0]))


_SPLIT_CACHE: dict = {}
_SPLIT_LOCK = threading.Lock()
_SPLIT_CACHE_MAX = 16


def spectral_split(superop, tol=DEFAULT_TOL, cluster_tol=CLUSTER_TOL):
    """Clustered eigendecomposition of a superoperator.

    Eigenvalues within ``cluster_tol`` of each other are grouped; the
    cluster containing the ergodic eigenvalue (1 for a discrete step, 0
    for a continuous generator) is identified and required to be
    non-defective.  Results are cached per matrix contents; reads are
    lock-protected so concurrent use is safe.
    """
    key = (hashlib.sha256(np.ascontiguousarray(superop.matrix).tobytes()).hexdigest(),
           superop.time_kind, float(tol.rank_tol), float(tol.alg_tol),
           float(cluster_tol))
    with _SPLIT_LOCK:
        if key in _SPLIT_CACHE:
            return _SPLIT_CACHE[key]
    data = _spectral_split_impl(superop, tol, cluster_tol)
    with _SPLIT_LOCK:
        if len(_SPLIT_CACHE) >= _SPLIT_CACHE_MAX:
            _SPLIT_CACHE.pop(next(iter(_SPLIT_CACHE)))
        _SPLIT_CACHE[key] = data
    return data


def _spectral_split_impl(superop, tol, cluster_tol):
    m = superop.matrix
    n = m.shape[0]
    w, v = np.linalg.eig(m)
    clusters = _cluster_indices(w, cluster_tol)
    means = np.array([np.mean(w[c]) for c in clusters])
    mults = np.array([len(c) for c in clusters])

    ergodic_value = 1.0 if superop.time_kind == DISCRETE_STEP else 0.0
    candidates = [i for i, mu in enumerate(means)
                  if abs(mu - ergodic_value) <= max(cluster_tol, 1e3 * tol.alg_tol)]
    if not candidates:
        raise StructuralError(
            "no ergodic eigenvalue found; the superoperator is not a valid "
            "unital map/generator")
    ergodic_index = min(candidates, key=lambda i: abs(means[i] - ergodic_value))

    geo = _geometric_multiplicity(m, means[ergodic_index], max(tol.rank_tol, 1e-12))
    if geo < mults[ergodic_index]:
        raise ConvergenceError(
            "non-diagonalizable peripheral part: the ergodic eigenvalue has a "
            f"Jordan block (algebraic {mults[ergodic_index]}, geometric {geo})")

    if superop.time_kind == DISCRETE_STEP:
        peripheral = tuple(i for i, mu in enumerate(means)
                           if abs(abs(mu) - 1.0) <= cluster_tol)
    else:
        peripheral = tuple(i for i, mu in enumerate(means)
                           if abs(mu.real) <= cluster_tol)

    # Orthonormalize eigenvector blocks within each cluster: the spectral
    # projections are basis-independent and this improves conditioning.
    v = v.copy()
    for c in clusters:
        if len(c) > 1:
            q, _ = np.linalg.qr(v[:, c])
            v[:, c] = q

    schur_fallback = {}
    left = None
    try:
        left = np.linalg.solve(v, np.eye(n, dtype=complex))
    except np.linalg.LinAlgError:
        left = None

    if left is not None:
        # quality check on random vectors; a defective (non-peripheral)
        # part shows up as a badly conditioned eigenbasis
        rng = np.random.default_rng(0)
        probe = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        probe /= np.linalg.norm(probe)
        recon = v @ (left @ probe)
        if np.linalg.norm(recon - probe) > 1e-6:
            left = None

    if left is None:
        # per-cluster Schur projections (expensive, rare)
        left = np.zeros((n, n), dtype=complex)  # placeholder, not used
        for i, c in enumerate(clusters):
            mu = means[i]

            def in_cluster(lam, _mu=mu, _r=cluster_tol):
                return abs(lam - _mu) <= 10 * _r

            schur_fallback[i] = _schur_cluster_projection(m, in_cluster)

    data = SpectralData(
        eigenvalues=means, multiplicities=mults,
        clusters=tuple(clusters), right_basis=v, left_rows=left,
        peripheral=peripheral, ergodic_index=ergodic_index,
        time_kind=superop.time_kind, schur_projections=schur_fallback)

    # the ergodic projection must behave as a spectral projection
    p_err = data.apply_projection(ergodic_index,
                                  data.apply_projection(ergodic_index, probe_vec(n)))
    p_once = data.apply_projection(ergodic_index, probe_vec(n))
    if np.linalg.norm(p_err - p_once) > 1e-6 * max(1.0, np.linalg.norm(p_once)):
        raise ConvergenceError(
            "ergodic spectral projection failed idempotency; "
            "the model is numerically unstable")
    return data


def probe_vec(n):
    rng = np.random.default_rng(12345)
    p = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return p / np.linalg.norm(p)


def _n_fold(superop, x, n):
    out = np.linalg.matrix_power(superop.matrix, n) @ vec(x)
    return unvec(out, superop.dim)


def _exp_apply(superop, x, t):
    out = scipy.linalg.expm(t * superop.matrix) @ vec(x)
    return unvec(out, superop.dim)


def _evolve(superop, model, x, t, n, tol):
    x = np.asarray(x, dtype=complex)
    hermitian_in = spectral_norm(x - dagger(x)) <= tol.alg_tol
    if model.kind == KIND_LINDBLAD:
        if t is None:
            raise StructuralError("continuous-time model: pass t")
        if t < 0:
            raise StructuralError("negative time")
        out = _exp_apply(superop, x, float(t))
    else:
        if n is None:
            raise StructuralError("discrete-time model: pass n")
        if n != int(n) or n < 0:
            raise StructuralError("negative time")
        out = _n_fold(superop, x, int(n))
    return hermitize(out) if hermitian_in else out


def evolve_heisenberg(model, x, t=None, n=None, tol=DEFAULT_TOL):
    """tau_t(x) (continuous, via the exponential of the generator matrix)
    or tau^n(x) (discrete, n-fold application)."""
    return _evolve(heisenberg_superoperator(model, tol), model, x, t, n, tol)


def evolve_predual(model, rho, t=None, n=None, tol=DEFAULT_TOL):
    """Schrodinger-picture evolution of a state."""
    return _evolve(predual_superoperator(model, tol), model, rho, t, n, tol)


def _horizon(data, tol):
    """Time horizon after which sub-peripheral modes are negligible.

    Returns (kind, value, predicted_leftover): the horizon is chosen so
    that the predicted truncation sits two decades below ``conv_tol`` and
    is capped at 1e6 steps / time units.
    """
    target = tol.conv_tol / 100.0
    ext = data.subperipheral_extreme()
    if data.time_kind == DISCRETE_STEP:
        if ext is None or ext <= 0.0:
            return "n", 1, 0.0
        r = float(abs(ext))
        n = int(math.ceil(math.log(target) / math.log(r)))
        n = max(1, min(n, 10 ** 6))
        return "n", n, r ** n
    gap = data.gap()
    if not math.isfinite(gap) or gap <= 0.0:
        return "t", 1.0, 0.0
    t = math.log(1.0 / target) / gap
    t = min(t, 1e6)
    return "t", t, math.exp(-gap * t)


def asymptotic_operator(model, p, tol=DEFAULT_TOL):
    """Limit operator y = lim_t tau_t(p) for a sub-harmonic projection p.

    Computed as the ergodic spectral projection applied to p (the monotone
    limit coincides with the Cesaro limit: oscillatory peripheral modes
    cannot contribute to a monotone bounded net), then cross-checked
    against a long-horizon evolution.  Raises when p is not sub-harmonic
    or when the two routes disagree.
    """
    from .projections import Projection, is_subharmonic

    if isinstance(p, Projection):
        p_mat = p.matrix
    else:
        p_mat = Projection.from_matrix(p, tol).matrix

    verdict = is_subharmonic(model, p_mat, tol)
    if not verdict.verdict:
        raise StructuralError(
            "projection is not sub-harmonic: the limit is not monotone and "
            f"y is undefined (residual {verdict.residual:.3g})")

    s = heisenberg_superoperator(model, tol)
    data = spectral_split(s, tol)
    y = unvec(data.apply_projection(data.ergodic_index, vec(p_mat)), model.dim)
    y = hermitize(y)

    kind, value, leftover = _horizon(data, tol)
    if kind == "n":
        y_dyn = evolve_heisenberg(model, p_mat, n=value, tol=tol)
    else:
        y_dyn = evolve_heisenberg(model, p_mat, t=value, tol=tol)
    cross_tol = max(tol.conv_tol, 10.0 * leftover)
    disagreement = spectral_norm(y - y_dyn)
    if disagreement > cross_tol:
        raise CrossCheckError(
            "asymptotic operator: spectral and long-horizon routes disagree "
            f"(norm {disagreement:.3g} > {cross_tol:.3g}); spectral value "
            f"min-eig {np.linalg.eigvalsh(y)[0]:.3g}, dynamic value min-eig "
            f"{np.linalg.eigvalsh(hermitize(y_dyn))[0]:.3g}")

    _check_limit_contract(model, p_mat, y, tol)
    return y


def _check_limit_contract(model, p_mat, y, tol):
    scale = max(1.0, spectral_norm(y))
    checks = {
        "p*y = p": spectral_norm(p_mat @ y - p_mat),
        "y*p = p": spectral_norm(y @ p_mat - p_mat),
    }
    eigs = np.linalg.eigvalsh(y)
    checks["0 <= y <= 1"] = max(0.0, float(-eigs[0]), float(eigs[-1] - 1.0))
    step = _step_map(model, y, tol)
    checks["tau(y) = y"] = spectral_norm(step - y)
    bad = {k: v for k, v in checks.items() if v > 100 * tol.alg_tol * scale}
    if bad:
        raise CrossCheckError(f"asymptotic operator violates its contract: {bad}")


def _step_map(model, x, tol):
    """One comparison step of the dynamics: a single application for
    discrete models, time 1/(1+||L||) for continuous ones."""
    s = heisenberg_superoperator(model, tol)
    if s.time_kind == DISCRETE_STEP:
        return apply_map(s, x, tol)
    dt = 1.0 / (1.0 + spectral_norm(s.matrix))
    return _evolve(s, model, x, dt, None, tol)
