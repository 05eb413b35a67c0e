"""Exact transition matrices for finite instances, built by enumeration.

These are the linear-algebra oracles for the kernels: every acceptance
probability is evaluated in closed form over all auxiliary outcomes, so
stationarity and detailed balance can be checked to rounding error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .core import ContractViolation


def stationary_vector(p: np.ndarray) -> np.ndarray:
    """Left eigenvector of a row-stochastic matrix for eigenvalue 1, summing to 1."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    a = np.vstack([p.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(a, b, rcond=None)
    return v


def _alpha(ratio: float) -> float:
    return min(1.0, ratio)


def marginal_transition_matrix(pi, proposal_matrix) -> np.ndarray:
    """Metropolis-Hastings matrix for target ``pi`` (unnormalised) and proposal ``Q``.

    States with ``pi = 0`` reject every incoming move.
    """
    pi = np.asarray(pi, dtype=float)
    q = np.asarray(proposal_matrix, dtype=float)
    n = pi.size
    p = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j or q[i, j] == 0 or pi[j] == 0:
                continue
            p[i, j] = q[i, j] * (1.0 if pi[i] == 0 else _alpha(pi[j] * q[j, i] / (pi[i] * q[i, j])))
        p[i, i] = 1.0 - p[i].sum()
    return p


@dataclass(frozen=True, eq=False)
class ExtendedSpace:
    """All ``(theta, Z)`` states of an i.i.d. block scheme over a finite space."""

    pi: np.ndarray
    q: np.ndarray
    n: int
    weights: np.ndarray
    blocks: Tuple[Tuple[int, ...], ...]
    block_prob: np.ndarray
    gamma: np.ndarray

    @property
    def states(self) -> List[Tuple[int, Tuple[int, ...]]]:
        return [(t, z) for t in range(self.pi.shape[0]) for z in self.blocks]

    def index(self, theta: int, z_index: int) -> int:
        return theta * len(self.blocks) + z_index

    def extended_target(self) -> np.ndarray:
        """``pi~(theta, Z) = Q_theta(Z) gamma(theta, Z)``, normalised."""
        v = (self.block_prob * self.gamma).ravel()
        return v / v.sum()


def extended_space(pi_table, q_table, n: int, weights=None) -> ExtendedSpace:
    """Enumerate blocks of size ``n`` and their weights ``gamma(theta, Z)``.

    ``gamma`` is ``sum_k w_k pi(theta, z_k) / q_theta(z_k)`` with the
    unnormalised table ``pi``, so ``E_Q[gamma(theta, .)] = pi(theta)``.
    """
    pi = np.asarray(pi_table, dtype=float)
    q = np.asarray(q_table, dtype=float)
    if pi.shape != q.shape:
        raise ContractViolation("pi and q tables must have the same shape")
    if np.any((q == 0) & (pi > 0)):
        raise ContractViolation("q must be positive wherever pi is")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    n_theta, n_aux = pi.shape
    blocks = tuple(itertools.product(range(n_aux), repeat=n))
    bp = np.empty((n_theta, len(blocks)))
    g = np.empty((n_theta, len(blocks)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, pi / q, 0.0)
    for t in range(n_theta):
        for b, z in enumerate(blocks):
            bp[t, b] = np.prod(q[t, list(z)])
            g[t, b] = float(np.dot(w, ratio[t, list(z)]))
    return ExtendedSpace(pi, q, n, w, blocks, bp, g)


def gimh_transition_matrix(space: ExtendedSpace, proposal_matrix) -> np.ndarray:
    """Joint ``(theta, Z)`` matrix of the GIMH kernel."""
    qm = np.asarray(proposal_matrix, dtype=float)
    nt, nb = space.gamma.shape
    size = nt * nb
    p = np.zeros((size, size))
    for t, b in itertools.product(range(nt), range(nb)):
        i = space.index(t, b)
        g = space.gamma[t, b]
        if g == 0:
            p[i, i] = 1.0
            continue
        for t2, b2 in itertools.product(range(nt), range(nb)):
            j = space.index(t2, b2)
            if j == i or qm[t, t2] == 0:
                continue
            g2 = space.gamma[t2, b2]
            a = _alpha(g2 * qm[t2, t] / (g * qm[t, t2])) if g2 > 0 else 0.0
            p[i, j] = qm[t, t2] * space.block_prob[t2, b2] * a
        p[i, i] = 1.0 - p[i].sum()
    return p


def refresh_transition_matrix(space: ExtendedSpace, theta: int) -> np.ndarray:
    """Independence MH on ``Z`` at fixed theta."""
    nb = len(space.blocks)
    p = np.zeros((nb, nb))
    g = space.gamma[theta]
    for b in range(nb):
        for b2 in range(nb):
            if b2 == b or g[b] == 0:
                continue
            p[b, b2] = space.block_prob[theta, b2] * (_alpha(g[b2] / g[b]) if g[b2] > 0 else 0.0)
        p[b, b] = 1.0 - p[b].sum()
    return p


def mcwm_transition_matrix(space: ExtendedSpace, proposal_matrix) -> np.ndarray:
    """Theta-level matrix of the MCWM kernel, averaging over both fresh blocks."""
    qm = np.asarray(proposal_matrix, dtype=float)
    nt = space.gamma.shape[0]
    p = np.zeros((nt, nt))
    for t in range(nt):
        for t2 in range(nt):
            if t2 == t or qm[t, t2] == 0:
                continue
            acc = 0.0
            for b, g in enumerate(space.gamma[t]):
                for b2, g2 in enumerate(space.gamma[t2]):
                    if g2 == 0:
                        a = 0.0
                    elif g == 0:
                        a = 1.0
                    else:
                        a = _alpha(g2 * qm[t2, t] / (g * qm[t, t2]))
                    acc += space.block_prob[t, b] * space.block_prob[t2, b2] * a
            p[t, t2] = qm[t, t2] * acc
        p[t, t] = 1.0 - p[t].sum()
    return p


def theta_marginal(space: ExtendedSpace, joint: np.ndarray) -> np.ndarray:
    return np.asarray(joint).reshape(space.gamma.shape).sum(axis=1)


def max_flow_imbalance(p: np.ndarray, mu: np.ndarray) -> float:
    """``max |mu_i P_ij - mu_j P_ji|`` over all state pairs."""
    flow = np.asarray(mu)[:, None] * np.asarray(p)
    return float(np.max(np.abs(flow - flow.T)))


def birth_death_proposal_matrix(k: int) -> np.ndarray:
    """Birth/death proposal over all ``2**k`` inclusion vectors (row 0 unused)."""
    from .targets.glm import inclusion_from_model_id

    size = 2**k
    qm = np.zeros((size, size))
    for mid in range(1, size):
        incl = inclusion_from_model_id(mid, k)
        on = sum(incl)
        for j in range(k):
            flipped = mid ^ (1 << (k - 1 - j))
            qm[mid, flipped] = 0.5 / (k - on) if incl[j] == 0 else 0.5 / on
        qm[mid, mid] = 1.0 - qm[mid].sum()
    qm[0, 0] = 1.0
    return qm
