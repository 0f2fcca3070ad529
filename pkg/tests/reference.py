"""Reference oracles for the test suite.

Everything here is written for clarity over speed and deliberately avoids
the package's array-based code paths: trajectory probabilities come from
explicit recursion over realizations, information terms from dictionary
marginals.  Tests compare package outputs against these.
"""

from __future__ import annotations

import math

import numpy as np

from termdp.model import FiniteMdp, MemoryPolicy


def enum_trajectory_probs(mdp: FiniteMdp, policy: MemoryPolicy) -> dict:
    """Exhaustive trajectory distribution {(states, controls): probability}."""
    T = mdp.horizon
    X, A = mdp.state_cards, mdp.action_cards
    n = policy.degree
    probs: dict[tuple, float] = {}

    def rec(t: int, xs: list[int], us: list[int], p: float) -> None:
        if p == 0.0:
            return
        if t == T:
            key = (tuple(xs), tuple(us))
            probs[key] = probs.get(key, 0.0) + p
            return
        h = 0
        for s in range(max(0, t - n), t):
            h = h * A[s] + us[s]
        for u in range(A[t]):
            pu = policy.tables[t][xs[t], h, u]
            for y in range(X[t + 1]):
                rec(t + 1, xs + [y], us + [u], p * pu * mdp.transitions[t][xs[t], u, y])

    for x0 in range(X[0]):
        rec(0, [x0], [], float(mdp.initial[x0]))
    return probs


def _cmi_from_dict(entries: dict) -> float:
    """I(A; B | C) from {(a, c, b): p} with the 0 log 0 convention."""
    p_ac: dict = {}
    p_cb: dict = {}
    p_c: dict = {}
    for (a, c, b), p in entries.items():
        p_ac[(a, c)] = p_ac.get((a, c), 0.0) + p
        p_cb[(c, b)] = p_cb.get((c, b), 0.0) + p
        p_c[c] = p_c.get(c, 0.0) + p
    val = 0.0
    for (a, c, b), p in entries.items():
        if p > 0.0:
            val += p * math.log(p * p_c[c] / (p_ac[(a, c)] * p_cb[(c, b)]))
    return val


def enum_te_terms(
    mdp: FiniteMdp, policy: MemoryPolicy, m: int, n_eval: int
) -> np.ndarray:
    """Per-step transfer entropy terms from the exhaustive trajectory joint."""
    probs = enum_trajectory_probs(mdp, policy)
    terms = []
    for t in range(mdp.horizon):
        d: dict = {}
        for (xs, us), p in probs.items():
            a = tuple(xs[max(0, t - m): t + 1])
            c = tuple(us[max(0, t - n_eval): t])
            key = (a, c, us[t])
            d[key] = d.get(key, 0.0) + p
        terms.append(_cmi_from_dict(d))
    return np.asarray(terms)


def enum_directed_information(mdp: FiniteMdp, policy: MemoryPolicy) -> float:
    """Directed information from the exhaustive trajectory joint."""
    probs = enum_trajectory_probs(mdp, policy)
    total = 0.0
    for t in range(mdp.horizon):
        d: dict = {}
        for (xs, us), p in probs.items():
            key = (tuple(xs[: t + 1]), tuple(us[:t]), us[t])
            d[key] = d.get(key, 0.0) + p
        total += _cmi_from_dict(d)
    return total


def symmetric_classical_value(beta: float, crossover: float) -> float:
    """Objective of the symmetric single-stage binary instance.

    The policy matches the state with probability ``crossover``; the prior is
    uniform and the cost is one on mismatch.
    """
    p = crossover
    cost = 1.0 - p
    if p in (0.0, 1.0):
        info = math.log(2.0)
    else:
        info = math.log(2.0) + p * math.log(p) + (1.0 - p) * math.log(1.0 - p)
    return cost + beta * info


def symmetric_classical_minimum(beta: float, resolution: int = 2_000_001) -> float:
    """Fine-grid minimum of the symmetric single-stage objective."""
    p = np.linspace(0.0, 1.0, resolution)[1:-1]
    info = math.log(2.0) + p * np.log(p) + (1.0 - p) * np.log(1.0 - p)
    values = (1.0 - p) + beta * info
    endpoints = min(
        symmetric_classical_value(beta, 0.0), symmetric_classical_value(beta, 1.0)
    )
    return min(float(values.min()), endpoints)
