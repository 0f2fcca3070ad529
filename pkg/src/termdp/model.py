"""Finite-horizon controlled Markov chains with an information cost on the
state-to-control channel.

Data layout conventions used throughout the package:

- Time is 0-based internally.  Decisions happen at t = 0..T-1 and states live
  at t = 0..T, so ``transitions[t]`` maps (x_t, u_t) to a distribution over
  x_{t+1}.
- A policy of memory degree n conditions on the current state and on the last
  min(n, t) controls.  Control histories are flattened in C order with the
  oldest control as the most significant coordinate, so appending a control u
  to a flat history h of width U gives the flat index h * U + u.
- All information quantities are in nats (natural logarithm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InstanceError, ResourceError

__all__ = [
    "FiniteMdp",
    "MemoryPolicy",
    "ReducedBelief",
    "WindowJoint",
    "ObjectiveValue",
    "propagate_reduced",
    "propagate_window",
    "induced_action_marginals",
    "per_step_information",
    "expected_cost",
    "transfer_entropy",
    "transfer_entropy_terms",
    "directed_information",
    "objective",
    "factored_objective",
    "canonicalize_policy",
    "conditional_mutual_information",
]

ROW_TOL = 1e-12
DEFAULT_CELL_BUDGET = 20_000_000


def _prod(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out *= int(v)
    return out


def _frozen(values) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FiniteMdp:
    """Finite MDP instance: transition kernels, costs, initial distribution.

    ``transitions[t]`` has shape (X_t, U_t, X_{t+1}) and every slice
    ``transitions[t][x, u]`` is a probability row.  ``stage_costs[t]`` has
    shape (X_t, U_t), ``terminal_cost`` shape (X_T,), ``initial`` shape
    (X_0,).  Arrays are made read-only on construction; instances are safe to
    share between threads.
    """

    transitions: tuple[np.ndarray, ...]
    stage_costs: tuple[np.ndarray, ...]
    terminal_cost: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "transitions", tuple(_frozen(p) for p in self.transitions)
        )
        object.__setattr__(
            self, "stage_costs", tuple(_frozen(c) for c in self.stage_costs)
        )
        object.__setattr__(self, "terminal_cost", _frozen(self.terminal_cost))
        object.__setattr__(self, "initial", _frozen(self.initial))
        self._validate()

    # -- shape helpers -----------------------------------------------------

    @property
    def horizon(self) -> int:
        return len(self.transitions)

    @property
    def state_cards(self) -> tuple[int, ...]:
        cards = [p.shape[0] for p in self.transitions]
        cards.append(self.transitions[-1].shape[2])
        return tuple(cards)

    @property
    def action_cards(self) -> tuple[int, ...]:
        return tuple(p.shape[1] for p in self.transitions)

    def history_span(self, degree: int, t: int) -> range:
        """Decision times whose controls a degree-n history at time t covers."""
        return range(max(0, t - degree), t)

    def history_dims(self, degree: int, t: int) -> tuple[int, ...]:
        acts = self.action_cards
        return tuple(acts[s] for s in self.history_span(degree, t))

    def history_size(self, degree: int, t: int) -> int:
        return _prod(self.history_dims(degree, t))

    # -- validation ----------------------------------------------------------

    def _validate(self) -> None:
        if not self.transitions:
            raise InstanceError("horizon must be at least 1")
        if len(self.stage_costs) != len(self.transitions):
            raise InstanceError(
                f"{len(self.stage_costs)} stage cost tables for horizon "
                f"{len(self.transitions)}"
            )
        for t, p in enumerate(self.transitions):
            if p.ndim != 3:
                raise InstanceError(f"transitions[{t}] must be 3-d, got {p.ndim}-d")
            if t + 1 < len(self.transitions):
                nxt = self.transitions[t + 1].shape[0]
                if p.shape[2] != nxt:
                    raise InstanceError(
                        f"transitions[{t}] has {p.shape[2]} next states but "
                        f"transitions[{t + 1}] has {nxt} states"
                    )
            if not np.isfinite(p).all():
                idx = tuple(int(i) for i in np.argwhere(~np.isfinite(p))[0])
                raise InstanceError(f"transitions[{t}] non-finite at {idx}")
            if (p < 0).any():
                x, u, y = (int(i) for i in np.argwhere(p < 0)[0])
                raise InstanceError(
                    f"transitions[{t}] negative entry at (x={x}, u={u}, x'={y})"
                )
            sums = p.sum(axis=2)
            bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
            if bad.size:
                x, u = (int(i) for i in bad[0])
                raise InstanceError(
                    f"transitions[{t}] row (x={x}, u={u}) sums to "
                    f"{sums[x, u]!r}, expected 1"
                )
        for t, c in enumerate(self.stage_costs):
            want = self.transitions[t].shape[:2]
            if c.shape != want:
                raise InstanceError(
                    f"stage_costs[{t}] shape {c.shape} does not match {want}"
                )
            if not np.isfinite(c).all():
                idx = tuple(int(i) for i in np.argwhere(~np.isfinite(c))[0])
                raise InstanceError(f"stage_costs[{t}] non-finite at {idx}")
        if self.terminal_cost.shape != (self.transitions[-1].shape[2],):
            raise InstanceError(
                f"terminal cost shape {self.terminal_cost.shape} does not match "
                f"{self.transitions[-1].shape[2]} terminal states"
            )
        if not np.isfinite(self.terminal_cost).all():
            idx = int(np.argwhere(~np.isfinite(self.terminal_cost))[0][0])
            raise InstanceError(f"terminal cost non-finite at x={idx}")
        if self.initial.shape != (self.transitions[0].shape[0],):
            raise InstanceError(
                f"initial distribution shape {self.initial.shape} does not match "
                f"{self.transitions[0].shape[0]} states"
            )
        if (self.initial < 0).any():
            idx = int(np.argwhere(self.initial < 0)[0][0])
            raise InstanceError(f"initial distribution negative at x={idx}")
        if abs(float(self.initial.sum()) - 1.0) > ROW_TOL:
            raise InstanceError(
                f"initial distribution sums to {float(self.initial.sum())!r}"
            )


@dataclass(frozen=True)
class MemoryPolicy:
    """Randomized decision rule q_t(u_t | x_t, last-n controls).

    ``tables[t]`` has shape (X_t, H_t, U_t) with H_t the flattened history
    size at time t; every (x, h) slice is a distribution over actions.
    """

    degree: int
    tables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise InstanceError("memory degree must be nonnegative")
        object.__setattr__(self, "tables", tuple(_frozen(q) for q in self.tables))
        for t, q in enumerate(self.tables):
            if q.ndim != 3:
                raise InstanceError(f"policy table {t} must be 3-d, got {q.ndim}-d")
            if (q < 0).any():
                x, h, u = (int(i) for i in np.argwhere(q < 0)[0])
                raise InstanceError(
                    f"policy table {t} negative at (x={x}, history={h}, u={u})"
                )
            sums = q.sum(axis=2)
            bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
            if bad.size:
                x, h = (int(i) for i in bad[0])
                raise InstanceError(
                    f"policy table {t} slice (x={x}, history={h}) sums to "
                    f"{sums[x, h]!r}, expected 1"
                )

    @property
    def horizon(self) -> int:
        return len(self.tables)

    @classmethod
    def uniform(cls, mdp: FiniteMdp, degree: int) -> "MemoryPolicy":
        tables = []
        for t in range(mdp.horizon):
            x, u = mdp.state_cards[t], mdp.action_cards[t]
            h = mdp.history_size(degree, t)
            tables.append(np.full((x, h, u), 1.0 / u))
        return cls(degree, tuple(tables))

    @classmethod
    def perturbed(
        cls, mdp: FiniteMdp, degree: int, seed: int, magnitude: float = 0.1
    ) -> "MemoryPolicy":
        """Uniform policy with a seeded multiplicative perturbation.

        magnitude must lie in (0, 1) so every entry stays strictly positive.
        """
        if not 0.0 < magnitude < 1.0:
            raise InstanceError(f"perturbation magnitude {magnitude!r} not in (0, 1)")
        rng = np.random.default_rng(seed)
        tables = []
        for t in range(mdp.horizon):
            x, u = mdp.state_cards[t], mdp.action_cards[t]
            h = mdp.history_size(degree, t)
            raw = 1.0 + magnitude * (2.0 * rng.random((x, h, u)) - 1.0)
            tables.append(raw / raw.sum(axis=2, keepdims=True))
        return cls(degree, tuple(tables))


@dataclass(frozen=True)
class ReducedBelief:
    """Joint distributions mu_t(x_t, last-n controls) for t = 0..T.

    ``mus[t]`` has shape (X_t, H_t) with the usual flattened-history layout;
    the last entry is the terminal joint.
    """

    degree: int
    mus: tuple[np.ndarray, ...]

    def state_marginal(self, t: int) -> np.ndarray:
        return self.mus[t].sum(axis=1)


@dataclass(frozen=True)
class WindowJoint:
    """Per-time joints over a sliding window of states and controls.

    ``joints[t]`` carries axes (x_{t-mx}, ..., x_t, u_{t-h}, ..., u_{t-1})
    with mx = min(m, t) and h = min(u_depth, t); oldest coordinates first.
    """

    m: int
    u_depth: int
    joints: tuple[np.ndarray, ...]

    def x_axis_count(self, t: int) -> int:
        return min(self.m, t) + 1

    def u_axis_count(self, t: int) -> int:
        return min(self.u_depth, t)

    def state_marginal(self, t: int) -> np.ndarray:
        j = self.joints[t]
        nx = self.x_axis_count(t)
        axes = tuple(range(nx - 1)) + tuple(range(nx, j.ndim))
        return j.sum(axis=axes) if axes else j.copy()


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective decomposition: expected cost, information, weighted total."""

    cost: float
    information_nats: float
    total: float


def check_compatible(mdp: FiniteMdp, policy: MemoryPolicy) -> None:
    if policy.horizon != mdp.horizon:
        raise InstanceError(
            f"policy horizon {policy.horizon} != instance horizon {mdp.horizon}"
        )
    for t, q in enumerate(policy.tables):
        want = (
            mdp.state_cards[t],
            mdp.history_size(policy.degree, t),
            mdp.action_cards[t],
        )
        if q.shape != want:
            raise InstanceError(
                f"policy table {t} has shape {q.shape}, instance requires {want}"
            )


# ---------------------------------------------------------------------------
# Belief propagation
# ---------------------------------------------------------------------------


def slide_split(mdp: FiniteMdp, degree: int, t: int) -> tuple[int, int]:
    """Split H_t into (dropped, kept) flat sizes when stepping to t + 1.

    The new history at t + 1 is (kept oldest-trimmed part, u_t) for degree
    >= 1 and empty for degree 0, where u_t is never recorded.
    """
    dims = mdp.history_dims(degree, t)
    h = _prod(dims)
    if dims and max(0, t + 1 - degree) > max(0, t - degree):
        return dims[0], h // dims[0]
    return 1, h


def propagate_reduced(mdp: FiniteMdp, policy: MemoryPolicy) -> ReducedBelief:
    """Propagate the joint state/control-history distribution exactly.

    One step sums the previous joint against the policy and the transition
    kernel, appending the new control to the history and dropping the oldest
    coordinate once the window is full.
    """
    check_compatible(mdp, policy)
    n = policy.degree
    mus = [mdp.initial.reshape(-1, 1)]
    for t in range(mdp.horizon):
        mu = mus[-1]
        lam = mu[:, :, None] * policy.tables[t]  # (X, H, U)
        pushed = np.einsum("xhu,xuy->yhu", lam, mdp.transitions[t])
        y, u = pushed.shape[0], pushed.shape[2]
        if n == 0:
            nxt = pushed.sum(axis=2)  # control never enters the history
        else:
            dropped, kept = slide_split(mdp, n, t)
            nxt = pushed.reshape(y, dropped, kept, u).sum(axis=1).reshape(y, kept * u)
        mus.append(nxt)
    return ReducedBelief(n, tuple(mus))


def _window_scan(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    m: int,
    u_depth: int,
    max_cells: int,
) -> Iterator[tuple[int, np.ndarray, np.ndarray | None]]:
    """Yield (t, window joint, joint extended by u_t) for t = 0..T.

    Valid because under a degree-n policy (n <= u_depth) the window process
    is Markov.  The terminal joint is yielded with extension None.
    """
    check_compatible(mdp, policy)
    if u_depth < policy.degree:
        raise InstanceError(
            f"window control depth {u_depth} is below policy degree {policy.degree}"
        )
    X, A, T = mdp.state_cards, mdp.action_cards, mdp.horizon
    n = policy.degree
    joint = mdp.initial.copy()  # axes (x_0,)
    for t in range(T):
        nx = min(m, t) + 1
        nu = min(u_depth, t)
        hist = mdp.history_dims(n, t)
        if joint.size * A[t] > max_cells:
            raise ResourceError(
                f"window joint at t={t} needs {joint.size * A[t]} cells, "
                f"budget is {max_cells}"
            )
        q_shape = (1,) * (nx - 1) + (X[t],) + (1,) * (nu - len(hist)) + hist + (A[t],)
        lam = joint[..., None] * policy.tables[t].reshape(q_shape)
        yield t, joint, lam
        if lam.size * X[t + 1] > max_cells:
            raise ResourceError(
                f"window joint at t={t + 1} needs {lam.size * X[t + 1]} cells, "
                f"budget is {max_cells}"
            )
        p_shape = (1,) * (nx - 1) + (X[t],) + (1,) * nu + (A[t], X[t + 1])
        big = lam[..., None] * mdp.transitions[t].reshape(p_shape)
        big = np.moveaxis(big, -1, nx)  # (x-axes..., x_{t+1}, u-axes..., u_t)
        keep_x = min(m, t + 1) + 1
        drop_x = nx + 1 - keep_x
        if drop_x:
            big = big.sum(axis=tuple(range(drop_x)))
        drop_u = nu + 1 - min(u_depth, t + 1)
        if drop_u:
            big = big.sum(axis=tuple(range(keep_x, keep_x + drop_u)))
        joint = big
    yield T, joint, None


def propagate_window(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    m: int,
    u_depth: int | None = None,
    max_cells: int = DEFAULT_CELL_BUDGET,
) -> WindowJoint:
    """Exact joints over (x_{t-m}..x_t, last u_depth controls) for t = 0..T.

    u_depth defaults to the policy degree.  Raises ResourceError when a joint
    would exceed ``max_cells`` entries.
    """
    if m < 0:
        raise InstanceError("window width m must be nonnegative")
    depth = policy.degree if u_depth is None else u_depth
    joints = [
        joint for _, joint, _ in _window_scan(mdp, policy, m, depth, max_cells)
    ]
    return WindowJoint(m, depth, tuple(joints))


# ---------------------------------------------------------------------------
# Information functionals
# ---------------------------------------------------------------------------


def conditional_mutual_information(
    joint: np.ndarray,
    a_axes: Sequence[int],
    b_axes: Sequence[int],
    c_axes: Sequence[int] = (),
) -> float:
    """I(A; B | C) in nats from an exact joint array.

    Terms with zero joint mass contribute zero (0 log 0 = 0).  The three
    axis groups must partition the joint's axes exactly.
    """
    p = np.asarray(joint, dtype=float)
    a_axes = tuple(a_axes)
    b_axes = tuple(b_axes)
    p_ac = p.sum(axis=b_axes, keepdims=True)
    p_cb = p.sum(axis=a_axes, keepdims=True)
    p_c = p_ac.sum(axis=a_axes, keepdims=True)
    mask = p > 0.0
    ratio = np.ones_like(p)
    np.divide(p * p_c, p_ac * p_cb, out=ratio, where=mask)
    return float(np.sum(p * np.log(ratio), where=mask))


def transfer_entropy_terms(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    m: int | float = 0,
    n_eval: int | float | None = None,
    max_cells: int = DEFAULT_CELL_BUDGET,
) -> np.ndarray:
    """Per-step conditional mutual informations I(window; u_t | recent controls).

    ``m`` widens the state window to x_{t-m}..x_t; ``n_eval`` sets how many
    recent controls are conditioned on (defaults to the policy degree; pass
    math.inf for full-history conditioning, which is guarded by max_cells).
    """
    T = mdp.horizon
    if n_eval is None:
        n_eval = policy.degree
    m_eff = T if math.isinf(m) else int(m)
    n_eff = T if math.isinf(n_eval) else int(n_eval)
    if m_eff < 0 or n_eff < 0:
        raise InstanceError("window degrees must be nonnegative")
    depth = max(n_eff, policy.degree)
    terms = []
    for t, _, lam in _window_scan(mdp, policy, m_eff, depth, max_cells):
        if lam is None:
            break
        nx = min(m_eff, t) + 1
        nu = min(depth, t)
        drop = nu - min(n_eff, t)
        if drop:
            lam = lam.sum(axis=tuple(range(nx, nx + drop)))
        kept = nu - drop
        a_axes = tuple(range(nx))
        c_axes = tuple(range(nx, nx + kept))
        b_axes = (lam.ndim - 1,)
        terms.append(conditional_mutual_information(lam, a_axes, b_axes, c_axes))
    return np.asarray(terms)


def transfer_entropy(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    m: int | float = 0,
    n_eval: int | float | None = None,
    max_cells: int = DEFAULT_CELL_BUDGET,
) -> float:
    """Total directional information flow from states to controls, in nats."""
    return float(transfer_entropy_terms(mdp, policy, m, n_eval, max_cells).sum())


def _full_history_tables(
    mdp: FiniteMdp, policy: "MemoryPolicy | Sequence[np.ndarray]"
) -> list[np.ndarray]:
    """Policy tables broadcastable against the interleaved trajectory joint.

    The trajectory joint carries axes (x_0, u_0, x_1, u_1, ..., x_t); the
    returned table for time t appends the u_t axis.  Memory policies are
    lifted by inserting singleton axes; explicit full-history tables must
    have exact shape (X_0, U_0, ..., X_t, U_t).
    """
    X, A, T = mdp.state_cards, mdp.action_cards, mdp.horizon
    if isinstance(policy, MemoryPolicy):
        check_compatible(mdp, policy)
        out = []
        for t in range(T):
            span = mdp.history_span(policy.degree, t)
            hist = mdp.history_dims(policy.degree, t)
            q = policy.tables[t].reshape((X[t],) + hist + (A[t],))
            q = np.moveaxis(q, 0, len(hist))  # (hist..., x_t, u_t)
            shape = []
            for s in range(t):
                shape.append(1)
                shape.append(A[s] if s in span else 1)
            shape += [X[t], A[t]]
            out.append(q.reshape(shape))
        return out
    tables = list(policy)
    if len(tables) != T:
        raise InstanceError(
            f"full-history policy has {len(tables)} tables for horizon {T}"
        )
    out = []
    for t, q in enumerate(tables):
        q = np.asarray(q, dtype=float)
        want: tuple[int, ...] = ()
        for s in range(t + 1):
            want += (X[s],)
            if s < t:
                want += (A[s],)
        want += (A[t],)
        if q.shape != want:
            raise InstanceError(
                f"full-history table {t} has shape {q.shape}, expected {want}"
            )
        if (q < 0).any() or np.abs(q.sum(axis=-1) - 1.0).max() > ROW_TOL:
            raise InstanceError(f"full-history table {t} rows are not distributions")
        out.append(q)
    return out


def directed_information(
    mdp: FiniteMdp,
    policy: "MemoryPolicy | Sequence[np.ndarray]",
    max_cells: int = 2_000_000,
) -> float:
    """Sum over t of I(x_0..x_t; u_t | u_0..u_{t-1}) by exhaustive enumeration.

    Equals the transfer entropy with unbounded windows.  The full trajectory
    joint must fit in ``max_cells`` entries; otherwise ResourceError.
    """
    X, A, T = mdp.state_cards, mdp.action_cards, mdp.horizon
    full = _prod(X) * _prod(A)
    if full > max_cells:
        raise ResourceError(
            f"trajectory joint needs {full} cells, budget is {max_cells}"
        )
    tables = _full_history_tables(mdp, policy)
    joint = mdp.initial  # axes (x_0,)
    total = 0.0
    for t in range(T):
        joint = joint[..., None] * tables[t]  # axes (x_0, u_0, ..., x_t, u_t)
        a_axes = tuple(range(0, 2 * t + 1, 2))
        c_axes = tuple(range(1, 2 * t, 2))
        total += conditional_mutual_information(joint, a_axes, (2 * t + 1,), c_axes)
        p = mdp.transitions[t].reshape((1,) * (2 * t) + (X[t], A[t], X[t + 1]))
        joint = joint[..., None] * p
    return total


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def induced_action_marginals(
    mdp: FiniteMdp, policy: MemoryPolicy, belief: ReducedBelief | None = None
) -> list[np.ndarray]:
    """History-conditional action marginals of the policy under its own flow.

    Returns per-time arrays of shape (H_t, U_t).  Histories with zero mass
    get the uniform distribution.
    """
    if belief is None:
        belief = propagate_reduced(mdp, policy)
    out = []
    for t in range(mdp.horizon):
        mu = belief.mus[t]
        lam = (mu[:, :, None] * policy.tables[t]).sum(axis=0)  # (H, U)
        mass = mu.sum(axis=0)
        u = lam.shape[1]
        nu = np.full_like(lam, 1.0 / u)
        np.divide(lam, mass[:, None], out=nu, where=mass[:, None] > 0.0)
        out.append(nu)
    return out


def per_step_information(
    mdp: FiniteMdp, policy: MemoryPolicy, belief: ReducedBelief | None = None
) -> np.ndarray:
    """I(x_t; u_t | recent controls) per step at the policy's own degree."""
    if belief is None:
        belief = propagate_reduced(mdp, policy)
    nus = induced_action_marginals(mdp, policy, belief)
    terms = []
    for t in range(mdp.horizon):
        mu = belief.mus[t]
        q = policy.tables[t]
        lam = mu[:, :, None] * q
        mask = lam > 0.0
        ratio = np.ones_like(lam)
        np.divide(q, nus[t][None, :, :], out=ratio, where=mask)
        terms.append(float(np.sum(lam * np.log(ratio), where=mask)))
    return np.asarray(terms)


def expected_cost(
    mdp: FiniteMdp, policy: MemoryPolicy, belief: ReducedBelief | None = None
) -> float:
    """Expected stage-additive cost of the policy, terminal term included."""
    if belief is None:
        belief = propagate_reduced(mdp, policy)
    total = 0.0
    for t in range(mdp.horizon):
        lam = (belief.mus[t][:, :, None] * policy.tables[t]).sum(axis=1)  # (X, U)
        total += float(np.sum(lam * mdp.stage_costs[t]))
    total += float(belief.state_marginal(mdp.horizon) @ mdp.terminal_cost)
    return total


def objective(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    beta: float,
    m: int | float = 0,
    n_eval: int | float | None = None,
) -> ObjectiveValue:
    """Cost, information, and the weighted total cost + beta * information."""
    if beta <= 0:
        raise InstanceError(f"beta must be positive, got {beta!r}")
    belief = propagate_reduced(mdp, policy)
    cost = expected_cost(mdp, policy, belief)
    if (m == 0 or m is None) and (n_eval is None or n_eval == policy.degree):
        info = float(per_step_information(mdp, policy, belief).sum())
    else:
        info = transfer_entropy(mdp, policy, m, n_eval)
    return ObjectiveValue(cost, info, cost + beta * info)


def factored_objective(
    mdp: FiniteMdp,
    policy: MemoryPolicy,
    nu: Sequence[np.ndarray],
    beta: float,
    belief: ReducedBelief | None = None,
) -> float:
    """Stage-wise objective with a free action-marginal block.

    Evaluates sum_t E[c_t + beta * log(q_t / nu_t)] + terminal cost with the
    beliefs induced by the policy alone.  Returns +inf when some nu entry is
    zero where the corresponding joint policy mass is positive; equals
    ``objective(...).total`` when nu is the induced marginal, and is never
    below it for any other feasible nu.
    """
    if beta <= 0:
        raise InstanceError(f"beta must be positive, got {beta!r}")
    if belief is None:
        belief = propagate_reduced(mdp, policy)
    total = 0.0
    for t in range(mdp.horizon):
        mu = belief.mus[t]
        q = policy.tables[t]
        lam = mu[:, :, None] * q
        nu_b = np.asarray(nu[t], dtype=float)[None, :, :]
        mask = lam > 0.0
        if np.any(mask & (np.broadcast_to(nu_b, lam.shape) <= 0.0)):
            return math.inf
        ratio = np.ones_like(lam)
        np.divide(q, nu_b, out=ratio, where=mask)
        total += float(np.sum(lam * mdp.stage_costs[t][:, None, :]))
        total += beta * float(np.sum(lam * np.log(ratio), where=mask))
    total += float(belief.state_marginal(mdp.horizon) @ mdp.terminal_cost)
    return total


def canonicalize_policy(
    mdp: FiniteMdp, policy: MemoryPolicy, belief: ReducedBelief | None = None
) -> MemoryPolicy:
    """Replace action slices at unreachable (state, history) pairs by uniform.

    The replaced slices carry no probability mass, so every functional of the
    policy is unchanged; the canonical form makes reports deterministic and
    keeps policy comparisons meaningful.
    """
    if belief is None:
        belief = propagate_reduced(mdp, policy)
    tables = []
    for t in range(mdp.horizon):
        q = np.array(policy.tables[t])
        dead = belief.mus[t] == 0.0
        if dead.any():
            q[dead, :] = 1.0 / q.shape[2]
        tables.append(q)
    return MemoryPolicy(policy.degree, tuple(tables))
