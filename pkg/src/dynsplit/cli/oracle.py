"""Self-verification suite: reference solvers and exact equivalences the implementation must meet."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..agent.qnet import QNetwork, q_finite_diff_check
from ..agent.tabular import TabularMDP, q_from_values, tabular_q_learning, value_iteration
from ..core.config import RewardWeights
from ..core.data import make_blobs
from ..env.devices import FeasibilityReport, compute_reward
from ..splitnet.gradcheck import finite_diff_check, nudge_off_kinks
from ..splitnet.network import (
    NetworkSpec,
    ParamStore,
    backward_client,
    build_network,
    forward_client,
    forward_server,
    full_gradients,
    server_gradients,
)

DEFAULT_DIMS = (8, 64, 64, 64, 64, 64, 5)
SPLIT_TOL = 1e-12
GRAD_TOL = 1e-6
Q_TOL = 1e-2
Q_STEPS = 50_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def reference_mdp() -> TabularMDP:
    """Three states, two actions, mildly stochastic; optimal policy mixes both actions."""
    P = np.array([
        [[0.9, 0.1, 0.0], [0.0, 0.9, 0.1]],
        [[0.9, 0.1, 0.0], [0.0, 0.1, 0.9]],
        [[0.1, 0.0, 0.9], [0.9, 0.0, 0.1]],
    ])
    R = np.array([[0.0, 0.1], [0.3, 0.0], [1.0, 0.2]])
    return TabularMDP(P, R, 0.5)


def reference_q_learning(mdp: TabularMDP, seed: int = 0, n_steps: int = Q_STEPS) -> np.ndarray:
    return tabular_q_learning(mdp, n_steps, lr=lambda n: 1.0 / n ** 0.8, epsilon=0.5, seed=seed)


def check_tabular() -> CheckResult:
    mdp = reference_mdp()
    V, pi = value_iteration(mdp)
    q_star = q_from_values(mdp, V)
    q = reference_q_learning(mdp)
    err = float(np.abs(q - q_star).max())
    same = bool(np.array_equal(q.argmax(axis=1), pi))
    return CheckResult("tabular Q-learning vs value iteration", same and err < Q_TOL,
                       f"policy match={same}, max |Q - Q*| = {err:.2e} (tol {Q_TOL:g})")


def default_fixture(seed: int = 0, n: int = 16) -> tuple[ParamStore, np.ndarray, np.ndarray]:
    store = build_network(NetworkSpec.mlp(DEFAULT_DIMS), seed)
    ds = make_blobs(n, DEFAULT_DIMS[-1], DEFAULT_DIMS[0], 0.75, seed)
    return store, ds.features, ds.labels


def split_mismatch(store: ParamStore, x: np.ndarray, y: np.ndarray, cut: int) -> float:
    """Largest relative deviation of split-path logits/gradients from the monolithic path."""
    work = store.copy()
    ref_loss, ref_grads, ref_logits = full_gradients(work, x, y)
    smashed = forward_client(work, cut, x, y, round_id=0, device_id=0)
    logits = forward_server(work, smashed)
    at_cut, server_grads = server_gradients(work, smashed)
    grads = backward_client(work, at_cut) + server_grads

    def rel(a: np.ndarray, b: np.ndarray) -> float:
        scale = max(float(np.abs(b).max()), np.finfo(float).tiny)
        return float(np.abs(a - b).max()) / scale

    worst = rel(logits, ref_logits)
    for (gw, gb), (rw, rb) in zip(grads, ref_grads):
        worst = max(worst, rel(gw, rw), rel(gb, rb))
    return worst


def check_split_equivalence() -> CheckResult:
    store, x, y = default_fixture()
    errs = [split_mismatch(store, x, y, cut) for cut in range(1, store.n_layers)]
    worst = max(errs)
    return CheckResult("split path == monolithic path", worst <= SPLIT_TOL,
                       f"cuts 1..{store.n_layers - 1}, worst relative deviation {worst:.1e} (tol {SPLIT_TOL:g})")


def check_split_gradients() -> CheckResult:
    store, x, y = default_fixture(n=8)
    x = nudge_off_kinks(store, x, np.random.default_rng(1))
    err = finite_diff_check(store, x, y, cut=store.n_layers // 2)
    return CheckResult("split network finite differences", err < GRAD_TOL,
                       f"max relative error {err:.1e} (tol {GRAD_TOL:g})")


def check_q_gradients() -> CheckResult:
    rng = np.random.default_rng(2)
    qnet = QNetwork.init(2, 5, rng)
    states = rng.uniform(0.0, 1.0, size=(32, 2))
    # keep every hidden pre-activation clear of the ReLU kink
    for _ in range(200):
        z = states @ qnet.w1 + qnet.b1
        if np.abs(z).min() >= 1e-3:
            break
        states = states + 1e-2 * rng.standard_normal(states.shape)
    actions = rng.integers(1, 6, size=32)
    targets = rng.normal(size=32)
    err = q_finite_diff_check(qnet, states, actions, targets)
    return CheckResult("Q-network finite differences", err < GRAD_TOL,
                       f"max relative error {err:.1e} (tol {GRAD_TOL:g})")


def check_rewards() -> CheckResult:
    report = FeasibilityReport(delta_r=(-0.6, 1.0), delta_t=(-0.4, 1.0))
    soft = compute_reward(0.8, report, 1, RewardWeights(alpha=1.0, beta=0.5, mode="soft"))
    strict_bad = compute_reward(0.8, report, 1, RewardWeights())
    strict_ok = compute_reward(0.8, report, 2, RewardWeights(alpha=1.0, beta=0.5))
    ok = abs(soft - 0.30) <= 1e-12 and strict_bad == -1.0 and strict_ok == 0.8
    return CheckResult("reward hand values", ok,
                       f"soft={soft:.12g} (0.30), strict infeasible={strict_bad:g} (-1), feasible={strict_ok:g} (0.8)")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_tabular, check_split_gradients, check_q_gradients, check_split_equivalence, check_rewards,
)


def run_checks() -> list[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail", f"{'-' * width}  ------  ------"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
