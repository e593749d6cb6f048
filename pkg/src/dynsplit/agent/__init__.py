from .policy import epsilon_at, greedy, select_action
from .qnet import QNetwork, bellman_targets, dqn_train_step, q_finite_diff_check, q_forward, q_gradients, sync_target
from .replay import ReplayBuffer, Transition, TransitionBatch
from .tabular import TabularMDP, lowest_argmax, q_from_values, tabular_q_learning, value_iteration

__all__ = [
    "QNetwork", "ReplayBuffer", "TabularMDP", "Transition", "TransitionBatch", "bellman_targets",
    "dqn_train_step", "epsilon_at", "greedy", "lowest_argmax", "q_finite_diff_check", "q_forward", "q_from_values",
    "q_gradients", "select_action", "sync_target", "tabular_q_learning", "value_iteration",
]
