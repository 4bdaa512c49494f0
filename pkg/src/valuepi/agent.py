"""Value-based contextual bandit that picks the lower quantile proportion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import checkpoint
from .nn import (AdamState, DuelingHead, NumericError, adam_step, backward, dueling_output_gradient, dueling_q,
                 flat_backward, forward)
from .replay import ReplayBuffer

AGENT_HIDDEN = (512, 256)


@dataclass(frozen=True)
class ActionSpace:
    beta: float
    actions: tuple

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, i):
        return self.actions[i]


def build_action_space(beta, n):
    """Lower proportions ``i * beta / (2**n)`` for ``i = 1 .. 2**n - 1``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n}")
    size = 2 ** int(n) - 1
    return ActionSpace(float(beta), tuple(i * beta / (size + 1) for i in range(1, size + 1)))


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over ``decay_steps``, then flat."""

    start: float = 1.0
    end: float = 0.05
    decay_steps: int = 0

    def __call__(self, step):
        if self.decay_steps <= 0 or step >= self.decay_steps:
            return self.end
        return self.start + (self.end - self.start) * step / self.decay_steps


@dataclass
class AgentConfig:
    epsilon: EpsilonSchedule | float = 0.05
    batch_size: int = 128
    lr: float = 1e-4
    buffer_capacity: int = 50_000
    hidden: tuple = AGENT_HIDDEN
    # Q regresses on reward * reward_scale; argmax is unaffected
    reward_scale: float = 0.01
    dtype: str = "float64"

    def __post_init__(self):
        eps = self.epsilon
        vals = (eps.start, eps.end) if isinstance(eps, EpsilonSchedule) else (eps,)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class RewardRecord:
    state: np.ndarray
    action: int
    reward: float


class Agent:
    def __init__(self, space, config=None, rng=None, init="he", n_inputs=4):
        self.space = space
        self.config = config or AgentConfig()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.head = DuelingHead.create(n_inputs, self.config.hidden, len(space), rng=self.rng, init=init,
                                       dtype=self.config.dtype)
        self.opt = AdamState.for_model(self.head.net, self.config.lr)
        self.buffer = ReplayBuffer(self.config.buffer_capacity, n_inputs)
        self.steps = 0

    @property
    def epsilon(self):
        eps = self.config.epsilon
        return eps(self.steps) if callable(eps) else float(eps)

    def q_values(self, state):
        return dueling_q(self.head, state)

    def greedy(self, states):
        """Greedy action indices for a batch of states (ties -> lowest index)."""
        return np.argmax(self.q_values(np.atleast_2d(states)), axis=1)

    def observe(self, state, action, reward):
        if not np.isfinite(reward):
            raise NumericError(f"non-finite reward {reward}")
        self.buffer.append(state, reward, action)

    def learn(self):
        """One update on a uniform batch from the replay buffer."""
        if len(self.buffer) == 0:
            return 0.0
        states, rewards, actions = self.buffer.sample(self.rng, self.config.batch_size)
        loss, grad = _loss_and_grads(self, states, actions, rewards, flat=True)
        adam_step(self.opt, self.head.net.buffer, grad)
        return loss

    def save(self, path):
        checkpoint.save(path, self.head.net, {
            "beta": self.space.beta,
            "actions": list(self.space.actions),
            "steps": self.steps,
            "adam_step": self.opt.step,
            "reward_scale": self.config.reward_scale,
        })

    def load(self, path):
        net, header = checkpoint.load(path)
        if tuple(net.widths) != tuple(self.head.net.widths):
            raise checkpoint.CheckpointError("agent architecture mismatch")
        self.head.net = net
        self.opt = AdamState.for_model(net, self.config.lr)
        self.steps = int(header["steps"])
        return self


def select_action(agent, state, rng=None, epsilon=None):
    """Epsilon-greedy choice; returns ``(index, lower proportion)``."""
    rng = agent.rng if rng is None else rng
    eps = agent.epsilon if epsilon is None else epsilon
    if eps > 0 and rng.random() < eps:
        i = int(rng.integers(len(agent.space)))
    else:
        i = int(np.argmax(agent.q_values(state)))
    return i, agent.space[i]


def agent_loss_and_grads(agent, batch):
    """Half squared error between chosen-action Q and scaled reward."""
    states = np.stack([r.state for r in batch])
    actions = np.array([r.action for r in batch])
    rewards = np.array([r.reward for r in batch], dtype=float)
    return _loss_and_grads(agent, states, actions, rewards)


def _loss_and_grads(agent, states, actions, rewards, flat=False):
    if not np.all(np.isfinite(rewards)):
        raise NumericError("non-finite reward in batch")
    if np.any(actions < 0) or np.any(actions >= len(agent.space)):
        raise IndexError("action index out of range")
    targets = rewards * agent.config.reward_scale
    raw, cache = forward(agent.head.net, states, keep=True)
    q = raw[:, :1] + raw[:, 1:] - raw[:, 1:].mean(axis=1, keepdims=True)
    rows = np.arange(len(actions))
    err = q[rows, actions] - targets
    dq = np.zeros_like(q)
    dq[rows, actions] = err
    back = flat_backward if flat else backward
    return 0.5 * float(np.sum(err ** 2)), back(agent.head.net, cache, dueling_output_gradient(dq))


def update_agent(agent, batch):
    if not batch:
        raise ValueError("empty batch")
    loss, grads = agent_loss_and_grads(agent, batch)
    adam_step(agent.opt, agent.head.net.params(), grads)
    return loss

