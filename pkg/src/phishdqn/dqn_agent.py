"""Deep Q-learning classifier: replay memory, epsilon-greedy, target network.

The environment is the shuffled training stream. At step t the state is the
feature vector of sample t, the action is a predicted label, the reward is
+1 for a correct label and -1 otherwise, and the next state is the feature
vector of sample t+1. The last sample of an episode is terminal.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .errors import InsufficientExperience, NonFiniteLoss
from .neuralnet import (
    AdamState,
    NetworkParams,
    NetworkSpec,
    adam_step,
    backward_batch,
    forward,
    forward_batch,
    init_network,
    squared_loss,
)

log = logging.getLogger(__name__)

BENIGN, PHISHING = 0, 1


@dataclass(frozen=True)
class Experience:
    """One transition. ``state`` and ``next_state`` hold feature values."""

    state: np.ndarray
    action: int
    reward: int
    next_state: np.ndarray
    terminal: bool

    def __post_init__(self):
        if self.action not in (0, 1):
            raise ValueError(f"action must be 0 or 1, got {self.action!r}")
        if self.reward not in (-1, 1):
            raise ValueError(f"reward must be -1 or +1, got {self.reward!r}")


class ReplayMemory:
    """Fixed-capacity FIFO ring buffer of experiences."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: list[Experience] = []
        self._next = 0

    def __len__(self):
        return len(self._buf)

    def store(self, e: Experience) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(e)
        else:
            self._buf[self._next] = e
        self._next = (self._next + 1) % self.capacity

    def contents(self) -> list[Experience]:
        """Stored experiences, oldest first."""
        if len(self._buf) < self.capacity:
            return list(self._buf)
        return self._buf[self._next:] + self._buf[: self._next]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Experience]:
        if len(self._buf) < batch_size:
            raise InsufficientExperience(f"memory holds {len(self._buf)} experiences, batch needs {batch_size}")
        picks = rng.choice(len(self._buf), size=batch_size, replace=False)
        return [self._buf[i] for i in picks]


def store(memory: ReplayMemory, e: Experience) -> None:
    memory.store(e)


def sample_minibatch(memory: ReplayMemory, batch_size: int, rng: np.random.Generator) -> list[Experience]:
    return memory.sample(batch_size, rng)


@dataclass
class AgentConfig:
    gamma: float = 0.9
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    batch_size: int = 32
    target_sync_every: int = 500
    episodes: int = 10
    replay_capacity: int = 10_000
    learn_start: int = 500
    seed: int = 42
    learning_rate: float = 0.001
    hidden_dims: tuple[int, ...] = (32, 16)

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        for name in ("epsilon_decay_steps", "batch_size", "target_sync_every", "episodes", "replay_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learn_start < 0:
            raise ValueError("learn_start must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    def epsilon_at(self, step: int) -> float:
        """Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps."""
        frac = min(1.0, step / self.epsilon_decay_steps)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass
class TrainingStats:
    episode_rewards: list[float] = field(default_factory=list)
    episode_accuracy: list[float] = field(default_factory=list)
    episode_greedy_accuracy: list[float] = field(default_factory=list)
    episode_epsilon: list[float] = field(default_factory=list)
    episode_mean_loss: list[float | None] = field(default_factory=list)
    loss_trace: list[float] = field(default_factory=list)
    transitions_stored: int = 0
    gradient_steps: int = 0
    target_syncs: int = 0
    # TD targets above 1 cannot be met by a softmax head
    unreachable_targets: int = 0

    def to_dict(self, include_loss_trace: bool = False) -> dict:
        d = asdict(self)
        if not include_loss_trace:
            d.pop("loss_trace")
        return d


def reward(action: int, label: int) -> int:
    return 1 if action == label else -1


def select_action(q, epsilon: float, rng: np.random.Generator) -> tuple[int, bool]:
    """Epsilon-greedy choice; greedy ties go to action 0."""
    if rng.random() < epsilon:
        return int(rng.integers(2)), True
    return (1 if q[1] > q[0] else 0), False


def td_target(e: Experience, target_params: NetworkParams, gamma: float) -> float:
    if e.terminal:
        return float(e.reward)
    q_next, _ = forward(target_params, e.next_state)
    return float(e.reward + gamma * q_next.max())


def td_targets(batch: Sequence[Experience], target_params: NetworkParams, gamma: float) -> np.ndarray:
    rewards = np.array([e.reward for e in batch], dtype=np.float64)
    live = np.array([not e.terminal for e in batch])
    if gamma == 0.0 or not live.any():
        return rewards
    q_next = forward_batch(target_params, np.stack([e.next_state for e in batch])).q.max(axis=1)
    return rewards + gamma * q_next * live


def classify(params: NetworkParams, x) -> tuple[int, float]:
    """Label 1 iff Q(s, phishing) >= 0.5; also returns that Q-value."""
    q, _ = forward(params, x)
    q_phish = float(q[PHISHING])
    return int(q_phish >= 0.5), q_phish


def classify_batch(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q_phish = forward_batch(params, x).q[:, PHISHING]
    return (q_phish >= 0.5).astype(np.int64), q_phish


def _as_arrays(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "features") and hasattr(data, "labels"):
        return data.features, data.labels
    x, y = data
    return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.int64)


def train(data, config: AgentConfig | None = None) -> tuple[NetworkParams, TrainingStats]:
    """Run ``config.episodes`` passes of deep Q-learning over ``data``.

    ``data`` is a VectorizedDataset or an ``(features, labels)`` pair.
    The target network is synced at the start of every episode and every
    ``target_sync_every`` steps. One minibatch Adam step is taken per sample
    once the memory holds ``max(learn_start, batch_size)`` experiences.
    """
    config = config or AgentConfig()
    x, y = _as_arrays(data)
    n = len(y)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")

    rng = np.random.default_rng(config.seed)
    spec = NetworkSpec(input_dim=x.shape[1], hidden_dims=config.hidden_dims, output_dim=2)
    online = init_network(spec, config.seed)
    target = online.copy()
    adam = AdamState.zeros_like(online, learning_rate=config.learning_rate)
    memory = ReplayMemory(config.replay_capacity)
    stats = TrainingStats()
    warmup = max(config.learn_start, config.batch_size)
    step = 0

    for episode in range(config.episodes):
        target = online.copy()
        stats.target_syncs += 1
        order = rng.permutation(n)
        total_reward = 0
        correct = 0
        losses = []
        stats.episode_epsilon.append(config.epsilon_at(step))

        for t in range(n):
            s = x[order[t]]
            terminal = t == n - 1
            s_next = s if terminal else x[order[t + 1]]
            q, _ = forward(online, s)
            action, _ = select_action(q, config.epsilon_at(step), rng)
            r = reward(action, int(y[order[t]]))
            total_reward += r
            correct += r > 0
            memory.store(Experience(s, action, r, s_next, terminal))
            stats.transitions_stored += 1

            if len(memory) >= warmup:
                batch = memory.sample(config.batch_size, rng)
                targets = td_targets(batch, target, config.gamma)
                stats.unreachable_targets += int(np.count_nonzero(targets > 1.0))
                actions = [e.action for e in batch]
                trace = forward_batch(online, np.stack([e.state for e in batch]))
                loss = float(squared_loss(trace, actions, targets).mean())
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"loss became {loss} at step {step} (episode {episode + 1})")
                grads = backward_batch(online, trace, actions, targets)
                online, adam = adam_step(online, grads, adam, config.batch_size)
                stats.loss_trace.append(loss)
                losses.append(loss)
                stats.gradient_steps += 1

            step += 1
            if step % config.target_sync_every == 0:
                target = online.copy()
                stats.target_syncs += 1

        greedy = classify_batch(online, x)[0]
        stats.episode_rewards.append(float(total_reward))
        stats.episode_accuracy.append(correct / n)
        stats.episode_greedy_accuracy.append(float(np.mean(greedy == y)))
        stats.episode_mean_loss.append(float(np.mean(losses)) if losses else None)
        log.info(
            "episode %d/%d reward=%d acc=%.4f greedy_acc=%.4f eps=%.3f",
            episode + 1, config.episodes, total_reward, correct / n,
            stats.episode_greedy_accuracy[-1], config.epsilon_at(step),
        )

    return online, stats
