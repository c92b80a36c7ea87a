"""Twin-critic deterministic policy-gradient training loop.

Standard twin-delayed machinery scaled to a desk-size environment:
a ring replay buffer, two critics regressed onto the clipped double
estimate (min of both target critics), an actor updated every
``actor_delay`` critic steps by ascending critic 1, and slowly tracking
target copies of all three networks. Exploration is Gaussian noise on
the actor output, re-projected onto the allocation simplex; the warmup
phase fills the buffer with uniform-random allocations.

Updates are plain gradient steps so every operation here stays a pure
function of its arguments; training as a whole is a deterministic
function of (environment, config) including the seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .environment import BudgetEnv, clip_to_simplex
from .errors import ContractError, NumericError, ShapeError
from .neural_core import (
    LINEAR,
    SIMPLEX,
    ActorPolicy,
    MlpSpec,
    forward_actor,
    forward_batch,
    init_params,
    vjp_batch,
)

__all__ = [
    "Transition",
    "ReplayBuffer",
    "TD3Config",
    "TrainedPolicy",
    "compute_target",
    "smoothed_target_action",
    "critic_update",
    "actor_update",
    "soft_update",
    "train",
    "ACTOR_HIDDEN",
    "CRITIC_HIDDEN",
]

STATE_DIM = 3
ACTION_DIM = 2
ACTOR_HIDDEN = (64, 64)
CRITIC_HIDDEN = (64, 64)


def actor_spec() -> MlpSpec:
    return MlpSpec(STATE_DIM, ACTOR_HIDDEN, ACTION_DIM, SIMPLEX)


def critic_spec() -> MlpSpec:
    return MlpSpec(STATE_DIM + ACTION_DIM, CRITIC_HIDDEN, 1, LINEAR)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions, oldest evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0
        self.inserted = 0

    def push(self, tr: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._cursor] = tr
        self._cursor = (self._cursor + 1) % self.capacity
        self.inserted += 1

    def __len__(self) -> int:
        return len(self._items)

    def snapshot(self) -> list[Transition]:
        """Contents in insertion order, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._cursor:] + self._items[: self._cursor]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if len(self._items) == 0:
            raise ContractError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


@dataclass(frozen=True)
class TD3Config:
    total_timesteps: int = 50_000
    gamma: float = 0.99
    tau: float = 0.005
    actor_delay: int = 2
    batch_size: int = 64
    buffer_capacity: int = 10_000
    exploration_sigma: float = 0.1
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    learning_rate: float = 1e-3
    warmup_steps: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.total_timesteps < 1:
            raise ContractError("total_timesteps must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ContractError("gamma must lie in [0, 1)")
        if self.actor_delay < 1 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ContractError("actor_delay, batch_size, buffer_capacity must be positive")
        if min(self.tau, self.exploration_sigma, self.target_noise_sigma,
               self.target_noise_clip, self.learning_rate) < 0:
            raise ContractError("rates and noise scales must be non-negative")
        if self.warmup_steps < 0:
            raise ContractError("warmup_steps must be non-negative")


@dataclass(frozen=True)
class TrainedPolicy(ActorPolicy):
    """Actor policy plus its training provenance and per-episode rewards."""

    seed: int
    config: TD3Config
    episode_rewards: tuple[float, ...]
    aux_params: dict[str, np.ndarray] = field(default_factory=dict)
    critic_spec: MlpSpec | None = None


def compute_target(r: float, gamma: float, done: bool, q1_next: float, q2_next: float) -> float:
    """Bootstrapped regression target with the clipped double estimate."""
    if done:
        return r
    return r + gamma * min(q1_next, q2_next)


def smoothed_target_action(
    actor_target: ActorPolicy,
    next_state: np.ndarray,
    sigma: float,
    clip: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Target-actor output plus clipped Gaussian noise, back on the simplex."""
    a = actor_target.act(next_state)
    noise = np.clip(rng.normal(0.0, sigma, size=a.shape), -clip, clip)
    return clip_to_simplex(a + noise)


def _smoothed_target_actions_batch(
    params: np.ndarray,
    spec: MlpSpec,
    next_states: np.ndarray,
    sigma: float,
    clip: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Batched twin of smoothed_target_action (one noise draw per row)."""
    a = forward_batch(params, spec, next_states)
    noise = np.clip(rng.normal(0.0, sigma, size=a.shape), -clip, clip)
    out = np.clip(a + noise, 0.0, 1.0)
    sums = out.sum(axis=1, keepdims=True)
    degenerate = sums[:, 0] <= 0.0
    out[degenerate] = 0.5
    sums[degenerate] = 1.0
    return out / sums


def critic_update(
    critic_params: list[np.ndarray],
    spec: MlpSpec,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
    learning_rate: float,
) -> tuple[list[np.ndarray], float]:
    """One mean-squared-error descent step per critic; returns mean loss."""
    x = np.concatenate([states, actions], axis=1)
    n = x.shape[0]
    if n == 0:
        raise ContractError("empty batch")
    y = np.asarray(targets, dtype=np.float64).reshape(n, 1)
    updated = []
    losses = []
    for params in critic_params:
        pred = forward_batch(params, spec, x)
        err = pred - y
        loss = float((err * err).mean())
        if not np.isfinite(loss):
            raise NumericError("critic loss diverged to a non-finite value")
        grad, _ = vjp_batch(params, spec, x, 2.0 * err / n)
        updated.append(params - learning_rate * grad)
        losses.append(loss)
    return updated, float(np.mean(losses))


def actor_update(
    actor_params: np.ndarray,
    actor: MlpSpec,
    critic1_params: np.ndarray,
    critic: MlpSpec,
    states: np.ndarray,
    learning_rate: float,
) -> np.ndarray:
    """One ascent step on the batch mean of critic 1 at the actor's actions.

    The gradient reaches the actor through the action slice of the
    critic's input; critic parameters stay fixed.
    """
    n = states.shape[0]
    actions = forward_batch(actor_params, actor, states)
    x = np.concatenate([states, actions], axis=1)
    _, input_grad = vjp_batch(critic1_params, critic, x, np.full((n, 1), 1.0 / n))
    action_grad = input_grad[:, states.shape[1]:]
    actor_grad, _ = vjp_batch(actor_params, actor, states, action_grad)
    if not np.all(np.isfinite(actor_grad)):
        raise NumericError("actor gradient is non-finite")
    return actor_params + learning_rate * actor_grad


def soft_update(target_params: np.ndarray, online_params: np.ndarray, tau: float) -> np.ndarray:
    """Exponential tracking: (1 - tau) * target + tau * online."""
    target_params = np.asarray(target_params, dtype=np.float64)
    online_params = np.asarray(online_params, dtype=np.float64)
    if target_params.shape != online_params.shape:
        raise ShapeError("target and online parameter layouts differ")
    return (1.0 - tau) * target_params + tau * online_params


def train(env: BudgetEnv, config: TD3Config) -> TrainedPolicy:
    """Run episodes back-to-back until the timestep budget is spent."""
    a_spec = actor_spec()
    c_spec = critic_spec()
    actor = init_params(a_spec, config.seed)
    critic1 = init_params(c_spec, config.seed + 1)
    critic2 = init_params(c_spec, config.seed + 2)
    actor_t, critic1_t, critic2_t = actor.copy(), critic1.copy(), critic2.copy()
    rng = np.random.default_rng(config.seed + 3)

    buffer = ReplayBuffer(config.buffer_capacity)
    episode_rewards: list[float] = []
    episode_total = 0.0
    n_critic_updates = 0

    state = env.reset()
    for step in range(1, config.total_timesteps + 1):
        if step <= config.warmup_steps:
            action = rng.dirichlet([1.0, 1.0])
        else:
            noise = rng.normal(0.0, config.exploration_sigma, size=ACTION_DIM)
            action = clip_to_simplex(forward_actor(actor, a_spec, state) + noise)
        result = env.step(action)
        buffer.push(
            Transition(state, result.info["action"], result.reward.total,
                       result.next_state, result.done)
        )
        episode_total += result.reward.total
        state = result.next_state
        if result.done:
            episode_rewards.append(episode_total)
            episode_total = 0.0
            state = env.reset()

        if step <= config.warmup_steps or len(buffer) < config.batch_size:
            continue

        batch = buffer.sample(config.batch_size, rng)
        states = np.stack([tr.state for tr in batch])
        actions = np.stack([tr.action for tr in batch])
        rewards = np.array([tr.reward for tr in batch])
        next_states = np.stack([tr.next_state for tr in batch])
        dones = np.array([tr.done for tr in batch])

        next_actions = _smoothed_target_actions_batch(
            actor_t, a_spec, next_states,
            config.target_noise_sigma, config.target_noise_clip, rng,
        )
        next_x = np.concatenate([next_states, next_actions], axis=1)
        q1_next = forward_batch(critic1_t, c_spec, next_x)[:, 0]
        q2_next = forward_batch(critic2_t, c_spec, next_x)[:, 0]
        targets = np.where(
            dones, rewards, rewards + config.gamma * np.minimum(q1_next, q2_next)
        )

        (critic1, critic2), _ = critic_update(
            [critic1, critic2], c_spec, states, actions, targets, config.learning_rate
        )
        n_critic_updates += 1

        if n_critic_updates % config.actor_delay == 0:
            actor = actor_update(
                actor, a_spec, critic1, c_spec, states, config.learning_rate
            )
            actor_t = soft_update(actor_t, actor, config.tau)
            critic1_t = soft_update(critic1_t, critic1, config.tau)
            critic2_t = soft_update(critic2_t, critic2, config.tau)

    return TrainedPolicy(
        spec=a_spec,
        params=actor,
        seed=config.seed,
        config=config,
        episode_rewards=tuple(episode_rewards),
        aux_params={
            "critic1": critic1,
            "critic2": critic2,
            "actor_target": actor_t,
            "critic1_target": critic1_t,
            "critic2_target": critic2_t,
        },
        critic_spec=c_spec,
    )
