"""Episode/round loop: device dynamics, split selection, split training, DQN updates."""

from __future__ import annotations

import functools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, TypeVar

import numpy as np

from ..agent.policy import epsilon_at, select_action
from ..agent.qnet import QNetwork, dqn_train_step, q_forward, sync_target
from ..agent.replay import ReplayBuffer, Transition
from ..core.config import ExperimentConfig
from ..core.data import TEST, VAL, Dataset, make_blobs, split_train_val_test
from ..core.metrics import Metrics, classification_metrics
from ..core.records import RoundRecord
from ..core.rng import stream
from ..env.devices import (
    DeviceDynamics,
    DeviceState,
    FeasibilityReport,
    compute_reward,
    feasibility,
    init_devices,
    state_features,
    step_device_state,
)
from ..proto.transport import StreamListener, TransportError, loopback_transport, stream_connect
from ..splitnet.catalog import SplitCatalog, catalog_cuts
from ..splitnet.network import NetworkSpec, NonFiniteError, ParamStore, build_network, forward_full
from .client import DeviceClient, RoundError, StepResult
from .server import ParameterServer, StreamServer
from .sharding import ShardAssignment, make_shards

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

TRANSPORTS = ("loopback", "stream")


def derived_seed(seed: int, purpose: str) -> int:
    return int(stream(seed, purpose).integers(0, 2**63 - 1))


def prepare_data(cfg: ExperimentConfig) -> Dataset:
    ds = make_blobs(cfg.data.samples, cfg.data.classes, cfg.data.dim, cfg.data.spread,
                    derived_seed(cfg.seed, "data"))
    return split_train_val_test(ds, derived_seed(cfg.seed, "split"))


def network_spec(cfg: ExperimentConfig) -> NetworkSpec:
    return NetworkSpec.mlp([cfg.data.dim, *cfg.hidden, cfg.data.classes])


def init_store(cfg: ExperimentConfig) -> ParamStore:
    return build_network(network_spec(cfg), derived_seed(cfg.seed, "model-init"))


def evaluate_global(store: ParamStore, ds: Dataset, tag: int = TEST) -> Metrics:
    x, y = ds.part(tag)
    preds = forward_full(store, x).argmax(axis=1)
    return classification_metrics(preds, y, ds.n_classes)


def accuracy(store: ParamStore, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(forward_full(store, x).argmax(axis=1) == y))


@dataclass
class Learner:
    """One DQN agent: online net, target net, replay buffer."""

    qnet: QNetwork
    target: QNetwork
    buffer: ReplayBuffer

    @classmethod
    def create(cls, cfg: ExperimentConfig, index: int) -> "Learner":
        qnet = QNetwork.init(cfg.state_dim, cfg.n_splits, stream(cfg.seed, "qnet-init", index))
        buffer = ReplayBuffer(cfg.replay_capacity, cfg.state_dim, stream(cfg.seed, "replay", index))
        return cls(qnet, qnet.copy(), buffer)

    def train(self, cfg: ExperimentConfig) -> float | None:
        return dqn_train_step(self.qnet, self.target, self.buffer, batch_size=cfg.batch_size,
                              discount=cfg.discount, lr=cfg.lr, weight_decay=cfg.weight_decay)

    def sync(self) -> None:
        sync_target(self.qnet, self.target)


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    seed: int
    records: list[RoundRecord]
    split_freq: np.ndarray  # (episodes, K) counts of chosen splits over available device-steps
    mean_val_acc: list[float]
    test_metrics: Metrics
    straggler_rate: list[float]  # per episode, stragglers / available device-steps
    grad_norms: list[list[float]]  # per episode, client-segment gradient norm of every executed step
    optimizer_steps: int  # executed split-training steps
    transitions: int
    wall_time: float
    catalog: SplitCatalog
    store: ParamStore = field(repr=False)
    learners: list[Learner] = field(repr=False, default_factory=list)

    def available_steps(self) -> np.ndarray:
        counts = np.zeros(self.config.episodes, dtype=np.int64)
        for r in self.records:
            counts[r.episode] += r.available
        return counts


@dataclass
class _Decision:
    state: DeviceState
    features: np.ndarray
    action: int
    report: FeasibilityReport


class Simulation:
    """Holds the run state between rounds; :meth:`run` drives the full schedule."""

    def __init__(self, cfg: ExperimentConfig, transport: str = "loopback", workers: int = 1,
                 listen: str = "127.0.0.1:0", connect: str | None = None):
        if transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {transport!r}")
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.cfg = cfg
        self.dyn = DeviceDynamics.from_config(cfg)
        self.ds = prepare_data(cfg)
        self.shards: ShardAssignment = make_shards(
            self.ds, cfg.n_devices, cfg.distribution.kind, cfg.distribution.shards_per_client,
            cfg.val_subsample, derived_seed(cfg.seed, "shards"))
        spec = network_spec(cfg)
        self.store = init_store(cfg)
        self.catalog = catalog_cuts(spec, cfg.n_splits, cfg.capacity_range, cfg.cost_table)
        self.server = ParameterServer(self.store, cfg.lr, cfg.weight_decay, cfg.merge_mode)
        n_agents = cfg.n_devices if cfg.agent_mode == "per-device" else 1
        self.learners = [Learner.create(cfg, i) for i in range(n_agents)]
        self.last_acc = [0.0] * cfg.n_devices
        self.devices: list[DeviceState] = []
        self.global_round = 0
        self.optimizer_steps = 0
        self.transitions = 0
        self.grad_norms: list[list[float]] = []
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        self._stream_server: StreamServer | None = None
        self.clients = self._connect(transport, listen, connect, spec)

    # -- setup / teardown ------------------------------------------------------

    def _connect(self, transport: str, listen: str, connect: str | None, spec: NetworkSpec) -> list[DeviceClient]:
        activations = [layer.activation for layer in spec.layers]
        clients = []
        if transport == "loopback":
            for d in range(self.cfg.n_devices):
                dev_end, srv_end = loopback_transport()
                pump = functools.partial(self.server.serve_pending, srv_end)
                clients.append(DeviceClient(d, dev_end, activations, pump))
            return clients
        self._stream_server = StreamServer(self.server, StreamListener(listen)).start()
        address = connect or self._stream_server.address
        for d in range(self.cfg.n_devices):
            clients.append(DeviceClient(d, stream_connect(address), activations))
        return clients

    def close(self) -> None:
        for c in self.clients:
            c.close()
        if self._stream_server is not None:
            self._stream_server.stop()
        if self._pool is not None:
            self._pool.shutdown(wait=True)

    def __enter__(self) -> "Simulation":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        # results come back in input order either way
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))

    def learner_for(self, device_id: int) -> Learner:
        return self.learners[device_id if len(self.learners) > 1 else 0]

    # -- one round ---------------------------------------------------------------

    def _features(self, state: DeviceState) -> np.ndarray:
        last = self.last_acc[state.device_id] if self.cfg.state_dim == 3 else None
        return state_features(state, self.dyn.high, last)

    def _decide(self, state: DeviceState, episode: int, step: int, eps: float) -> _Decision:
        feats = self._features(state)
        q = q_forward(self.learner_for(state.device_id).qnet, feats)
        action = select_action(q, eps, stream(self.cfg.seed, "act", state.device_id, episode, step))
        return _Decision(state, feats, action, feasibility(state, self.catalog))

    def _train_device(self, d: _Decision, episode: int, step: int) -> StepResult:
        dev = d.state.device_id
        shard = self.shards.train[dev]
        rng = stream(self.cfg.seed, "batch", dev, episode, step)
        idx = rng.choice(shard, size=min(self.cfg.batch_size, shard.size), replace=False)
        cut = self.catalog[d.action].cut_layers
        try:
            return self.clients[dev].train_step(self.global_round, cut, self.ds.features[idx],
                                                self.ds.labels[idx], self.cfg.lr, self.cfg.weight_decay)
        except RoundError as exc:
            root = self.server.errors.get(dev)
            if root is not None and isinstance(exc.cause, TransportError):
                raise RoundError(dev, self.global_round, root) from root
            raise

    def _device_accuracy(self, dev: int) -> float:
        idx = self.shards.val[dev]
        return accuracy(self.store, self.ds.features[idx], self.ds.labels[idx])

    def run_round(self, episode: int, step: int, eps: float) -> list[RoundRecord]:
        cfg = self.cfg
        available = [s for s in self.devices if s.available]
        decisions = self._map(lambda s: self._decide(s, episode, step, eps), available)
        executes = [d for d in decisions if cfg.reward.mode == "soft" or d.report.is_feasible(d.action)]

        # split training through the protocol layer
        accs: dict[int, float] = {}
        results: dict[int, StepResult] = {}
        self.server.begin_round()
        if cfg.merge_mode == "sequential":
            for d in executes:
                dev = d.state.device_id
                results[dev] = self._train_device(d, episode, step)
                accs[dev] = self._device_accuracy(dev)
        else:
            for d, res in zip(executes, self._map(lambda d: self._train_device(d, episode, step), executes)):
                results[d.state.device_id] = res
            self.server.commit_round()
            for d in executes:
                accs[d.state.device_id] = self._device_accuracy(d.state.device_id)
        if not self.store.all_finite():
            raise NonFiniteError("parameter store went non-finite", self.global_round)
        self.optimizer_steps += len(executes)
        while len(self.grad_norms) <= episode:
            self.grad_norms.append([])
        self.grad_norms[episode].extend(results[d.state.device_id].client_grad_norm for d in executes)

        # environment transition for every device, available or not
        next_states = self._map(
            lambda s: step_device_state(s, stream(cfg.seed, "dyn", s.device_id, episode, step), self.dyn),
            self.devices)

        terminal = step == cfg.steps_per_episode - 1
        records: dict[int, RoundRecord] = {}
        for d in decisions:
            dev = d.state.device_id
            ran = dev in results
            acc = accs.get(dev, 0.0)
            reward = compute_reward(acc, d.report, d.action, cfg.reward)
            if ran:
                self.last_acc[dev] = acc
            feasible = d.report.is_feasible(d.action)
            s_next = self._features(next_states[dev])
            self.learner_for(dev).buffer.push(Transition(d.features, d.action, reward, s_next, terminal))
            self.transitions += 1
            records[dev] = RoundRecord(
                episode, step, dev, True, d.state.R_t, d.state.T_t, d.action, feasible, reward, acc,
                self.catalog[d.action].load_fraction if ran else 0.0, not feasible, eps)
        for s in self.devices:
            if not s.available:
                records[s.device_id] = RoundRecord(episode, step, s.device_id, False, s.R_t, s.T_t, None,
                                                   False, 0.0, 0.0, 0.0, False, eps)

        # one DQN step per agent per round, target sync on the global round counter
        losses = [learner.train(cfg) for learner in self.learners]
        losses = [x for x in losses if x is not None]
        q_loss = float(np.mean(losses)) if losses else None
        self.global_round += 1
        if self.global_round % cfg.target_sync_every == 0:
            for learner in self.learners:
                learner.sync()

        self.devices = next_states
        out = [records[i] for i in sorted(records)]
        for r in out:
            r.q_loss = q_loss
        return out

    # -- full schedule -----------------------------------------------------------

    def run(self) -> RunArtifacts:
        cfg = self.cfg
        start = time.perf_counter()
        records: list[RoundRecord] = []
        split_freq = np.zeros((cfg.episodes, cfg.n_splits), dtype=np.int64)
        mean_val_acc: list[float] = []
        straggler_rate: list[float] = []
        for episode in range(cfg.episodes):
            eps = epsilon_at(cfg.epsilon, episode, cfg.episodes)
            self.devices = init_devices(cfg, stream(cfg.seed, "init", episode))
            ep_records: list[RoundRecord] = []
            for step in range(cfg.steps_per_episode):
                ep_records.extend(self.run_round(episode, step, eps))
            avail = [r for r in ep_records if r.available]
            for r in avail:
                split_freq[episode, r.action - 1] += 1
            straggler_rate.append(sum(r.straggler for r in avail) / len(avail) if avail else 0.0)
            trained = [r.acc for r in avail if r.client_load > 0.0]
            if trained:
                mean_val_acc.append(float(np.mean(trained)))
            else:
                x, y = self.ds.part(VAL)
                mean_val_acc.append(accuracy(self.store, x, y))
            log.info("episode %d: eps=%.3f straggler=%.3f val_acc=%.3f", episode, eps,
                     straggler_rate[-1], mean_val_acc[-1])
            records.extend(ep_records)
        return RunArtifacts(
            config=cfg, seed=cfg.seed, records=records, split_freq=split_freq, mean_val_acc=mean_val_acc,
            test_metrics=evaluate_global(self.store, self.ds, TEST), straggler_rate=straggler_rate,
            grad_norms=self.grad_norms, optimizer_steps=self.optimizer_steps, transitions=self.transitions,
            wall_time=time.perf_counter() - start, catalog=self.catalog, store=self.store,
            learners=self.learners,
        )


def run_training(cfg: ExperimentConfig, *, transport: str = "loopback", workers: int = 1,
                 listen: str = "127.0.0.1:0", connect: str | None = None) -> RunArtifacts:
    with Simulation(cfg, transport, workers, listen, connect) as sim:
        return sim.run()


__all__ = [
    "Learner", "RunArtifacts", "Simulation", "accuracy", "derived_seed", "evaluate_global",
    "init_store", "network_spec", "prepare_data", "run_training",
]
