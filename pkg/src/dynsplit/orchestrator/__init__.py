from .baseline import train_centralized
from .client import DeviceClient, RoundError, StepResult
from .runner import (
    Learner,
    RunArtifacts,
    Simulation,
    accuracy,
    derived_seed,
    evaluate_global,
    init_store,
    network_spec,
    prepare_data,
    run_training,
)
from .server import ParameterServer, SegmentUpdate, StreamServer, merge_client_segment, segment_delta
from .sharding import ShardAssignment, make_shards, shard_iid, shard_noniid, validation_subsets

__all__ = [
    "DeviceClient", "Learner", "ParameterServer", "RoundError", "RunArtifacts", "SegmentUpdate",
    "ShardAssignment", "Simulation", "StepResult", "StreamServer", "accuracy", "derived_seed",
    "evaluate_global", "init_store", "make_shards", "merge_client_segment", "network_spec",
    "prepare_data", "run_training", "segment_delta", "shard_iid", "shard_noniid", "train_centralized",
    "validation_subsets",
]
