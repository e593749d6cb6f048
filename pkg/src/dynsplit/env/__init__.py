from ..core.config import RewardWeights
from .devices import (
    DeviceDynamics,
    DeviceState,
    FeasibilityReport,
    client_load,
    compute_reward,
    feasibility,
    init_devices,
    spawn_devices,
    state_features,
    step_device_state,
)

__all__ = [
    "DeviceDynamics", "DeviceState", "FeasibilityReport", "RewardWeights", "client_load",
    "compute_reward", "feasibility", "init_devices", "spawn_devices", "state_features", "step_device_state",
]
