from .catalog import SplitCatalog, SplitEntry, catalog_cuts
from .gradcheck import finite_diff_check, numeric_gradient, nudge_off_kinks, relative_error
from .network import (
    GradAtCut,
    LayerSpec,
    NetworkSpec,
    NonFiniteError,
    ParamStore,
    ProtocolOrderError,
    ShapeError,
    SmashedBatch,
    SplitNetError,
    adamw_step,
    adamw_update,
    backward_client,
    build_network,
    corrupted_backward,
    forward_client,
    forward_full,
    forward_server,
    forward_server_and_loss,
    full_gradients,
    grad_norm,
    server_gradients,
    softmax_xent,
)

__all__ = [
    "GradAtCut", "LayerSpec", "NetworkSpec", "NonFiniteError", "ParamStore", "ProtocolOrderError",
    "ShapeError", "SmashedBatch", "SplitCatalog", "SplitEntry", "SplitNetError", "adamw_step",
    "adamw_update", "backward_client", "build_network", "catalog_cuts", "corrupted_backward",
    "finite_diff_check", "forward_client", "forward_full", "forward_server", "forward_server_and_loss",
    "full_gradients", "grad_norm", "nudge_off_kinks", "numeric_gradient", "relative_error", "server_gradients",
    "softmax_xent",
]
