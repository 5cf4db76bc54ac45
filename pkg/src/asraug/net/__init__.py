from .network import ModelConfig, backward, forward, init_params, param_shapes
from .ctc import ctc_loss, greedy_decode
from .novograd import OptimizerState, novograd_step
from .training import TrainConfig, train_on_features, train_on_manifest
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "ModelConfig", "forward", "backward", "init_params", "param_shapes",
    "ctc_loss", "greedy_decode",
    "OptimizerState", "novograd_step",
    "TrainConfig", "train_on_features", "train_on_manifest",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
]
