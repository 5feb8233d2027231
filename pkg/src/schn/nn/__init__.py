from .autodiff import ComputationRecord, Node, Parameter, backward, zero_grads
from .model import HourglassConfig, HourglassModel, desk_config, reference_config

__all__ = [
    "ComputationRecord",
    "Node",
    "Parameter",
    "backward",
    "zero_grads",
    "HourglassConfig",
    "HourglassModel",
    "desk_config",
    "reference_config",
]
