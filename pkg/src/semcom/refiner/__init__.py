from .networks import (Dgfn, Dmta, DynamicTransformerBlock, NoisePredictor,
                       PriorNetwork, ReconstructionNetwork, RefinerConfig,
                       timestep_embedding)
from .refiner import SemanticRefiner, loss_joint, loss_l1, loss_l2
from .schedule import (NoiseSchedule, denoise, diffuse_stepwise, forward_diffuse,
                       make_schedule, reverse_step)

__all__ = [
    "Dgfn", "Dmta", "DynamicTransformerBlock", "NoisePredictor", "NoiseSchedule",
    "PriorNetwork", "ReconstructionNetwork", "RefinerConfig", "SemanticRefiner",
    "denoise", "diffuse_stepwise", "forward_diffuse", "loss_joint", "loss_l1",
    "loss_l2", "make_schedule", "reverse_step", "timestep_embedding",
]
