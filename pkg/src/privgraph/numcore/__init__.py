"""Dense numeric core: layers with analytic gradients, loss, optimizer."""

from .store import Param, ParameterStore
from .initializers import xavier_uniform_init, zeros_init
from .layers import (BatchNormNodes, Dropout, Linear, ReLU, Sigmoid, Softmax,
                     Tanh, check_finite)
from .loss import cross_entropy_loss
from .optim import Adam, PlateauScheduler, TrainConfig
from .gradcheck import GradCheckReport, gradcheck

__all__ = [
    "Param", "ParameterStore", "xavier_uniform_init", "zeros_init",
    "Linear", "ReLU", "Tanh", "Sigmoid", "Softmax", "Dropout",
    "BatchNormNodes", "check_finite", "cross_entropy_loss",
    "Adam", "PlateauScheduler", "TrainConfig", "gradcheck", "GradCheckReport",
]
