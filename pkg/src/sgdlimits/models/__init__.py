from .base import Datum, ParamPoint, final_point, relu, sgd_run, sigmoid
from .gmm import BgmmModel, XorGmmModel, gram_from_values, gram_to_values, r_name, xor_schema
from .tensor_pca import TensorPcaModel, VFactor, tensor_pca_V


def sample_datum(model, rng):
    return model.sample_datum(rng)


def grad_loss(model, x, d):
    return model.grad_loss(x, d)


def summary(model, x):
    return model.summary(x)


def population_loss(model, u):
    return model.population_loss(u)


__all__ = [
    "BgmmModel", "Datum", "ParamPoint", "TensorPcaModel", "VFactor", "XorGmmModel",
    "final_point", "grad_loss", "gram_from_values", "gram_to_values", "population_loss",
    "r_name", "relu", "sample_datum", "sgd_run", "sigmoid", "summary", "tensor_pca_V", "xor_schema",
]
