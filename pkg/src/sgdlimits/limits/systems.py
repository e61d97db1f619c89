"""Name-based construction of every limiting system (used by the CLI and experiment configs)."""

from __future__ import annotations

from typing import Any

import numpy as np

from ..core import RngStream
from ..errors import ConfigError
from . import gmm, tensor
from .integrators import McConfig

SYSTEM_NAMES = (
    "tensor-ballistic", "tensor-loss", "tensor-diffusive", "tensor-double-diffusive",
    "bgmm-ballistic", "bgmm-noiseless", "bgmm-diffusive",
    "xor-ballistic", "xor-noiseless", "xor-diffusive",
)

# parameter name -> default (None = required)
_PARAMS: dict[str, dict[str, Any]] = {
    "tensor-ballistic": {"k": None, "lambda": None, "c_delta": 1.0, "alpha": 0.0},
    "tensor-loss": {"k": None, "lambda": None, "c_delta": 1.0},
    "tensor-diffusive": {"k": None, "lambda": None, "Lambda": None},
    "tensor-double-diffusive": {"k": None, "lambda": None},
    "bgmm-ballistic": {"lambda": None, "alpha": None, "c_delta": 1.0, "mc_samples": 100_000, "mc_seed": 0},
    "bgmm-noiseless": {"alpha": None},
    "bgmm-diffusive": {"a": None, "alpha": None, "literal_coupling": False},
    "xor-ballistic": {"K": 4, "lambda": None, "alpha": None, "c_delta": 1.0, "mc_samples": 100_000, "mc_seed": 0},
    "xor-noiseless": {"K": 4, "alpha": None},
    "xor-diffusive": {"a_mu": None, "a_nu": None, "alpha": None, "literal_coupling": False},
}


def system_params(name: str) -> dict[str, Any]:
    if name not in _PARAMS:
        raise ConfigError(f"unknown system {name!r}; choose one of {', '.join(SYSTEM_NAMES)}")
    return dict(_PARAMS[name])


def resolve_params(name: str, params: dict[str, Any]) -> dict[str, Any]:
    spec = system_params(name)
    for key in params:
        if key not in spec:
            raise ConfigError(f"unknown parameter {key!r} for system {name!r}")
    out = {}
    for key, default in spec.items():
        if key in params and params[key] is not None:
            out[key] = params[key]
        elif default is None and key != "Lambda":
            raise ConfigError(f"system {name!r} needs parameter {key!r}")
        else:
            out[key] = default
    return out


def build_system(name: str, params: dict[str, Any]):
    p = resolve_params(name, params)
    lam = p.get("lambda")
    if lam is not None:
        lam = float(lam)
    if name == "tensor-ballistic":
        return tensor.ballistic_system(int(p["k"]), lam, float(p["c_delta"]), float(p["alpha"]))
    if name == "tensor-loss":
        return tensor.loss_system(int(p["k"]), lam, float(p["c_delta"]))
    if name == "tensor-diffusive":
        return tensor.tensor_pca_diffusive(int(p["k"]), lam, p["Lambda"])
    if name == "tensor-double-diffusive":
        return tensor.tensor_pca_double_diffusive(int(p["k"]), lam)
    if name in ("bgmm-ballistic", "xor-ballistic"):
        mc = McConfig(int(p["mc_samples"]), RngStream(int(p["mc_seed"]), 0))
        if name == "bgmm-ballistic":
            return gmm.bgmm_system(lam, float(p["alpha"]), float(p["c_delta"]), mc)
        return gmm.xor_system(int(p["K"]), lam, float(p["alpha"]), float(p["c_delta"]), mc)
    if name == "bgmm-noiseless":
        return gmm.bgmm_noiseless_system(float(p["alpha"]))
    if name == "xor-noiseless":
        return gmm.xor_noiseless_system(int(p["K"]), float(p["alpha"]))
    if name == "bgmm-diffusive":
        return gmm.bgmm_diffusive(np.asarray(p["a"], float), float(p["alpha"]), bool(p["literal_coupling"]))
    if name == "xor-diffusive":
        return gmm.xor_diffusive(np.asarray(p["a_mu"], float), np.asarray(p["a_nu"], float),
                                 float(p["alpha"]), bool(p["literal_coupling"]))
    raise ConfigError(f"unknown system {name!r}")
