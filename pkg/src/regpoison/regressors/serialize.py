"""JSON round-trip for fitted models (audit format, weights as plain arrays)."""

from __future__ import annotations

import numpy as np

from . import REGRESSOR_KINDS, canonical_kind

_ARRAY_FIELDS = {
    "ridge": ("coef_",),
    "lasso": ("coef_",),
    "elasticnet": ("coef_",),
    "huber": ("coef_",),
    "kernelridge": ("dual_coef_", "X_fit_"),
    "svr": ("dual_coef_", "X_fit_"),
    "mlp": ("weights_",),
}

_SCALAR_FIELDS = {
    "ridge": ("intercept_",),
    "lasso": ("intercept_",),
    "elasticnet": ("intercept_",),
    "huber": ("intercept_",),
    "kernelridge": ("y_offset_",),
    "svr": ("bias_",),
    "mlp": (),
}


def _kind_of(model) -> str:
    for kind, cls in REGRESSOR_KINDS.items():
        if type(model) is cls:
            return kind
    raise TypeError(f"not a known regressor: {type(model).__name__}")


def model_to_dict(model) -> dict:
    kind = _kind_of(model)
    payload = {
        "kind": kind,
        "params": model.get_params(),
        "n_features_in": int(model.n_features_in_),
        "training_loss": float(model.training_loss_),
        "converged": bool(model.converged_),
        "arrays": {},
        "scalars": {},
    }
    for name in _ARRAY_FIELDS[kind]:
        value = getattr(model, name)
        if name == "weights_":
            payload["arrays"][name] = [np.asarray(p).tolist() for p in value]
        else:
            payload["arrays"][name] = np.asarray(value).tolist()
    for name in _SCALAR_FIELDS[kind]:
        payload["scalars"][name] = float(getattr(model, name))
    return payload


def model_from_dict(payload: dict):
    kind = canonical_kind(payload["kind"])
    model = REGRESSOR_KINDS[kind](**payload["params"])
    model.n_features_in_ = int(payload["n_features_in"])
    model.training_loss_ = float(payload["training_loss"])
    model.converged_ = bool(payload["converged"])
    for name, value in payload["arrays"].items():
        if name == "weights_":
            setattr(model, name, [np.asarray(p, dtype=np.float64) for p in value])
        else:
            setattr(model, name, np.asarray(value, dtype=np.float64))
    for name, value in payload["scalars"].items():
        setattr(model, name, float(value))
    return model
