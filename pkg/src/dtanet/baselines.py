"""OLS comparison anchors.

OLS-1 regresses the outcome on [1, X, t], so its effect estimate is the
(constant) treatment coefficient. OLS-2 fits one regression per arm on
[1, X] and differences the predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ObservationalDataset

RIDGE = 1e-8


class FitError(ValueError):
    """Raised when a regression is under-determined."""


@dataclass
class LinearModel:
    coefficients: np.ndarray  # intercept first
    arm: str                  # "pooled", "treated", or "control"

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        design = np.hstack([np.ones((X.shape[0], 1)), X])
        if design.shape[1] != self.coefficients.size:
            raise ValueError("design width does not match coefficient count")
        return design @ self.coefficients


def _solve_normal_equations(design, y) -> np.ndarray:
    gram = design.T @ design
    rhs = design.T @ y
    scale = np.linalg.norm(rhs) + 1.0
    try:
        coef = np.linalg.solve(gram, rhs)
        if (not np.all(np.isfinite(coef))
                or np.linalg.norm(gram @ coef - rhs) > 1e-6 * scale):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        # rank-deficient design: tiny ridge keeps the fit defined
        coef = np.linalg.solve(gram + RIDGE * np.eye(gram.shape[0]), rhs)
    return coef


def ols1_fit(dataset: ObservationalDataset) -> LinearModel:
    """Single least squares on [1, X, t]; the treatment coefficient is last."""
    if dataset.n <= dataset.d + 2:
        raise FitError(f"need n > d + 2 = {dataset.d + 2}, got n = {dataset.n}")
    design = np.hstack([np.ones((dataset.n, 1)), dataset.X,
                        dataset.t[:, None].astype(float)])
    return LinearModel(_solve_normal_equations(design, dataset.y), arm="pooled")


def ols1_ite(model: LinearModel, X) -> np.ndarray:
    """ITE under OLS-1 is the treatment coefficient, constant across individuals."""
    return np.full(np.asarray(X).shape[0], model.coefficients[-1])


def ols2_fit(dataset: ObservationalDataset):
    """Per-arm least squares on [1, X]; returns (treated model, control model)."""
    models = []
    for arm, name in ((1, "treated"), (0, "control")):
        mask = dataset.t == arm
        n_arm = int(np.sum(mask))
        if n_arm <= dataset.d + 1:
            raise FitError(f"{name} arm has {n_arm} rows, need more than {dataset.d + 1}")
        design = np.hstack([np.ones((n_arm, 1)), dataset.X[mask]])
        models.append(LinearModel(_solve_normal_equations(design, dataset.y[mask]),
                                  arm=name))
    return models[0], models[1]


def ols2_ite(model_treated: LinearModel, model_control: LinearModel, X) -> np.ndarray:
    return model_treated.predict(X) - model_control.predict(X)
