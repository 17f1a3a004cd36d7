"""Losses, the total objective, and the mini-batch training loop.

The objective is L = L_y + lambda1 * L_sim + lambda2 * L_balan, where L_y is
the size-compensated per-arm squared outcome error, L_sim the squared
Frobenius norms of the mediator/confounder cross-products, and L_balan the
entropic transport cost between the two confounding-representation clouds.
The transport plan is recomputed every mini-batch from the current
representations and then frozen while gradients are assembled (envelope
rule), so L_balan contributes only through the cost matrix.

Gradient routing: the treated mediator net and treated head receive gradients
only from treated samples, mirrored for the control arm; the confounding net
receives all three loss terms.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, asdict, fields

import numpy as np

from . import nn, ot
from .data import ObservationalDataset, sample_arm_batch
from .model import DtanetModel, init_model

_BUNDLES = ("phi", "psi_t", "psi_c", "head_t", "head_c")


@dataclass
class TrainConfig:
    """All hyperparameters of a training run."""

    lambda0: float = 0.5       # treated-arm weight inside the outcome loss
    lambda1: float = 0.1       # orthogonality weight
    lambda2: float = 0.3       # balancing weight
    lambda3: float = 0.1       # entropic inverse temperature in the Sinkhorn kernel
    alpha: float = 1e-3
    beta1: float = 0.8
    beta2: float = 0.95
    epochs: int = 300
    batch_size_t: int = 64
    batch_size_c: int = 64
    sinkhorn_max_iter: int = 1000
    sinkhorn_tol: float = 1e-6
    seed: int = 0
    rep_dim: int = 200
    med_dim: int = 200
    phi_hidden: tuple = (200, 200)
    psi_hidden: tuple = (200, 200)
    head_hidden: tuple = (200, 200)

    def __post_init__(self):
        if not 0.0 < self.lambda0 < 1.0:
            raise ValueError("lambda0 must lie in (0, 1)")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be nonnegative")
        if self.lambda3 <= 0:
            raise ValueError("lambda3 must be positive")
        if self.batch_size_t < 1 or self.batch_size_c < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        self.phi_hidden = tuple(self.phi_hidden)
        self.psi_hidden = tuple(self.psi_hidden)
        self.head_hidden = tuple(self.head_hidden)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("phi_hidden", "psi_hidden", "head_hidden"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TraceRecord:
    """Per-epoch averages of the loss parts plus diagnostics."""

    epoch: int
    l_y: float
    l_sim: float
    l_balan: float
    total: float
    sinkhorn_residual: float
    val_l_y: float = math.nan
    seconds: float = 0.0


def write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "l_y", "l_sim", "l_balan", "total",
                         "sinkhorn_residual", "val_l_y", "seconds"])
        for rec in trace:
            writer.writerow([rec.epoch, repr(rec.l_y), repr(rec.l_sim),
                             repr(rec.l_balan), repr(rec.total),
                             repr(rec.sinkhorn_residual), repr(rec.val_l_y),
                             repr(rec.seconds)])


def loss_outcome(pred_t, y_t, pred_c, y_c, lambda0: float) -> float:
    """(lambda0/n_t) sum (pred_t - y_t)^2 + ((1-lambda0)/n_c) sum (pred_c - y_c)^2.

    Either arm may be empty; its term is then zero.
    """
    total = 0.0
    pred_t, y_t = np.asarray(pred_t, dtype=float), np.asarray(y_t, dtype=float)
    pred_c, y_c = np.asarray(pred_c, dtype=float), np.asarray(y_c, dtype=float)
    if pred_t.size:
        total += lambda0 * float(np.mean((pred_t - y_t) ** 2))
    if pred_c.size:
        total += (1.0 - lambda0) * float(np.mean((pred_c - y_c) ** 2))
    return total


def loss_orthogonal(M_t, Z_t, M_c, Z_c) -> float:
    """||M_t^T Z_t||_F^2 + ||M_c^T Z_c||_F^2 over the per-arm batches."""
    total = 0.0
    for M, Z in ((M_t, Z_t), (M_c, Z_c)):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if M.shape[0] != Z.shape[0]:
            raise ValueError("per-arm row counts of M and Z disagree")
        if M.shape[0]:
            total += float(np.sum((M.T @ Z) ** 2))
    return total


def _forward_arm(model: DtanetModel, X, arm: str):
    """Representations, head prediction, and tapes for one batch."""
    Z, tape_phi = model.phi.forward(X)
    psi = model.psi_t if arm == "treated" else model.psi_c
    head = model.head_t if arm == "treated" else model.head_c
    M, tape_psi = psi.forward(X)
    pred, tape_head = head.forward(np.hstack([Z, M]))
    return Z, M, pred[:, 0], tape_phi, tape_psi, tape_head


def compute_gradients(model: DtanetModel, X_t, y_t, X_c, y_c, cfg: TrainConfig):
    """Assembled per-bundle gradients of the frozen-plan objective.

    Returns (grads, parts): grads maps bundle name -> flat gradient list (or
    None when that arm is absent from the batch pair); parts carries the loss
    values, the Sinkhorn residual, and the frozen coupling.
    """
    X_t = np.asarray(X_t, dtype=float).reshape(-1, model.in_dim)
    X_c = np.asarray(X_c, dtype=float).reshape(-1, model.in_dim)
    n_t, n_c = X_t.shape[0], X_c.shape[0]
    if n_t == 0 and n_c == 0:
        raise ValueError("both batches are empty")
    r_z = model.rep_dim
    grads = dict.fromkeys(_BUNDLES)
    parts = {"l_y": 0.0, "l_sim": 0.0, "l_balan": 0.0,
             "sinkhorn_residual": math.nan, "gamma": None}

    arm_state = {}
    for arm, X, y, n in (("treated", X_t, y_t, n_t), ("control", X_c, y_c, n_c)):
        if n == 0:
            continue
        y = np.asarray(y, dtype=float).ravel()
        Z, M, pred, tape_phi, tape_psi, tape_head = _forward_arm(model, X, arm)
        weight = cfg.lambda0 if arm == "treated" else 1.0 - cfg.lambda0
        parts["l_y"] += weight * float(np.mean((pred - y) ** 2))
        # d L_y / d pred, including the per-arm size compensation
        d_pred = (2.0 * weight / n) * (pred - y)
        # orthogonality term and its representation gradients
        A = M.T @ Z
        parts["l_sim"] += float(np.sum(A ** 2))
        dZ_sim = 2.0 * (M @ A)
        dM_sim = 2.0 * (Z @ A.T)
        arm_state[arm] = dict(Z=Z, M=M, tape_phi=tape_phi, tape_psi=tape_psi,
                              tape_head=tape_head, d_pred=d_pred,
                              dZ_sim=dZ_sim, dM_sim=dM_sim)

    dZ_bal = {"treated": 0.0, "control": 0.0}
    if n_t and n_c:
        Z_t, Z_c = arm_state["treated"]["Z"], arm_state["control"]["Z"]
        C = ot.cost_matrix(Z_c, Z_t)
        plan = ot.sinkhorn(C, cfg.lambda3, max_iter=cfg.sinkhorn_max_iter,
                           tol=cfg.sinkhorn_tol, log_domain=True)
        parts["l_balan"] = ot.transport_cost(C, plan)
        parts["sinkhorn_residual"] = plan.residual
        parts["gamma"] = plan.gamma
        d_c, d_t = ot.balancing_gradient(plan, Z_c, Z_t)
        dZ_bal = {"treated": d_t, "control": d_c}

    phi_grads = None
    for arm, st in arm_state.items():
        head = model.head_t if arm == "treated" else model.head_c
        psi = model.psi_t if arm == "treated" else model.psi_c
        g_head, d_H = head.backward(st["tape_head"], st["d_pred"][:, None])
        dZ = d_H[:, :r_z] + cfg.lambda1 * st["dZ_sim"] + cfg.lambda2 * dZ_bal[arm]
        dM = d_H[:, r_z:] + cfg.lambda1 * st["dM_sim"]
        g_phi, _ = model.phi.backward(st["tape_phi"], dZ)
        g_psi, _ = psi.backward(st["tape_psi"], dM)
        grads["head_t" if arm == "treated" else "head_c"] = g_head
        grads["psi_t" if arm == "treated" else "psi_c"] = g_psi
        phi_grads = g_phi if phi_grads is None else [a + b for a, b in zip(phi_grads, g_phi)]
    grads["phi"] = phi_grads

    parts["total"] = (parts["l_y"] + cfg.lambda1 * parts["l_sim"]
                      + cfg.lambda2 * parts["l_balan"])
    return grads, parts


def total_loss(model: DtanetModel, X_t, y_t, X_c, y_c, cfg: TrainConfig):
    """Evaluate the full objective on a batch pair; both batches nonempty.

    Returns (total, parts) where parts holds l_y, l_sim, l_balan and the
    Sinkhorn diagnostics.
    """
    if len(X_t) == 0 or len(X_c) == 0:
        raise ValueError("total_loss needs both arms (L_balan couples the clouds)")
    _, parts = compute_gradients(model, X_t, y_t, X_c, y_c, cfg)
    return parts["total"], parts


def train_step(model: DtanetModel, states: dict, X_t, y_t, X_c, y_c,
               cfg: TrainConfig):
    """One gradient step. Bundles with no samples in the batch are untouched."""
    grads, parts = compute_gradients(model, X_t, y_t, X_c, y_c, cfg)
    for name, net in model.bundles().items():
        if grads[name] is not None:
            nn.adam_step(states[name], net.params(), grads[name])
    return parts


def _validation_outcome_loss(model: DtanetModel, dataset, idx, lambda0: float) -> float:
    from .model import predict_outcomes

    X, t, y = dataset.X[idx], dataset.t[idx], dataset.y[idx]
    pred_t = predict_outcomes(model, X[t == 1], "treated", "treated")
    pred_c = predict_outcomes(model, X[t == 0], "control", "control")
    return loss_outcome(pred_t, y[t == 1], pred_c, y[t == 0], lambda0)


def train(dataset: ObservationalDataset, cfg: TrainConfig,
          train_indices=None, val_indices=None):
    """Alg.-style mini-batch training; returns (model, trace).

    Every epoch runs ceil(max(n_t, n_c) / batch) paired steps, each sampling a
    treated and a control batch, recomputing the Sinkhorn plan on the batch
    representations, and applying Adam to all five bundles. When val_indices
    is given, the returned model is the best-validation-outcome-loss snapshot;
    otherwise the final parameters.
    """
    rng = np.random.default_rng(cfg.seed)
    model = init_model(dataset.d, cfg.rep_dim, cfg.med_dim, cfg.phi_hidden,
                       cfg.psi_hidden, cfg.head_hidden, rng)
    trace: list[TraceRecord] = []
    if cfg.epochs == 0:
        return model, trace

    idx = np.arange(dataset.n) if train_indices is None else np.asarray(train_indices)
    n_t = int(np.sum(dataset.t[idx] == 1))
    n_c = idx.size - n_t
    if n_t == 0 or n_c == 0:
        raise ValueError("training needs at least one treated and one control individual")
    steps = max(1, math.ceil(max(n_t, n_c) / max(cfg.batch_size_t, cfg.batch_size_c)))

    states = {name: nn.adam_init(net.params(), cfg.alpha, cfg.beta1, cfg.beta2)
              for name, net in model.bundles().items()}
    best_model, best_val = None, math.inf
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        sums = {"l_y": 0.0, "l_sim": 0.0, "l_balan": 0.0, "total": 0.0}
        worst_residual = 0.0
        for step in range(steps):
            bt = sample_arm_batch(dataset, idx, 1, cfg.batch_size_t, rng)
            bc = sample_arm_batch(dataset, idx, 0, cfg.batch_size_c, rng)
            parts = train_step(model, states, dataset.X[bt], dataset.y[bt],
                               dataset.X[bc], dataset.y[bc], cfg)
            if not math.isfinite(parts["total"]):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch {step}")
            for key in sums:
                sums[key] += parts[key]
            worst_residual = max(worst_residual, parts["sinkhorn_residual"])
        val_l_y = math.nan
        if val_indices is not None and len(val_indices):
            val_l_y = _validation_outcome_loss(model, dataset, val_indices, cfg.lambda0)
            if val_l_y < best_val:
                best_val, best_model = val_l_y, model.copy()
        trace.append(TraceRecord(
            epoch=epoch, l_y=sums["l_y"] / steps, l_sim=sums["l_sim"] / steps,
            l_balan=sums["l_balan"] / steps, total=sums["total"] / steps,
            sinkhorn_residual=worst_residual, val_l_y=val_l_y,
            seconds=time.perf_counter() - t0))
    return (best_model if best_model is not None else model), trace
