"""Evaluation metrics: PEHE, absolute population-effect errors, policy risk."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np


@dataclass
class MetricsReport:
    """Flat metric record; a field is None when its ground truth is unavailable."""

    sqrt_pehe: float | None = None
    eps_ate: float | None = None
    eps_att: float | None = None
    eps_mte: float | None = None
    eps_dte: float | None = None
    policy_risk: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    FIELDS = ("sqrt_pehe", "eps_ate", "eps_att", "eps_mte", "eps_dte", "policy_risk")

    def csv_row(self) -> list:
        return ["" if v is None else repr(v) for v in
                (self.sqrt_pehe, self.eps_ate, self.eps_att,
                 self.eps_mte, self.eps_dte, self.policy_risk)]


def pehe(est_ite, true_ite) -> float:
    """Mean squared error between estimated and true per-individual effects.

    Callers report sqrt(pehe(...)).
    """
    est_ite = np.asarray(est_ite, dtype=float)
    true_ite = np.asarray(true_ite, dtype=float)
    if est_ite.shape != true_ite.shape or est_ite.size == 0:
        raise ValueError("effect vectors must be nonempty and equal length")
    return float(np.mean((true_ite - est_ite) ** 2))


def abs_effect_errors(est, truth, t):
    """Absolute errors on the population quantities ATE/ATT/AME/ADE.

    est is an EffectEstimates bundle; truth a GroundTruth bundle; t the
    factual treatment vector (defines ATT and the conditioning of MTE/DTE).
    """
    t = np.asarray(t)
    true_ite = truth.ite()
    eps_ate = abs(est.ate - float(np.mean(true_ite)))
    treated = t == 1
    eps_att = (abs(est.att - float(np.mean(true_ite[treated])))
               if np.any(treated) else None)
    eps_mte = abs(est.ame - truth.ame(t))
    eps_dte = abs(est.ade - truth.ade(t))
    return eps_ate, eps_att, eps_mte, eps_dte


def policy_risk(pred_t, pred_c) -> float:
    """1 - E[pred_t | pi=1] p(pi=1) - E[pred_c | pi=0] p(pi=0).

    The policy treats when pred_t - pred_c > 0 (ties route to pi=0); an empty
    policy group contributes 0.
    """
    pred_t = np.asarray(pred_t, dtype=float)
    pred_c = np.asarray(pred_c, dtype=float)
    if pred_t.shape != pred_c.shape:
        raise ValueError("prediction vectors must be equal length")
    n = pred_t.size
    if n == 0:
        return math.nan
    pi = pred_t - pred_c > 0
    risk = 1.0
    if np.any(pi):
        risk -= float(np.mean(pred_t[pi])) * float(np.mean(pi))
    if np.any(~pi):
        risk -= float(np.mean(pred_c[~pi])) * float(np.mean(~pi))
    return risk
