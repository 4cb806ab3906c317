"""Fitting and scoring of staged trees on contingency counts.

Conventions, validated against the bundled Titanic numbers: maximum
likelihood with 0*ln(0) = 0, degrees of freedom counting every stage
(including zero-count ones), BIC = -2*logL + df*ln(n) and
AIC = -2*logL + 2*df, lower is better for both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    Dataset,
    InvalidArgumentError,
    StagedTree,
    UnfittedModelError,
    lex_index,
)

__all__ = ["FitConfig", "ScoreReport", "fit", "joint_probability",
           "degrees_of_freedom", "score"]


@dataclass(frozen=True)
class FitConfig:
    """Smoothing for stage distributions.

    smoothing : additive count added to every cell (0 = pure MLE).
    zero_count_policy : what a zero-count stage gets when smoothing is 0;
        only "uniform_fallback" exists.
    """

    smoothing: float = 0.0
    zero_count_policy: str = "uniform_fallback"

    def __post_init__(self) -> None:
        if self.smoothing < 0:
            raise InvalidArgumentError("smoothing must be nonnegative")
        if self.zero_count_policy != "uniform_fallback":
            raise InvalidArgumentError(f"unknown zero_count_policy {self.zero_count_policy!r}")


@dataclass(frozen=True)
class ScoreReport:
    log_likelihood: float
    df: int
    bic: float
    aic: float
    n: int


def _stage_loglik(counts: np.ndarray) -> float:
    """Maximized multinomial log-likelihood sum(c * ln(c / total)) of one stage."""
    total = counts.sum()
    if total == 0:
        return 0.0
    nz = counts[counts > 0]
    return float((nz * np.log(nz / total)).sum())


def _stage_count_vectors(table: np.ndarray, symbols) -> dict:
    """Aggregate the rows of a level table by stage symbol."""
    out: dict = {}
    for row, sym in zip(table, symbols):
        if sym in out:
            out[sym] = out[sym] + row
        else:
            out[sym] = row.copy()
    return out


def _check_fit_inputs(tree: StagedTree, data: Dataset) -> None:
    if tree.space != data.space:
        raise InvalidArgumentError("tree and dataset use different sample spaces")
    if data.n < 1:
        raise InvalidArgumentError("cannot fit on an empty dataset")


def fit(tree: StagedTree, data: Dataset, cfg: FitConfig = FitConfig()) -> StagedTree:
    """Attach stage-conditional distributions estimated from the counts.

    Each stage's distribution is (count + smoothing) / (total + smoothing*K);
    with zero smoothing a stage that was never observed falls back to the
    uniform distribution.
    """
    _check_fit_inputs(tree, data)
    lam = cfg.smoothing
    fitted = []
    for d in range(tree.p):
        k = tree.space.level_counts[d]
        table = data.level_table(d)
        entry = {}
        for sym, counts in _stage_count_vectors(table, tree.symbols_at(d)).items():
            total = counts.sum()
            if total + lam * k == 0:
                dist = np.full(k, 1.0 / k)
            else:
                dist = (counts + lam) / (total + lam * k)
            entry[sym] = tuple(float(x) for x in dist)
        fitted.append(entry)
    return replace(tree, fitted=tuple(fitted))


def joint_probability(tree: StagedTree, x) -> float:
    """Probability of one full configuration under the fitted tree.

    `x` is a tuple of level indices for every variable.  The result is the
    product of the fitted conditionals along the root-to-leaf path.
    """
    if not tree.is_fitted:
        raise UnfittedModelError("joint_probability needs a fully fitted tree")
    if len(x) != tree.p:
        raise InvalidArgumentError(f"configuration must have length {tree.p}")
    prob = 1.0
    for d in range(tree.p):
        sym = tree.symbols_at(d)[lex_index(tree.space, x[:d])]
        prob *= tree.fitted[d][sym][x[d]]
    return prob


def degrees_of_freedom(tree: StagedTree) -> int:
    """Free parameters: per depth, (number of stages) * (levels - 1).

    The root counts as one stage; stages are counted whether or not any
    observation reaches them.
    """
    return sum(tree.stage_count(d) * (tree.space.level_counts[d] - 1)
               for d in range(tree.p))


def score(tree: StagedTree, data: Dataset, cfg: FitConfig = FitConfig()) -> ScoreReport:
    """Fit the tree and report log-likelihood, df, BIC and AIC.

    The log-likelihood sums count * ln(fitted probability) level by level,
    which telescopes to sum_x count(x) * ln(joint_probability(x)).
    """
    _check_fit_inputs(tree, data)
    lam = cfg.smoothing
    log_lik = 0.0
    for d in range(tree.p):
        k = tree.space.level_counts[d]
        table = data.level_table(d)
        for counts in _stage_count_vectors(table, tree.symbols_at(d)).values():
            total = counts.sum()
            if total == 0:
                continue
            if lam == 0:
                log_lik += _stage_loglik(counts)
            else:
                probs = (counts + lam) / (total + lam * k)
                nz = counts > 0
                log_lik += float((counts[nz] * np.log(probs[nz])).sum())
    df = degrees_of_freedom(tree)
    n = data.n
    return ScoreReport(
        log_likelihood=log_lik,
        df=df,
        bic=-2.0 * log_lik + df * math.log(n),
        aic=-2.0 * log_lik + 2.0 * df,
        n=n,
    )
