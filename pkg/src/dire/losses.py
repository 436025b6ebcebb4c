"""Diversity regularizer: the CD, CDM, and EDM terms with analytic gradients.

Per class, with synthetic embeddings X (K x D) and real embeddings Y (R x D):

  CD   = reduce_{i,j} cos(x_i, x_j)          spread synthetic points apart
  CDM  = 1 - reduce_{i,j} cos(x_i, y_j)      align directions with real data
  EDM  = reduce_{i,j} |x_i - y_j|            pull magnitudes toward real data

`reduce` is a sum or a mean over all ordered pairs; mean is the default so
the weights transfer across synthetic-set sizes, sum preserves the raw
double-sum form. The combined value per class is
r_c * (CD + CDM) + r_e * EDM.

Gradients are with respect to X only; Y is constant. Each cosine term
differentiates to y/(|x||y|) - cos(x,y) x/|x|^2, each distance term to
(x - y)/|x - y| with a 1e-12 denominator floor (zero gradient at coincident
pairs). Rows of X with near-zero norm get a zero cosine gradient: the loss
value there is already 0 by the kernel's epsilon guard, and any other
subgradient choice would explode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ParameterError
from .kernels import (pairwise_cosine_matrix, pairwise_cosine_sum,
                      pairwise_euclidean_matrix, pairwise_euclidean_sum)
from .matrix import Rng, as_matrix

EDM_DIST_FLOOR = 1e-12
_NORM_FLOOR = 1e-12

ALL_COMPONENTS = ("cd", "cdm", "edm")


@dataclass
class DireWeights:
    """Weights and reduction conventions for the regularizer."""
    r_c: float = 1.0
    r_e: float = 0.1
    reduction: str = "mean"
    include_diagonal_cd: bool = True

    def __post_init__(self):
        for name, v in (("r_c", self.r_c), ("r_e", self.r_e)):
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"DireWeights: {name} must be finite and >= 0, got {v}")
        if self.reduction not in ("sum", "mean"):
            raise ParameterError(
                f"DireWeights: reduction must be 'sum' or 'mean', got {self.reduction!r}")


@dataclass
class LossBreakdown:
    """Per-class (or total) regularizer values and the gradient w.r.t. the
    synthetic embeddings that produced them."""
    cd: float
    cdm: float
    edm: float
    l_syn: float
    grad: np.ndarray


def _guarded_inv_norms(x: np.ndarray):
    """(1/max(|x_i|, floor), mask of healthy rows)."""
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    healthy = norms >= _NORM_FLOOR
    inv = 1.0 / np.maximum(norms, _NORM_FLOOR)
    return inv, healthy


def _cosine_sum_grad(x: np.ndarray, y: np.ndarray):
    """Gradient of sum_{i,j} cos(x_i, y_j) w.r.t. x (y constant)."""
    inv_x, healthy = _guarded_inv_norms(x)
    inv_y, _ = _guarded_inv_norms(y)
    p = np.outer(inv_x, inv_y)
    c = (x @ y.T) * p
    grad = p @ y - c.sum(axis=1)[:, None] * x * (inv_x ** 2)[:, None]
    grad[~healthy] = 0.0
    return grad


def cd_loss(e_syn_c, w: DireWeights):
    """Pairwise cosine similarity of a synthetic class against itself.

    The diagonal (each point against itself) is included by default; those
    terms are the constant 1 and carry no gradient. Returns (value, K x D
    gradient).
    """
    x = as_matrix(e_syn_c, "E_syn")
    k = x.shape[0]
    count = k * k if w.include_diagonal_cd else k * k - k
    inv_x, healthy = _guarded_inv_norms(x)
    p = np.outer(inv_x, inv_x)
    c = (x @ x.T) * p
    if not w.include_diagonal_cd:
        np.fill_diagonal(c, 0.0)
        np.fill_diagonal(p, 0.0)
    # value through the shared kernel so it matches pairwise_cosine_sum exactly
    if w.include_diagonal_cd:
        value = pairwise_cosine_sum(x, x, reduction="sum")
    else:
        full = pairwise_cosine_matrix(x, x)
        value = float(full.sum() - np.trace(full))
    # both orderings of each pair contribute, hence the factor 2
    grad = 2.0 * (p @ x - c.sum(axis=1)[:, None] * x * (inv_x ** 2)[:, None])
    grad[~healthy] = 0.0
    if w.reduction == "mean":
        if count == 0:
            return 0.0, np.zeros_like(x)
        value /= count
        grad = grad / count
    return float(value), grad


def cdm_loss(e_syn_c, e_real_c, w: DireWeights):
    """1 - reduced pairwise cosine between synthetic and real embeddings.

    Mean reduction keeps the value in [0, 2]; sum reduction subtracts the
    raw double sum. Returns (value, gradient w.r.t. the synthetic side).
    """
    x = as_matrix(e_syn_c, "E_syn")
    y = as_matrix(e_real_c, "E_real")
    if x.shape[1] != y.shape[1]:
        raise ParameterError(
            f"cdm_loss: feature dims differ, {x.shape[1]} vs {y.shape[1]}")
    s = pairwise_cosine_sum(x, y, reduction=w.reduction)
    grad = -_cosine_sum_grad(x, y)
    if w.reduction == "mean":
        grad = grad / (x.shape[0] * y.shape[0])
    return float(1.0 - s), grad


def edm_loss(e_syn_c, e_real_c, w: DireWeights):
    """Reduced pairwise Euclidean distance between synthetic and real
    embeddings. Returns (value, gradient w.r.t. the synthetic side)."""
    x = as_matrix(e_syn_c, "E_syn")
    y = as_matrix(e_real_c, "E_real")
    if x.shape[1] != y.shape[1]:
        raise ParameterError(
            f"edm_loss: feature dims differ, {x.shape[1]} vs {y.shape[1]}")
    value = pairwise_euclidean_sum(x, y, reduction=w.reduction)
    dist = pairwise_euclidean_matrix(x, y)
    wmat = 1.0 / np.maximum(dist, EDM_DIST_FLOOR)
    grad = x * wmat.sum(axis=1)[:, None] - wmat @ y
    if w.reduction == "mean":
        grad = grad / (x.shape[0] * y.shape[0])
    return float(value), grad


def dire_loss(e_syn: EmbeddingSet, e_real: EmbeddingSet, w: DireWeights,
              components=ALL_COMPONENTS, real_cap: int | None = 256,
              cap_seed: int = 0):
    """Full regularizer over all classes.

    Per class combines the enabled components as r_c*(cd + cdm) + r_e*edm;
    disabled components contribute exactly 0 to value and gradient. The real
    side is subsampled to at most `real_cap` per class with a seeded draw
    (None = use everything). Returns (per_class, total): per_class maps
    class id to its LossBreakdown, total sums the values and stacks the
    gradients in ascending class order.
    """
    components = tuple(components)
    for comp in components:
        if comp not in ALL_COMPONENTS:
            raise ParameterError(f"dire_loss: unknown component {comp!r}")
    for c in e_syn.classes():
        if c not in e_real:
            raise ParameterError(f"dire_loss: class {c} missing from real embeddings")
    real = e_real.subsample(real_cap, Rng(cap_seed))
    per_class: dict[int, LossBreakdown] = {}
    tot_cd = tot_cdm = tot_edm = tot_syn = 0.0
    grads = []
    for c in e_syn.classes():
        x = e_syn[c]
        grad = np.zeros_like(x)
        cd = cdm = edm = 0.0
        if "cd" in components:
            cd, g = cd_loss(x, w)
            grad += w.r_c * g
        if "cdm" in components:
            cdm, g = cdm_loss(x, real[c], w)
            grad += w.r_c * g
        if "edm" in components:
            edm, g = edm_loss(x, real[c], w)
            grad += w.r_e * g
        l_syn = w.r_c * (cd + cdm) + w.r_e * edm
        per_class[c] = LossBreakdown(cd=cd, cdm=cdm, edm=edm, l_syn=l_syn, grad=grad)
        tot_cd += cd
        tot_cdm += cdm
        tot_edm += edm
        tot_syn += l_syn
        grads.append(grad)
    total = LossBreakdown(cd=tot_cd, cdm=tot_cdm, edm=tot_edm, l_syn=tot_syn,
                          grad=np.vstack(grads))
    return per_class, total


def finite_diff_grad(value_fn, e, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a matrix."""
    if h <= 0:
        raise ParameterError(f"finite_diff_grad: h must be > 0, got {h}")
    e = as_matrix(e, "E")
    num = np.zeros_like(e)
    for i in range(e.shape[0]):
        for j in range(e.shape[1]):
            bump = e.copy()
            bump[i, j] += h
            up = value_fn(bump)
            bump[i, j] -= 2 * h
            down = value_fn(bump)
            num[i, j] = (up - down) / (2 * h)
    return num


def finite_diff_check(loss_fn, e, h: float = 1e-5) -> float:
    """Max relative disagreement between a loss's analytic gradient and
    central differences; `loss_fn` maps a matrix to (value, gradient).
    Denominator per coordinate is max(|analytic|, |numeric|, 1e-8)."""
    e = as_matrix(e, "E")
    _, analytic = loss_fn(e)
    numeric = finite_diff_grad(lambda m: loss_fn(m)[0], e, h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))
