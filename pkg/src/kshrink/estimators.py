"""The shrinkage estimators.

Every estimator maps the canonical model to a set of mean estimates. The
pooled-mean family (PT, PT*, EB, EB*, HB1, HB2) shrinks each observation
toward the generalized least squares pooled mean, and optionally shrinks
the pooled mean itself toward zero; the James-Stein pair shrinks each group
toward zero on its own. All shrink terms act through the direction matrices
v[i] @ w[i] (= inv(q[i]) inv(v[i])), which reduce to the identity under
inverse-scale loss.

Estimators raise PreconditionError when the model falls outside their
domain (dimension too small for the shrink constants to be positive, or a
loss that the preliminary test cannot calibrate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import CanonicalModel, Hyperparameters, LossSpec, PooledSummary, pooled_summary
from .numerics import HbExponents, f_quantile, hb1_shrink_ratio, hb2_shrink_ratios
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "PreconditionError",
    "EstimateSet",
    "ShrinkageFunctions",
    "ESTIMATORS",
    "ESTIMATOR_ORDER",
    "resolve_estimator",
    "estimate_unshrunk",
    "estimate_js1",
    "estimate_js2",
    "estimate_pt",
    "estimate_pt_star",
    "estimate_eb1",
    "estimate_eb2",
    "estimate_hb1",
    "estimate_hb2",
    "estimate_general",
]


class PreconditionError(ValueError):
    """The estimator's domain requirements are not met by this model/loss."""


@dataclass(frozen=True)
class EstimateSet:
    """Estimates plus the diagnostics that explain them.

    mu_hat: (k, p) array of estimated means.
    diagnostics: flat scalar diagnostics (statistics, shrink factors,
        threshold decisions), keyed by name.
    """

    mu_hat: np.ndarray
    diagnostics: dict[str, float | bool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.array(self.mu_hat, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "mu_hat", arr)


@dataclass(frozen=True)
class ShrinkageFunctions:
    """A member of the general double-shrinkage class.

    phi and psi take (residual_stat, pooled_norm_stat, scale_sum) and return
    the two shrink factors. The optional partial derivatives (same
    signature) feed the unbiased risk estimator; when absent, callers fall
    back to finite differences. All callables must accept ndarray inputs
    elementwise.
    """

    phi: Callable
    psi: Callable
    phi_f: Callable | None = None
    phi_g: Callable | None = None
    phi_s: Callable | None = None
    psi_f: Callable | None = None
    psi_g: Callable | None = None
    psi_s: Callable | None = None

    def has_derivatives(self) -> bool:
        return None not in (
            self.phi_f,
            self.phi_g,
            self.phi_s,
            self.psi_f,
            self.psi_g,
            self.psi_s,
        )


def _summary_or(model: CanonicalModel, ls: LossSpec, summary: PooledSummary | None) -> PooledSummary:
    return summary if summary is not None else pooled_summary(model, ls)


def _directions(model: CanonicalModel, summary: PooledSummary) -> np.ndarray:
    """Direction stack v[i] @ w[i], the inverse-loss-weighted shrink maps."""
    return np.einsum("kab,kbc->kac", model.v, summary.weights)


def _require_inverse_loss(model: CanonicalModel, ls: LossSpec, who: str) -> None:
    if not ls.matches_inverse_v(model):
        raise PreconditionError(
            f"{who} requires the loss weights to be the inverses of the scale matrices"
        )


def estimate_unshrunk(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
) -> EstimateSet:
    """The observations themselves; the baseline everything is measured against."""
    return EstimateSet(mu_hat=model.x, diagnostics={})


def estimate_js1(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
    positive_part: bool = False,
) -> EstimateSet:
    """Groupwise shrink toward zero, each group scaled by its own norm.

    Group i keeps the fraction 1 - (p-2) s / ((n+2) |x_i|^2) of its
    observation, the squared norm taken in the inv(v[i]) metric. A group at
    exactly zero is left alone. ``positive_part`` clips negative retained
    fractions to zero (exploratory variant, off by default).
    """
    if model.p < 3:
        raise PreconditionError(f"groupwise zero-shrink needs p >= 3, got p={model.p}")
    norms2 = np.array(
        [float(xi @ np.linalg.solve(vi, xi)) for xi, vi in zip(model.x, model.v)]
    )
    scale = (model.p - 2.0) / (model.n + 2.0) * model.s
    with np.errstate(divide="ignore"):
        shrink = np.where(norms2 > 0.0, scale / np.where(norms2 > 0.0, norms2, 1.0), 0.0)
    retained = 1.0 - shrink
    if positive_part:
        retained = np.maximum(retained, 0.0)
    mu_hat = retained[:, None] * model.x
    diags: dict[str, float | bool] = {f"retained_{i}": float(r) for i, r in enumerate(retained)}
    diags["positive_part"] = positive_part
    return EstimateSet(mu_hat=mu_hat, diagnostics=diags)


def estimate_js2(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
    positive_part: bool = False,
) -> EstimateSet:
    """Shrink all groups toward zero by one factor pooled over groups."""
    if model.p * model.k < 3:
        raise PreconditionError(
            f"pooled zero-shrink needs p*k >= 3, got {model.p * model.k}"
        )
    norms2 = sum(float(xi @ np.linalg.solve(vi, xi)) for xi, vi in zip(model.x, model.v))
    if norms2 > 0.0:
        shrink = (model.p * model.k - 2.0) / (model.n + 2.0) * model.s / norms2
    else:
        shrink = 0.0
    retained = 1.0 - shrink
    if positive_part:
        retained = max(retained, 0.0)
    return EstimateSet(
        mu_hat=retained * model.x,
        diagnostics={"retained": float(retained), "positive_part": positive_part},
    )


def _pt_threshold(model: CanonicalModel, alpha: float) -> float:
    d1 = model.p * (model.k - 1)
    return d1 / model.n * f_quantile(d1, model.n, alpha)


def estimate_pt(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
) -> EstimateSet:
    """Preliminary test: pool everything unless the equal-means test rejects.

    The residual statistic is compared with p(k-1)/n times the upper-alpha
    F quantile; above the threshold the observations are kept, at or below
    it every group is replaced by the pooled mean. Requires inverse-scale
    loss so the statistic really is the equal-means F test.
    """
    _require_inverse_loss(model, ls, "the preliminary-test estimator")
    hyper = hyper or Hyperparameters()
    ps = _summary_or(model, ls, summary)
    threshold = _pt_threshold(model, hyper.alpha)
    keep = ps.residual_stat > threshold
    mu_hat = model.x if keep else np.broadcast_to(ps.pooled_mean, model.x.shape)
    return EstimateSet(
        mu_hat=np.array(mu_hat),
        diagnostics={
            "residual_stat": ps.residual_stat,
            "threshold": threshold,
            "kept_separate": bool(keep),
        },
    )


def estimate_pt_star(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
) -> EstimateSet:
    """Preliminary test with the pooled mean itself shrunk toward zero.

    Whatever the test decides, the capped factor
    min((p-2) / ((n+2) pooled_norm_stat), 1) of the pooled mean is removed
    from every group; a vanishing pooled norm means a vanishing pooled
    mean, so the cap branch subtracts zero.
    """
    if model.p < 3:
        raise PreconditionError(f"pooled-mean zero-shrink needs p >= 3, got p={model.p}")
    hyper = hyper or Hyperparameters()
    ps = _summary_or(model, ls, summary)
    base = estimate_pt(model, ls, ps, hyper)
    g = ps.pooled_norm_stat
    cap = (model.p - 2.0) / ((model.n + 2.0) * g) if g > 0.0 else 1.0
    factor = min(cap, 1.0)
    mu_hat = base.mu_hat - factor * ps.pooled_mean
    diags = dict(base.diagnostics)
    diags.update({"pooled_norm_stat": g, "zero_shrink": float(factor)})
    return EstimateSet(mu_hat=mu_hat, diagnostics=diags)


def estimate_eb1(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
) -> EstimateSet:
    """Empirical shrink toward the pooled mean with a capped factor.

    Removes min((p(k-1)-2) / ((n+2) residual_stat), 1) of each group's
    deviation from the pooled mean, mapped through the direction matrices.
    """
    d1 = model.p * (model.k - 1)
    if d1 < 3:
        raise PreconditionError(f"pooled-mean shrink needs p(k-1) >= 3, got {d1}")
    ps = _summary_or(model, ls, summary)
    f = ps.residual_stat
    cap = (d1 - 2.0) / ((model.n + 2.0) * f) if f > 0.0 else 1.0
    factor = min(cap, 1.0)
    centered = model.x - ps.pooled_mean
    mu_hat = model.x - factor * np.einsum(
        "kab,kb->ka", _directions(model, ps), centered
    )
    return EstimateSet(
        mu_hat=mu_hat,
        diagnostics={"residual_stat": f, "mean_shrink": float(factor)},
    )


def estimate_eb2(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
) -> EstimateSet:
    """The capped empirical shrink plus a capped zero-shrink of the pooled mean."""
    if model.p < 3:
        raise PreconditionError(f"pooled-mean zero-shrink needs p >= 3, got p={model.p}")
    ps = _summary_or(model, ls, summary)
    base = estimate_eb1(model, ls, ps, hyper)
    g = ps.pooled_norm_stat
    cap = (model.p - 2.0) / ((model.n + 2.0) * g) if g > 0.0 else 1.0
    factor = min(cap, 1.0)
    mu_hat = base.mu_hat - factor * np.einsum(
        "kab,b->ka", _directions(model, ps), ps.pooled_mean
    )
    diags = dict(base.diagnostics)
    diags.update({"pooled_norm_stat": g, "zero_shrink": float(factor)})
    return EstimateSet(mu_hat=mu_hat, diagnostics=diags)


def estimate_hb1(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
    tol: Tolerances = DEFAULT,
) -> EstimateSet:
    """Hierarchical shrink toward the pooled mean with a smooth factor.

    The shrink fraction is the incomplete-beta ratio of hb1_phi divided by
    the residual statistic; it interpolates smoothly between full pooling
    at small residual and the capped empirical behavior at large residual.
    """
    hyper = hyper or Hyperparameters()
    ps = _summary_or(model, ls, summary)
    try:
        ratio = hb1_shrink_ratio(
            ps.residual_stat,
            model.p,
            model.k,
            model.n,
            hyper.a,
            hyper.c,
            ls.eig_floor,
            tol,
        )
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    centered = model.x - ps.pooled_mean
    mu_hat = model.x - ratio * np.einsum("kab,kb->ka", _directions(model, ps), centered)
    return EstimateSet(
        mu_hat=mu_hat,
        diagnostics={"residual_stat": ps.residual_stat, "mean_shrink": float(ratio)},
    )


def estimate_hb2(
    model: CanonicalModel,
    ls: LossSpec,
    summary: PooledSummary | None = None,
    hyper: Hyperparameters | None = None,
    tol: Tolerances = DEFAULT,
) -> EstimateSet:
    """Hierarchical shrink toward the pooled mean and of the pooled mean.

    Both shrink fractions come from ratios of the joint truncated
    integrals (hb2_factors); they play the roles of the two capped factors
    of the empirical pair but vary smoothly with both statistics.
    """
    hyper = hyper or Hyperparameters()
    ps = _summary_or(model, ls, summary)
    try:
        exponents = HbExponents.from_model(
            model.p, model.k, model.n, hyper.a, hyper.b, hyper.c
        )
        phi_ratio, psi_ratio = hb2_shrink_ratios(
            ps.residual_stat,
            ps.pooled_norm_stat,
            model.s,
            exponents,
            hyper.big_l,
            tol=tol,
        )
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    dirs = _directions(model, ps)
    centered = model.x - ps.pooled_mean
    mu_hat = (
        model.x
        - phi_ratio * np.einsum("kab,kb->ka", dirs, centered)
        - psi_ratio * np.einsum("kab,b->ka", dirs, ps.pooled_mean)
    )
    return EstimateSet(
        mu_hat=mu_hat,
        diagnostics={
            "residual_stat": ps.residual_stat,
            "pooled_norm_stat": ps.pooled_norm_stat,
            "mean_shrink": float(phi_ratio),
            "zero_shrink": float(psi_ratio),
        },
    )


def estimate_general(
    model: CanonicalModel,
    ls: LossSpec,
    sf: ShrinkageFunctions,
    summary: PooledSummary | None = None,
    tol: Tolerances = DEFAULT,
) -> EstimateSet:
    """Any member of the double-shrinkage class.

    Applies x_i - (phi/f) d_i (x_i - pooled) - (psi/g) d_i pooled with the
    direction maps d_i. Statistics below the degenerate threshold are
    floored before dividing, so members whose factors vanish there (all the
    built-ins) stay well-defined.
    """
    ps = _summary_or(model, ls, summary)
    f = max(ps.residual_stat, tol.degenerate_stat)
    g = max(ps.pooled_norm_stat, tol.degenerate_stat)
    phi = float(sf.phi(f, g, model.s))
    psi = float(sf.psi(f, g, model.s))
    dirs = _directions(model, ps)
    centered = model.x - ps.pooled_mean
    mu_hat = (
        model.x
        - (phi / f) * np.einsum("kab,kb->ka", dirs, centered)
        - (psi / g) * np.einsum("kab,b->ka", dirs, ps.pooled_mean)
    )
    return EstimateSet(
        mu_hat=mu_hat,
        diagnostics={
            "residual_stat": ps.residual_stat,
            "pooled_norm_stat": ps.pooled_norm_stat,
            "phi": phi,
            "psi": psi,
        },
    )


ESTIMATORS: dict[str, Callable] = {
    "X": estimate_unshrunk,
    "JS1": estimate_js1,
    "JS2": estimate_js2,
    "PT": estimate_pt,
    "PT*": estimate_pt_star,
    "EB": estimate_eb1,
    "EB*": estimate_eb2,
    "HB1": estimate_hb1,
    "HB2": estimate_hb2,
}

_ALIASES = {"EB1": "EB", "EB2": "EB*"}

ESTIMATOR_ORDER = ("JS1", "JS2", "PT", "PT*", "EB", "EB*", "HB1", "HB2")


def resolve_estimator(name: str) -> tuple[str, Callable]:
    """Map a user-supplied estimator name (or alias) to (canonical, callable)."""
    canon = _ALIASES.get(name, name)
    if canon not in ESTIMATORS:
        known = ", ".join(list(ESTIMATORS) + list(_ALIASES))
        raise KeyError(f"unknown estimator {name!r}; known: {known}")
    return canon, ESTIMATORS[canon]
