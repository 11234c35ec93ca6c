"""Canonical data model for simultaneous estimation of k Gaussian means.

Everything downstream works on one canonical form: per group i an observed
vector ``x[i]`` distributed N_p(mu_i, sigma2 * v[i]), plus a pooled scale
statistic ``s`` with ``s / sigma2`` chi-square on ``n`` degrees of freedom,
independent of the x's. Raw multi-sample or regression data are reduced to
this form by the ``canonicalize_*`` helpers.

Loss is weighted quadratic: sum_i (d_i - mu_i)' Q_i (d_i - mu_i) / sigma2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tolerances import DEFAULT, Tolerances

__all__ = [
    "CanonicalModel",
    "TrueParameters",
    "LossSpec",
    "PooledSummary",
    "Hyperparameters",
    "ValidationReport",
    "validate_model",
    "canonicalize_ksample",
    "canonicalize_regression",
    "pooled_summary",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _check_spd_stack(name: str, mats: np.ndarray, tol: Tolerances) -> list[str]:
    """Collect violations of symmetry / positive definiteness for a (k,p,p) stack."""
    bad: list[str] = []
    for i, m in enumerate(mats):
        if not np.all(np.isfinite(m)):
            bad.append(f"{name}[{i}] has non-finite entries")
            continue
        scale = np.linalg.norm(m)
        if scale == 0.0:
            bad.append(f"{name}[{i}] is the zero matrix")
            continue
        if np.linalg.norm(m - m.T) > tol.symmetry * scale:
            bad.append(f"{name}[{i}] is not symmetric within tolerance {tol.symmetry}")
            continue
        vals = np.linalg.eigvalsh(0.5 * (m + m.T))
        if vals[0] <= 0.0:
            bad.append(f"{name}[{i}] is not positive definite (min eigenvalue {vals[0]:.3e})")
        elif vals[-1] / vals[0] > tol.max_condition:
            bad.append(
                f"{name}[{i}] condition number {vals[-1] / vals[0]:.3e} "
                f"exceeds ceiling {tol.max_condition:.1e}"
            )
    return bad


def _spd_inverse(name: str, m: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Invert a symmetric positive definite matrix, refusing ill-conditioned input."""
    sym = 0.5 * (m + m.T)
    vals = np.linalg.eigvalsh(sym)
    if vals[0] <= 0.0:
        raise ValueError(f"{name} is not positive definite")
    if vals[-1] / vals[0] > tol.max_condition:
        raise ValueError(
            f"{name} condition number {vals[-1] / vals[0]:.3e} exceeds {tol.max_condition:.1e}"
        )
    inv = np.linalg.inv(sym)
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class CanonicalModel:
    """Observed data in canonical form.

    x: (k, p) array, row i is the observation for group i.
    v: (k, p, p) stack of known positive definite scale matrices.
    s: pooled scale statistic, s / sigma2 ~ chi-square(n).
    n: degrees of freedom of s.
    """

    x: np.ndarray
    v: np.ndarray
    s: float
    n: int

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        v = np.asarray(self.v, dtype=float)
        if v.ndim == 2:
            v = np.broadcast_to(v, (x.shape[0],) + v.shape)
        if x.ndim != 2:
            raise ValueError(f"x must be a (k, p) array, got shape {np.shape(self.x)}")
        if v.shape != (x.shape[0], x.shape[1], x.shape[1]):
            raise ValueError(
                f"v must have shape (k, p, p) = {(x.shape[0], x.shape[1], x.shape[1])}, "
                f"got {v.shape}"
            )
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "v", _freeze(v))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "n", int(self.n))

    @property
    def k(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class TrueParameters:
    """Ground truth for simulation: mean rows mu (k, p) and the scale sigma2."""

    mu: np.ndarray
    sigma2: float

    def __post_init__(self) -> None:
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "mu", _freeze(mu))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if not np.all(np.isfinite(self.mu)):
            raise ValueError("mu has non-finite entries")
        if not (self.sigma2 > 0.0 and np.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")


@dataclass(frozen=True)
class LossSpec:
    """Weight matrices of the quadratic loss.

    q: (k, p, p) stack of positive definite weight matrices.
    eig_floor: min over groups of the smallest eigenvalue of v[i] @ q[i];
        equals 1 when q[i] is the inverse of v[i] for every group. Computed
        by the factories, not supplied by hand.
    """

    q: np.ndarray
    eig_floor: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _freeze(np.asarray(self.q, dtype=float)))
        object.__setattr__(self, "eig_floor", float(self.eig_floor))

    @classmethod
    def for_model(
        cls, model: CanonicalModel, q: np.ndarray | Sequence[np.ndarray], tol: Tolerances = DEFAULT
    ) -> "LossSpec":
        """Build a LossSpec for explicit weight matrices, deriving eig_floor."""
        qa = np.asarray(q, dtype=float)
        if qa.ndim == 2:
            qa = np.broadcast_to(qa, (model.k,) + qa.shape)
        if qa.shape != (model.k, model.p, model.p):
            raise ValueError(
                f"q must have shape (k, p, p) = {(model.k, model.p, model.p)}, got {qa.shape}"
            )
        bad = _check_spd_stack("q", qa, tol)
        if bad:
            raise ValueError("; ".join(bad))
        floor = np.inf
        for vi, qi in zip(model.v, qa):
            chol = np.linalg.cholesky(0.5 * (vi + vi.T))
            # v @ q shares its spectrum with the symmetric chol' q chol
            vals = np.linalg.eigvalsh(chol.T @ (0.5 * (qi + qi.T)) @ chol)
            floor = min(floor, vals[0])
        return cls(q=qa, eig_floor=float(floor))

    @classmethod
    def inverse_v(cls, model: CanonicalModel, tol: Tolerances = DEFAULT) -> "LossSpec":
        """Loss weighted by the inverse scale matrices (eig_floor is 1)."""
        q = np.stack([_spd_inverse(f"v[{i}]", vi, tol) for i, vi in enumerate(model.v)])
        return cls.for_model(model, q, tol)

    def matches_inverse_v(self, model: CanonicalModel, rtol: float = 1e-9) -> bool:
        """True when every q[i] equals inv(v[i]) up to rtol."""
        prod = np.einsum("kab,kbc->kac", model.v, self.q)
        eye = np.eye(model.p)
        return bool(np.all(np.abs(prod - eye) <= rtol * max(1.0, float(np.abs(prod).max()))))


@dataclass(frozen=True)
class PooledSummary:
    """Pooled statistics shared by the shrinkage estimators.

    weights: (k, p, p) stack w[i] = inv(v[i]) @ inv(q[i]) @ inv(v[i]).
    pooled_cov: inverse of sum_i w[i].
    pooled_mean: pooled_cov @ sum_i w[i] x[i], the generalized least squares
        combination of the group observations.
    residual_stat: sum_i (x[i]-pooled_mean)' w[i] (x[i]-pooled_mean) / s.
    pooled_norm_stat: pooled_mean' inv(pooled_cov) pooled_mean / s.
    """

    weights: np.ndarray
    pooled_cov: np.ndarray
    pooled_mean: np.ndarray
    residual_stat: float
    pooled_norm_stat: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", _freeze(self.weights))
        object.__setattr__(self, "pooled_cov", _freeze(self.pooled_cov))
        object.__setattr__(self, "pooled_mean", _freeze(self.pooled_mean))
        object.__setattr__(self, "residual_stat", float(self.residual_stat))
        object.__setattr__(self, "pooled_norm_stat", float(self.pooled_norm_stat))


@dataclass(frozen=True)
class Hyperparameters:
    """Tuning constants of the Bayes-motivated estimators.

    a, b, c: exponents of the two-stage shrinkage prior (a acts on the
        between-group spread, b on the pooled mean, c on the scale).
    big_l: rate of the exponential tilt on the precision; 0 drops the tilt
        and makes the shrink factors scale-free.
    alpha: test size of the preliminary-test estimator.
    """

    a: float = 0.1
    b: float = 0.1
    c: float = 0.1
    big_l: float = 0.0
    alpha: float = 0.05

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "big_l", "alpha"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
        if self.big_l < 0.0:
            raise ValueError(f"big_l must be >= 0, got {self.big_l}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = field(default_factory=tuple)


def validate_model(
    model: CanonicalModel,
    loss_spec: LossSpec | None = None,
    truth: TrueParameters | None = None,
    tol: Tolerances = DEFAULT,
) -> ValidationReport:
    """Check the structural invariants of a model (and optional loss/truth).

    Returns a report rather than raising, so callers can present all
    violations at once.
    """
    bad: list[str] = []
    if not np.all(np.isfinite(model.x)):
        bad.append("x has non-finite entries")
    if model.k < 2:
        bad.append(f"need at least 2 groups, got k={model.k}")
    if model.p < 1:
        bad.append(f"need at least 1 coordinate, got p={model.p}")
    if not (np.isfinite(model.s) and model.s > 0.0):
        bad.append(f"s must be positive and finite, got {model.s}")
    if model.n < 1:
        bad.append(f"n must be a positive integer, got {model.n}")
    bad.extend(_check_spd_stack("v", model.v, tol))
    if loss_spec is not None:
        if loss_spec.q.shape != (model.k, model.p, model.p):
            bad.append(
                f"loss q shape {loss_spec.q.shape} does not match model "
                f"{(model.k, model.p, model.p)}"
            )
        else:
            bad.extend(_check_spd_stack("q", loss_spec.q, tol))
            if not (np.isfinite(loss_spec.eig_floor) and loss_spec.eig_floor > 0.0):
                bad.append(f"eig_floor must be positive, got {loss_spec.eig_floor}")
    if truth is not None:
        if truth.mu.shape != (model.k, model.p):
            bad.append(f"mu shape {truth.mu.shape} does not match x shape {model.x.shape}")
    return ValidationReport(ok=not bad, violations=tuple(bad))


def canonicalize_ksample(
    samples: Sequence[np.ndarray],
    v0: np.ndarray | Sequence[np.ndarray],
    tol: Tolerances = DEFAULT,
) -> CanonicalModel:
    """Reduce raw multi-sample data to canonical form.

    Group i supplies ``samples[i]``, an (n_i, p) array of i.i.d. draws from
    N_p(mu_i, sigma2 * v0[i]). The canonical observation is the group mean
    with scale matrix v0[i] / n_i; the canonical s pools the within-group
    spread sum_ij (y_ij - mean_i)' inv(v0[i]) (y_ij - mean_i), which has
    p * sum_i (n_i - 1) degrees of freedom.

    Args:
        samples: sequence of k arrays, each (n_i, p) with n_i >= 1.
        v0: one (p, p) matrix shared by all groups, or a (k, p, p) stack.

    Returns:
        CanonicalModel. Requires p * sum_i (n_i - 1) >= 1; a pooled scale
        cannot be formed from singleton groups alone.
    """
    if len(samples) < 2:
        raise ValueError(f"need at least 2 groups, got {len(samples)}")
    arrays = [np.atleast_2d(np.asarray(sm, dtype=float)) for sm in samples]
    p = arrays[0].shape[1]
    for i, arr in enumerate(arrays):
        if arr.ndim != 2 or arr.shape[1] != p:
            raise ValueError(f"samples[{i}] must be (n_i, {p}), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError(f"samples[{i}] is empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"samples[{i}] has non-finite entries")
    k = len(arrays)
    v0a = np.asarray(v0, dtype=float)
    if v0a.ndim == 2:
        v0a = np.broadcast_to(v0a, (k,) + v0a.shape).copy()
    if v0a.shape != (k, p, p):
        raise ValueError(f"v0 must have shape ({k}, {p}, {p}), got {v0a.shape}")
    bad = _check_spd_stack("v0", v0a, tol)
    if bad:
        raise ValueError("; ".join(bad))

    x = np.empty((k, p))
    v = np.empty((k, p, p))
    s = 0.0
    df = 0
    for i, arr in enumerate(arrays):
        ni = arr.shape[0]
        mean = arr.mean(axis=0)
        x[i] = mean
        v[i] = v0a[i] / ni
        if ni > 1:
            resid = arr - mean
            s += float(np.einsum("ja,ab,jb->", resid, _spd_inverse(f"v0[{i}]", v0a[i], tol), resid))
            df += (ni - 1) * p
    if df < 1:
        raise ValueError("all groups are singletons; no degrees of freedom for the scale")
    return CanonicalModel(x=x, v=v, s=s, n=df)


def canonicalize_regression(
    designs: Sequence[np.ndarray],
    responses: Sequence[np.ndarray],
) -> CanonicalModel:
    """Reduce parallel linear regressions to canonical form.

    Group i has responses y_i = Z_i beta_i + noise with i.i.d. N(0, sigma2)
    noise. The canonical observation is the least squares coefficient vector
    with scale matrix inv(Z_i' Z_i); s pools the residual sums of squares
    over groups, with sum_i (m_i - p) degrees of freedom.

    Args:
        designs: sequence of k design matrices, each (m_i, p) of full
            column rank with m_i >= p.
        responses: sequence of k response vectors, each length m_i.
    """
    if len(designs) != len(responses):
        raise ValueError(f"{len(designs)} designs but {len(responses)} responses")
    if len(designs) < 2:
        raise ValueError(f"need at least 2 groups, got {len(designs)}")
    p = np.atleast_2d(np.asarray(designs[0], dtype=float)).shape[1]
    k = len(designs)
    x = np.empty((k, p))
    v = np.empty((k, p, p))
    s = 0.0
    df = 0
    for i, (z_raw, y_raw) in enumerate(zip(designs, responses)):
        z = np.atleast_2d(np.asarray(z_raw, dtype=float))
        y = np.asarray(y_raw, dtype=float).ravel()
        if z.shape[1] != p:
            raise ValueError(f"designs[{i}] has {z.shape[1]} columns, expected {p}")
        if z.shape[0] != y.shape[0]:
            raise ValueError(
                f"designs[{i}] has {z.shape[0]} rows but responses[{i}] has {y.shape[0]}"
            )
        if z.shape[0] < p:
            raise ValueError(f"designs[{i}] has fewer rows ({z.shape[0]}) than columns ({p})")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
            raise ValueError(f"group {i} has non-finite entries")
        gram = z.T @ z
        if np.linalg.matrix_rank(z) < p:
            raise ValueError(f"designs[{i}] is column rank deficient")
        coef, *_ = np.linalg.lstsq(z, y, rcond=None)
        x[i] = coef
        v[i] = np.linalg.inv(gram)
        resid = y - z @ coef
        s += float(resid @ resid)
        df += z.shape[0] - p
    if df < 1:
        raise ValueError("no residual degrees of freedom; need sum_i (m_i - p) >= 1")
    return CanonicalModel(x=x, v=v, s=s, n=df)


def pooled_summary(
    model: CanonicalModel, loss_spec: LossSpec, tol: Tolerances = DEFAULT
) -> PooledSummary:
    """Compute the pooled statistics the shrinkage estimators share.

    The weights w[i] = inv(v[i]) inv(q[i]) inv(v[i]) define a generalized
    least squares pooled mean; residual_stat and pooled_norm_stat are the
    two scale-free statistics every shrink factor is built from. Their sum
    times s must reproduce sum_i x[i]' w[i] x[i]; that identity is verified
    here and a failure raises, since it indicates the inputs broke the
    conditioning guards.
    """
    report = validate_model(model, loss_spec, tol=tol)
    if not report.ok:
        raise ValueError("invalid model: " + "; ".join(report.violations))
    k, p = model.k, model.p
    weights = np.empty((k, p, p))
    for i in range(k):
        vinv = _spd_inverse(f"v[{i}]", model.v[i], tol)
        qinv = _spd_inverse(f"q[{i}]", loss_spec.q[i], tol)
        wi = vinv @ qinv @ vinv
        weights[i] = 0.5 * (wi + wi.T)
    wsum = weights.sum(axis=0)
    pooled_cov = _spd_inverse("sum of weights", wsum, tol)
    pooled_mean = pooled_cov @ np.einsum("kab,kb->a", weights, model.x)
    centered = model.x - pooled_mean
    residual = float(np.einsum("ka,kab,kb->", centered, weights, centered))
    pooled_norm = float(pooled_mean @ wsum @ pooled_mean)
    total = float(np.einsum("ka,kab,kb->", model.x, weights, model.x))
    if abs((residual + pooled_norm) - total) > tol.identity_rel * max(1.0, abs(total)):
        raise ArithmeticError(
            "pooled quadratic forms failed the decomposition check: "
            f"{residual} + {pooled_norm} != {total}"
        )
    return PooledSummary(
        weights=weights,
        pooled_cov=pooled_cov,
        pooled_mean=pooled_mean,
        residual_stat=residual / model.s,
        pooled_norm_stat=pooled_norm / model.s,
    )
