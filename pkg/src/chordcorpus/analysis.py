"""Two-model regression protocol with a block permutation test.

The question answered here: once the control model knows which interval
classes a chord contains and how many notes it has, does the spatial shape
of the voicing (centroid, spread, skewness, kurtosis) add predictive power
for a psychoacoustic target?

Model 1 regresses the target on the 13 controls (icv_0..icv_11, note_count).
Model 2 adds the four voicing moments, residualized against the controls on
the training split so their coefficients read as "shape beyond content".
Both models are scored out of sample; the gain is delta R^2. Significance
comes from refitting Model 2 with the residualized moment block row-permuted
within the training split (the four columns move together, preserving their
mutual correlation) and locating the observed gain in that null distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

CONTROL_NAMES: tuple[str, ...] = tuple(f"icv_{i}" for i in range(12)) + ("note_count",)
MOMENT_NAMES: tuple[str, ...] = ("centroid", "spread", "skewness", "kurtosis")
TARGET_NAMES: tuple[str, ...] = ("dissonance", "harmonicity")

DEFAULT_TRAIN = 50_000
DEFAULT_TEST = 10_000
DEFAULT_PERMUTATIONS = 1_200

# Substream labels so split, stratification and each permutation draw from
# independent, schedule-independent generators.
_SPLIT_KEY = 0
_STRATIFY_KEY = 1
_PERMUTE_KEY = 2


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


class SingularDesignError(ValueError):
    """Design matrix is rank deficient; names the offending columns."""

    def __init__(self, columns: Sequence[str]):
        super().__init__(
            "design matrix is rank deficient; linearly dependent columns: "
            + ", ".join(columns)
        )
        self.columns = tuple(columns)


@dataclass(frozen=True)
class OLSFit:
    """Least-squares fit of y on [1 | X]."""

    intercept: float
    coef: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=np.float64) @ self.coef


def fit_ols(
    X: np.ndarray, y: np.ndarray, column_names: Optional[Sequence[str]] = None
) -> OLSFit:
    """Least-squares coefficients via SVD (rank revealing, never regularized).

    Raises SingularDesignError naming dependent columns when X (plus the
    intercept) is rank deficient, and ValueError when there are fewer rows
    than coefficients.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} rows to fit {p} columns, got {n}")
    aug = np.column_stack([np.ones(n), X])
    beta, _, rank, _ = np.linalg.lstsq(aug, y, rcond=None)
    if rank < p + 1:
        names = list(column_names) if column_names else [f"x{j}" for j in range(p)]
        raise SingularDesignError(_dependent_columns(aug, ["intercept"] + names))
    return OLSFit(intercept=float(beta[0]), coef=beta[1:])


def _dependent_columns(aug: np.ndarray, names: Sequence[str]) -> list[str]:
    """Columns that add no rank beyond the columns to their left."""
    offenders = []
    rank = 0
    for j in range(aug.shape[1]):
        new_rank = np.linalg.matrix_rank(aug[:, : j + 1])
        if new_rank == rank:
            offenders.append(names[j])
        rank = new_rank
    return offenders or list(names)


def r_squared(actual: np.ndarray, predicted: np.ndarray) -> float:
    """1 - SS_res / SS_tot, with SS_tot centered on the evaluation sample."""
    actual = np.asarray(actual, dtype=np.float64)
    resid = actual - np.asarray(predicted, dtype=np.float64)
    ss_tot = float(((actual - actual.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ValueError("target is constant on the evaluation sample")
    return 1.0 - float((resid * resid).sum()) / ss_tot


@dataclass
class DesignMatrix:
    """Numeric regression inputs for one target."""

    controls: np.ndarray  # (N, 13) float64
    moments: np.ndarray  # (N, 4) float64, raw (not residualized)
    target: np.ndarray  # (N,) float64
    target_name: str
    note_counts: np.ndarray = field(default=None)  # (N,) int, for stratification

    def __post_init__(self) -> None:
        self.controls = np.asarray(self.controls, dtype=np.float64)
        self.moments = np.asarray(self.moments, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        n = len(self.target)
        if self.controls.shape != (n, len(CONTROL_NAMES)):
            raise ValueError(f"controls must be (N, {len(CONTROL_NAMES)})")
        if self.moments.shape != (n, len(MOMENT_NAMES)):
            raise ValueError(f"moments must be (N, {len(MOMENT_NAMES)})")
        for name, arr in (
            ("controls", self.controls),
            ("moments", self.moments),
            ("target", self.target),
        ):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
        if self.note_counts is None:
            self.note_counts = self.controls[:, -1].astype(np.int64)

    def __len__(self) -> int:
        return len(self.target)

    @classmethod
    def from_records(cls, records: Iterable, target: str) -> "DesignMatrix":
        """Build from CorpusRecord-shaped objects (icv, note_count, moments)."""
        if target not in TARGET_NAMES:
            raise ValueError(f"target must be one of {TARGET_NAMES}, got {target!r}")
        controls, moments, y = [], [], []
        for r in records:
            controls.append(list(r.icv) + [r.note_count])
            moments.append([r.centroid, r.spread, r.skewness, r.kurtosis])
            y.append(getattr(r, target))
        return cls(
            controls=np.array(controls, dtype=np.float64),
            moments=np.array(moments, dtype=np.float64),
            target=np.array(y, dtype=np.float64),
            target_name=target,
        )

    def take(self, indices: np.ndarray) -> "DesignMatrix":
        return DesignMatrix(
            controls=self.controls[indices],
            moments=self.moments[indices],
            target=self.target[indices],
            target_name=self.target_name,
            note_counts=self.note_counts[indices],
        )


@dataclass(frozen=True)
class RegressionReport:
    """Headline numbers of one protocol run."""

    target: str
    r2_controls: float
    r2_full: float
    delta_r2: float
    betas: dict[str, float]
    permutation_p: float
    n_train: int
    n_test: int
    n_permutations: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "r2_controls": self.r2_controls,
            "r2_full": self.r2_full,
            "delta_r2": self.delta_r2,
            "betas": dict(self.betas),
            "permutation_p": self.permutation_p,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_permutations": self.n_permutations,
            "seed": self.seed,
        }


@dataclass
class ProtocolRun:
    """Report plus the raw material for the diagnostic dumps."""

    report: RegressionReport
    null_deltas: np.ndarray
    test_actual: np.ndarray
    test_predicted_full: np.ndarray
    test_predicted_controls: np.ndarray


def split_indices(
    n_rows: int, n_train: int, n_test: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint train/test row indices, deterministic in the seed."""
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be positive")
    if n_train + n_test > n_rows:
        raise ValueError(
            f"n_train + n_test = {n_train + n_test} exceeds sample size {n_rows}"
        )
    order = _rng(seed, _SPLIT_KEY).permutation(n_rows)
    return order[:n_train], order[n_train : n_train + n_test]


def residualize(
    moments: np.ndarray,
    controls: np.ndarray,
    train_idx: np.ndarray,
) -> np.ndarray:
    """Each moment column minus its control-model prediction.

    The control fit for every column uses training rows only; the fitted
    model is then applied to all rows, so test rows never leak into the fit.
    """
    moments = np.asarray(moments, dtype=np.float64)
    out = np.empty_like(moments)
    for j in range(moments.shape[1]):
        fit = fit_ols(
            controls[train_idx],
            moments[train_idx, j],
            column_names=CONTROL_NAMES,
        )
        out[:, j] = moments[:, j] - fit.predict(controls)
    return out


def standardized_betas(
    coef: np.ndarray, X_train: np.ndarray, y_train: np.ndarray
) -> np.ndarray:
    """Coefficients rescaled to standard-deviation units (training split)."""
    sx = X_train.std(axis=0)
    sy = y_train.std()
    if sy == 0:
        raise ValueError("target is constant on the training split")
    return coef * sx / sy


@dataclass
class _ProtocolState:
    train: np.ndarray
    test: np.ndarray
    X_full: np.ndarray  # (N, 17): controls then residualized moments
    target: np.ndarray
    r2_controls: float
    r2_full: float
    betas_std: np.ndarray  # standardized, full model, all 17 columns
    pred_controls: np.ndarray
    pred_full: np.ndarray


def _prepare(
    design: DesignMatrix, n_train: int, n_test: int, seed: int
) -> _ProtocolState:
    train, test = split_indices(len(design), n_train, n_test, seed)
    controls, y = design.controls, design.target
    resid = residualize(design.moments, controls, train)
    X_full = np.column_stack([controls, resid])
    names = list(CONTROL_NAMES) + [f"resid_{m}" for m in MOMENT_NAMES]

    fit1 = fit_ols(controls[train], y[train], column_names=CONTROL_NAMES)
    fit2 = fit_ols(X_full[train], y[train], column_names=names)
    pred_controls = fit1.predict(controls[test])
    pred_full = fit2.predict(X_full[test])
    return _ProtocolState(
        train=train,
        test=test,
        X_full=X_full,
        target=y,
        r2_controls=r_squared(y[test], pred_controls),
        r2_full=r_squared(y[test], pred_full),
        betas_std=standardized_betas(fit2.coef, X_full[train], y[train]),
        pred_controls=pred_controls,
        pred_full=pred_full,
    )


def _null_deltas(state: _ProtocolState, n_permutations: int, seed: int) -> np.ndarray:
    """Out-of-sample delta R^2 под the no-shape-effect null.

    Each iteration row-permutes the residualized moment block within the
    training split (all four columns together), refits the full model, and
    scores it on the untouched test split. Iterations use independent
    substreams, so any execution order gives identical results.
    """
    train, test, y = state.train, state.test, state.target
    n_controls = len(CONTROL_NAMES)
    X_work = state.X_full.copy()
    y_train = y[train]
    nulls = np.empty(n_permutations)
    for it in range(n_permutations):
        perm = _rng(seed, _PERMUTE_KEY, it).permutation(len(train))
        X_work[train, n_controls:] = state.X_full[train][perm, n_controls:]
        fit = fit_ols(X_work[train], y_train)
        nulls[it] = r_squared(y[test], fit.predict(X_work[test])) - state.r2_controls
    return nulls


def permutation_test(
    design: DesignMatrix,
    n_train: int = DEFAULT_TRAIN,
    n_test: int = DEFAULT_TEST,
    n_permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 42,
) -> tuple[float, np.ndarray]:
    """(p_value, null delta R^2 distribution) for the voicing-moment block.

    p uses the add-one estimator (1 + exceedances) / (1 + iterations), so
    the smallest attainable value is 1 / (n_permutations + 1).
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be at least 1")
    state = _prepare(design, n_train, n_test, seed)
    nulls = _null_deltas(state, n_permutations, seed)
    observed = state.r2_full - state.r2_controls
    p = (1 + int((nulls >= observed).sum())) / (1 + n_permutations)
    return p, nulls


def run_two_model_protocol(
    design: DesignMatrix,
    n_train: int = DEFAULT_TRAIN,
    n_test: int = DEFAULT_TEST,
    seed: int = 42,
    n_permutations: int = DEFAULT_PERMUTATIONS,
) -> ProtocolRun:
    """Fit both models, score out of sample, and run the permutation test."""
    if n_permutations < 1:
        raise ValueError("n_permutations must be at least 1")
    state = _prepare(design, n_train, n_test, seed)
    nulls = _null_deltas(state, n_permutations, seed)
    delta = state.r2_full - state.r2_controls
    p = (1 + int((nulls >= delta).sum())) / (1 + n_permutations)
    moment_betas = state.betas_std[len(CONTROL_NAMES):]
    report = RegressionReport(
        target=design.target_name,
        r2_controls=state.r2_controls,
        r2_full=state.r2_full,
        delta_r2=delta,
        betas={name: float(b) for name, b in zip(MOMENT_NAMES, moment_betas)},
        permutation_p=p,
        n_train=n_train,
        n_test=n_test,
        n_permutations=n_permutations,
        seed=seed,
    )
    return ProtocolRun(
        report=report,
        null_deltas=nulls,
        test_actual=state.target[state.test],
        test_predicted_full=state.pred_full,
        test_predicted_controls=state.pred_controls,
    )


def stratified_sample_indices(
    note_counts: np.ndarray, total: int, seed: int
) -> np.ndarray:
    """Row indices of a sample stratified by cardinality.

    Strata get equal quotas; when a stratum is smaller than its quota it
    contributes everything it has and the shortfall is spread evenly over
    the remaining strata. Raises ValueError when the whole population is
    smaller than the request.
    """
    note_counts = np.asarray(note_counts)
    if total > len(note_counts):
        raise ValueError(
            f"requested sample of {total} from {len(note_counts)} rows"
        )
    strata = [int(v) for v in np.unique(note_counts)]
    sizes = {s: int((note_counts == s).sum()) for s in strata}
    quotas = {s: 0 for s in strata}
    remaining = total
    open_strata = list(strata)
    while remaining > 0 and open_strata:
        share, extra = divmod(remaining, len(open_strata))
        closed = []
        for pos, s in enumerate(open_strata):
            want = quotas[s] + share + (1 if pos < extra else 0)
            if want >= sizes[s]:
                quotas[s] = sizes[s]
                closed.append(s)
            else:
                quotas[s] = want
        remaining = total - sum(quotas.values())
        if not closed:
            break
        open_strata = [s for s in open_strata if s not in closed]
    rng = _rng(seed, _STRATIFY_KEY)
    picks = []
    for s in strata:
        rows = np.flatnonzero(note_counts == s)
        chosen = rng.choice(len(rows), size=quotas[s], replace=False)
        chosen.sort()
        picks.append(rows[chosen])
    return np.concatenate(picks)
