"""Valence-arousal regression over precomputed embeddings, plus the metric suite.

The head is a closed-form ridge regressor: deterministic, dependency-light,
and checkable against the normal equations by hand. All statistics use the
population (1/N) variance convention throughout; the concordance coefficient
mixes means and variances, so one convention is used everywhere. Correlation
statistics are computed on raw affine outputs, never on clamped ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConstantInput,
    LengthMismatch,
    SchemaViolation,
    ShapeMismatch,
    SingularSystem,
)
from .ingest import VAPoint

SIDES = ("music", "image")

LAMBDA_GRID = tuple(10.0 ** e for e in range(-4, 5))

STATISTIC_COLUMNS = ("RMSE", "MAE", "Pearson", "Spearman", "CCC", "R2")


@dataclass(frozen=True)
class RegressionHead:
    """Affine map from an embedding to raw (valence, arousal) scores."""

    weights: np.ndarray  # (input_dim, 2)
    bias: np.ndarray     # (2,)
    input_dim: int
    ridge_lambda: float
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.input_dim <= 0:
            raise ValueError("input_dim must be positive")
        if self.weights.shape != (self.input_dim, 2) or self.bias.shape != (2,):
            raise ShapeMismatch(
                f"weights {self.weights.shape}, bias {self.bias.shape} "
                f"inconsistent with input_dim {self.input_dim}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("weights/bias must be finite")


def fit_ridge(X, Y, ridge_lambda: float = 1.0, side: str = "music") -> RegressionHead:
    """Fit the head by the centered normal equations.

    Solves (Xc'Xc + lambda*I) W = Xc'Yc on mean-centered data; the bias
    reproduces the target means at the feature means. lambda=0 on a
    rank-deficient design raises SingularSystem instead of returning a
    pseudo-solution.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or Y.shape[1] != 2:
        raise ShapeMismatch(f"expected X (N,D) and Y (N,2), got {X.shape} and {Y.shape}")
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    if X.shape[0] < 2:
        raise ShapeMismatch("need at least 2 samples")
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")

    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    Yc = Y - y_mean
    gram = Xc.T @ Xc + ridge_lambda * np.eye(X.shape[1])
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(gram) < X.shape[1]:
        raise SingularSystem("rank-deficient design with lambda=0")
    try:
        weights = np.linalg.solve(gram, Xc.T @ Yc)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    bias = y_mean - x_mean @ weights
    return RegressionHead(weights, bias, X.shape[1], float(ridge_lambda), side)


def predict_raw(head: RegressionHead, X) -> np.ndarray:
    """Raw affine outputs (N, 2), unclamped; this is what the metrics see."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != head.input_dim:
        raise ShapeMismatch(f"embedding dim {X.shape[1]} != head input_dim {head.input_dim}")
    return X @ head.weights + head.bias


def predict(head: RegressionHead, x) -> VAPoint:
    """Predict one embedding's VA point, clamped to the unit square."""
    raw = predict_raw(head, np.asarray(x, dtype=np.float64))[0]
    return VAPoint(
        float(min(1.0, max(0.0, raw[0]))),
        float(min(1.0, max(0.0, raw[1]))),
    )


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise LengthMismatch(f"lengths {p.shape[0]} and {t.shape[0]} differ")
    if p.shape[0] < 2:
        raise LengthMismatch("need at least 2 values")
    return p, t


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def pearson(pred, truth) -> float:
    p, t = _pair(pred, truth)
    sp, st = p.std(), t.std()
    if sp == 0.0 or st == 0.0:
        raise ConstantInput("correlation undefined for a constant vector")
    cov = np.mean((p - p.mean()) * (t - t.mean()))
    return float(cov / (sp * st))


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their average rank."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    sv = v[order]
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(pred, truth) -> float:
    p, t = _pair(pred, truth)
    if p.std() == 0.0 or t.std() == 0.0:
        raise ConstantInput("correlation undefined for a constant vector")
    return pearson(_average_ranks(p), _average_ranks(t))


def ccc(pred, truth) -> float:
    """Lin's concordance: 2*cov / (var_p + var_t + (mean_p - mean_t)^2)."""
    p, t = _pair(pred, truth)
    vp, vt = p.var(), t.var()
    if vp == 0.0 or vt == 0.0:
        raise ConstantInput("concordance undefined for a constant vector")
    cov = np.mean((p - p.mean()) * (t - t.mean()))
    return float(2.0 * cov / (vp + vt + (p.mean() - t.mean()) ** 2))


def r2(pred, truth) -> float:
    p, t = _pair(pred, truth)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantInput("R^2 undefined for constant truth")
    ss_res = float(np.sum((t - p) ** 2))
    return 1.0 - ss_res / ss_tot


STATISTICS = {
    "rmse": rmse,
    "mae": mae,
    "pearson": pearson,
    "spearman": spearman,
    "ccc": ccc,
    "r2": r2,
}


@dataclass(frozen=True)
class DimensionMetrics:
    rmse: float
    mae: float
    pearson: float
    spearman: float
    ccc: float
    r2: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in STATISTICS}


@dataclass(frozen=True)
class RegressionMetrics:
    valence: DimensionMetrics
    arousal: DimensionMetrics

    def as_dict(self) -> dict:
        return {"valence": self.valence.as_dict(), "arousal": self.arousal.as_dict()}


def evaluate(head: RegressionHead, X_test, Y_test) -> RegressionMetrics:
    """Score the head on held-out data, per dimension, on raw affine outputs."""
    Y = np.asarray(Y_test, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ShapeMismatch(f"expected Y (N,2), got {Y.shape}")
    raw = predict_raw(head, X_test)
    if raw.shape[0] != Y.shape[0]:
        raise ShapeMismatch(f"X has {raw.shape[0]} rows, Y has {Y.shape[0]}")
    dims = []
    for d in range(2):
        dims.append(DimensionMetrics(**{
            name: fn(raw[:, d], Y[:, d]) for name, fn in STATISTICS.items()
        }))
    return RegressionMetrics(valence=dims[0], arousal=dims[1])


def select_lambda(
    X_train, Y_train, X_val, Y_val,
    grid: Sequence[float] = LAMBDA_GRID,
    side: str = "music",
) -> tuple[float, RegressionHead]:
    """Pick the grid lambda minimizing mean validation RMSE; refit and return."""
    X_val = np.asarray(X_val, dtype=np.float64)
    Y_val = np.asarray(Y_val, dtype=np.float64)
    best: tuple[float, float] | None = None
    for lam in grid:
        head = fit_ridge(X_train, Y_train, lam, side=side)
        raw = predict_raw(head, X_val)
        score = (rmse(raw[:, 0], Y_val[:, 0]) + rmse(raw[:, 1], Y_val[:, 1])) / 2.0
        if best is None or score < best[1]:
            best = (lam, score)
    assert best is not None
    return best[0], fit_ridge(X_train, Y_train, best[0], side=side)


def render_metrics_table(name: str, metrics: RegressionMetrics) -> str:
    """Text table with the standard column order: RMSE MAE Pearson Spearman CCC R2."""
    lines = [name]
    header = f"{'':<10}" + "".join(f"{c:>10}" for c in STATISTIC_COLUMNS)
    lines.append(header)
    for dim in ("valence", "arousal"):
        dm: DimensionMetrics = getattr(metrics, dim)
        row = f"{dim.capitalize():<10}" + "".join(
            f"{getattr(dm, k):>10.3f}" for k in STATISTICS
        )
        lines.append(row)
    return "\n".join(lines) + "\n"


def save_head(head: RegressionHead, path) -> None:
    """Write the model file: a header line plus line-delimited weight rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "side": head.side,
            "dim": head.input_dim,
            "lambda": head.ridge_lambda,
        }) + "\n")
        for i in range(head.input_dim):
            fh.write(json.dumps({"id": f"w{i:04d}", "vec": list(head.weights[i])}) + "\n")
        fh.write(json.dumps({"id": "bias", "vec": list(head.bias)}) + "\n")


def load_head(path) -> RegressionHead:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln and not ln.startswith("#")]
    if not lines:
        raise SchemaViolation("empty model file")
    header = json.loads(lines[0])
    for key in ("side", "dim", "lambda"):
        if key not in header:
            raise SchemaViolation(f"model header missing {key!r}")
    dim = header["dim"]
    rows: dict[str, list[float]] = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        obj = json.loads(raw)
        if "id" not in obj or "vec" not in obj:
            raise SchemaViolation("model row missing id/vec", line=line_no)
        rows[obj["id"]] = obj["vec"]
    if "bias" not in rows:
        raise SchemaViolation("model file missing bias row")
    try:
        weights = np.array([rows[f"w{i:04d}"] for i in range(dim)], dtype=np.float64)
    except KeyError as exc:
        raise SchemaViolation(f"model file missing weight row {exc}") from None
    bias = np.asarray(rows["bias"], dtype=np.float64)
    return RegressionHead(weights, bias, dim, float(header["lambda"]), header["side"])
