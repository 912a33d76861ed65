"""Shallow multilabel learners.

The base learner is a linear max-margin classifier trained on the primal
hinge + L2 objective by stochastic subgradient descent with step size
1/(lambda*t). Three decompositions wrap it (one-vs-rest, classifier chain,
label powerset); ML-kNN is implemented separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from docsmell.corpus import N_SMELLS, SmellLabels
from docsmell.errors import DimensionMismatch, EmptyTrainingSet, TooFewInstances
from docsmell.features import FeatureVector, as_matrix


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-3
    epochs: int = 20
    seed: int = 42

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("regularization must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def _label_matrix(Y) -> np.ndarray:
    if isinstance(Y, np.ndarray):
        Y = np.asarray(Y, dtype=bool)
        return Y.reshape(len(Y), -1) if Y.ndim != 2 else Y
    rows = [y.as_tuple() if isinstance(y, SmellLabels) else tuple(y) for y in Y]
    if not rows:
        return np.zeros((0, N_SMELLS), dtype=bool)
    return np.array(rows, dtype=bool).reshape(len(rows), -1)


def _single(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.to_dense()[None, :]
    return np.atleast_2d(np.asarray(x, dtype=float))


def _sub_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *path]).generate_state(1)[0])


# --------------------------------------------------------------------------
# linear base learner


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.dimension:
            raise DimensionMismatch(self.dimension, X.shape[1])
        return X @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) >= 0

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_json(cls, obj: dict) -> LinearModel:
        return cls(np.array(obj["weights"], dtype=float), float(obj["bias"]))


def hinge_objective(model: LinearModel, X, y, lam: float) -> float:
    """lam/2 * ||(w, b)||^2 + mean hinge loss; the bias is regularized too."""
    X = as_matrix(X)
    signs = np.where(np.asarray(y, dtype=bool), 1.0, -1.0)
    margins = signs * model.decision_function(X)
    reg = 0.5 * lam * (model.weights @ model.weights + model.bias**2)
    return float(reg + np.maximum(0.0, 1.0 - margins).mean())


def train_linear(X, y, cfg: TrainConfig = TrainConfig(), trace: list | None = None) -> LinearModel:
    """Fit a linear max-margin classifier and return the final iterate.

    The bias is an extra constant-one feature. With step 1/(lam*t) the
    iterate after step t is G_t / (lam*t), where G_t accumulates the
    margin-violating y*x, so each step touches only the nonzeros of x.

    If ``trace`` is a list, the objective of the running average of all
    iterates is appended at every epoch boundary. That average is kept in
    O(nnz) per step via sum_t G_t/t = H_T*G_T - sum_i g_i*H_{i-1}, with H the
    harmonic numbers.
    """
    y = np.asarray(y, dtype=bool).ravel()
    if len(y) == 0:
        raise EmptyTrainingSet()
    X = as_matrix(X)
    if len(X) != len(y):
        raise DimensionMismatch(len(X), len(y))
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    signs = np.where(y, 1.0, -1.0)
    rows = []
    for i in range(n):
        idx = np.flatnonzero(Xa[i])
        rows.append((idx, Xa[i, idx]))

    lam = cfg.lam
    rng = np.random.default_rng(cfg.seed)
    G = np.zeros(d + 1)
    S = np.zeros(d + 1)
    t = 0
    harmonic = 0.0  # H_{t-1} at the top of each step
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            idx, vals = rows[i]
            score = 0.0 if t == 1 else float(G[idx] @ vals) / (lam * (t - 1))
            if signs[i] * score < 1.0:
                g = signs[i] * vals
                G[idx] += g
                S[idx] += harmonic * g
            harmonic += 1.0 / t
        if trace is not None:
            w = (harmonic * G - S) / (lam * t)
            trace.append(hinge_objective(LinearModel(w[:d], float(w[d])), X, y, lam))
    w = G / (lam * t)
    return LinearModel(weights=w[:d].copy(), bias=float(w[d]))


# --------------------------------------------------------------------------
# decompositions


@dataclass
class OvrModel:
    models: list[LinearModel]
    model_type = "ovr"

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X)
        return np.column_stack([m.decision_function(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) >= 0

    def to_json(self) -> dict:
        return {"models": [m.to_json() for m in self.models]}

    @classmethod
    def from_json(cls, obj: dict) -> OvrModel:
        return cls([LinearModel.from_json(m) for m in obj["models"]])


def train_ovr(X, Y, cfg: TrainConfig = TrainConfig()) -> OvrModel:
    X = as_matrix(X)
    Y = _label_matrix(Y)
    if len(Y) == 0:
        raise EmptyTrainingSet()
    models = []
    for j in range(Y.shape[1]):
        sub = TrainConfig(cfg.lam, cfg.epochs, _sub_seed(cfg.seed, j))
        models.append(train_linear(X, Y[:, j], sub))
    return OvrModel(models)


def predict_ovr(model: OvrModel, x) -> SmellLabels:
    return SmellLabels.from_sequence(model.predict(_single(x))[0])


@dataclass
class ChainModel:
    models: list[LinearModel]
    order: list[int] = field(default_factory=lambda: list(range(N_SMELLS)))
    model_type = "cc"

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        out = np.zeros((len(X), len(self.order)), dtype=bool)
        aug = X
        for model, label in zip(self.models, self.order):
            pred = model.predict(aug)
            out[:, label] = pred
            aug = np.hstack([aug, pred[:, None].astype(float)])
        return out

    def to_json(self) -> dict:
        return {"order": list(self.order), "models": [m.to_json() for m in self.models]}

    @classmethod
    def from_json(cls, obj: dict) -> ChainModel:
        return cls([LinearModel.from_json(m) for m in obj["models"]], [int(i) for i in obj["order"]])


def train_cc(X, Y, cfg: TrainConfig = TrainConfig(), order: Sequence[int] | None = None) -> ChainModel:
    """Classifier chain; link i sees the features plus gold labels of links before it."""
    X = as_matrix(X)
    Y = _label_matrix(Y)
    if len(Y) == 0:
        raise EmptyTrainingSet()
    order = list(range(Y.shape[1])) if order is None else [int(i) for i in order]
    models = []
    aug = X
    for pos, label in enumerate(order):
        sub = TrainConfig(cfg.lam, cfg.epochs, _sub_seed(cfg.seed, pos))
        models.append(train_linear(aug, Y[:, label], sub))
        aug = np.hstack([aug, Y[:, label][:, None].astype(float)])
    return ChainModel(models, order)


def random_chain_order(seed: int, n_labels: int = N_SMELLS) -> list[int]:
    return [int(i) for i in np.random.default_rng(seed).permutation(n_labels)]


def predict_cc(model: ChainModel, x) -> SmellLabels:
    return SmellLabels.from_sequence(model.predict(_single(x))[0])


@dataclass
class PowersetModel:
    labelsets: list[str]  # sorted bit-string encodings
    models: list[LinearModel]
    model_type = "lps"

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X)
        return np.column_stack([m.decision_function(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        table = np.array([[c == "1" for c in enc] for enc in self.labelsets], dtype=bool)
        if len(self.labelsets) == 1:
            return np.repeat(table, len(X), axis=0)
        # argmax returns the first maximum, i.e. the smallest encoding on ties
        return table[np.argmax(self.decision_function(X), axis=1)]

    def to_json(self) -> dict:
        return {"labelsets": list(self.labelsets), "models": [m.to_json() for m in self.models]}

    @classmethod
    def from_json(cls, obj: dict) -> PowersetModel:
        return cls(list(obj["labelsets"]), [LinearModel.from_json(m) for m in obj["models"]])


def train_lps(X, Y, cfg: TrainConfig = TrainConfig()) -> PowersetModel:
    X = as_matrix(X)
    Y = _label_matrix(Y)
    if len(Y) == 0:
        raise EmptyTrainingSet()
    encodings = ["".join("1" if v else "0" for v in row) for row in Y]
    classes = sorted(set(encodings))
    enc = np.array(encodings)
    models = []
    for c, name in enumerate(classes):
        sub = TrainConfig(cfg.lam, cfg.epochs, _sub_seed(cfg.seed, c))
        models.append(train_linear(X, enc == name, sub))
    return PowersetModel(classes, models)


def predict_lps(model: PowersetModel, x) -> SmellLabels:
    return SmellLabels.from_sequence(model.predict(_single(x))[0])


# --------------------------------------------------------------------------
# ML-kNN


def _sq_distances(X: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (len(Q), len(X))."""
    integral = np.all(X == np.round(X)) and np.all(Q == np.round(Q))
    if integral and X.shape[1] > 32:
        # exact for integer-valued features (e.g. BoW counts)
        D = (Q * Q).sum(1)[:, None] + (X * X).sum(1)[None, :] - 2.0 * (Q @ X.T)
        return np.maximum(D, 0.0)
    return np.stack([((X - q) ** 2).sum(axis=1) for q in Q]) if len(Q) else np.zeros((0, len(X)))


def _nearest(D_row: np.ndarray, k: int, exclude: int | None = None) -> np.ndarray:
    order = np.argsort(D_row, kind="stable")
    if exclude is not None:
        order = order[order != exclude]
    return order[:k]


@dataclass
class MlknnModel:
    k: int
    s: float
    X: np.ndarray
    Y: np.ndarray
    pos_counts: np.ndarray  # (labels, k+1): c[j], positives whose neighborhood has j positives
    neg_counts: np.ndarray  # (labels, k+1): c'[j]
    model_type = "mlknn"

    @property
    def priors(self) -> np.ndarray:
        m = len(self.Y)
        return (self.s + self.Y.sum(axis=0)) / (2 * self.s + m)

    def neighbor_counts(self, Q) -> np.ndarray:
        Q = as_matrix(Q)
        if Q.shape[1] != self.X.shape[1]:
            raise DimensionMismatch(self.X.shape[1], Q.shape[1])
        D = _sq_distances(self.X, Q)
        return np.array([self.Y[_nearest(row, self.k)].sum(axis=0) for row in D], dtype=int).reshape(
            len(Q), self.Y.shape[1]
        )

    def predict(self, Q) -> np.ndarray:
        C = self.neighbor_counts(Q)
        s = Fraction(self.s)
        m = len(self.Y)
        n_pos = self.Y.sum(axis=0)
        out = np.zeros(C.shape, dtype=bool)
        for l in range(self.Y.shape[1]):
            p1 = (s + int(n_pos[l])) / (2 * s + m)
            p0 = 1 - p1
            tot1 = s * (self.k + 1) + int(self.pos_counts[l].sum())
            tot0 = s * (self.k + 1) + int(self.neg_counts[l].sum())
            for q, c in enumerate(C[:, l]):
                like1 = (s + int(self.pos_counts[l, c])) / tot1
                like0 = (s + int(self.neg_counts[l, c])) / tot0
                out[q, l] = p1 * like1 >= p0 * like0
        return out

    def to_json(self, sparse: bool = False) -> dict:
        if sparse:
            vectors = [
                {"indices": np.flatnonzero(r).tolist(), "values": r[np.flatnonzero(r)].tolist()} for r in self.X
            ]
        else:
            vectors = self.X.tolist()
        return {
            "k": self.k,
            "s": self.s,
            "dimension": int(self.X.shape[1]),
            "sparse": sparse,
            "vectors": vectors,
            "labels": self.Y.astype(int).tolist(),
            "pos_counts": self.pos_counts.tolist(),
            "neg_counts": self.neg_counts.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> MlknnModel:
        dim = int(obj["dimension"])
        if obj.get("sparse"):
            X = np.zeros((len(obj["vectors"]), dim))
            for i, v in enumerate(obj["vectors"]):
                X[i, v["indices"]] = v["values"]
        else:
            X = np.array(obj["vectors"], dtype=float).reshape(-1, dim)
        return cls(
            k=int(obj["k"]),
            s=float(obj["s"]),
            X=X,
            Y=np.array(obj["labels"], dtype=bool),
            pos_counts=np.array(obj["pos_counts"], dtype=int),
            neg_counts=np.array(obj["neg_counts"], dtype=int),
        )


def train_mlknn(X, Y, k: int = 10, s: float = 1.0) -> MlknnModel:
    X = as_matrix(X)
    Y = _label_matrix(Y)
    m = len(Y)
    if k < 1 or m < k + 1:
        raise TooFewInstances(m, k + 1)
    if len(X) != m:
        raise DimensionMismatch(len(X), m)
    if not s > 0:
        raise ValueError("smoothing must be positive")
    n_labels = Y.shape[1]
    pos = np.zeros((n_labels, k + 1), dtype=int)
    neg = np.zeros((n_labels, k + 1), dtype=int)
    D = _sq_distances(X, X)
    for i in range(m):
        delta = Y[_nearest(D[i], k, exclude=i)].sum(axis=0)
        for l in range(n_labels):
            if Y[i, l]:
                pos[l, delta[l]] += 1
            else:
                neg[l, delta[l]] += 1
    return MlknnModel(k=k, s=float(s), X=X.copy(), Y=Y.copy(), pos_counts=pos, neg_counts=neg)


def predict_mlknn(model: MlknnModel, x) -> SmellLabels:
    return SmellLabels.from_sequence(model.predict(_single(x))[0])


MODEL_TYPES = {"ovr": OvrModel, "cc": ChainModel, "lps": PowersetModel, "mlknn": MlknnModel}
