"""Variable-length recurrent classifier trained by full-batch gradient descent.

One tanh hidden layer with shared weights across time steps, a sigmoid
output read off the final state, and log loss with an L2 penalty on the
three weight matrices (biases are unpenalized).  Gradients come from exact
backpropagation through time; a finite-difference checker validates them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .history import Hvsm, HvsmSet, Normalizer

MODEL_FORMAT = "defectseq-model"
MODEL_FORMAT_VERSION = 1

# log-loss clamp; keeps log() finite when sigmoid saturates to 0 or 1
PROB_EPS = 1e-12


class TrainingError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class Hyperparams:
    """Training knobs.  The seed fixes weight initialization.

    ``halving_limit`` bounds how often a step may be retried with half the
    learning rate after a loss increase; 0 disables the retry entirely.
    """

    hidden_size: int = 16
    eta: float = 0.1
    lam: float = 1e-4
    iterations: int = 500
    seed: int = 0
    init_scale: float = 0.2
    halving_limit: int = 20

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")


@dataclass(eq=False)
class RnnParams:
    """Weights of the classifier.

    U maps the input into the hidden layer, W carries the hidden state
    across adjacent time steps, V reads the final state out, b and c are
    the hidden/output biases.
    """

    U: np.ndarray  # hidden x input
    W: np.ndarray  # hidden x hidden
    V: np.ndarray  # 1 x hidden
    b: np.ndarray  # hidden
    c: float

    @property
    def hidden_size(self) -> int:
        return self.U.shape[0]

    @property
    def input_dim(self) -> int:
        return self.U.shape[1]

    def copy(self) -> "RnnParams":
        return RnnParams(self.U.copy(), self.W.copy(), self.V.copy(), self.b.copy(), float(self.c))

    def squared_weight_norm(self) -> float:
        """Sum of squared entries of U, V and W; biases excluded."""
        return float(np.sum(self.U**2) + np.sum(self.V**2) + np.sum(self.W**2))


@dataclass(eq=False)
class Gradients:
    dU: np.ndarray
    dW: np.ndarray
    dV: np.ndarray
    db: np.ndarray
    dc: float


@dataclass(eq=False)
class ForwardTrace:
    """Inputs, hidden states per step, and the output probability."""

    inputs: np.ndarray  # T x input
    states: np.ndarray  # T x hidden
    prob: float


def init_params(h: Hyperparams, input_dim: int) -> RnnParams:
    """Uniform random U, V, W in [-init_scale, init_scale]; zero biases."""
    if input_dim < 1:
        raise ValueError("input_dim must be positive")
    rng = np.random.default_rng(h.seed)
    s = h.init_scale
    U = rng.uniform(-s, s, size=(h.hidden_size, input_dim))
    V = rng.uniform(-s, s, size=(1, h.hidden_size))
    W = rng.uniform(-s, s, size=(h.hidden_size, h.hidden_size))
    b = np.zeros(h.hidden_size)
    return RnnParams(U=U, W=W, V=V, b=b, c=0.0)


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-z))


def forward(p: RnnParams, seq: np.ndarray) -> ForwardTrace:
    """Run the unfolded network over one sequence of input vectors."""
    x = np.atleast_2d(np.asarray(seq, dtype=float))
    if x.shape[0] < 1:
        raise ValueError("sequence must have at least one step")
    if x.shape[1] != p.input_dim:
        raise ValueError(f"input dim {x.shape[1]} does not match U ({p.input_dim})")
    T = x.shape[0]
    states = np.empty((T, p.hidden_size))
    s = np.tanh(p.U @ x[0] + p.b)
    states[0] = s
    for t in range(1, T):
        s = np.tanh(p.U @ x[t] + p.W @ s + p.b)
        states[t] = s
    prob = float(_sigmoid(float(p.V[0] @ s) + p.c))
    return ForwardTrace(inputs=x, states=states, prob=prob)


def loss(P: float, y: int, p: RnnParams, lam: float) -> float:
    """Log loss of one prediction plus the L2 penalty on U, V, W."""
    if not 0.0 <= P <= 1.0:
        raise ValueError(f"probability out of range: {P}")
    P = min(max(P, PROB_EPS), 1.0 - PROB_EPS)
    data_term = -y * np.log(P) - (1 - y) * np.log(1.0 - P)
    return float(data_term + 0.5 * lam * p.squared_weight_norm())


def backward(p: RnnParams, trace: ForwardTrace, y: int) -> Gradients:
    """Exact gradients of the unregularized log loss for one sample."""
    x, states = trace.inputs, trace.states
    T = x.shape[0]
    dz = trace.prob - y  # derivative of log loss w.r.t. the output logit
    dV = dz * states[T - 1][None, :]
    dc = dz
    dU = np.zeros_like(p.U)
    dW = np.zeros_like(p.W)
    db = np.zeros_like(p.b)
    delta = (p.V[0] * dz) * (1.0 - states[T - 1] ** 2)
    for t in range(T - 1, -1, -1):
        dU += np.outer(delta, x[t])
        db += delta
        if t > 0:
            dW += np.outer(delta, states[t - 1])
            delta = (p.W.T @ delta) * (1.0 - states[t - 1] ** 2)
    return Gradients(dU=dU, dW=dW, dV=dV, db=db, dc=float(dc))


# ---------------------------------------------------------------------------
# batched training path
# ---------------------------------------------------------------------------

def _group_by_length(batch: HvsmSet) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stack samples of equal length; ascending T for a fixed summation order.

    Returns (X, y) pairs with X of shape (T, n, input_dim).
    """
    groups: dict[int, tuple[list, list]] = {}
    for item in batch.items:
        if item.label is None:
            raise ValueError(f"sample {item.key!r} has no label")
        seqs, labels = groups.setdefault(item.length, ([], []))
        seqs.append(np.vstack([vec.values for vec in item.sequence]))
        labels.append(item.label)
    out = []
    for T in sorted(groups):
        seqs, labels = groups[T]
        X = np.stack(seqs, axis=1)  # T x n x input
        out.append((X, np.asarray(labels, dtype=float)))
    return out


def _group_forward(p: RnnParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized forward for one equal-length group; states (T, n, hidden)."""
    T, n, _ = X.shape
    S = np.empty((T, n, p.hidden_size))
    S[0] = np.tanh(X[0] @ p.U.T + p.b)
    for t in range(1, T):
        S[t] = np.tanh(X[t] @ p.U.T + S[t - 1] @ p.W.T + p.b)
    probs = _sigmoid(S[T - 1] @ p.V[0] + p.c)
    return S, probs


def batch_gradient(
    p: RnnParams, batch: HvsmSet, lam: float
) -> tuple[Gradients, float]:
    """Average per-sample gradient plus the L2 term on U, V, W.

    Returns the gradient and the mean loss ``mean(L_a) + lam/2 * ||w||^2``.
    """
    if not batch.items:
        raise ValueError("empty batch")
    groups = _group_by_length(batch)
    m = sum(X.shape[1] for X, _ in groups)
    dU = np.zeros_like(p.U)
    dW = np.zeros_like(p.W)
    dV = np.zeros_like(p.V)
    db = np.zeros_like(p.b)
    dc = 0.0
    data_loss = 0.0
    for X, y in groups:
        T = X.shape[0]
        S, probs = _group_forward(p, X)
        clipped = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
        data_loss += float(np.sum(-y * np.log(clipped) - (1 - y) * np.log(1 - clipped)))
        dz = probs - y  # (n,)
        dV += dz[None, :] @ S[T - 1]
        dc += float(np.sum(dz))
        delta = (dz[:, None] * p.V[0]) * (1.0 - S[T - 1] ** 2)  # n x hidden
        for t in range(T - 1, -1, -1):
            dU += delta.T @ X[t]
            db += delta.sum(axis=0)
            if t > 0:
                dW += delta.T @ S[t - 1]
                delta = (delta @ p.W) * (1.0 - S[t - 1] ** 2)
    grad = Gradients(
        dU=dU / m + lam * p.U,
        dW=dW / m + lam * p.W,
        dV=dV / m + lam * p.V,
        db=db / m,
        dc=dc / m,
    )
    mean_loss = data_loss / m + 0.5 * lam * p.squared_weight_norm()
    return grad, float(mean_loss)


def _apply_step(p: RnnParams, g: Gradients, eta: float) -> RnnParams:
    return RnnParams(
        U=p.U - eta * g.dU,
        W=p.W - eta * g.dW,
        V=p.V - eta * g.dV,
        b=p.b - eta * g.db,
        c=p.c - eta * g.dc,
    )


@dataclass(eq=False)
class TrainResult:
    params: RnnParams
    loss_history: list[float]


def train(train_set: HvsmSet, h: Hyperparams) -> TrainResult:
    """Full-batch gradient descent for ``h.iterations`` steps.

    On a loss increase the step is retried with a halved learning rate (the
    reduction persists), up to ``h.halving_limit`` times per step.  Raises
    TrainingError with the iteration index if the loss turns non-finite.
    """
    if not train_set.items:
        raise ValueError("empty training set")
    input_dim = len(train_set.schema)
    params = init_params(h, input_dim)
    grad, current = batch_gradient(params, train_set, h.lam)
    history = [current]
    eta = h.eta
    for it in range(h.iterations):
        candidate = _apply_step(params, grad, eta)
        cand_grad, cand_loss = batch_gradient(candidate, train_set, h.lam)
        halvings = 0
        while (
            np.isfinite(cand_loss)
            and cand_loss > current
            and halvings < h.halving_limit
        ):
            eta *= 0.5
            candidate = _apply_step(params, grad, eta)
            cand_grad, cand_loss = batch_gradient(candidate, train_set, h.lam)
            halvings += 1
        if not np.isfinite(cand_loss):
            raise TrainingError(f"non-finite loss at iteration {it}")
        params, grad, current = candidate, cand_grad, cand_loss
        history.append(current)
    return TrainResult(params=params, loss_history=history)


def predict(p: RnnParams, s: Hvsm, n: Normalizer) -> float:
    """Probability that the sample's file is defective at its anchor."""
    if s.schema != n.schema:
        raise ValueError("sample schema does not match the normalizer")
    seq = np.vstack([n.transform(vec.values) for vec in s.sequence])
    return forward(p, seq).prob


def predict_set(p: RnnParams, s: HvsmSet, n: Normalizer) -> np.ndarray:
    """Probabilities for every sample, aligned with ``s.items``."""
    if not s.items:
        return np.empty(0)
    if s.schema != n.schema:
        raise ValueError("set schema does not match the normalizer")
    by_length: dict[int, list[int]] = {}
    for i, item in enumerate(s.items):
        by_length.setdefault(item.length, []).append(i)
    probs = np.empty(len(s.items))
    for T in sorted(by_length):
        idx = by_length[T]
        X = np.stack(
            [
                np.vstack([n.transform(vec.values) for vec in s.items[i].sequence])
                for i in idx
            ],
            axis=1,
        )
        _, group_probs = _group_forward(p, X)
        probs[idx] = group_probs
    return probs


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def _flat_params(p: RnnParams) -> list[tuple[str, np.ndarray]]:
    return [("U", p.U), ("W", p.W), ("V", p.V), ("b", p.b)]


def gradient_check(
    h: Hyperparams,
    input_dim: int,
    T: int,
    y: int = 1,
    eps: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Every parameter (including biases) is perturbed at a random point drawn
    from the hyperparams' seed.  The relative error uses the denominator
    max(|analytic| + |numeric|, 1e-5) so structurally-zero gradients do not
    divide by zero.
    """
    rng = np.random.default_rng(h.seed)
    s = max(h.init_scale, 0.1)
    p = RnnParams(
        U=rng.uniform(-s, s, size=(h.hidden_size, input_dim)),
        W=rng.uniform(-s, s, size=(h.hidden_size, h.hidden_size)),
        V=rng.uniform(-s, s, size=(1, h.hidden_size)),
        b=rng.uniform(-s, s, size=h.hidden_size),
        c=float(rng.uniform(-s, s)),
    )
    seq = rng.normal(size=(T, input_dim))

    def loss_at(q: RnnParams) -> float:
        return loss(forward(q, seq).prob, y, q, 0.0)

    analytic = backward(p, forward(p, seq), y)
    grads = {"U": analytic.dU, "W": analytic.dW, "V": analytic.dV, "b": analytic.db}
    max_err = 0.0
    for name, arr in _flat_params(p):
        g = grads[name]
        for i in np.ndindex(arr.shape):
            orig = arr[i]
            arr[i] = orig + eps
            hi = loss_at(p)
            arr[i] = orig - eps
            lo = loss_at(p)
            arr[i] = orig
            numeric = (hi - lo) / (2 * eps)
            err = abs(g[i] - numeric) / max(abs(g[i]) + abs(numeric), 1e-5)
            max_err = max(max_err, err)
    orig_c = p.c
    p.c = orig_c + eps
    hi = loss_at(p)
    p.c = orig_c - eps
    lo = loss_at(p)
    p.c = orig_c
    numeric = (hi - lo) / (2 * eps)
    err = abs(analytic.dc - numeric) / max(abs(analytic.dc) + abs(numeric), 1e-5)
    return max(max_err, err)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_model(path: str | Path, p: RnnParams, h: Hyperparams) -> None:
    """Versioned flat JSON file; floats round-trip exactly."""
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "rnn",
        "hidden_size": p.hidden_size,
        "input_dim": p.input_dim,
        "hyperparams": {
            "hidden_size": h.hidden_size,
            "eta": h.eta,
            "lam": h.lam,
            "iterations": h.iterations,
            "seed": h.seed,
            "init_scale": h.init_scale,
            "halving_limit": h.halving_limit,
        },
        "params": {
            "U": p.U.tolist(),
            "W": p.W.tolist(),
            "V": p.V.tolist(),
            "b": p.b.tolist(),
            "c": p.c,
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> tuple[RnnParams, Hyperparams]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT or payload.get("kind") != "rnn":
        raise ValueError(f"not a recurrent-model file: {path}")
    raw = payload["params"]
    params = RnnParams(
        U=np.asarray(raw["U"], dtype=float),
        W=np.asarray(raw["W"], dtype=float),
        V=np.asarray(raw["V"], dtype=float),
        b=np.asarray(raw["b"], dtype=float),
        c=float(raw["c"]),
    )
    h = Hyperparams(**payload["hyperparams"])
    return params, h
