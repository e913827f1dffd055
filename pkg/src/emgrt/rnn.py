"""Recurrent basic-unit stacks: BU1/BU2 cells, 5-unit RNN and BRNN classifiers.

A basic unit is a 3-layer feed-forward cell (tanh, tanh, softmax) whose first
pre-activation also receives coupled recurrent state vectors. The recurrent
state a unit emits is its pre-softmax logit vector, passed forward along the
stack (and, for the bidirectional variant, backward as a second state).

The bidirectional stack resolves its two-way coupling in two passes: a
backward sweep (last unit to first, forward-state input zero) produces the
backward states, then a forward sweep consumes both. Zeroing the backward
couplings makes it output-identical to the one-directional stack.

All five units carry their own parameters. Training is plain mini-batch
gradient descent with momentum over a mean cross-entropy on all five unit
outputs; gradients are exact and checked against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, TrainingError, UnsupportedLengthError
from .features import FeatureVector, Normalizer

__all__ = [
    "STACK_SIZE",
    "ARCH_RNN",
    "ARCH_BRNN",
    "MODE_SAME",
    "MODE_SEQUENTIAL",
    "BuParams",
    "StackDims",
    "StackModel",
    "TrainConfig",
    "TrainExample",
    "softmax",
    "bu1_forward",
    "bu2_forward",
    "stack_inputs",
    "rnn_forward",
    "brnn_forward",
    "stack_forward",
    "stack_predict",
    "loss",
    "backward",
    "finite_diff_grad",
    "init_units",
    "train",
]

STACK_SIZE = 5
ARCH_RNN = "rnn"
ARCH_BRNN = "brnn"
MODE_SAME = "same"
MODE_SEQUENTIAL = "sequential"

# Softmax outputs below this are clamped before the log in the loss.
PROB_CLAMP = 1e-12


@dataclass
class BuParams:
    """Weights of one basic unit.

    ``wa`` couples the forward recurrent state into the first pre-activation;
    ``wa_back`` couples the backward state and is present only for BU2 cells.
    """

    w0: np.ndarray  # (h1, d_in)
    b0: np.ndarray  # (h1,)
    w1: np.ndarray  # (h2, h1)
    b1: np.ndarray  # (h2,)
    w2: np.ndarray  # (C, h2)
    b2: np.ndarray  # (C,)
    wa: np.ndarray  # (h1, C)
    wa_back: np.ndarray | None = None  # (h1, C)

    def __post_init__(self):
        for f in fields(self):
            arr = getattr(self, f.name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float64)
            setattr(self, f.name, arr)
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"basic-unit parameter {f.name} contains non-finite entries")
        h1, d_in = self.w0.shape
        h2 = self.w1.shape[0]
        c = self.w2.shape[0]
        expected = {
            "b0": (h1,),
            "w1": (h2, h1),
            "b1": (h2,),
            "w2": (c, h2),
            "b2": (c,),
            "wa": (h1, c),
        }
        if self.wa_back is not None:
            expected["wa_back"] = (h1, c)
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ConfigError(
                    f"basic-unit parameter {name} has shape {getattr(self, name).shape}, "
                    f"expected {shape}"
                )

    @property
    def dims(self) -> "StackDims":
        return StackDims(
            d_in=self.w0.shape[1],
            hidden1=self.w0.shape[0],
            hidden2=self.w1.shape[0],
            num_classes=self.w2.shape[0],
        )

    def zeros_like(self) -> "BuParams":
        return BuParams(
            w0=np.zeros_like(self.w0),
            b0=np.zeros_like(self.b0),
            w1=np.zeros_like(self.w1),
            b1=np.zeros_like(self.b1),
            w2=np.zeros_like(self.w2),
            b2=np.zeros_like(self.b2),
            wa=np.zeros_like(self.wa),
            wa_back=None if self.wa_back is None else np.zeros_like(self.wa_back),
        )

    def copy(self) -> "BuParams":
        return BuParams(
            **{
                f.name: None if getattr(self, f.name) is None else getattr(self, f.name).copy()
                for f in fields(self)
            }
        )


@dataclass(frozen=True)
class StackDims:
    d_in: int
    hidden1: int
    hidden2: int
    num_classes: int


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 200
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 0
    hidden1: int = 32
    hidden2: int = 32
    init_scale: float | None = None  # default: 1/sqrt(fan_in) per matrix

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if min(self.hidden1, self.hidden2) < 1:
            raise ConfigError("hidden sizes must be >= 1")


@dataclass
class StackModel:
    """A trained 5-unit stack plus everything needed to apply it."""

    units: list[BuParams]
    arch: str
    input_mode: str
    dims: StackDims
    normalizer: Normalizer
    metadata: dict

    def __post_init__(self):
        if self.arch not in (ARCH_RNN, ARCH_BRNN):
            raise ConfigError(f"arch must be {ARCH_RNN!r} or {ARCH_BRNN!r}, got {self.arch!r}")
        if self.input_mode not in (MODE_SAME, MODE_SEQUENTIAL):
            raise ConfigError(
                f"input_mode must be {MODE_SAME!r} or {MODE_SEQUENTIAL!r}, got {self.input_mode!r}"
            )
        if len(self.units) != STACK_SIZE:
            raise ConfigError(f"a stack has exactly {STACK_SIZE} units, got {len(self.units)}")
        for i, unit in enumerate(self.units):
            if unit.dims != self.dims:
                raise ConfigError(f"unit {i} dims {unit.dims} do not match stack dims {self.dims}")
            has_back = unit.wa_back is not None
            if has_back != (self.arch == ARCH_BRNN):
                raise ConfigError(
                    f"unit {i}: backward coupling present={has_back}, "
                    f"but arch is {self.arch!r}"
                )

    @property
    def num_classes(self) -> int:
        return self.dims.num_classes


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Basic-unit forward passes. Internals are batched: rows are samples.
# ---------------------------------------------------------------------------


@dataclass
class _BuCache:
    x: np.ndarray
    a_prev: np.ndarray
    ahat_prev: np.ndarray | None
    a1: np.ndarray
    a2: np.ndarray


def _bu_forward(x, a_prev, ahat_prev, p: BuParams):
    s1 = x @ p.w0.T + p.b0 + a_prev @ p.wa.T
    if ahat_prev is not None:
        s1 = s1 + ahat_prev @ p.wa_back.T
    a1 = np.tanh(s1)
    a2 = np.tanh(a1 @ p.w1.T + p.b1)
    z3 = a2 @ p.w2.T + p.b2
    return softmax(z3), z3, _BuCache(x=x, a_prev=a_prev, ahat_prev=ahat_prev, a1=a1, a2=a2)


def _as_row(v, name: str, size: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (size,):
        raise ConfigError(f"{name} must be a vector of length {size}, got shape {v.shape}")
    return v.reshape(1, -1)


def bu1_forward(x, a_p, p: BuParams) -> tuple[np.ndarray, np.ndarray]:
    """One BU1 evaluation: returns (class probabilities, emitted state)."""
    d = p.dims
    y, z3, _ = _bu_forward(_as_row(x, "x", d.d_in), _as_row(a_p, "a_p", d.num_classes), None, p)
    return y[0], z3[0]


def bu2_forward(x, a_p, ahat_p, p: BuParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One BU2 evaluation: returns (probabilities, forward state, backward state).

    Both emitted states are the pre-softmax logits of this evaluation.
    """
    if p.wa_back is None:
        raise ConfigError("bu2_forward needs parameters with a backward coupling (wa_back)")
    d = p.dims
    y, z3, _ = _bu_forward(
        _as_row(x, "x", d.d_in),
        _as_row(a_p, "a_p", d.num_classes),
        _as_row(ahat_p, "ahat_p", d.num_classes),
        p,
    )
    return y[0], z3[0], z3[0]


# ---------------------------------------------------------------------------
# Stack forward / loss / backward (batched internals, vector public API)
# ---------------------------------------------------------------------------


def _stack_forward(units: list[BuParams], arch: str, xs: np.ndarray):
    """Run the stack on xs of shape (n_units, batch, d_in).

    Returns (yhats (n_units, batch, C), fwd_caches, bwd_caches or None).
    """
    n = len(units)
    batch = xs.shape[1]
    c = units[0].dims.num_classes
    zero_state = np.zeros((batch, c))

    bwd_caches = None
    ahat_next: list[np.ndarray | None] = [None] * n
    if arch == ARCH_BRNN:
        bwd_caches = [None] * n
        carry = zero_state
        for j in reversed(range(n)):
            ahat_next[j] = carry
            _, z3, cache = _bu_forward(xs[j], zero_state, carry, units[j])
            bwd_caches[j] = cache
            carry = z3
    yhats = np.empty((n, batch, c))
    fwd_caches = [None] * n
    a = zero_state
    for j in range(n):
        y, z3, cache = _bu_forward(xs[j], a, ahat_next[j], units[j])
        yhats[j] = y
        fwd_caches[j] = cache
        a = z3
    return yhats, fwd_caches, bwd_caches


def _coerce_inputs(inputs, dims: StackDims) -> np.ndarray:
    vecs = [fv.values if isinstance(fv, FeatureVector) else np.asarray(fv) for fv in inputs]
    xs = np.asarray(vecs, dtype=np.float64)
    if xs.shape != (STACK_SIZE, dims.d_in):
        raise ConfigError(
            f"expected {STACK_SIZE} input vectors of length {dims.d_in}, got shape {xs.shape}"
        )
    return xs[:, None, :]  # (n_units, 1, d_in)


def stack_inputs(windows, mode: str, i: int = 0) -> np.ndarray:
    """Build the 5 input vectors for one stack evaluation.

    Same mode replicates window i's features; sequential mode takes the
    features of windows i..i+4 and fails when fewer than 5 are available
    (which is why sequential stacks cannot decide below 300 ms at the
    default 100/50 ms windowing).
    """
    if mode not in (MODE_SAME, MODE_SEQUENTIAL):
        raise ConfigError(f"unknown input mode {mode!r}")
    vecs = [fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, float) for fv in windows]
    if i < 0 or i >= len(vecs):
        raise ConfigError(f"window index {i} out of range for {len(vecs)} windows")
    if mode == MODE_SAME:
        return np.stack([vecs[i]] * STACK_SIZE)
    if i + STACK_SIZE > len(vecs):
        raise UnsupportedLengthError(
            f"sequential inputs need {STACK_SIZE} consecutive windows, "
            f"only {len(vecs) - i} available from index {i}"
        )
    return np.stack(vecs[i : i + STACK_SIZE])


def rnn_forward(inputs, model: StackModel) -> list[np.ndarray]:
    """All five unit outputs of the one-directional stack."""
    if model.arch != ARCH_RNN:
        raise ConfigError(f"rnn_forward needs an {ARCH_RNN!r} model, got {model.arch!r}")
    xs = _coerce_inputs(inputs, model.dims)
    yhats, _, _ = _stack_forward(model.units, model.arch, xs)
    return [y[0] for y in yhats]


def brnn_forward(inputs, model: StackModel) -> list[np.ndarray]:
    """All five unit outputs of the bidirectional stack."""
    if model.arch != ARCH_BRNN:
        raise ConfigError(f"brnn_forward needs a {ARCH_BRNN!r} model, got {model.arch!r}")
    xs = _coerce_inputs(inputs, model.dims)
    yhats, _, _ = _stack_forward(model.units, model.arch, xs)
    return [y[0] for y in yhats]


def stack_forward(inputs, model: StackModel) -> list[np.ndarray]:
    return rnn_forward(inputs, model) if model.arch == ARCH_RNN else brnn_forward(inputs, model)


def stack_predict(inputs, model: StackModel) -> np.ndarray:
    """Stack decision distribution: mean of the five unit outputs, renormalized."""
    outputs = stack_forward(inputs, model)
    mean = np.mean(outputs, axis=0)
    return mean / mean.sum()


def loss(outputs, label: int) -> float:
    """Mean cross-entropy of the unit outputs against one label."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if not 0 <= label < outputs.shape[-1]:
        raise ConfigError(f"label {label} out of range for {outputs.shape[-1]} classes")
    picked = np.maximum(outputs[..., label], PROB_CLAMP)
    return float(np.mean(-np.log(picked)))


def _loss_from_yhats(yhats: np.ndarray, labels: np.ndarray) -> float:
    # yhats (n_units, batch, C); mean over units and over the batch
    picked = np.maximum(yhats[:, np.arange(labels.size), labels], PROB_CLAMP)
    return float(np.mean(-np.log(picked)))


def _ce_dz3(y: np.ndarray, labels: np.ndarray, n_units: int) -> np.ndarray:
    """d(mean CE)/dZ3 for one unit's batched output, via the softmax Jacobian.

    Routing through the Jacobian keeps the gradient exact even where the
    probability clamp is active (the clamped coordinate simply stops the flow).
    """
    batch = labels.size
    rows = np.arange(batch)
    g = np.zeros_like(y)
    picked = y[rows, labels]
    active = picked > PROB_CLAMP
    g[rows[active], labels[active]] = -1.0 / (n_units * batch * picked[active])
    return y * (g - np.sum(y * g, axis=1, keepdims=True))


def _bu_backward(dz3: np.ndarray, cache: _BuCache, p: BuParams, g: BuParams) -> np.ndarray:
    """Accumulate one evaluation's parameter gradients into g; return dS1."""
    g.w2 += dz3.T @ cache.a2
    g.b2 += dz3.sum(axis=0)
    dz2 = (dz3 @ p.w2) * (1.0 - cache.a2 * cache.a2)
    g.w1 += dz2.T @ cache.a1
    g.b1 += dz2.sum(axis=0)
    ds1 = (dz2 @ p.w1) * (1.0 - cache.a1 * cache.a1)
    g.w0 += ds1.T @ cache.x
    g.b0 += ds1.sum(axis=0)
    g.wa += ds1.T @ cache.a_prev
    if cache.ahat_prev is not None:
        g.wa_back += ds1.T @ cache.ahat_prev
    return ds1


def _stack_backward(
    units: list[BuParams],
    arch: str,
    yhats: np.ndarray,
    fwd_caches: list[_BuCache],
    bwd_caches,
    labels: np.ndarray,
) -> list[BuParams]:
    """Exact gradients of the batched mean loss w.r.t. every unit parameter."""
    n = len(units)
    batch = labels.size
    c = units[0].dims.num_classes
    grads = [u.zeros_like() for u in units]

    # Reverse pass over the forward sweep; carry is dL/d(emitted forward state).
    ds1_fwd = [None] * n
    da_carry = np.zeros((batch, c))
    for j in reversed(range(n)):
        dz3 = _ce_dz3(yhats[j], labels, n) + da_carry
        ds1_fwd[j] = _bu_backward(dz3, fwd_caches[j], units[j], grads[j])
        da_carry = ds1_fwd[j] @ units[j].wa

    # Forward pass over the backward sweep: the state emitted leftward by
    # unit j is consumed (through unit j-1's coupling) by both of unit j-1's
    # evaluations, so its gradient is ready once those ran.
    if arch == ARCH_BRNN:
        dahat = np.zeros((batch, c))  # first unit's emitted backward state is unused
        for j in range(n):
            ds1_bwd = _bu_backward(dahat, bwd_caches[j], units[j], grads[j])
            dahat = (ds1_fwd[j] + ds1_bwd) @ units[j].wa_back
    return grads


def backward(inputs, model: StackModel, label: int) -> list[BuParams]:
    """Analytic gradients of ``loss`` for one example, one structure per unit."""
    if not 0 <= label < model.num_classes:
        raise ConfigError(f"label {label} out of range for {model.num_classes} classes")
    xs = _coerce_inputs(inputs, model.dims)
    labels = np.array([label])
    yhats, fwd_caches, bwd_caches = _stack_forward(model.units, model.arch, xs)
    grads = _stack_backward(model.units, model.arch, yhats, fwd_caches, bwd_caches, labels)
    for g in grads:
        for f in fields(g):
            arr = getattr(g, f.name)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise TrainingError(f"non-finite gradient in {f.name}")
    return grads


def finite_diff_grad(inputs, model: StackModel, label: int, eps: float = 1e-5) -> list[BuParams]:
    """Central-difference gradients; the O(#params) oracle for ``backward``."""
    xs = _coerce_inputs(inputs, model.dims)
    labels = np.array([label])

    def current_loss() -> float:
        yhats, _, _ = _stack_forward(model.units, model.arch, xs)
        return _loss_from_yhats(yhats, labels)

    grads = [u.zeros_like() for u in model.units]
    for unit, grad in zip(model.units, grads):
        for f in fields(unit):
            arr = getattr(unit, f.name)
            if arr is None:
                continue
            garr = getattr(grad, f.name)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = arr[idx]
                arr[idx] = old + eps
                lp = current_loss()
                arr[idx] = old - eps
                lm = current_loss()
                arr[idx] = old
                garr[idx] = (lp - lm) / (2.0 * eps)
    return grads


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainExample:
    """One stack evaluation's worth of inputs: a (5, d_in) block plus label."""

    inputs: np.ndarray
    label: int


def init_units(
    dims: StackDims, arch: str, rng: np.random.Generator, init_scale: float | None = None
) -> list[BuParams]:
    """Seeded uniform init, scale 1/sqrt(fan_in) per matrix; biases zero."""

    def uniform(shape, fan_in):
        s = init_scale if init_scale is not None else 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape)

    units = []
    for _ in range(STACK_SIZE):
        units.append(
            BuParams(
                w0=uniform((dims.hidden1, dims.d_in), dims.d_in),
                b0=np.zeros(dims.hidden1),
                w1=uniform((dims.hidden2, dims.hidden1), dims.hidden1),
                b1=np.zeros(dims.hidden2),
                w2=uniform((dims.num_classes, dims.hidden2), dims.hidden2),
                b2=np.zeros(dims.num_classes),
                wa=uniform((dims.hidden1, dims.num_classes), dims.num_classes),
                wa_back=(
                    uniform((dims.hidden1, dims.num_classes), dims.num_classes)
                    if arch == ARCH_BRNN
                    else None
                ),
            )
        )
    return units


def _sgd_step(units, velocity, grads, lr: float, momentum: float) -> None:
    for u, v, g in zip(units, velocity, grads):
        for f in fields(u):
            p = getattr(u, f.name)
            if p is None:
                continue
            vel = getattr(v, f.name)
            vel *= momentum
            vel -= lr * getattr(g, f.name)
            p += vel


def train(
    examples: list[TrainExample],
    config: TrainConfig,
    arch: str = ARCH_BRNN,
    input_mode: str = MODE_SAME,
    normalizer: Normalizer | None = None,
    num_classes: int | None = None,
    metadata: dict | None = None,
) -> StackModel:
    """Mini-batch gradient descent with momentum; deterministic given the seed.

    The returned model carries the final-epoch weights and the per-epoch loss
    curve (in metadata under ``loss_curve``).
    """
    if not examples:
        raise ConfigError("training set is empty")
    xs_all = np.stack([np.asarray(ex.inputs, dtype=np.float64) for ex in examples])
    labels_all = np.array([ex.label for ex in examples], dtype=np.int64)
    if xs_all.ndim != 3 or xs_all.shape[1] != STACK_SIZE:
        raise ConfigError(f"examples must be ({STACK_SIZE}, d_in) blocks, got {xs_all.shape[1:]}")
    d_in = xs_all.shape[2]
    c = num_classes if num_classes is not None else int(labels_all.max()) + 1
    if labels_all.min() < 0 or labels_all.max() >= c:
        raise ConfigError(f"labels must lie in [0, {c})")
    dims = StackDims(d_in=d_in, hidden1=config.hidden1, hidden2=config.hidden2, num_classes=c)

    rng = np.random.default_rng(config.seed)
    units = init_units(dims, arch, rng, config.init_scale)
    velocity = [u.zeros_like() for u in units]

    n = len(examples)
    curve = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xs = xs_all[idx].transpose(1, 0, 2)  # (n_units, batch, d_in)
            labels = labels_all[idx]
            yhats, fwd_caches, bwd_caches = _stack_forward(units, arch, xs)
            batch_loss = _loss_from_yhats(yhats, labels)
            grads = _stack_backward(units, arch, yhats, fwd_caches, bwd_caches, labels)
            _sgd_step(units, velocity, grads, config.learning_rate, config.momentum)
            total += batch_loss * idx.size
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise TrainingError(
                f"training diverged at epoch {epoch + 1} (loss became non-finite); "
                f"try a lower learning rate than {config.learning_rate}"
            )
        curve.append(epoch_loss)

    meta = dict(metadata or {})
    meta["n_examples"] = n
    meta["train"] = {
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "momentum": config.momentum,
        "seed": config.seed,
        "init_scale": config.init_scale,
    }
    meta["loss_curve"] = curve
    return StackModel(
        units=units,
        arch=arch,
        input_mode=input_mode,
        dims=dims,
        normalizer=normalizer if normalizer is not None else Normalizer.identity(d_in),
        metadata=meta,
    )
