"""From-scratch stacked LSTM/GRU networks with exact backpropagation.

Everything is float64 numpy, time-major [T, B, ...]. The stack is a list
of recurrent layers with optional inverted dropout after configured
layers, topped by a width-1 dense head with a sigmoid, linear or tanh
activation applied at every timestep.

LSTM cell (per timestep):
    i = sigmoid(W_i x + U_i h_prev + b_i)      input gate
    f = sigmoid(W_f x + U_f h_prev + b_f)      forget gate
    g = tanh(W_g x + U_g h_prev + b_g)         cell candidate
    o = sigmoid(W_o x + U_o h_prev + b_o)      output gate
    c = f * c_prev + i * g
    h = o * tanh(c)

GRU cell (per timestep; note the update-gate convention):
    z = sigmoid(W_z x + U_z h_prev + b_z)      update gate
    r = sigmoid(W_r x + U_r h_prev + b_r)      reset gate
    hc = tanh(W_h x + U_h (r * h_prev) + b_h)  candidate
    h = z * h_prev + (1 - z) * hc
"""

from __future__ import annotations

import dataclasses
import io
import json
import zipfile
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib import format as _npy_format

from .data import NORMALIZATION_MODES, NormalizationSpec


class CellKind(Enum):
    LSTM = "lstm"
    GRU = "gru"


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture of the stacked recurrent network."""

    cell_kind: CellKind
    layer_widths: tuple = (16, 16, 16, 16)
    dropout_rate: float = 0.5
    dropout_after_layers: tuple = (2, 4)  # 1-based layer indices
    output_activation: str = "sigmoid"
    input_width: int = 9
    output_width: int = 1

    def __post_init__(self):
        if isinstance(self.cell_kind, str):
            object.__setattr__(self, "cell_kind", CellKind(self.cell_kind.lower()))
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        object.__setattr__(self, "dropout_after_layers",
                           tuple(sorted(set(int(i) for i in self.dropout_after_layers))))
        if not self.layer_widths or any(w < 1 for w in self.layer_widths):
            raise ValueError("layer widths must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        n = len(self.layer_widths)
        if any(not 1 <= i <= n for i in self.dropout_after_layers):
            raise ValueError(f"dropout layer indices must lie in 1..{n}")
        if self.output_activation not in NORMALIZATION_MODES:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if self.input_width < 1:
            raise ValueError("input_width must be positive")
        if self.output_width != 1:
            raise ValueError("the dense head is fixed at width 1")

    @property
    def num_layers(self) -> int:
        return len(self.layer_widths)


@dataclass
class GateParams:
    w: np.ndarray  # input weights [hidden, in]
    u: np.ndarray  # recurrent weights [hidden, hidden]
    b: np.ndarray  # bias [hidden]


@dataclass
class LSTMCellParams:
    input_gate: GateParams
    forget_gate: GateParams
    candidate: GateParams
    output_gate: GateParams


@dataclass
class GRUCellParams:
    update_gate: GateParams
    reset_gate: GateParams
    candidate: GateParams


@dataclass
class NetworkParams:
    layers: list  # LSTMCellParams or GRUCellParams, bottom to top
    w_out: np.ndarray  # dense head weights [1, hidden]
    b_out: np.ndarray  # dense head bias [1]


@dataclass
class ForwardCache:
    """Everything the backward pass needs from one forward call."""

    cell_kind: CellKind
    layer_inputs: list  # per layer, [T, B, in_width] as seen by that layer
    gates: list  # per layer, dict of gate/state arrays [T, B, hidden]
    hidden: list  # per layer, [T, B, hidden]
    dropout_masks: dict  # 1-based layer index -> mask [T, B, hidden]
    head_input: np.ndarray  # [T, B, hidden], after any top dropout
    predictions: np.ndarray  # [T, B]


# ---------------------------------------------------------------------------
# parameter trees

def tree_map(fn, *trees):
    """Apply fn leafwise across structurally congruent parameter trees."""
    head = trees[0]
    if isinstance(head, np.ndarray):
        return fn(*trees)
    if dataclasses.is_dataclass(head):
        if any(type(t) is not type(head) for t in trees[1:]):
            raise ValueError("parameter trees are not structurally congruent")
        return type(head)(**{
            f.name: tree_map(fn, *(getattr(t, f.name) for t in trees))
            for f in dataclasses.fields(head)})
    if isinstance(head, (list, tuple)):
        if any(len(t) != len(head) for t in trees[1:]):
            raise ValueError("parameter trees are not structurally congruent")
        mapped = [tree_map(fn, *items) for items in zip(*trees)]
        return type(head)(mapped) if isinstance(head, tuple) else mapped
    raise TypeError(f"unsupported tree node {type(head).__name__}")


def tree_leaves(tree, prefix=""):
    """Yield (path, array) pairs in a stable depth-first order."""
    if isinstance(tree, np.ndarray):
        yield prefix, tree
    elif dataclasses.is_dataclass(tree):
        for f in dataclasses.fields(tree):
            sub = f"{prefix}.{f.name}" if prefix else f.name
            yield from tree_leaves(getattr(tree, f.name), sub)
    elif isinstance(tree, (list, tuple)):
        for i, item in enumerate(tree):
            yield from tree_leaves(item, f"{prefix}[{i}]")
    else:
        raise TypeError(f"unsupported tree node {type(tree).__name__}")


def zeros_like_params(tree):
    return tree_map(np.zeros_like, tree)


# ---------------------------------------------------------------------------
# activations

def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_HEAD_ACTIVATIONS = {
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "linear": lambda x: x,
}


# ---------------------------------------------------------------------------
# initialization

def _glorot(rng, shape):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def _init_gate(rng, hidden, in_width, bias_value=0.0):
    return GateParams(w=_glorot(rng, (hidden, in_width)),
                      u=_orthogonal(rng, hidden),
                      b=np.full(hidden, bias_value, dtype=np.float64))


def init_params(config: NetworkConfig, seed: int) -> NetworkParams:
    """Glorot-uniform input weights, orthogonal recurrent weights, zero
    biases except the LSTM forget gate which starts at 1.0."""
    rng = np.random.default_rng(seed)
    layers = []
    in_width = config.input_width
    for hidden in config.layer_widths:
        if config.cell_kind is CellKind.LSTM:
            layers.append(LSTMCellParams(
                input_gate=_init_gate(rng, hidden, in_width),
                forget_gate=_init_gate(rng, hidden, in_width, bias_value=1.0),
                candidate=_init_gate(rng, hidden, in_width),
                output_gate=_init_gate(rng, hidden, in_width)))
        else:
            layers.append(GRUCellParams(
                update_gate=_init_gate(rng, hidden, in_width),
                reset_gate=_init_gate(rng, hidden, in_width),
                candidate=_init_gate(rng, hidden, in_width)))
        in_width = hidden
    w_out = _glorot(rng, (1, config.layer_widths[-1]))
    b_out = np.zeros(1, dtype=np.float64)
    return NetworkParams(layers=layers, w_out=w_out, b_out=b_out)


def validate_params(params: NetworkParams, config: NetworkConfig) -> None:
    """Raise if the parameter tree does not fit the configuration."""
    expected_cell = LSTMCellParams if config.cell_kind is CellKind.LSTM else GRUCellParams
    if len(params.layers) != config.num_layers:
        raise ValueError(f"expected {config.num_layers} layers, "
                         f"got {len(params.layers)}")
    in_width = config.input_width
    for idx, (layer, hidden) in enumerate(zip(params.layers, config.layer_widths)):
        if type(layer) is not expected_cell:
            raise ValueError(f"layer {idx} is {type(layer).__name__}, "
                             f"expected {expected_cell.__name__}")
        for f in dataclasses.fields(layer):
            gate = getattr(layer, f.name)
            if gate.w.shape != (hidden, in_width) or gate.u.shape != (hidden, hidden) \
                    or gate.b.shape != (hidden,):
                raise ValueError(f"layer {idx} gate {f.name} has inconsistent shapes")
        in_width = hidden
    if params.w_out.shape != (1, config.layer_widths[-1]) or params.b_out.shape != (1,):
        raise ValueError("dense head shapes do not match the configuration")


# ---------------------------------------------------------------------------
# cell forward

def _gate_pre(gate: GateParams, x, h_prev):
    return x @ gate.w.T + h_prev @ gate.u.T + gate.b


def _lstm_gates(p: LSTMCellParams, x, h_prev):
    i = sigmoid(_gate_pre(p.input_gate, x, h_prev))
    f = sigmoid(_gate_pre(p.forget_gate, x, h_prev))
    g = np.tanh(_gate_pre(p.candidate, x, h_prev))
    o = sigmoid(_gate_pre(p.output_gate, x, h_prev))
    return i, f, g, o


def _check_cell_shapes(p, x, states):
    in_width = p.candidate.w.shape[1]
    hidden = p.candidate.w.shape[0]
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != in_width:
        raise ValueError(f"x must be [batch, {in_width}], got {x.shape}")
    out = [x]
    for name, s in states:
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (x.shape[0], hidden):
            raise ValueError(f"{name} must be [batch, {hidden}], got {s.shape}")
        out.append(s)
    return out


def lstm_cell_forward(p: LSTMCellParams, x, h_prev, c_prev):
    """One LSTM timestep over a batch; returns (h, c)."""
    x, h_prev, c_prev = _check_cell_shapes(
        p, x, [("h_prev", h_prev), ("c_prev", c_prev)])
    i, f, g, o = _lstm_gates(p, x, h_prev)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def gru_cell_forward(p: GRUCellParams, x, h_prev):
    """One GRU timestep over a batch; returns h."""
    x, h_prev = _check_cell_shapes(p, x, [("h_prev", h_prev)])
    z = sigmoid(_gate_pre(p.update_gate, x, h_prev))
    r = sigmoid(_gate_pre(p.reset_gate, x, h_prev))
    hc = np.tanh(x @ p.candidate.w.T + (r * h_prev) @ p.candidate.u.T
                 + p.candidate.b)
    return z * h_prev + (1.0 - z) * hc


# ---------------------------------------------------------------------------
# network forward

def _forward_lstm_layer(p, x_seq):
    t_max, batch = x_seq.shape[:2]
    hidden = p.candidate.w.shape[0]
    store = {name: np.empty((t_max, batch, hidden)) for name in
             ("i", "f", "g", "o", "c", "tanh_c")}
    h_seq = np.empty((t_max, batch, hidden))
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    for t in range(t_max):
        i, f, g, o = _lstm_gates(p, x_seq[t], h)
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        store["i"][t], store["f"][t], store["g"][t], store["o"][t] = i, f, g, o
        store["c"][t], store["tanh_c"][t] = c, tc
        h_seq[t] = h
    return h_seq, store


def _forward_gru_layer(p, x_seq):
    t_max, batch = x_seq.shape[:2]
    hidden = p.candidate.w.shape[0]
    store = {name: np.empty((t_max, batch, hidden)) for name in ("z", "r", "hc")}
    h_seq = np.empty((t_max, batch, hidden))
    h = np.zeros((batch, hidden))
    for t in range(t_max):
        x = x_seq[t]
        z = sigmoid(_gate_pre(p.update_gate, x, h))
        r = sigmoid(_gate_pre(p.reset_gate, x, h))
        hc = np.tanh(x @ p.candidate.w.T + (r * h) @ p.candidate.u.T
                     + p.candidate.b)
        h = z * h + (1.0 - z) * hc
        store["z"][t], store["r"][t], store["hc"][t] = z, r, hc
        h_seq[t] = h
    return h_seq, store


def network_forward(params: NetworkParams, config: NetworkConfig, batch,
                    mode: str = "eval", rng=None):
    """Run the stack over a padded batch; returns (predictions, cache).

    Train mode samples a fresh inverted-dropout mask per element per
    timestep after each configured layer; each dropout site draws from
    its own child rng stream so masks on real timesteps do not depend on
    how much padding the batch carries. Eval mode applies no dropout and
    is fully deterministic.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    validate_params(params, config)
    if batch.inputs.shape[2] != config.input_width:
        raise ValueError(f"batch has {batch.inputs.shape[2]} features, "
                         f"config expects {config.input_width}")
    use_dropout = (mode == "train" and config.dropout_rate > 0.0
                   and config.dropout_after_layers)
    streams = {}
    if use_dropout:
        if rng is None:
            raise ValueError("train mode with dropout needs an rng")
        children = rng.spawn(len(config.dropout_after_layers))
        streams = dict(zip(config.dropout_after_layers, children))

    x_seq = np.asarray(batch.inputs, dtype=np.float64)
    layer_inputs, gates, hidden = [], [], []
    dropout_masks = {}
    for idx, layer in enumerate(params.layers, start=1):
        layer_inputs.append(x_seq)
        if config.cell_kind is CellKind.LSTM:
            h_seq, store = _forward_lstm_layer(layer, x_seq)
        else:
            h_seq, store = _forward_gru_layer(layer, x_seq)
        gates.append(store)
        hidden.append(h_seq)
        x_seq = h_seq
        if idx in streams:
            keep = streams[idx].random(h_seq.shape) >= config.dropout_rate
            mask = keep.astype(np.float64) / (1.0 - config.dropout_rate)
            dropout_masks[idx] = mask
            x_seq = h_seq * mask

    head_input = x_seq
    pre = np.squeeze(head_input @ params.w_out.T, axis=2) + params.b_out[0]
    predictions = _HEAD_ACTIVATIONS[config.output_activation](pre)
    cache = ForwardCache(cell_kind=config.cell_kind, layer_inputs=layer_inputs,
                         gates=gates, hidden=hidden,
                         dropout_masks=dropout_masks, head_input=head_input,
                         predictions=predictions)
    return predictions, cache


# ---------------------------------------------------------------------------
# network backward (BPTT)

def network_backward(params: NetworkParams, config: NetworkConfig,
                     cache: ForwardCache, dloss_dpred, mask) -> NetworkParams:
    """Exact gradients of the masked loss w.r.t. every parameter."""
    validate_params(params, config)
    if cache.cell_kind is not config.cell_kind:
        raise ValueError("cache was produced with a different cell kind")
    if len(cache.hidden) != config.num_layers:
        raise ValueError("cache layer count does not match the configuration")
    dloss_dpred = np.asarray(dloss_dpred, dtype=np.float64)
    if dloss_dpred.shape != cache.predictions.shape:
        raise ValueError("dloss_dpred shape does not match the predictions")
    dpred = dloss_dpred * np.asarray(mask, dtype=np.float64)

    pred = cache.predictions
    if config.output_activation == "sigmoid":
        dz = dpred * pred * (1.0 - pred)
    elif config.output_activation == "tanh":
        dz = dpred * (1.0 - pred * pred)
    else:
        dz = dpred
    # accumulate per timestep so padded steps only ever add exact zeros
    dw_out = np.zeros((1, config.layer_widths[-1]))
    db_sum = 0.0
    for t in range(dz.shape[0]):
        dw_out[0] += dz[t] @ cache.head_input[t]
        db_sum += float(np.sum(dz[t]))
    db_out = np.array([db_sum])
    dh_above = dz[:, :, None] * params.w_out[0]

    layer_grads = [None] * config.num_layers
    for idx in range(config.num_layers, 0, -1):
        dh_seq = dh_above
        if idx in cache.dropout_masks:
            dh_seq = dh_seq * cache.dropout_masks[idx]
        layer = params.layers[idx - 1]
        x_seq = cache.layer_inputs[idx - 1]
        h_seq = cache.hidden[idx - 1]
        store = cache.gates[idx - 1]
        if config.cell_kind is CellKind.LSTM:
            grads, dh_above = _bptt_lstm(layer, x_seq, h_seq, store, dh_seq)
        else:
            grads, dh_above = _bptt_gru(layer, x_seq, h_seq, store, dh_seq)
        layer_grads[idx - 1] = grads
    return NetworkParams(layers=layer_grads, w_out=dw_out, b_out=db_out)


def _bptt_lstm(p, x_seq, h_seq, store, dh_seq):
    t_max, batch, hidden = dh_seq.shape
    grads = tree_map(np.zeros_like, p)
    dx_seq = np.zeros_like(x_seq)
    dh_rec = np.zeros((batch, hidden))
    dc_rec = np.zeros((batch, hidden))
    zeros = np.zeros((batch, hidden))
    gate_list = ((p.input_gate, grads.input_gate),
                 (p.forget_gate, grads.forget_gate),
                 (p.candidate, grads.candidate),
                 (p.output_gate, grads.output_gate))
    for t in range(t_max - 1, -1, -1):
        i, f, g, o = store["i"][t], store["f"][t], store["g"][t], store["o"][t]
        tc = store["tanh_c"][t]
        c_prev = store["c"][t - 1] if t > 0 else zeros
        h_prev = h_seq[t - 1] if t > 0 else zeros
        x = x_seq[t]

        dh = dh_seq[t] + dh_rec
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_rec
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dc_rec = dc * f

        deltas = (di * i * (1.0 - i), df * f * (1.0 - f),
                  dg * (1.0 - g * g), do * o * (1.0 - o))
        dx = np.zeros_like(x)
        dh_rec = np.zeros((batch, hidden))
        for (gate, gate_grads), da in zip(gate_list, deltas):
            gate_grads.w += da.T @ x
            gate_grads.u += da.T @ h_prev
            gate_grads.b += da.sum(axis=0)
            dx += da @ gate.w
            dh_rec += da @ gate.u
        dx_seq[t] = dx
    return grads, dx_seq


def _bptt_gru(p, x_seq, h_seq, store, dh_seq):
    t_max, batch, hidden = dh_seq.shape
    grads = tree_map(np.zeros_like, p)
    dx_seq = np.zeros_like(x_seq)
    dh_rec = np.zeros((batch, hidden))
    zeros = np.zeros((batch, hidden))
    for t in range(t_max - 1, -1, -1):
        z, r, hc = store["z"][t], store["r"][t], store["hc"][t]
        h_prev = h_seq[t - 1] if t > 0 else zeros
        x = x_seq[t]

        dh = dh_seq[t] + dh_rec
        dz = dh * (h_prev - hc)
        dhc = dh * (1.0 - z)
        dh_prev = dh * z

        da_h = dhc * (1.0 - hc * hc)
        rh = r * h_prev
        grads.candidate.w += da_h.T @ x
        grads.candidate.u += da_h.T @ rh
        grads.candidate.b += da_h.sum(axis=0)
        drh = da_h @ p.candidate.u
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r

        da_z = dz * z * (1.0 - z)
        da_r = dr * r * (1.0 - r)
        grads.update_gate.w += da_z.T @ x
        grads.update_gate.u += da_z.T @ h_prev
        grads.update_gate.b += da_z.sum(axis=0)
        grads.reset_gate.w += da_r.T @ x
        grads.reset_gate.u += da_r.T @ h_prev
        grads.reset_gate.b += da_r.sum(axis=0)

        dh_rec = dh_prev + da_z @ p.update_gate.u + da_r @ p.reset_gate.u
        dx_seq[t] = da_z @ p.update_gate.w + da_r @ p.reset_gate.w \
            + da_h @ p.candidate.w
    return grads, dx_seq


# ---------------------------------------------------------------------------
# finite-difference oracle

def numerical_gradient(params: NetworkParams, config: NetworkConfig, batch,
                       loss_fn, epsilon: float = 1e-5) -> NetworkParams:
    """Central-difference gradient of loss_fn(predictions) per parameter.

    Runs eval-mode forwards, so compare against backward passes computed
    with dropout disabled. Parameters are perturbed in place and restored.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    grads = zeros_like_params(params)
    leaves = list(tree_leaves(params))
    grad_leaves = dict(tree_leaves(grads))
    for path, arr in leaves:
        out = grad_leaves[path]
        for k in range(arr.size):
            orig = arr.flat[k]
            arr.flat[k] = orig + epsilon
            loss_plus = loss_fn(network_forward(params, config, batch, mode="eval")[0])
            arr.flat[k] = orig - epsilon
            loss_minus = loss_fn(network_forward(params, config, batch, mode="eval")[0])
            arr.flat[k] = orig
            out.flat[k] = (loss_plus - loss_minus) / (2.0 * epsilon)
    return grads


# ---------------------------------------------------------------------------
# checkpoints

_CHECKPOINT_META = "meta.json"


def save_checkpoint(path, params: NetworkParams, config: NetworkConfig,
                    norm: NormalizationSpec) -> None:
    """Write a deterministic npz-compatible checkpoint.

    The container is a stored (uncompressed) zip with fixed entry
    timestamps so identical inputs produce byte-identical files.
    """
    meta = {
        "format": "pournet-checkpoint-v1",
        "cell_kind": config.cell_kind.value,
        "layer_widths": list(config.layer_widths),
        "dropout_rate": config.dropout_rate,
        "dropout_after_layers": list(config.dropout_after_layers),
        "output_activation": config.output_activation,
        "input_width": config.input_width,
        "output_width": config.output_width,
        "norm_mode": norm.mode,
        "norm_target_min": norm.target_min,
        "norm_target_max": norm.target_max,
    }
    entries = [("norm_input_mean", norm.input_mean),
               ("norm_input_std", norm.input_std)]
    entries.extend(tree_leaves(params))
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo(_CHECKPOINT_META, date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, json.dumps(meta, sort_keys=True))
        for name, arr in entries:
            buf = io.BytesIO()
            _npy_format.write_array(buf, np.ascontiguousarray(arr))
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path):
    """Read a checkpoint; returns (params, config, normalization spec)."""
    with zipfile.ZipFile(path, "r") as zf:
        meta = json.loads(zf.read(_CHECKPOINT_META).decode("utf-8"))
        arrays = {}
        for name in zf.namelist():
            if name.endswith(".npy"):
                arrays[name[:-4]] = _npy_format.read_array(
                    io.BytesIO(zf.read(name)))
    config = NetworkConfig(cell_kind=meta["cell_kind"],
                           layer_widths=tuple(meta["layer_widths"]),
                           dropout_rate=meta["dropout_rate"],
                           dropout_after_layers=tuple(meta["dropout_after_layers"]),
                           output_activation=meta["output_activation"],
                           input_width=meta["input_width"],
                           output_width=meta["output_width"])
    norm = NormalizationSpec(mode=meta["norm_mode"],
                             target_min=meta["norm_target_min"],
                             target_max=meta["norm_target_max"],
                             input_mean=arrays["norm_input_mean"],
                             input_std=arrays["norm_input_std"])

    def gate(prefix):
        try:
            return GateParams(w=arrays[f"{prefix}.w"], u=arrays[f"{prefix}.u"],
                              b=arrays[f"{prefix}.b"])
        except KeyError as exc:
            raise ValueError(f"checkpoint is missing array {exc.args[0]!r}") from exc

    layers = []
    for i in range(config.num_layers):
        base = f"layers[{i}]"
        if config.cell_kind is CellKind.LSTM:
            layers.append(LSTMCellParams(input_gate=gate(f"{base}.input_gate"),
                                         forget_gate=gate(f"{base}.forget_gate"),
                                         candidate=gate(f"{base}.candidate"),
                                         output_gate=gate(f"{base}.output_gate")))
        else:
            layers.append(GRUCellParams(update_gate=gate(f"{base}.update_gate"),
                                        reset_gate=gate(f"{base}.reset_gate"),
                                        candidate=gate(f"{base}.candidate")))
    try:
        params = NetworkParams(layers=layers, w_out=arrays["w_out"],
                               b_out=arrays["b_out"])
    except KeyError as exc:
        raise ValueError(f"checkpoint is missing array {exc.args[0]!r}") from exc
    validate_params(params, config)
    for path_name, leaf in tree_leaves(params):
        if not np.isfinite(leaf).all():
            raise ValueError(f"checkpoint array {path_name} is not finite")
    return params, config, norm
