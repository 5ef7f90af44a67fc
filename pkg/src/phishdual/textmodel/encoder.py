"""Post-LN transformer encoder with a [CLS] softmax head, forward and backward in numpy.

Parameters live in a flat ``dict`` of float64 arrays keyed by name
(``tok_emb``, ``pos_emb``, ``layer{i}.wq`` ..., ``head_w``, ``head_b``).
Padded keys are masked with ``-inf`` before the attention softmax, so padded
positions never reach unmasked ones; trailing all-padding columns of a batch are
dropped before any compute.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erf

from .._seeding import make_rng
from ..errors import ModelFormatError

FORMAT_VERSION = 1
LN_EPS = 1e-12
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

LAYER_PARAMS = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b")


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    num_layers: int = 2
    num_heads: int = 2
    d_model: int = 32
    d_ff: int = 64
    max_len: int = 256
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.d_model % self.num_heads:
            raise ValueError("d_model must be divisible by num_heads")
        if self.max_len < 2:
            raise ValueError("max_len must be >= 2")
        if self.vocab_size < 1 or self.num_layers < 0 or self.d_ff < 1:
            raise ValueError("vocab_size, d_ff must be positive and num_layers >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def head_dim(self):
        return self.d_model // self.num_heads


def param_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    d, f = config.d_model, config.d_ff
    shapes = {"tok_emb": (config.vocab_size, d), "pos_emb": (config.max_len, d)}
    per_layer = {
        "wq": (d, d), "bq": (d,), "wk": (d, d), "bk": (d,), "wv": (d, d), "bv": (d,),
        "wo": (d, d), "bo": (d,), "ln1_g": (d,), "ln1_b": (d,),
        "w1": (d, f), "b1": (f,), "w2": (f, d), "b2": (d,), "ln2_g": (d,), "ln2_b": (d,),
    }
    for i in range(config.num_layers):
        for name in LAYER_PARAMS:
            shapes[f"layer{i}.{name}"] = per_layer[name]
    shapes["head_w"] = (d, 2)
    shapes["head_b"] = (2,)
    return shapes


def init_params(config: EncoderConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Embeddings ~ U(-0.1, 0.1); matrices ~ Glorot U(-a, a) with a = sqrt(6 / (fan_in + fan_out));
    biases 0; layer-norm gains 1."""
    rng = make_rng(seed)
    params = {}
    for name, shape in param_shapes(config).items():
        short = name.rsplit(".", 1)[-1]
        if short in ("tok_emb", "pos_emb"):
            params[name] = rng.uniform(-0.1, 0.1, size=shape)
        elif short.endswith("_g"):
            params[name] = np.ones(shape)
        elif len(shape) == 2:
            a = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-a, a, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


def check_params(params, config: EncoderConfig):
    shapes = param_shapes(config)
    if set(params) != set(shapes):
        raise ValueError(f"parameter names do not match config: {sorted(set(params) ^ set(shapes))}")
    for name, shape in shapes.items():
        if params[name].shape != shape:
            raise ValueError(f"{name} has shape {params[name].shape}, expected {shape}")


# ------------------------------------------------------------------ pieces

def gelu(x):
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x):
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * rstd
    return xhat * g + b, (xhat, rstd)


def layer_norm_backward(dy, g, cache):
    xhat, rstd = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, xhat.shape[-1]).sum(axis=0)
    dxhat = dy * g
    dx = rstd * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                 - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dg, db


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _matmul_grad(x, dy):
    """Weight gradient of ``y = x @ W`` summed over every leading axis."""
    return x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


# ----------------------------------------------------------------- forward

def _effective_length(mask):
    cols = np.nonzero(mask.any(axis=0))[0]
    return int(cols.max()) + 1 if cols.size else 1


def forward(params, config: EncoderConfig, ids, mask, train=False, rng=None):
    """Logits of shape ``(batch, 2)`` and the activation cache for :func:`backward`."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(mask)
    if ids.ndim == 1:
        ids, mask = ids[None, :], mask[None, :]
    if ids.shape != mask.shape:
        raise ValueError(f"ids {ids.shape} and mask {mask.shape} differ in shape")
    if ids.shape[1] > config.max_len:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds max_len {config.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError("token id outside the vocabulary")
    if not np.all(mask[:, 0] == 1):
        raise ValueError("position 0 ([CLS]) must be unmasked")

    t = _effective_length(mask)
    ids, mask = ids[:, :t], mask[:, :t]
    n_heads, dh = config.num_heads, config.head_dim
    keep = 1.0 - config.dropout_rate
    dropout = train and config.dropout_rate > 0.0
    if dropout and rng is None:
        raise ValueError("training with dropout needs an rng")

    key_bias = np.where(mask == 1, 0.0, -np.inf)[:, None, None, :]
    h = params["tok_emb"][ids] + params["pos_emb"][:t]
    cache = {"ids": ids, "mask": mask, "layers": []}
    for i in range(config.num_layers):
        p = lambda n: params[f"layer{i}.{n}"]  # noqa: E731
        x = h
        q = _split_heads(x @ p("wq") + p("bq"), n_heads)
        k = _split_heads(x @ p("wk") + p("bk"), n_heads)
        v = _split_heads(x @ p("wv") + p("bv"), n_heads)
        attn = softmax(q @ k.transpose(0, 1, 3, 2) / math.sqrt(dh) + key_bias)
        ctx = _merge_heads(attn @ v)
        o = ctx @ p("wo") + p("bo")
        drop1 = (rng.random(o.shape) < keep) / keep if dropout else None
        if drop1 is not None:
            o = o * drop1
        h1, ln1 = layer_norm(x + o, p("ln1_g"), p("ln1_b"))
        u = h1 @ p("w1") + p("b1")
        g = gelu(u)
        f = g @ p("w2") + p("b2")
        drop2 = (rng.random(f.shape) < keep) / keep if dropout else None
        if drop2 is not None:
            f = f * drop2
        h2, ln2 = layer_norm(h1 + f, p("ln2_g"), p("ln2_b"))
        cache["layers"].append({
            "x": x, "q": q, "k": k, "v": v, "attn": attn, "ctx": ctx, "drop1": drop1,
            "ln1": ln1, "h1": h1, "u": u, "g": g, "drop2": drop2, "ln2": ln2,
        })
        h = h2
    cls = h[:, 0, :]
    cache["cls"] = cls
    logits = cls @ params["head_w"] + params["head_b"]
    return logits, cache


# ---------------------------------------------------------------- backward

def cross_entropy(logits, labels):
    """Mean ``-log softmax(logits)[label]`` and its gradient with respect to the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    n = logits.shape[0]
    loss = float(np.mean(logsumexp - z[np.arange(n), labels]))
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def backward(params, config: EncoderConfig, cache, dlogits):
    grads = {name: np.zeros_like(value) for name, value in params.items()}
    n_heads, dh = config.num_heads, config.head_dim
    cls = cache["cls"]
    grads["head_w"] = cls.T @ dlogits
    grads["head_b"] = dlogits.sum(axis=0)

    b, t = cache["ids"].shape
    d = config.d_model
    dh_out = np.zeros((b, t, d))
    dh_out[:, 0, :] = dlogits @ params["head_w"].T

    for i in reversed(range(config.num_layers)):
        c = cache["layers"][i]
        p = lambda n: params[f"layer{i}.{n}"]  # noqa: E731
        name = lambda n: f"layer{i}.{n}"  # noqa: E731

        dr2, grads[name("ln2_g")], grads[name("ln2_b")] = layer_norm_backward(dh_out, p("ln2_g"), c["ln2"])
        dh1 = dr2.copy()
        df = dr2 if c["drop2"] is None else dr2 * c["drop2"]
        grads[name("w2")] = _matmul_grad(c["g"], df)
        grads[name("b2")] = df.reshape(-1, d).sum(axis=0)
        du = (df @ p("w2").T) * gelu_grad(c["u"])
        grads[name("w1")] = _matmul_grad(c["h1"], du)
        grads[name("b1")] = du.reshape(-1, du.shape[-1]).sum(axis=0)
        dh1 += du @ p("w1").T

        dr1, grads[name("ln1_g")], grads[name("ln1_b")] = layer_norm_backward(dh1, p("ln1_g"), c["ln1"])
        dx = dr1.copy()
        do = dr1 if c["drop1"] is None else dr1 * c["drop1"]
        grads[name("wo")] = _matmul_grad(c["ctx"], do)
        grads[name("bo")] = do.reshape(-1, d).sum(axis=0)
        dctx = _split_heads(do @ p("wo").T, n_heads)
        attn = c["attn"]
        dattn = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dscores /= math.sqrt(dh)
        dq = dscores @ c["k"]
        dk = dscores.transpose(0, 1, 3, 2) @ c["q"]
        for proj, dproj in (("q", dq), ("k", dk), ("v", dv)):
            dflat = _merge_heads(dproj)
            grads[name(f"w{proj}")] = _matmul_grad(c["x"], dflat)
            grads[name(f"b{proj}")] = dflat.reshape(-1, d).sum(axis=0)
            dx += dflat @ p(f"w{proj}").T
        dh_out = dx

    np.add.at(grads["tok_emb"], cache["ids"], dh_out)
    grads["pos_emb"][:t] = dh_out.sum(axis=0)
    return grads


def loss_and_grads(params, config: EncoderConfig, ids, mask, labels, train=False, rng=None):
    """Mean cross-entropy of the batch and gradients shaped like ``params``."""
    if labels is None:
        raise ValueError("loss_and_grads needs labels")
    logits, cache = forward(params, config, ids, mask, train=train, rng=rng)
    loss, dlogits = cross_entropy(logits, labels)
    return loss, backward(params, config, cache, dlogits)


def predict_proba(params, config: EncoderConfig, ids, mask) -> np.ndarray:
    """Positive-class (phishing) probability per row."""
    logits, _ = forward(params, config, ids, mask)
    return softmax(logits)[:, 1]


# ------------------------------------------------------------- persistence

def params_to_dict(params, config: EncoderConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "model_type": "text_encoder",
        "config": asdict(config),
        "tensors": {
            name: {"shape": list(params[name].shape), "data": params[name].ravel().tolist()}
            for name in param_shapes(config)
        },
    }


def params_from_dict(data: dict):
    if data.get("model_type") != "text_encoder" or data.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError("not a text_encoder parameter file of a supported format_version")
    config = EncoderConfig(**data["config"])
    params = {
        name: np.array(t["data"], dtype=np.float64).reshape(t["shape"])
        for name, t in data["tensors"].items()
    }
    try:
        check_params(params, config)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
    return params, config


def save_params(path, params, config: EncoderConfig):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params, config), fh, separators=(",", ":"))
        fh.write("\n")


def load_params(path):
    with open(path, encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
