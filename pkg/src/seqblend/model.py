"""Sequential recommenders: an item embedder composed with a sequence encoder.

Two embedder sources: a trainable ID-indexed table, or a frozen text
matrix behind a trainable projection (linear or 3-layer MLP).  The
encoder is a small pre-LayerNorm transformer (bidirectional, or causal
decoder) with learned absolute positions and explicit per-head dimension;
the user embedding is the hidden state at the last non-pad position.

Everything is plain numpy with hand-written backward passes, so training
is exactly reproducible and gradients can be checked against finite
differences in float64.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erf

from .errors import ConfigError, ContractError, FormatError

BASE_INIT_STD = 0.02
LN_EPS = 1e-5

_CKPT_MAGIC = b"SRM1"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class EmbedderConfig:
    source: str                    # id_table | frozen_text
    d_model: int = 64
    init_std_multiplier: float = 1.0
    projection: str = "linear"     # linear | mlp3 (frozen_text only)
    embedding_dropout: float = 0.0

    def __post_init__(self):
        if self.source not in ("id_table", "frozen_text"):
            raise ConfigError(f"unknown embedder source: {self.source!r}")
        if self.projection not in ("linear", "mlp3"):
            raise ConfigError(f"unknown projection: {self.projection!r}")
        if self.d_model < 1:
            raise ConfigError("d_model must be positive")
        if self.init_std_multiplier <= 0:
            raise ConfigError("init_std_multiplier must be positive")
        if not 0.0 <= self.embedding_dropout < 1.0:
            raise ConfigError("embedding_dropout must be in [0, 1)")


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "bidirectional_encoder"   # or causal_decoder
    n_layers: int = 2
    n_heads: int = 2
    d_model: int = 64
    d_ff: int = 128
    d_kv: int = 32
    max_seq_len: int = 20
    pooling: str = "last_position"

    def __post_init__(self):
        if self.kind not in ("bidirectional_encoder", "causal_decoder"):
            raise ConfigError(f"unknown encoder kind: {self.kind!r}")
        if self.pooling != "last_position":
            raise ConfigError(f"unknown pooling: {self.pooling!r}")
        if min(self.n_layers, self.n_heads, self.d_model, self.d_ff,
               self.d_kv, self.max_seq_len) < 1:
            raise ConfigError("encoder dimensions must be positive")


def paper_scale_encoder(max_seq_len: int = 20) -> EncoderConfig:
    """The full-size encoder configuration (6 layers, 6 heads, d_model 128)."""
    return EncoderConfig(
        kind="bidirectional_encoder", n_layers=6, n_heads=6,
        d_model=128, d_ff=1024, d_kv=64, max_seq_len=max_seq_len,
    )


def sasrec_style_encoder(max_seq_len: int = 20, d_model: int = 64,
                         d_ff: int = 128, d_kv: int = 32) -> EncoderConfig:
    """2-layer, 1-head causal decoder variant."""
    return EncoderConfig(
        kind="causal_decoder", n_layers=2, n_heads=1,
        d_model=d_model, d_ff=d_ff, d_kv=d_kv, max_seq_len=max_seq_len,
    )


_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
    return cdf + x * pdf


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _layernorm_forward(x, g, b):
    d = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.einsum("...d,...d->...", xc, xc)[..., None] / d
    inv = 1.0 / np.sqrt(var + np.asarray(LN_EPS, dtype=x.dtype))
    xhat = xc
    xhat *= inv
    return xhat * g + b, (xhat, inv)


def _layernorm_backward(dy, g, cache):
    xhat, inv = cache
    d = xhat.shape[-1]
    dxhat = dy * g
    dg = np.einsum("nd,nd->d", dy.reshape(-1, d), xhat.reshape(-1, d))
    db = dy.reshape(-1, d).sum(axis=0)
    m1 = dxhat.sum(axis=-1, keepdims=True)
    m2 = np.einsum("...d,...d->...", dxhat, xhat)[..., None]
    dx = (dxhat - (m1 + xhat * m2) / d) * inv
    return dx, dg, db


class SRModel:
    """Item embedder + sequence encoder with manual autodiff.

    Parameters live in a flat name->array dict so the trainer and the
    checkpoint format can treat them uniformly.  A frozen text matrix is
    held outside the parameter dict and never receives gradient.
    """

    def __init__(
        self,
        embedder: EmbedderConfig,
        encoder: EncoderConfig,
        n_items: int,
        text_matrix: np.ndarray | None = None,
        seed: int = 0,
        dtype=np.float32,
    ):
        if embedder.d_model != encoder.d_model:
            raise ConfigError(
                f"embedder d_model {embedder.d_model} != encoder d_model {encoder.d_model}"
            )
        if embedder.source == "frozen_text":
            if text_matrix is None:
                raise ConfigError("frozen_text embedder requires a text matrix")
            if text_matrix.shape[0] != n_items:
                raise ConfigError(
                    f"text matrix covers {text_matrix.shape[0]} items, catalog has {n_items}"
                )
        self.embedder = embedder
        self.encoder = encoder
        self.n_items = n_items
        self.dtype = np.dtype(dtype)
        self.text_rows = (
            None if text_matrix is None
            else np.ascontiguousarray(text_matrix, dtype=self.dtype)
        )
        self.params: dict[str, np.ndarray] = {}
        self._init_params(seed)

    # ------------------------------------------------------------------
    # Initialization
    # ------------------------------------------------------------------

    def _init_params(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        p = self.params
        emb, enc = self.embedder, self.encoder
        std = BASE_INIT_STD

        def normal(shape, scale=std):
            return rng.normal(0.0, scale, size=shape).astype(self.dtype)

        if emb.source == "id_table":
            p["embed.table"] = normal(
                (self.n_items, emb.d_model), std * emb.init_std_multiplier
            )
        else:
            text_dim = self.text_rows.shape[1]
            if emb.projection == "linear":
                p["embed.proj.w"] = normal((text_dim, emb.d_model))
                p["embed.proj.b"] = np.zeros(emb.d_model, dtype=self.dtype)
            else:
                p["embed.proj.w1"] = normal((text_dim, enc.d_ff))
                p["embed.proj.b1"] = np.zeros(enc.d_ff, dtype=self.dtype)
                p["embed.proj.w2"] = normal((enc.d_ff, enc.d_ff))
                p["embed.proj.b2"] = np.zeros(enc.d_ff, dtype=self.dtype)
                p["embed.proj.w3"] = normal((enc.d_ff, emb.d_model))
                p["embed.proj.b3"] = np.zeros(emb.d_model, dtype=self.dtype)

        p["pos.table"] = normal((enc.max_seq_len, enc.d_model))

        width = enc.n_heads * enc.d_kv
        for layer in range(enc.n_layers):
            pre = f"enc.{layer}"
            p[f"{pre}.ln1.g"] = np.ones(enc.d_model, dtype=self.dtype)
            p[f"{pre}.ln1.b"] = np.zeros(enc.d_model, dtype=self.dtype)
            p[f"{pre}.attn.wq"] = normal((enc.d_model, width))
            p[f"{pre}.attn.wk"] = normal((enc.d_model, width))
            p[f"{pre}.attn.wv"] = normal((enc.d_model, width))
            p[f"{pre}.attn.wo"] = normal((width, enc.d_model))
            p[f"{pre}.ln2.g"] = np.ones(enc.d_model, dtype=self.dtype)
            p[f"{pre}.ln2.b"] = np.zeros(enc.d_model, dtype=self.dtype)
            p[f"{pre}.ffn.w1"] = normal((enc.d_model, enc.d_ff))
            p[f"{pre}.ffn.b1"] = np.zeros(enc.d_ff, dtype=self.dtype)
            p[f"{pre}.ffn.w2"] = normal((enc.d_ff, enc.d_model))
            p[f"{pre}.ffn.b2"] = np.zeros(enc.d_model, dtype=self.dtype)

        p["final_ln.g"] = np.ones(enc.d_model, dtype=self.dtype)
        p["final_ln.b"] = np.zeros(enc.d_model, dtype=self.dtype)

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.params.items()}

    # ------------------------------------------------------------------
    # Item embeddings
    # ------------------------------------------------------------------

    def _project_text(self, rows: np.ndarray, need_cache: bool = False):
        p = self.params
        if self.embedder.projection == "linear":
            out = rows @ p["embed.proj.w"] + p["embed.proj.b"]
            return out, (rows,) if need_cache else None
        h1 = rows @ p["embed.proj.w1"] + p["embed.proj.b1"]
        a1 = _gelu(h1)
        h2 = a1 @ p["embed.proj.w2"] + p["embed.proj.b2"]
        a2 = _gelu(h2)
        out = a2 @ p["embed.proj.w3"] + p["embed.proj.b3"]
        return out, (rows, h1, a1, h2, a2) if need_cache else None

    def _project_text_backward(self, dout: np.ndarray, cache, grads) -> None:
        p = self.params
        if self.embedder.projection == "linear":
            (rows,) = cache
            grads["embed.proj.w"] += rows.T @ dout
            grads["embed.proj.b"] += dout.sum(axis=0)
            return
        rows, h1, a1, h2, a2 = cache
        grads["embed.proj.w3"] += a2.T @ dout
        grads["embed.proj.b3"] += dout.sum(axis=0)
        da2 = dout @ p["embed.proj.w3"].T
        dh2 = da2 * _gelu_grad(h2)
        grads["embed.proj.w2"] += a1.T @ dh2
        grads["embed.proj.b2"] += dh2.sum(axis=0)
        da1 = dh2 @ p["embed.proj.w2"].T
        dh1 = da1 * _gelu_grad(h1)
        grads["embed.proj.w1"] += rows.T @ dh1
        grads["embed.proj.b1"] += dh1.sum(axis=0)

    def item_embedding(self, item: int) -> np.ndarray:
        """Embedding of one catalog item (inference: no dropout)."""
        if not 0 <= item < self.n_items:
            raise ContractError(f"item index {item} outside catalog of {self.n_items}")
        if self.embedder.source == "id_table":
            return self.params["embed.table"][item].copy()
        out, _ = self._project_text(self.text_rows[item][None, :])
        return out[0]

    def catalog_embeddings(self, need_cache: bool = False):
        """Embeddings of the whole catalog, plus a projection cache if asked."""
        if self.embedder.source == "id_table":
            return self.params["embed.table"], None
        return self._project_text(self.text_rows, need_cache=need_cache)

    def catalog_backward(self, d_items: np.ndarray, cache, grads) -> None:
        """Route catalog-embedding gradient into the trainable parameters."""
        if self.embedder.source == "id_table":
            grads["embed.table"] += d_items
        else:
            self._project_text_backward(d_items, cache, grads)

    # ------------------------------------------------------------------
    # Sequence encoding
    # ------------------------------------------------------------------

    def pad_prefixes(self, prefixes) -> tuple[np.ndarray, np.ndarray]:
        """Right-pad prefixes to max_seq_len; returns (indices, lengths)."""
        L = self.encoder.max_seq_len
        out = np.zeros((len(prefixes), L), dtype=np.int64)
        lengths = np.zeros(len(prefixes), dtype=np.int64)
        for i, pref in enumerate(prefixes):
            n = len(pref)
            if n == 0:
                raise ContractError("empty prefix")
            if n > L:
                raise ContractError(f"prefix of length {n} exceeds max_seq_len {L}")
            out[i, :n] = pref
            lengths[i] = n
        if out.max(initial=0) >= self.n_items or out.min(initial=0) < 0:
            raise ContractError("prefix contains out-of-range item index")
        return out, lengths

    def user_embedding(self, prefix) -> np.ndarray:
        """Deterministic user embedding of one history prefix."""
        padded, lengths = self.pad_prefixes([tuple(prefix)])
        pooled, _ = self.forward_batch(padded, lengths)
        return pooled[0]

    def user_embeddings(self, prefixes, batch_size: int = 512) -> np.ndarray:
        """Batched inference over many prefixes."""
        out = np.empty((len(prefixes), self.encoder.d_model), dtype=self.dtype)
        for start in range(0, len(prefixes), batch_size):
            chunk = prefixes[start: start + batch_size]
            padded, lengths = self.pad_prefixes(chunk)
            pooled, _ = self.forward_batch(padded, lengths)
            out[start: start + len(chunk)] = pooled
        return out

    def hidden_states(self, prefixes) -> tuple[np.ndarray, np.ndarray]:
        """Final per-position hidden states (for probes): (B, L, d), lengths."""
        padded, lengths = self.pad_prefixes(prefixes)
        _, cache = self.forward_batch(padded, lengths, need_cache=True)
        return cache["final_y"], lengths

    def forward_batch(
        self,
        padded: np.ndarray,
        lengths: np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
        need_cache: bool = False,
    ):
        """Encode padded index batches to pooled user embeddings.

        Padding is fully masked: pad keys are unreachable in attention and
        pad positions are zeroed on every residual branch, so the output
        is exactly invariant to the amount of right-padding.
        """
        p = self.params
        enc = self.encoder
        B, L = padded.shape
        H, Dk = enc.n_heads, enc.d_kv
        scale = np.asarray(1.0 / np.sqrt(Dk), dtype=self.dtype)

        valid = np.arange(L)[None, :] < lengths[:, None]          # (B, L)
        vmask = valid[:, :, None].astype(self.dtype)              # (B, L, 1)

        emb = p["embed.table"][padded] if self.embedder.source == "id_table" else None
        proj_cache = None
        if emb is None:
            flat_rows = self.text_rows[padded.reshape(-1)]
            emb_flat, proj_cache = self._project_text(flat_rows, need_cache=need_cache)
            emb = emb_flat.reshape(B, L, enc.d_model)

        drop_mask = None
        if train and self.embedder.embedding_dropout > 0.0:
            if rng is None:
                raise ContractError("training forward needs an rng for dropout")
            keep = 1.0 - self.embedder.embedding_dropout
            drop_mask = (rng.random((B, L, 1)) < keep).astype(self.dtype) / np.asarray(
                keep, dtype=self.dtype
            )
            emb = emb * drop_mask

        x = (emb + p["pos.table"][None, :L, :]) * vmask

        # additive attention-score bias: -inf at pad keys (+ causal for decoders)
        neg = np.asarray(-1e30, dtype=self.dtype)
        key_bias = np.where(valid[:, None, None, :], self.dtype.type(0.0), neg)
        if enc.kind == "causal_decoder":
            causal = np.triu(np.ones((L, L), dtype=bool), k=1)
            key_bias = key_bias + np.where(causal[None, None, :, :],
                                           neg, self.dtype.type(0.0))

        layer_caches = []
        for layer in range(enc.n_layers):
            pre = f"enc.{layer}"
            a, ln1_cache = _layernorm_forward(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])

            a2 = a.reshape(B * L, enc.d_model)
            q = (a2 @ p[f"{pre}.attn.wq"]).reshape(B, L, H, Dk).transpose(0, 2, 1, 3)
            k = (a2 @ p[f"{pre}.attn.wk"]).reshape(B, L, H, Dk).transpose(0, 2, 1, 3)
            v = (a2 @ p[f"{pre}.attn.wv"]).reshape(B, L, H, Dk).transpose(0, 2, 1, 3)

            s = np.matmul(q, k.transpose(0, 1, 3, 2)) * scale + key_bias
            s_shift = s - s.max(axis=-1, keepdims=True)
            e = np.exp(s_shift)
            attn = e / e.sum(axis=-1, keepdims=True)

            o = np.matmul(attn, v)                                # (B, H, L, Dk)
            o_flat = o.transpose(0, 2, 1, 3).reshape(B * L, H * Dk)
            attn_out = (o_flat @ p[f"{pre}.attn.wo"]).reshape(B, L, enc.d_model)
            attn_out = attn_out * vmask
            x_attn = x + attn_out

            f, ln2_cache = _layernorm_forward(
                x_attn, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"]
            )
            f2 = f.reshape(B * L, enc.d_model)
            h1 = f2 @ p[f"{pre}.ffn.w1"] + p[f"{pre}.ffn.b1"]
            g1 = _relu(h1)
            ffn_out = (g1 @ p[f"{pre}.ffn.w2"] + p[f"{pre}.ffn.b2"]).reshape(
                B, L, enc.d_model
            )
            ffn_out = ffn_out * vmask
            x_next = x_attn + ffn_out

            if need_cache:
                layer_caches.append(
                    dict(a=a, ln1=ln1_cache, q=q, k=k, v=v, attn=attn, o_flat=o_flat,
                         f=f, ln2=ln2_cache, h1=h1, g1=g1)
                )
            x = x_next

        y, final_cache = _layernorm_forward(x, p["final_ln.g"], p["final_ln.b"])
        rows = np.arange(B)
        pooled = y[rows, lengths - 1]

        cache = None
        if need_cache:
            cache = dict(
                padded=padded, lengths=lengths, valid=valid, vmask=vmask,
                drop_mask=drop_mask, proj_cache=proj_cache, layers=layer_caches,
                final_ln=final_cache, final_y=y, scale=scale,
            )
        return pooled, cache

    def backward_batch(
        self, d_pooled: np.ndarray, cache: dict, grads: dict[str, np.ndarray]
    ) -> None:
        """Accumulate parameter gradients for a cached training forward."""
        p = self.params
        enc = self.encoder
        padded, lengths = cache["padded"], cache["lengths"]
        vmask = cache["vmask"]
        B, L = padded.shape
        H, Dk = enc.n_heads, enc.d_kv
        scale = cache["scale"]

        dy = np.zeros((B, L, enc.d_model), dtype=d_pooled.dtype)
        dy[np.arange(B), lengths - 1] = d_pooled

        dx, dg, db = _layernorm_backward(dy, p["final_ln.g"], cache["final_ln"])
        grads["final_ln.g"] += dg
        grads["final_ln.b"] += db

        for layer in reversed(range(enc.n_layers)):
            pre = f"enc.{layer}"
            lc = cache["layers"][layer]

            # FFN branch
            d_ffn_out = dx * vmask
            d_ffn_flat = d_ffn_out.reshape(B * L, enc.d_model)
            grads[f"{pre}.ffn.w2"] += lc["g1"].T @ d_ffn_flat
            grads[f"{pre}.ffn.b2"] += d_ffn_flat.sum(axis=0)
            dg1 = d_ffn_flat @ p[f"{pre}.ffn.w2"].T
            dh1 = dg1 * (lc["h1"] > 0)
            f_flat = lc["f"].reshape(B * L, enc.d_model)
            grads[f"{pre}.ffn.w1"] += f_flat.T @ dh1
            grads[f"{pre}.ffn.b1"] += dh1.sum(axis=0)
            df = (dh1 @ p[f"{pre}.ffn.w1"].T).reshape(B, L, enc.d_model)

            dx_attn, dg, db = _layernorm_backward(df, p[f"{pre}.ln2.g"], lc["ln2"])
            grads[f"{pre}.ln2.g"] += dg
            grads[f"{pre}.ln2.b"] += db
            dx_attn = dx_attn + dx                   # residual around FFN

            # attention branch
            d_attn_out = dx_attn * vmask
            d_attn_flat = d_attn_out.reshape(B * L, enc.d_model)
            grads[f"{pre}.attn.wo"] += lc["o_flat"].T @ d_attn_flat
            do_flat = d_attn_flat @ p[f"{pre}.attn.wo"].T
            do = do_flat.reshape(B, L, H, Dk).transpose(0, 2, 1, 3)

            attn, v, q, k = lc["attn"], lc["v"], lc["q"], lc["k"]
            d_attn = np.matmul(do, v.transpose(0, 1, 3, 2))
            dv = np.matmul(attn.transpose(0, 1, 3, 2), do)
            ds = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
            dq = np.matmul(ds, k) * scale
            dk = np.matmul(ds.transpose(0, 1, 3, 2), q) * scale

            dq_flat = dq.transpose(0, 2, 1, 3).reshape(B * L, H * Dk)
            dk_flat = dk.transpose(0, 2, 1, 3).reshape(B * L, H * Dk)
            dv_flat = dv.transpose(0, 2, 1, 3).reshape(B * L, H * Dk)
            a_flat = lc["a"].reshape(B * L, enc.d_model)
            grads[f"{pre}.attn.wq"] += a_flat.T @ dq_flat
            grads[f"{pre}.attn.wk"] += a_flat.T @ dk_flat
            grads[f"{pre}.attn.wv"] += a_flat.T @ dv_flat
            da = (
                dq_flat @ p[f"{pre}.attn.wq"].T
                + dk_flat @ p[f"{pre}.attn.wk"].T
                + dv_flat @ p[f"{pre}.attn.wv"].T
            ).reshape(B, L, enc.d_model)

            dx_res, dg, db = _layernorm_backward(da, p[f"{pre}.ln1.g"], lc["ln1"])
            grads[f"{pre}.ln1.g"] += dg
            grads[f"{pre}.ln1.b"] += db
            dx = dx_res + dx_attn                    # residual around attention

        dx = dx * vmask
        valid_flat = cache["valid"].reshape(-1)
        positions = np.tile(np.arange(L), B)
        np.add.at(grads["pos.table"], positions[valid_flat],
                  dx.reshape(B * L, -1)[valid_flat])

        demb = dx if cache["drop_mask"] is None else dx * cache["drop_mask"]
        demb_flat = demb.reshape(B * L, -1)
        if self.embedder.source == "id_table":
            np.add.at(grads["embed.table"], padded.reshape(-1)[valid_flat],
                      demb_flat[valid_flat])
        else:
            self._project_text_backward(demb_flat, cache["proj_cache"], grads)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(model: SRModel, path, extra: dict | None = None) -> None:
    """Self-describing container: config JSON header + named float32 tensors."""
    names = sorted(model.params)
    tensors = [{"name": n, "shape": list(model.params[n].shape)} for n in names]
    has_text = model.text_rows is not None
    if has_text:
        tensors.append({"name": "frozen.text", "shape": list(model.text_rows.shape)})
    header = {
        "format": "srmodel",
        "version": _CKPT_VERSION,
        "embedder": asdict(model.embedder),
        "encoder": asdict(model.encoder),
        "n_items": model.n_items,
        "tensors": tensors,
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<II", _CKPT_VERSION, len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())
        if has_text:
            fh.write(np.ascontiguousarray(model.text_rows, dtype="<f4").tobytes())


def load_checkpoint(path) -> SRModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise FormatError("bad checkpoint magic")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != _CKPT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(4 * count)
            if len(buf) != 4 * count:
                raise FormatError(f"truncated tensor {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()

    embedder = EmbedderConfig(**header["embedder"])
    encoder = EncoderConfig(**header["encoder"])
    text = arrays.pop("frozen.text", None)
    model = SRModel(embedder, encoder, header["n_items"], text_matrix=text, seed=0)
    for name in model.params:
        if name not in arrays:
            raise FormatError(f"checkpoint missing tensor {name}")
        if arrays[name].shape != model.params[name].shape:
            raise FormatError(f"checkpoint tensor {name} has wrong shape")
        model.params[name] = arrays[name].astype(model.dtype)
    return model
