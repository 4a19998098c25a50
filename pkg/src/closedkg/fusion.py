"""Numerical core of the knowledge-fusion model at desk scale.

Pure numpy forward passes with hand-written vector-Jacobian products for
every differentiable piece: entity space infusion (concatenate a class
embedding with a token representation, fuse, normalize), the multi-head
knowledge-injector layers that mix token and entity streams and regenerate
both, the InfoNCE contrastive loss over cosine similarities, and the
weighted total objective. A small deterministic self-attention encoder stub
stands in for a pretrained text encoder so sample records can be embedded
end to end. `run_fusion_checks` exercises the closed-form examples,
algebraic invariants, and central finite-difference gradient checks and
reports one pass/fail line per property.

Entities and tokens live in different widths (d3 vs d1); inside each
injector layer entities are projected to the token width for joint
attention and projected back afterwards. In the mixing step the token-side
matrix multiplies the token vector and the entity-side matrix the entity
vector, which is the only dimensionally consistent pairing.
"""

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erf

__all__ = [
    "FusionDims",
    "InjectorLayerParams",
    "FusionParams",
    "init_params",
    "gelu",
    "layer_norm",
    "entity_space_infusion",
    "injector_layer",
    "injector_stack",
    "info_nce",
    "info_nce_grad",
    "total_loss",
    "EncoderStub",
    "encode_sample",
    "save_params",
    "load_params",
    "run_fusion_checks",
]

_LN_DELTA = 1e-12


# ---------------------------------------------------------------------------
# primitives

def gelu(x):
    """Exact GELU: x * Phi(x) with the Gaussian CDF."""
    x = np.asarray(x, dtype=float)
    return x * 0.5 * (1.0 + erf(x / np.sqrt(2.0)))


def _gelu_vjp(x, g):
    x = np.asarray(x, dtype=float)
    cdf = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return g * (cdf + x * pdf)


def layer_norm(v):
    """(v - mean) / std along the last axis, before any affine transform."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] < 2:
        raise ValueError("layer_norm input must have length >= 2")
    mu = v.mean(axis=-1, keepdims=True)
    var = ((v - mu) ** 2).mean(axis=-1, keepdims=True)
    return (v - mu) / np.sqrt(var + _LN_DELTA)


def _layer_norm_vjp(v, g):
    v = np.asarray(v, dtype=float)
    mu = v.mean(axis=-1, keepdims=True)
    var = ((v - mu) ** 2).mean(axis=-1, keepdims=True)
    s = np.sqrt(var + _LN_DELTA)
    y = (v - mu) / s
    gm = g.mean(axis=-1, keepdims=True)
    gym = (g * y).mean(axis=-1, keepdims=True)
    return (g - gm - y * gym) / s


def _softmax_rows(z):
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_vjp(p, g):
    return p * (g - (g * p).sum(axis=-1, keepdims=True))


def _check_width(name, vec, expected):
    vec = np.asarray(vec, dtype=float)
    if vec.shape[-1] != expected:
        raise ValueError(
            "%s has width %d, expected %d" % (name, vec.shape[-1], expected)
        )
    return vec


# ---------------------------------------------------------------------------
# parameters

@dataclass
class FusionDims:
    """Widths and depths; the full-size defaults scale down for tests."""

    d1: int = 768
    d2: int = 100
    d3: int = 100
    d4: int = 768
    n_layers: int = 6
    n_encoder_layers: int = 5
    n_heads: int = 4
    tau: float = 1.0
    lam1: float = 0.5
    lam2: float = 0.5

    def validate(self):
        for name in ("d1", "d2", "d3", "d4", "n_layers", "n_encoder_layers", "n_heads"):
            if getattr(self, name) < 1:
                raise ValueError("%s must be positive" % name)
        if self.d1 % self.n_heads != 0:
            raise ValueError("d1 (%d) must divide into n_heads (%d)" % (self.d1, self.n_heads))
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass
class InjectorLayerParams:
    p_in: np.ndarray      # d3 x d1, entity projection into token width
    p_out: np.ndarray     # d1 x d3, projection back
    w_q: np.ndarray       # d1 x d1
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    w_mix_token: np.ndarray   # d1 x d4
    w_mix_entity: np.ndarray  # d3 x d4
    b_mix: np.ndarray         # d4
    w_regen_token: np.ndarray   # d4 x d1
    b_regen_token: np.ndarray   # d1
    w_regen_entity: np.ndarray  # d4 x d3
    b_regen_entity: np.ndarray  # d3


@dataclass
class FusionParams:
    dims: FusionDims
    w_fuse: np.ndarray   # (d2 + d1) x d3, top d2 rows pair with the class vector
    b_fuse: np.ndarray   # d3
    w_norm: np.ndarray   # d3 x d3
    b_norm: np.ndarray   # d3
    layers: list = field(default_factory=list)


def _uniform(rng, rows, cols):
    bound = 1.0 / np.sqrt(rows)
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_params(dims=None, seed=0):
    """Seeded uniform +-1/sqrt(fan_in) weights, zero biases."""
    dims = dims or FusionDims()
    dims.validate()
    rng = np.random.default_rng(seed)
    d1, d2, d3, d4 = dims.d1, dims.d2, dims.d3, dims.d4
    layers = []
    for _ in range(dims.n_layers):
        layers.append(InjectorLayerParams(
            p_in=_uniform(rng, d3, d1),
            p_out=_uniform(rng, d1, d3),
            w_q=_uniform(rng, d1, d1),
            w_k=_uniform(rng, d1, d1),
            w_v=_uniform(rng, d1, d1),
            w_o=_uniform(rng, d1, d1),
            w_mix_token=_uniform(rng, d1, d4),
            w_mix_entity=_uniform(rng, d3, d4),
            b_mix=np.zeros(d4),
            w_regen_token=_uniform(rng, d4, d1),
            b_regen_token=np.zeros(d1),
            w_regen_entity=_uniform(rng, d4, d3),
            b_regen_entity=np.zeros(d3),
        ))
    return FusionParams(
        dims=dims,
        w_fuse=_uniform(rng, d2 + d1, d3),
        b_fuse=np.zeros(d3),
        w_norm=_uniform(rng, d3, d3),
        b_norm=np.zeros(d3),
        layers=layers,
    )


# ---------------------------------------------------------------------------
# entity space infusion

def entity_space_infusion(h_c, h_p, params):
    """Fuse a class vector (d2) with a token vector (d1) into d3.

    gelu([h_c || h_p] @ w_fuse + b_fuse), then a linear map and layer norm.
    Accepts single vectors or row-aligned batches.
    """
    dims = params.dims
    h_c = _check_width("h_c", h_c, dims.d2)
    h_p = _check_width("h_p", h_p, dims.d1)
    concat = np.concatenate([h_c, h_p], axis=-1)
    fused = gelu(concat @ params.w_fuse + params.b_fuse)
    return layer_norm(fused @ params.w_norm + params.b_norm)


def entity_space_infusion_vjp(h_c, h_p, params, g):
    """Gradients of a downstream scalar w.r.t. h_c and h_p."""
    dims = params.dims
    h_c = _check_width("h_c", h_c, dims.d2)
    h_p = _check_width("h_p", h_p, dims.d1)
    concat = np.concatenate([h_c, h_p], axis=-1)
    pre = concat @ params.w_fuse + params.b_fuse
    fused = gelu(pre)
    lin = fused @ params.w_norm + params.b_norm
    g_lin = _layer_norm_vjp(lin, g)
    g_fused = g_lin @ params.w_norm.T
    g_pre = _gelu_vjp(pre, g_fused)
    g_concat = g_pre @ params.w_fuse.T
    return g_concat[..., : dims.d2], g_concat[..., dims.d2:]


# ---------------------------------------------------------------------------
# multi-head self-attention

def _mhsa_forward(x, w_q, w_k, w_v, w_o, n_heads):
    n, d = x.shape
    dh = d // n_heads
    q = x @ w_q
    k = x @ w_k
    v = x @ w_v
    out = np.empty_like(x)
    cache = {"x": x, "q": q, "k": k, "v": v, "attn": [], "dh": dh}
    for h in range(n_heads):
        sl = slice(h * dh, (h + 1) * dh)
        scores = q[:, sl] @ k[:, sl].T / np.sqrt(dh)
        attn = _softmax_rows(scores)
        out[:, sl] = attn @ v[:, sl]
        cache["attn"].append(attn)
    cache["concat"] = out.copy()
    return out @ w_o, cache


def _mhsa_vjp(cache, w_q, w_k, w_v, w_o, g_out):
    x, q, k, v = cache["x"], cache["q"], cache["k"], cache["v"]
    dh = cache["dh"]
    g_concat = g_out @ w_o.T
    g_q = np.zeros_like(q)
    g_k = np.zeros_like(k)
    g_v = np.zeros_like(v)
    for h, attn in enumerate(cache["attn"]):
        sl = slice(h * dh, (h + 1) * dh)
        g_o = g_concat[:, sl]
        g_attn = g_o @ v[:, sl].T
        g_v[:, sl] = attn.T @ g_o
        g_scores = _softmax_vjp(attn, g_attn) / np.sqrt(dh)
        g_q[:, sl] = g_scores @ k[:, sl]
        g_k[:, sl] = g_scores.T @ q[:, sl]
    return g_q @ w_q.T + g_k @ w_k.T + g_v @ w_v.T


# ---------------------------------------------------------------------------
# knowledge injector

class InjectorResult(NamedTuple):
    """Post-attention streams plus the regenerated next-layer inputs."""

    attn_entities: np.ndarray   # m x d3
    attn_tokens: np.ndarray     # n x d1
    entities: np.ndarray        # m x d3, regenerated
    tokens: np.ndarray          # n x d1, regenerated
    cache: dict


def _check_alignment(alignment, n_entities, n_tokens):
    alignment = dict(alignment)
    seen_tokens = set()
    for e in range(n_entities):
        if e not in alignment:
            raise ValueError("entity row %d has no aligned token position" % e)
        t = alignment[e]
        if not 0 <= t < n_tokens:
            raise ValueError("entity row %d aligned to invalid token %d" % (e, t))
        if t in seen_tokens:
            raise ValueError("token position %d aligned to multiple entities" % t)
        seen_tokens.add(t)
    return alignment


def injector_layer(h_e_set, h_t_set, layer, alignment, n_heads=4):
    """One injector layer: joint attention, per-pair mixing, regeneration.

    h_e_set is m x d3, h_t_set is n x d1, and `alignment` maps each entity
    row to the token position it annotates. Entities are projected into the
    token width for one joint multi-head self-attention pass and projected
    back; each token is then mixed with its aligned entity (tokens without
    one skip the entity term) through a gelu bottleneck of width d4, and
    token/entity vectors are regenerated from the mix.
    """
    h_e_set = np.asarray(h_e_set, dtype=float)
    h_t_set = np.asarray(h_t_set, dtype=float)
    m, n = h_e_set.shape[0], h_t_set.shape[0]
    alignment = _check_alignment(alignment, m, n)
    e_proj = h_e_set @ layer.p_in
    joint = np.vstack([h_t_set, e_proj])
    attn_out, mhsa_cache = _mhsa_forward(
        joint, layer.w_q, layer.w_k, layer.w_v, layer.w_o, n_heads
    )
    attn_tokens = attn_out[:n]
    attn_entities = attn_out[n:] @ layer.p_out

    mix_pre = attn_tokens @ layer.w_mix_token + layer.b_mix
    for e, t in alignment.items():
        mix_pre[t] = mix_pre[t] + attn_entities[e] @ layer.w_mix_entity
    mixed = gelu(mix_pre)

    tok_pre = mixed @ layer.w_regen_token + layer.b_regen_token
    tokens = gelu(tok_pre)
    ent_rows = np.array([alignment[e] for e in range(m)], dtype=int)
    ent_pre = mixed[ent_rows] @ layer.w_regen_entity + layer.b_regen_entity
    entities = gelu(ent_pre)

    cache = {
        "mhsa": mhsa_cache, "mix_pre": mix_pre, "mixed": mixed,
        "tok_pre": tok_pre, "ent_pre": ent_pre, "ent_rows": ent_rows,
        "alignment": alignment, "n": n, "m": m, "n_heads": n_heads,
    }
    return InjectorResult(attn_entities, attn_tokens, entities, tokens, cache)


def injector_layer_vjp(layer, result, g_entities, g_tokens):
    """Gradients w.r.t. the layer inputs (h_e_set, h_t_set)."""
    cache = result.cache
    n, m = cache["n"], cache["m"]
    ent_rows = cache["ent_rows"]

    g_tok_pre = _gelu_vjp(cache["tok_pre"], g_tokens)
    g_mixed = g_tok_pre @ layer.w_regen_token.T
    g_ent_pre = _gelu_vjp(cache["ent_pre"], g_entities)
    np.add.at(g_mixed, ent_rows, g_ent_pre @ layer.w_regen_entity.T)

    g_mix_pre = _gelu_vjp(cache["mix_pre"], g_mixed)
    g_attn_tokens = g_mix_pre @ layer.w_mix_token.T
    g_attn_entities = np.zeros((m, layer.p_out.shape[1]))
    for e, t in cache["alignment"].items():
        g_attn_entities[e] = g_mix_pre[t] @ layer.w_mix_entity.T

    g_joint = np.vstack([g_attn_tokens, g_attn_entities @ layer.p_out.T])
    g_joint_in = _mhsa_vjp(
        cache["mhsa"], layer.w_q, layer.w_k, layer.w_v, layer.w_o, g_joint
    )
    g_h_t = g_joint_in[:n]
    g_h_e = g_joint_in[n:] @ layer.p_in.T
    return g_h_e, g_h_t


def injector_stack(h_e_set, h_t_set, params, alignment, mode="sequential"):
    """Run all injector layers; returns (entities, tokens, caches).

    "sequential" feeds each layer's regenerated outputs into the next layer,
    which is how aggregator stacks are normally composed. "sum" runs every
    layer on the original inputs and adds the regenerated outputs, the
    literal reading of summing layer terms; it exists for comparison.
    """
    if mode not in ("sequential", "sum"):
        raise ValueError("mode must be 'sequential' or 'sum'")
    n_heads = params.dims.n_heads
    caches = []
    if mode == "sequential":
        ents, toks = np.asarray(h_e_set, float), np.asarray(h_t_set, float)
        for layer in params.layers:
            result = injector_layer(ents, toks, layer, alignment, n_heads)
            caches.append(result)
            ents, toks = result.entities, result.tokens
        return ents, toks, caches
    ents = np.zeros_like(np.asarray(h_e_set, float))
    toks = np.zeros_like(np.asarray(h_t_set, float))
    for layer in params.layers:
        result = injector_layer(h_e_set, h_t_set, layer, alignment, n_heads)
        caches.append(result)
        ents = ents + result.entities
        toks = toks + result.tokens
    return ents, toks, caches


def injector_stack_vjp(params, caches, g_entities, g_tokens, mode="sequential"):
    """Gradients of the stack output w.r.t. the original (h_e_set, h_t_set)."""
    if mode == "sequential":
        g_e, g_t = g_entities, g_tokens
        for layer, result in zip(reversed(params.layers), reversed(caches)):
            g_e, g_t = injector_layer_vjp(layer, result, g_e, g_t)
        return g_e, g_t
    g_e_total = None
    g_t_total = None
    for layer, result in zip(params.layers, caches):
        g_e, g_t = injector_layer_vjp(layer, result, g_entities, g_tokens)
        g_e_total = g_e if g_e_total is None else g_e_total + g_e
        g_t_total = g_t if g_t_total is None else g_t_total + g_t
    return g_e_total, g_t_total


# ---------------------------------------------------------------------------
# losses

def _cosine(a, b):
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero-norm vector is undefined")
    return float(a @ b / (na * nb))


def info_nce(anchor, positive, negatives, tau=1.0):
    """Contrastive loss over cosine logits at temperature tau.

    The denominator holds the positive plus every negative; computed with a
    stable log-sum-exp. All vectors must share one width.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    anchor = np.asarray(anchor, dtype=float)
    positive = _check_width("positive", positive, anchor.shape[-1])
    negatives = np.asarray(negatives, dtype=float)
    if negatives.size == 0:
        raise ValueError("at least one negative is required")
    negatives = np.atleast_2d(negatives)
    _check_width("negatives", negatives, anchor.shape[-1])
    logits = np.array(
        [_cosine(anchor, positive)] + [_cosine(anchor, neg) for neg in negatives]
    ) / tau
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    return float(lse - logits[0])


def _cosine_grads(a, b):
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero-norm vector is undefined")
    c = float(a @ b / (na * nb))
    ga = b / (na * nb) - c * a / (na * na)
    gb = a / (na * nb) - c * b / (nb * nb)
    return c, ga, gb


def info_nce_grad(anchor, positive, negatives, tau=1.0):
    """(loss, g_anchor, g_positive, g_negatives) for one anchor."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    anchor = np.asarray(anchor, dtype=float)
    positive = _check_width("positive", positive, anchor.shape[-1])
    negatives = np.asarray(negatives, dtype=float)
    if negatives.size == 0:
        raise ValueError("at least one negative is required")
    negatives = np.atleast_2d(negatives)
    _check_width("negatives", negatives, anchor.shape[-1])
    k = negatives.shape[0]
    cos_terms = [_cosine_grads(anchor, positive)]
    cos_terms += [_cosine_grads(anchor, neg) for neg in negatives]
    logits = np.array([t[0] for t in cos_terms]) / tau
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    loss = float(lse - logits[0])
    p = np.exp(logits - lse)
    # d loss / d logit_0 = p_0 - 1; d loss / d logit_l = p_l
    g_anchor = np.zeros_like(anchor)
    g_anchor += (p[0] - 1.0) / tau * cos_terms[0][1]
    g_positive = (p[0] - 1.0) / tau * cos_terms[0][2]
    g_negatives = np.zeros_like(negatives)
    for l in range(k):
        g_anchor += p[l + 1] / tau * cos_terms[l + 1][1]
        g_negatives[l] = p[l + 1] / tau * cos_terms[l + 1][2]
    return loss, g_anchor, g_positive, g_negatives


def total_loss(l_mlm, l_cl, lam1=0.5, lam2=0.5):
    """Weighted sum of the language-model and contrastive terms."""
    if not (np.isfinite(l_mlm) and np.isfinite(l_cl)):
        raise ValueError("loss terms must be finite")
    return lam1 * l_mlm + lam2 * l_cl


# ---------------------------------------------------------------------------
# encoder stub

class EncoderStub:
    """Tiny deterministic self-attention text encoder.

    Token and position embeddings feed n_layers blocks of
    x = layer_norm(x + self_attention(x)); the first-token vector is the
    sequence summary. Out-of-vocabulary tokens map to a reserved UNK id.
    """

    UNK = "[UNK]"

    def __init__(self, vocabulary, d1=16, n_layers=2, n_heads=2,
                 max_positions=128, seed=0):
        if d1 % n_heads != 0:
            raise ValueError("d1 must divide into n_heads")
        self.d1 = d1
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.max_positions = max_positions
        self.seed = seed
        self.vocab = {self.UNK: 0}
        for token in vocabulary:
            if token not in self.vocab:
                self.vocab[token] = len(self.vocab)
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(d1)
        self.token_emb = rng.uniform(-scale, scale, size=(len(self.vocab), d1))
        self.pos_emb = rng.uniform(-scale, scale, size=(max_positions, d1))
        self.layers = [
            tuple(_uniform(rng, d1, d1) for _ in range(4))
            for _ in range(n_layers)
        ]

    def encode(self, tokens, position_ids):
        if len(tokens) == 0:
            raise ValueError("cannot encode an empty token sequence")
        if len(tokens) != len(position_ids):
            raise ValueError("tokens and position_ids must have equal length")
        ids = [self.vocab.get(t, 0) for t in tokens]
        pos = np.clip(np.asarray(position_ids, dtype=int), 0, self.max_positions - 1)
        x = self.token_emb[ids] + self.pos_emb[pos]
        for w_q, w_k, w_v, w_o in self.layers:
            attn, _ = _mhsa_forward(x, w_q, w_k, w_v, w_o, self.n_heads)
            x = layer_norm(x + attn)
        return x[0]


def encode_sample(stub, record):
    """Summary vector (d1) of a sample record under the encoder stub."""
    return stub.encode(record.tokens, record.position_index)


# ---------------------------------------------------------------------------
# parameter snapshots

def _param_entries(params):
    entries = [
        ("w_fuse", params.w_fuse), ("b_fuse", params.b_fuse),
        ("w_norm", params.w_norm), ("b_norm", params.b_norm),
    ]
    for i, layer in enumerate(params.layers):
        for name in ("p_in", "p_out", "w_q", "w_k", "w_v", "w_o",
                     "w_mix_token", "w_mix_entity", "b_mix",
                     "w_regen_token", "b_regen_token",
                     "w_regen_entity", "b_regen_entity"):
            entries.append(("layer%d.%s" % (i, name), getattr(layer, name)))
    return entries


def save_params(params, path):
    """Write a flat float64 binary next to a JSON shape manifest.

    The binary at `path` concatenates every array in manifest order; the
    manifest at `path + '.json'` records dims and each array's shape.
    """
    entries = _param_entries(params)
    flat = np.concatenate([np.asarray(a, dtype=np.float64).ravel() for _, a in entries])
    flat.tofile(path)
    manifest = {
        "dims": {
            "d1": params.dims.d1, "d2": params.dims.d2,
            "d3": params.dims.d3, "d4": params.dims.d4,
            "n_layers": params.dims.n_layers,
            "n_encoder_layers": params.dims.n_encoder_layers,
            "n_heads": params.dims.n_heads,
            "tau": params.dims.tau,
            "lam1": params.dims.lam1, "lam2": params.dims.lam2,
        },
        "dtype": "float64",
        "arrays": [[name, list(a.shape)] for name, a in entries],
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(path):
    """Rebuild FusionParams from a binary snapshot and its manifest."""
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    dims = FusionDims(**manifest["dims"])
    flat = np.fromfile(path, dtype=np.float64)
    arrays = {}
    offset = 0
    for name, shape in manifest["arrays"]:
        size = int(np.prod(shape)) if shape else 1
        arrays[name] = flat[offset:offset + size].reshape(shape)
        offset += size
    if offset != flat.size:
        raise ValueError(
            "snapshot holds %d values but manifest describes %d" % (flat.size, offset)
        )
    layers = []
    for i in range(dims.n_layers):
        fields = {}
        for name in ("p_in", "p_out", "w_q", "w_k", "w_v", "w_o",
                     "w_mix_token", "w_mix_entity", "b_mix",
                     "w_regen_token", "b_regen_token",
                     "w_regen_entity", "b_regen_entity"):
            fields[name] = arrays["layer%d.%s" % (i, name)]
        layers.append(InjectorLayerParams(**fields))
    return FusionParams(
        dims=dims,
        w_fuse=arrays["w_fuse"], b_fuse=arrays["b_fuse"],
        w_norm=arrays["w_norm"], b_norm=arrays["b_norm"],
        layers=layers,
    )


# ---------------------------------------------------------------------------
# self-checks

def _fd_grad(f, x, step=1e-5):
    """Central finite-difference gradient of scalar f at x (any shape)."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += step
        xm = x.copy(); xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2.0 * step)
        it.iternext()
    return g


def _rel_err(analytic, numeric):
    analytic = np.asarray(analytic, dtype=float).ravel()
    numeric = np.asarray(numeric, dtype=float).ravel()
    denom = np.maximum(np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


def _check_infusion_grads(rng, params, trials):
    worst = 0.0
    dims = params.dims
    for _ in range(trials):
        h_c = rng.standard_normal(dims.d2)
        h_p = rng.standard_normal(dims.d1)
        read = rng.standard_normal(dims.d3)
        g_c, g_p = entity_space_infusion_vjp(h_c, h_p, params, read)
        fd_c = _fd_grad(lambda x: entity_space_infusion(x, h_p, params) @ read, h_c)
        fd_p = _fd_grad(lambda x: entity_space_infusion(h_c, x, params) @ read, h_p)
        worst = max(worst, _rel_err(g_c, fd_c), _rel_err(g_p, fd_p))
    return worst


def _check_injector_grads(rng, params, trials):
    worst = 0.0
    dims = params.dims
    n, m = 5, 2
    alignment = {0: 1, 1: 3}
    read_t = rng.standard_normal((n, dims.d1))
    read_e = rng.standard_normal((m, dims.d3))

    def readout(h_e, h_t):
        ents, toks, _ = injector_stack(h_e, h_t, params, alignment)
        return float((ents * read_e).sum() + (toks * read_t).sum())

    for _ in range(trials):
        h_e = rng.standard_normal((m, dims.d3))
        h_t = rng.standard_normal((n, dims.d1))
        _, _, caches = injector_stack(h_e, h_t, params, alignment)
        g_e, g_t = injector_stack_vjp(params, caches, read_e, read_t)
        fd_e = _fd_grad(lambda x: readout(x, h_t), h_e)
        fd_t = _fd_grad(lambda x: readout(h_e, x), h_t)
        worst = max(worst, _rel_err(g_e, fd_e), _rel_err(g_t, fd_t))
    return worst


def _check_info_nce_grads(rng, trials, dim=8, k=4):
    worst = 0.0
    for _ in range(trials):
        a = rng.standard_normal(dim)
        p = rng.standard_normal(dim)
        negs = rng.standard_normal((k, dim))
        tau = float(rng.uniform(0.3, 2.0))
        _, g_a, g_p, g_n = info_nce_grad(a, p, negs, tau)
        fd_a = _fd_grad(lambda x: info_nce(x, p, negs, tau), a)
        fd_p = _fd_grad(lambda x: info_nce(a, x, negs, tau), p)
        fd_n = _fd_grad(lambda x: info_nce(a, p, x, tau), negs)
        worst = max(worst, _rel_err(g_a, fd_a), _rel_err(g_p, fd_p), _rel_err(g_n, fd_n))
    return worst


def run_fusion_checks(seed=0, trials=20):
    """Run the invariant and gradient suite; returns (name, ok, detail) rows."""
    rng = np.random.default_rng(seed)
    dims = FusionDims(d1=16, d2=8, d3=8, d4=16, n_layers=2,
                      n_encoder_layers=2, n_heads=2)
    params = init_params(dims, seed=seed)
    rows = []

    def record(name, ok, detail):
        rows.append((name, bool(ok), detail))

    val = float(gelu(0.0))
    record("gelu zero point", val == 0.0, "gelu(0) = %r" % val)
    val = float(gelu(10.0))
    record("gelu saturation", abs(val - 10.0) < 1e-6, "gelu(10) = %.9f" % val)

    v = layer_norm(np.full(6, 3.7))
    record("layer_norm constant vector", np.allclose(v, 0.0), "max |y| = %.3e" % np.abs(v).max())
    x = rng.standard_normal((trials, 12))
    y = layer_norm(x)
    mean_err = float(np.abs(y.mean(axis=-1)).max())
    var_err = float(np.abs(y.var(axis=-1) - 1.0).max())
    record("layer_norm mean", mean_err < 1e-9, "max |mean| = %.3e" % mean_err)
    record("layer_norm variance", var_err < 1e-6, "max |var - 1| = %.3e" % var_err)

    h_c = rng.standard_normal(dims.d2)
    h_p = rng.standard_normal(dims.d1)
    out = entity_space_infusion(h_c, h_p, params)
    record("infusion output width", out.shape == (dims.d3,), "shape %s" % (out.shape,))
    split = gelu(h_c @ params.w_fuse[:dims.d2] + h_p @ params.w_fuse[dims.d2:] + params.b_fuse)
    split = layer_norm(split @ params.w_norm + params.b_norm)
    gap = float(np.abs(out - split).max())
    record("infusion concat split", gap <= 1e-12, "max gap = %.3e" % gap)

    err = _check_infusion_grads(rng, params, trials)
    record("infusion gradients", err < 1e-4, "max rel err = %.3e over %d trials" % (err, trials))
    err = _check_injector_grads(rng, params, max(trials, 20))
    record("injector gradients", err < 1e-4, "max rel err = %.3e" % err)
    err = _check_info_nce_grads(rng, max(trials, 20))
    record("info_nce gradients", err < 1e-4, "max rel err = %.3e" % err)

    a = np.array([1.0, 0.0]); p = np.array([2.0, 0.0]); n1 = np.array([0.0, 3.0])
    loss = info_nce(a, p, [n1], tau=1.0)
    target = float(np.log(1.0 + np.exp(-1.0)))
    record("info_nce closed form", abs(loss - target) < 1e-9,
           "loss = %.9f vs log(1+e^-1) = %.9f" % (loss, target))
    k = 5
    same = rng.standard_normal(6)
    loss = info_nce(same, same, np.tile(same, (k, 1)), tau=0.7)
    record("info_nce equal logits", abs(loss - np.log(k + 1)) < 1e-9,
           "loss = %.9f vs log(%d)" % (loss, k + 1))
    a = rng.standard_normal(8); p = rng.standard_normal(8)
    negs = rng.standard_normal((3, 8))
    base = info_nce(a, p, negs, tau=1.3)
    scaled = info_nce(5.0 * a, 5.0 * p, 5.0 * negs, tau=1.3)
    record("info_nce scale invariance", abs(base - scaled) < 1e-9,
           "|delta| = %.3e" % abs(base - scaled))
    a = np.array([1.0, 0.0]); p = np.array([0.9, 0.1]); negs = np.array([[0.1, 1.0]])
    losses = [info_nce(a, p, negs, tau) for tau in (2.0, 1.0, 0.5, 0.25)]
    mono = all(l1 > l2 for l1, l2 in zip(losses, losses[1:]))
    record("info_nce tau monotonicity", mono,
           "losses at tau 2,1,0.5,0.25: %s" % ", ".join("%.4f" % l for l in losses))

    record("total_loss arithmetic", total_loss(2.0, 4.0, 0.5, 0.5) == 3.0,
           "0.5*2 + 0.5*4 = %r" % total_loss(2.0, 4.0, 0.5, 0.5))

    stub = EncoderStub(["alpha", "beta", "gamma"], d1=dims.d1,
                       n_layers=dims.n_encoder_layers, n_heads=dims.n_heads, seed=seed)
    toks = ["alpha", "beta", "gamma", "alpha"]
    pos = [0, 1, 1, 2]
    s1 = stub.encode(toks, pos)
    s2 = stub.encode(toks, pos)
    record("encoder determinism", np.array_equal(s1, s2), "identical summaries")
    s3 = stub.encode(toks, [0, 2, 2, 1])
    record("encoder position sensitivity", not np.allclose(s1, s3),
           "summary shifts when triple order swaps")
    record("encoder summary width", s1.shape == (dims.d1,), "shape %s" % (s1.shape,))
    return rows
