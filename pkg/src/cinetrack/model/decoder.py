"""Toy autoregressive decoder: causal self-attention blocks interleaved with
text cross-attention, optionally carrying the trainable video branch and LoRA.

Sized for CPU experiments; the architecture exercises the same mechanisms as
a production text-to-music decoder (frozen base, additive video adapter,
low-rank updates) without its scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .attention import AdapterWeights, BaseAttentionWeights


@dataclass
class DecoderConfig:
    vocab_size: int = 16
    d_model: int = 16
    n_heads: int = 2
    n_layers: int = 2
    video_dim: int = 8
    max_len: int = 64
    ffn_mult: int = 4
    adapter_enabled: bool = True
    adapter_layers: list[int] | None = None  # None = every layer
    alpha_init: str = "zero"  # "zero" | "random"
    x_proj_bias: bool = False
    lora_rank: int = 0
    lora_scale: float = 1.0
    init_seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.alpha_init not in ("zero", "random"):
            raise ValueError(f"unknown alpha_init {self.alpha_init!r}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads


def _init_linear(shape, fan_in: int, generator: torch.Generator) -> torch.Tensor:
    return torch.randn(*shape, generator=generator) / math.sqrt(fan_in)


class CausalSelfAttention(nn.Module):
    def __init__(self, cfg: DecoderConfig, generator: torch.Generator):
        super().__init__()
        m = cfg.d_model
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_head
        self.wq = nn.Parameter(_init_linear((m, m), m, generator))
        self.wk = nn.Parameter(_init_linear((m, m), m, generator))
        self.wv = nn.Parameter(_init_linear((m, m), m, generator))
        self.out = nn.Parameter(_init_linear((m, m), m, generator))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s, m = x.shape
        h, d = self.n_heads, self.d_head
        q = (x @ self.wq).reshape(s, h, d).transpose(0, 1)
        k = (x @ self.wk).reshape(s, h, d).transpose(0, 1)
        v = (x @ self.wv).reshape(s, h, d).transpose(0, 1)
        scores = q @ k.transpose(-2, -1) / math.sqrt(d)
        mask = torch.triu(torch.ones(s, s, dtype=torch.bool, device=x.device), 1)
        scores = scores.masked_fill(mask, float("-inf"))
        heads = torch.softmax(scores, dim=-1) @ v
        return heads.transpose(0, 1).reshape(s, m) @ self.out


class CrossAttention(nn.Module):
    """Text cross-attention with an optional additive video branch and LoRA.

    Base projections are stored fused as (m, heads * d_head); the video
    branch mirrors them with its own trainable copies plus the projection
    from video dimension to model dimension and the scalar branch gain.
    """

    def __init__(self, cfg: DecoderConfig, with_adapter: bool, generator: torch.Generator):
        super().__init__()
        m, n = cfg.d_model, cfg.video_dim
        hd = cfg.n_heads * cfg.d_head
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_head
        self.wq = nn.Parameter(_init_linear((m, hd), m, generator))
        self.wk = nn.Parameter(_init_linear((m, hd), m, generator))
        self.wv = nn.Parameter(_init_linear((m, hd), m, generator))
        self.out = nn.Parameter(_init_linear((hd, m), hd, generator))

        self.has_adapter = with_adapter
        if with_adapter:
            self.adapter_wq = nn.Parameter(_init_linear((m, hd), m, generator))
            self.adapter_wk = nn.Parameter(_init_linear((m, hd), m, generator))
            self.adapter_wv = nn.Parameter(_init_linear((m, hd), m, generator))
            self.x_proj = nn.Parameter(_init_linear((m, n), n, generator))
            if cfg.x_proj_bias:
                self.x_proj_b = nn.Parameter(torch.zeros(m))
            else:
                self.x_proj_b = None
            if cfg.alpha_init == "random":
                self.alpha = nn.Parameter(torch.randn((), generator=generator))
            else:
                self.alpha = nn.Parameter(torch.zeros(()))

        self.lora_rank = cfg.lora_rank
        if cfg.lora_rank > 0:
            r = cfg.lora_rank
            if r > min(m, hd):
                raise ValueError(f"lora rank {r} exceeds min dimension {min(m, hd)}")
            self.lora_scale = cfg.lora_scale
            # classic targets: query and value projections; B starts at zero
            self.lora_a_q = nn.Parameter(torch.randn(r, hd, generator=generator) / math.sqrt(r))
            self.lora_b_q = nn.Parameter(torch.zeros(m, r))
            self.lora_a_v = nn.Parameter(torch.randn(r, hd, generator=generator) / math.sqrt(r))
            self.lora_b_v = nn.Parameter(torch.zeros(m, r))

    def _effective_q(self) -> torch.Tensor:
        if self.lora_rank > 0:
            return self.wq + self.lora_scale * (self.lora_b_q @ self.lora_a_q)
        return self.wq

    def _effective_v(self) -> torch.Tensor:
        if self.lora_rank > 0:
            return self.wv + self.lora_scale * (self.lora_b_v @ self.lora_a_v)
        return self.wv

    def _heads(self, x, cond, wq, wk, wv) -> torch.Tensor:
        s = x.shape[0]
        t = cond.shape[0]
        h, d = self.n_heads, self.d_head
        q = (x @ wq).reshape(s, h, d).transpose(0, 1)
        k = (cond @ wk).reshape(t, h, d).transpose(0, 1)
        v = (cond @ wv).reshape(t, h, d).transpose(0, 1)
        scores = q @ k.transpose(-2, -1) / math.sqrt(d)
        return torch.softmax(scores, dim=-1) @ v

    def forward(
        self,
        x: torch.Tensor,
        z_t: torch.Tensor,
        z_v: torch.Tensor | None = None,
    ) -> torch.Tensor:
        s = x.shape[0]
        heads = self._heads(x, z_t, self._effective_q(), self.wk, self._effective_v())
        if self.has_adapter and z_v is not None:
            z_v_proj = z_v @ self.x_proj.T
            if self.x_proj_b is not None:
                z_v_proj = z_v_proj + self.x_proj_b
            video = self._heads(x, z_v_proj, self.adapter_wq, self.adapter_wk, self.adapter_wv)
            heads = heads + self.alpha * video
        return heads.transpose(0, 1).reshape(s, -1) @ self.out

    def base_weights(self) -> BaseAttentionWeights:
        """Per-head view of the frozen base path, for the functional API."""
        h, d = self.n_heads, self.d_head

        def split(w):
            m = w.shape[0]
            return w.reshape(m, h, d).permute(1, 0, 2).detach().clone()

        return BaseAttentionWeights(
            split(self.wq), split(self.wk), split(self.wv), self.out.detach().clone()
        )

    def adapter_weights(self) -> AdapterWeights:
        if not self.has_adapter:
            raise ValueError("layer has no video branch")
        h, d = self.n_heads, self.d_head

        def split(w):
            m = w.shape[0]
            return w.reshape(m, h, d).permute(1, 0, 2).detach().clone()

        return AdapterWeights(
            split(self.adapter_wq),
            split(self.adapter_wk),
            split(self.adapter_wv),
            self.x_proj.detach().clone(),
            self.alpha.detach().clone(),
        )


class DecoderBlock(nn.Module):
    def __init__(self, cfg: DecoderConfig, with_adapter: bool, generator: torch.Generator):
        super().__init__()
        m = cfg.d_model
        self.ln1 = nn.LayerNorm(m)
        self.self_attn = CausalSelfAttention(cfg, generator)
        self.ln2 = nn.LayerNorm(m)
        self.cross_attn = CrossAttention(cfg, with_adapter, generator)
        self.ln3 = nn.LayerNorm(m)
        self.ff1 = nn.Parameter(_init_linear((m, cfg.ffn_mult * m), m, generator))
        self.ff2 = nn.Parameter(_init_linear((cfg.ffn_mult * m, m), cfg.ffn_mult * m, generator))

    def forward(self, x, z_t, z_v=None):
        x = x + self.self_attn(self.ln1(x))
        x = x + self.cross_attn(self.ln2(x), z_t, z_v)
        x = x + torch.nn.functional.gelu(self.ln3(x) @ self.ff1) @ self.ff2
        return x


class ToyMusicDecoder(nn.Module):
    """Next-token decoder over a small vocabulary with text and video conditioning.

    Forward is causal: logits at position t depend only on tokens up to t.
    When the video branch is enabled but no video embedding is supplied, the
    layer falls back to the text-only path.
    """

    ADAPTER_PARAM_KEYS = ("adapter_wq", "adapter_wk", "adapter_wv", "x_proj", "x_proj_b", "alpha")
    LORA_PARAM_KEYS = ("lora_a_q", "lora_b_q", "lora_a_v", "lora_b_v")

    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.config = cfg
        g = torch.Generator().manual_seed(cfg.init_seed)
        m = cfg.d_model
        adapter_layers = (
            set(range(cfg.n_layers)) if cfg.adapter_layers is None else set(cfg.adapter_layers)
        )
        self.token_emb = nn.Parameter(torch.randn(cfg.vocab_size, m, generator=g))
        self.pos_emb = nn.Parameter(torch.randn(cfg.max_len, m, generator=g) * 0.02)
        self.blocks = nn.ModuleList(
            DecoderBlock(cfg, cfg.adapter_enabled and i in adapter_layers, g)
            for i in range(cfg.n_layers)
        )
        self.ln_f = nn.LayerNorm(m)
        self.lm_head = nn.Parameter(_init_linear((m, cfg.vocab_size), m, g))

    def forward(
        self,
        tokens: torch.Tensor,
        z_t: torch.Tensor,
        z_v: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if tokens.ndim != 1:
            raise ValueError("tokens must be a 1-D id sequence")
        if tokens.numel() == 0:
            raise ValueError("tokens must be non-empty")
        if int(tokens.max()) >= self.config.vocab_size or int(tokens.min()) < 0:
            raise ValueError(
                f"token id out of range for vocabulary of {self.config.vocab_size}"
            )
        s = tokens.shape[0]
        if s > self.config.max_len:
            raise ValueError(f"sequence of {s} exceeds max_len {self.config.max_len}")
        x = self.token_emb[tokens] + self.pos_emb[:s]
        for block in self.blocks:
            x = block(x, z_t, z_v)
        return self.ln_f(x) @ self.lm_head

    def parameter_mode(self, name: str) -> str:
        """Classify a parameter name as adapter, lora, or base."""
        leaf = name.rsplit(".", 1)[-1]
        if leaf in self.ADAPTER_PARAM_KEYS:
            return "adapter"
        if leaf in self.LORA_PARAM_KEYS:
            return "lora"
        return "base"


def trainable_parameters(model: ToyMusicDecoder, mode: str) -> dict[str, nn.Parameter]:
    """Exactly the parameters a fine-tuning mode may update.

    adapter: the video-branch maps, projection, and gain of every layer.
    lora: the low-rank factors. full: everything.
    """
    if mode == "full":
        return dict(model.named_parameters())
    if mode not in ("adapter", "lora"):
        raise ValueError(f"unknown mode {mode!r}")
    return {
        name: p
        for name, p in model.named_parameters()
        if model.parameter_mode(name) == mode
    }


def set_trainable(model: ToyMusicDecoder, mode: str) -> list[nn.Parameter]:
    """Freeze everything outside the mode's parameter set; return the live ones."""
    chosen = trainable_parameters(model, mode)
    for name, p in model.named_parameters():
        p.requires_grad_(name in chosen)
    return list(chosen.values())
