"""Cross-attention math: text-conditioned base path plus the additive video branch.

Each head of the base path attends decoder states to text tokens. The video
branch runs a second attention over linearly projected video tokens with its
own head weights and adds the result, scaled by a learned alpha, to the base
head output before concatenation and the shared output projection. Setting
alpha to zero reproduces the base path exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch


@dataclass
class BaseAttentionWeights:
    """Frozen per-head projections of the text cross-attention."""

    wq: torch.Tensor  # (heads, m, d_head)
    wk: torch.Tensor  # (heads, m, d_head)
    wv: torch.Tensor  # (heads, m, d_head)
    out_proj: torch.Tensor  # (heads * d_head, m)

    def __post_init__(self):
        h, m, d = self.wq.shape
        for name in ("wk", "wv"):
            t = getattr(self, name)
            if t.shape != (h, m, d):
                raise ValueError(f"{name} shape {tuple(t.shape)} != {(h, m, d)}")
        if self.out_proj.shape != (h * d, m):
            raise ValueError(
                f"out_proj shape {tuple(self.out_proj.shape)} != {(h * d, m)}"
            )

    @property
    def n_heads(self) -> int:
        return self.wq.shape[0]

    @property
    def d_head(self) -> int:
        return self.wq.shape[2]


@dataclass
class AdapterWeights:
    """Trainable video-branch parameters: per-head maps, projection, and scale."""

    wq: torch.Tensor  # (heads, m, d_head)
    wk: torch.Tensor  # (heads, m, d_head)
    wv: torch.Tensor  # (heads, m, d_head)
    x_proj: torch.Tensor  # (m, n): maps video dimension n onto model dimension m
    alpha: torch.Tensor  # scalar

    def __post_init__(self):
        h, m, d = self.wq.shape
        for name in ("wk", "wv"):
            t = getattr(self, name)
            if t.shape != (h, m, d):
                raise ValueError(f"{name} shape {tuple(t.shape)} != {(h, m, d)}")
        if self.x_proj.ndim != 2 or self.x_proj.shape[0] != m:
            raise ValueError(
                f"x_proj must be (m={m}, n), got {tuple(self.x_proj.shape)}"
            )
        if self.alpha.numel() != 1:
            raise ValueError("alpha must be a scalar")
        if not torch.isfinite(self.alpha).all():
            raise ValueError("alpha must be finite")


@dataclass
class LoraDelta:
    """Low-rank update for a target matrix W (m x p): W + scale * B @ A."""

    a: torch.Tensor  # (r, p)
    b: torch.Tensor  # (m, r)
    scale: float = 1.0

    def __post_init__(self):
        if self.a.ndim != 2 or self.b.ndim != 2:
            raise ValueError("A and B must be matrices")
        if self.a.shape[0] != self.b.shape[1]:
            raise ValueError(
                f"rank mismatch: A is {tuple(self.a.shape)}, B is {tuple(self.b.shape)}"
            )

    @property
    def rank(self) -> int:
        return self.a.shape[0]


def scaled_dot_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """softmax(Q K^T / sqrt(d)) V over the last key axis."""
    d = q.shape[-1]
    scores = q @ k.transpose(-2, -1) / math.sqrt(d)
    return torch.softmax(scores, dim=-1) @ v


def _per_head(x: torch.Tensor, cond: torch.Tensor, wq, wk, wv) -> torch.Tensor:
    """Stacked heads: (heads, S, d_head) from (S, m) states and (T, m) condition."""
    q = torch.einsum("sm,hmd->hsd", x, wq)
    k = torch.einsum("tm,hmd->htd", cond, wk)
    v = torch.einsum("tm,hmd->htd", cond, wv)
    return scaled_dot_attention(q, k, v)


def _concat_project(heads: torch.Tensor, out_proj: torch.Tensor) -> torch.Tensor:
    # (heads, S, d_head) -> (S, heads * d_head) -> (S, m)
    s = heads.shape[1]
    return heads.permute(1, 0, 2).reshape(s, -1) @ out_proj


def base_cross_attention(
    x: torch.Tensor, z_t: torch.Tensor, w: BaseAttentionWeights
) -> torch.Tensor:
    """Text-only cross-attention: per-head attention, concat, output projection."""
    if x.ndim != 2 or z_t.ndim != 2:
        raise ValueError("x and z_t must be 2-D (tokens x model dim)")
    m = w.wq.shape[1]
    if x.shape[1] != m or z_t.shape[1] != m:
        raise ValueError(
            f"model dim mismatch: x {tuple(x.shape)}, z_t {tuple(z_t.shape)}, m={m}"
        )
    heads = _per_head(x, z_t, w.wq, w.wk, w.wv)
    return _concat_project(heads, w.out_proj)


def project_video(z_v: torch.Tensor, x_proj: torch.Tensor) -> torch.Tensor:
    """Map video tokens (T_v, n) onto the model dimension: z_v @ X^T."""
    if z_v.ndim != 2 or x_proj.ndim != 2:
        raise ValueError("z_v and X must be 2-D")
    if z_v.shape[1] != x_proj.shape[1]:
        raise ValueError(
            f"video dim mismatch: z_v {tuple(z_v.shape)}, X {tuple(x_proj.shape)}"
        )
    return z_v @ x_proj.T


def video_adapter_attention(
    x: torch.Tensor,
    z_t: torch.Tensor,
    z_v: torch.Tensor,
    base: BaseAttentionWeights,
    adapter: AdapterWeights,
) -> torch.Tensor:
    """Base text attention plus alpha-scaled video attention, summed per head.

    The sum happens before head concatenation; the base output projection is
    shared by both branches.
    """
    m = base.wq.shape[1]
    if x.shape[1] != m or z_t.shape[1] != m:
        raise ValueError("model dim mismatch")
    z_v_proj = project_video(z_v, adapter.x_proj)
    text_heads = _per_head(x, z_t, base.wq, base.wk, base.wv)
    video_heads = _per_head(x, z_v_proj, adapter.wq, adapter.wk, adapter.wv)
    heads = text_heads + adapter.alpha * video_heads
    return _concat_project(heads, base.out_proj)


def lora_effective(w: torch.Tensor, delta: LoraDelta) -> torch.Tensor:
    """Effective weight W + scale * B @ A."""
    m, p = w.shape
    if delta.b.shape[0] != m or delta.a.shape[1] != p:
        raise ValueError(
            f"delta shapes A{tuple(delta.a.shape)}/B{tuple(delta.b.shape)} "
            f"do not target a {m}x{p} matrix"
        )
    if delta.rank > min(m, p):
        raise ValueError(f"rank {delta.rank} exceeds min dimension {min(m, p)}")
    return w + delta.scale * (delta.b @ delta.a)
