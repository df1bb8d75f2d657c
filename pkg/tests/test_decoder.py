import pytest
import torch

from cinetrack.model.attention import base_cross_attention, video_adapter_attention
from cinetrack.model.checkpoint import load_checkpoint, save_checkpoint
from cinetrack.model.decoder import (
    DecoderConfig,
    ToyMusicDecoder,
    set_trainable,
    trainable_parameters,
)
from cinetrack.model.encoders import FileVideoEncoder, HashTextEncoder, StubVideoEncoder
from cinetrack.model.tokenizer import mulaw_detokenize, mulaw_tokenize


def tiny_config(**overrides) -> DecoderConfig:
    defaults = dict(
        vocab_size=12, d_model=8, n_heads=2, n_layers=2, video_dim=4, max_len=16
    )
    defaults.update(overrides)
    return DecoderConfig(**defaults)


def make_inputs(cfg, seed=0, s=6, t_t=3, t_v=2):
    g = torch.Generator().manual_seed(seed)
    tokens = torch.randint(0, cfg.vocab_size, (s,), generator=g)
    z_t = torch.randn(t_t, cfg.d_model, generator=g)
    z_v = torch.randn(t_v, cfg.video_dim, generator=g)
    return tokens, z_t, z_v


class TestDecoderForward:
    def test_causality(self):
        cfg = tiny_config()
        model = ToyMusicDecoder(cfg)
        tokens, z_t, z_v = make_inputs(cfg)
        logits = model(tokens, z_t, z_v)
        changed = tokens.clone()
        changed[4] = (changed[4] + 1) % cfg.vocab_size
        logits_changed = model(changed, z_t, z_v)
        torch.testing.assert_close(logits[:4], logits_changed[:4])
        assert not torch.allclose(logits[4:], logits_changed[4:])

    def test_no_video_falls_back_to_base_path(self):
        cfg = tiny_config(alpha_init="random")
        model = ToyMusicDecoder(cfg)
        tokens, z_t, _ = make_inputs(cfg)
        torch.testing.assert_close(model(tokens, z_t, None), model(tokens, z_t))

    def test_deterministic(self):
        cfg = tiny_config()
        tokens, z_t, z_v = make_inputs(cfg)
        a = ToyMusicDecoder(cfg)(tokens, z_t, z_v)
        b = ToyMusicDecoder(cfg)(tokens, z_t, z_v)
        torch.testing.assert_close(a, b)

    def test_token_out_of_range(self):
        cfg = tiny_config()
        model = ToyMusicDecoder(cfg)
        tokens, z_t, _ = make_inputs(cfg)
        tokens[0] = cfg.vocab_size
        with pytest.raises(ValueError, match="out of range"):
            model(tokens, z_t)

    def test_logit_shape(self):
        cfg = tiny_config()
        model = ToyMusicDecoder(cfg)
        tokens, z_t, z_v = make_inputs(cfg, s=5)
        assert model(tokens, z_t, z_v).shape == (5, cfg.vocab_size)

    def test_alpha_zero_model_matches_adapter_free_math(self):
        # with alpha at its zero init, supplying video must not move logits
        cfg = tiny_config(alpha_init="zero")
        model = ToyMusicDecoder(cfg)
        tokens, z_t, z_v = make_inputs(cfg)
        with_video = model(tokens, z_t, z_v)
        without = model(tokens, z_t)
        assert (with_video - without).abs().max().item() <= 1e-6


class TestModuleFunctionalParity:
    def test_cross_attention_matches_functional(self):
        cfg = tiny_config()
        model = ToyMusicDecoder(cfg)
        layer = model.blocks[0].cross_attn
        g = torch.Generator().manual_seed(11)
        x = torch.randn(4, cfg.d_model, generator=g)
        z_t = torch.randn(3, cfg.d_model, generator=g)
        z_v = torch.randn(2, cfg.video_dim, generator=g)
        with torch.no_grad():
            layer.alpha.fill_(0.45)
            got = layer(x, z_t, z_v)
        expected = video_adapter_attention(
            x, z_t, z_v, layer.base_weights(), layer.adapter_weights()
        )
        torch.testing.assert_close(got, expected, atol=1e-6, rtol=1e-5)

    def test_base_only_matches_functional(self):
        cfg = tiny_config(adapter_enabled=False)
        model = ToyMusicDecoder(cfg)
        layer = model.blocks[1].cross_attn
        g = torch.Generator().manual_seed(12)
        x = torch.randn(4, cfg.d_model, generator=g)
        z_t = torch.randn(3, cfg.d_model, generator=g)
        with torch.no_grad():
            got = layer(x, z_t)
        torch.testing.assert_close(
            got, base_cross_attention(x, z_t, layer.base_weights()), atol=1e-6, rtol=1e-5
        )


class TestTrainableParameters:
    def test_adapter_mode_excludes_base(self):
        model = ToyMusicDecoder(tiny_config())
        chosen = trainable_parameters(model, "adapter")
        assert chosen
        for name in chosen:
            leaf = name.rsplit(".", 1)[-1]
            assert leaf in ToyMusicDecoder.ADAPTER_PARAM_KEYS
        # every layer contributes its maps, projection, and gain
        assert sum("alpha" in n for n in chosen) == 2
        assert sum("x_proj" in n for n in chosen) == 2
        assert not any("token_emb" in n or "lm_head" in n or ".wq" in n for n in chosen)

    def test_full_mode_everything(self):
        model = ToyMusicDecoder(tiny_config())
        assert trainable_parameters(model, "full").keys() == dict(model.named_parameters()).keys()

    def test_lora_rank_zero_empty(self):
        model = ToyMusicDecoder(tiny_config(lora_rank=0))
        assert trainable_parameters(model, "lora") == {}

    def test_lora_mode_only_factors(self):
        model = ToyMusicDecoder(tiny_config(lora_rank=2))
        chosen = trainable_parameters(model, "lora")
        assert len(chosen) == 4 * 2  # a/b for q and v, per layer
        assert all("lora_" in name for name in chosen)

    def test_set_trainable_flags(self):
        model = ToyMusicDecoder(tiny_config())
        set_trainable(model, "adapter")
        for name, p in model.named_parameters():
            assert p.requires_grad == (model.parameter_mode(name) == "adapter")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            trainable_parameters(ToyMusicDecoder(tiny_config()), "everything")


class TestGradients:
    def test_adapter_gradients_match_finite_differences(self):
        torch.manual_seed(0)
        cfg = tiny_config(n_layers=2, alpha_init="random")
        model = ToyMusicDecoder(cfg).double()
        tokens, z_t, z_v = make_inputs(cfg, seed=5)
        z_t, z_v = z_t.double(), z_v.double()

        def loss_fn():
            logits = model(tokens, z_t, z_v)
            return torch.nn.functional.cross_entropy(logits[:-1], tokens[1:])

        loss = loss_fn()
        params = trainable_parameters(model, "adapter")
        grads = torch.autograd.grad(loss, list(params.values()), allow_unused=False)

        eps = 1e-6
        checked = 0
        for (name, param), grad in zip(params.items(), grads):
            flat = param.data.view(-1)
            for j in range(0, flat.numel(), max(1, flat.numel() // 3)):
                original = flat[j].item()
                flat[j] = original + eps
                up = loss_fn().item()
                flat[j] = original - eps
                down = loss_fn().item()
                flat[j] = original
                numeric = (up - down) / (2 * eps)
                analytic = grad.view(-1)[j].item()
                denom = max(abs(numeric), abs(analytic), 1e-8)
                assert abs(numeric - analytic) / denom < 1e-4, (
                    f"{name}[{j}]: analytic {analytic} vs numeric {numeric}"
                )
                checked += 1
        assert checked >= 10


class TestFreeze:
    def test_base_bitwise_unchanged_after_steps(self):
        cfg = tiny_config(alpha_init="random")
        model = ToyMusicDecoder(cfg)
        tokens, z_t, z_v = make_inputs(cfg, seed=9)
        params = set_trainable(model, "adapter")
        optimizer = torch.optim.AdamW(params, lr=1e-2)

        before = {
            name: p.detach().clone()
            for name, p in model.named_parameters()
            if model.parameter_mode(name) != "adapter"
        }
        adapter_before = {
            name: p.detach().clone()
            for name, p in model.named_parameters()
            if model.parameter_mode(name) == "adapter"
        }
        for _ in range(10):
            optimizer.zero_grad()
            logits = model(tokens, z_t, z_v)
            loss = torch.nn.functional.cross_entropy(logits[:-1], tokens[1:])
            loss.backward()
            optimizer.step()

        for name, old in before.items():
            now = dict(model.named_parameters())[name]
            assert torch.equal(old, now), f"frozen parameter {name} changed"
        for name, old in adapter_before.items():
            now = dict(model.named_parameters())[name]
            assert not torch.equal(old, now), f"adapter parameter {name} never moved"


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        cfg = tiny_config(alpha_init="random")
        model = ToyMusicDecoder(cfg)
        path = tmp_path / "model.zip"
        save_checkpoint(path, model, extra={"mode": "adapter"})
        restored, extra = load_checkpoint(path)
        assert extra == {"mode": "adapter"}
        tokens, z_t, z_v = make_inputs(cfg)
        torch.testing.assert_close(
            restored(tokens, z_t, z_v), model(tokens, z_t, z_v), atol=1e-6, rtol=1e-5
        )

    def test_archive_is_self_describing(self, tmp_path):
        import json
        import zipfile

        model = ToyMusicDecoder(tiny_config())
        path = tmp_path / "model.zip"
        save_checkpoint(path, model)
        with zipfile.ZipFile(path) as zf:
            names = set(zf.namelist())
            assert "config.json" in names
            assert "shapes.json" in names
            shapes = json.loads(zf.read("shapes.json"))
            for name, shape in shapes.items():
                raw = zf.read(f"tensors/{name}.f32")
                count = 1
                for dim in shape:
                    count *= dim
                assert len(raw) == 4 * count


class TestTokenizer:
    def test_round_trip_small_error(self):
        from conftest import sine

        buf = sine(200, 1.0, 8000, amplitude=0.7)
        tokens = mulaw_tokenize(buf)
        assert tokens.min() >= 0 and tokens.max() < 256
        back = mulaw_detokenize(tokens)
        assert back.sample_rate == 1000
        # mu-law quantization error stays small for mid-scale signals
        reference = mulaw_detokenize(mulaw_tokenize(back))
        assert (back.samples - reference.samples).max() < 1e-6

    def test_deterministic(self):
        from conftest import sine

        buf = sine(313, 0.5, 8000)
        assert torch.equal(mulaw_tokenize(buf), mulaw_tokenize(buf))


class TestEncoders:
    def test_hash_text_encoder_deterministic(self):
        enc = HashTextEncoder(dim=8, seed=3)
        a = enc.encode("soft strings build slowly")
        b = enc.encode("soft strings build slowly")
        torch.testing.assert_close(a, b)
        assert a.shape == (4, 8)

    def test_stub_video_encoder_keyed_by_id(self):
        enc = StubVideoEncoder(dim=6, n_tokens=3, seed=1)
        a = enc.encode("clip_a")
        torch.testing.assert_close(a, enc.encode("clip_a"))
        assert not torch.allclose(a, enc.encode("clip_b"))
        assert a.shape == (3, 6)

    def test_file_video_encoder(self, tmp_path):
        import json

        import numpy as np

        arr = np.arange(12, dtype=np.float32).reshape(3, 4)
        (tmp_path / "clip1.f32").write_bytes(arr.tobytes())
        (tmp_path / "clip1.json").write_text(json.dumps({"shape": [3, 4]}))
        out = FileVideoEncoder(tmp_path).encode("clip1")
        torch.testing.assert_close(out, torch.from_numpy(arr))
