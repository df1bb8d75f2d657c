"""Self-describing checkpoint archive.

A checkpoint is a zip holding config.json, shapes.json (tensor name ->
dimensions), and one raw row-major float32 file per parameter under
tensors/. Readable without torch.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import asdict

import numpy as np
import torch

from .decoder import DecoderConfig, ToyMusicDecoder


def save_checkpoint(path, model: ToyMusicDecoder, extra: dict | None = None) -> None:
    state = model.state_dict()
    shapes = {name: list(t.shape) for name, t in state.items()}
    config = {"model": asdict(model.config), "extra": extra or {}}
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("config.json", json.dumps(config, indent=2))
        zf.writestr("shapes.json", json.dumps(shapes, indent=2))
        for name, tensor in state.items():
            data = tensor.detach().cpu().numpy().astype(np.float32, copy=False)
            zf.writestr(f"tensors/{name}.f32", np.ascontiguousarray(data).tobytes())


def load_checkpoint(path) -> tuple[ToyMusicDecoder, dict]:
    with zipfile.ZipFile(path) as zf:
        config = json.loads(zf.read("config.json"))
        shapes = json.loads(zf.read("shapes.json"))
        state = {}
        for name, shape in shapes.items():
            raw = zf.read(f"tensors/{name}.f32")
            arr = np.frombuffer(raw, dtype=np.float32).reshape(shape).copy()
            state[name] = torch.from_numpy(arr)
    model_cfg = config["model"]
    if model_cfg.get("adapter_layers") is not None:
        model_cfg["adapter_layers"] = list(model_cfg["adapter_layers"])
    cfg = DecoderConfig(**model_cfg)
    model = ToyMusicDecoder(cfg)
    model.load_state_dict(state)
    return model, config["extra"]
