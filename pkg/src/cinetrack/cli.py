"""cinetrack command line: every pipeline stage as a subcommand.

    cinetrack build          construct the manifest from film directories
    cinetrack export         export finalized records as training pairs
    cinetrack train          fine-tune the toy decoder (adapter / lora / full)
    cinetrack eval           metric report over two embedding directories
    cinetrack select-survey  pick k representative clips by k-means
    cinetrack serve          run the human review service
    cinetrack mood-map       dump the canonical quadrant/mood table as JSON
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import PipelineConfig, load_config


def _base_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        "input_root": getattr(args, "input", None),
        "output_root": getattr(args, "output", None),
        "manifest_path": getattr(args, "manifest", None),
        "silence_weight": getattr(args, "threshold_silence_weight", None),
        "music_gate_threshold": getattr(args, "threshold_music_gate", None),
        "min_segment_seconds": getattr(args, "threshold_min_len", None),
        "max_gap_seconds": getattr(args, "threshold_max_gap", None),
        "seed": getattr(args, "seed", None),
    }
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **updates) if updates else config


def cmd_build(args) -> int:
    from .pipeline import build

    config = _base_config(args)
    report = build(config)
    print(
        f"processed {len(report.films_processed)} film(s), "
        f"skipped {len(report.films_skipped)} unchanged, "
        f"added {report.clips_added} clip(s)"
    )
    for film_id, error in report.errors.items():
        print(f"error: {film_id}: {error}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_export(args) -> int:
    from .pipeline import export_training

    config = _base_config(args)
    report = export_training(config, args.out)
    print(f"exported {len(report.exported)} clip(s), skipped {len(report.skipped)}")
    return 0


def _load_training_samples(data_dir: Path, config: PipelineConfig, model_cfg):
    import torch

    from .audio import load_wav
    from .model.encoders import FileVideoEncoder, HashTextEncoder, StubVideoEncoder
    from .model.tokenizer import mulaw_tokenize
    from .model.training import TrainingSample

    text_encoder = HashTextEncoder(model_cfg.d_model, seed=config.seed)
    if config.video_embedding_root:
        video_encoder = FileVideoEncoder(config.video_embedding_root)
    else:
        video_encoder = StubVideoEncoder(model_cfg.video_dim, seed=config.seed)

    samples = []
    with open(data_dir / "training.jsonl") as f:
        for line in f:
            entry = json.loads(line)
            tokens = mulaw_tokenize(load_wav(entry["audio"]))
            tokens = torch.clamp(tokens[: model_cfg.max_len], 0, model_cfg.vocab_size - 1)
            samples.append(
                TrainingSample(
                    tokens=tokens,
                    z_t=text_encoder.encode(entry["prompt"]),
                    z_v=video_encoder.encode(entry["clip_id"]),
                )
            )
    return samples


def cmd_train(args) -> int:
    import dataclasses as dc

    from .model.checkpoint import save_checkpoint
    from .model.decoder import DecoderConfig, ToyMusicDecoder
    from .model.training import TrainConfig, train

    config = _base_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.synthetic_benchmark:
        from .model.synthetic import run_conditioning_benchmark

        result, control = run_conditioning_benchmark(config.seed)
        result.write_history(out / "history.csv")
        control.write_history(out / "history_control.csv")
        print(
            f"conditioned val {result.best_val_loss:.4f} "
            f"vs shuffled control {control.best_val_loss:.4f}"
        )
        return 0

    model_cfg = DecoderConfig(
        vocab_size=args.vocab_size,
        d_model=args.d_model,
        n_heads=args.n_heads,
        n_layers=args.n_layers,
        video_dim=config.video_embedding_dim,
        max_len=args.max_len,
        adapter_enabled=args.mode == "adapter",
        alpha_init=args.alpha_init,
        lora_rank=args.lora_rank if args.mode == "lora" else 0,
        init_seed=config.seed,
    )
    train_cfg = TrainConfig(
        lr=args.lr,
        warmup_steps=args.warmup_steps,
        max_epochs=args.max_epochs,
        seed=config.seed,
    )
    samples = _load_training_samples(Path(args.data), config, model_cfg)
    if args.mode != "adapter":
        samples = [dc.replace(s, z_v=None) for s in samples]
    model = ToyMusicDecoder(model_cfg)
    result = train(samples, train_cfg, args.mode, model)
    result.write_history(out / "history.csv")
    save_checkpoint(
        out / "checkpoint.zip",
        model,
        extra={"mode": args.mode, "train": dc.asdict(train_cfg)},
    )
    print(
        f"trained {result.epochs_run} epoch(s), best val loss {result.best_val_loss:.4f}"
        f"{' (early stop)' if result.stopped_early else ''}"
    )
    return 0


def _load_prob_file(path) -> dict[str, list[float]]:
    return json.loads(Path(path).read_text())


def cmd_eval(args) -> int:
    from .metrics import ProbDistribution, evaluation_report, load_embedding_dir

    ref = load_embedding_dir(args.ref)
    gen = load_embedding_dir(args.gen)
    ref_probs = gen_probs = None
    if args.ref_probs and args.gen_probs:
        ref_map = _load_prob_file(args.ref_probs)
        gen_map = _load_prob_file(args.gen_probs)
        ids = sorted(set(ref_map) & set(gen_map))
        ref_probs = [ProbDistribution(ref_map[i]) for i in ids]
        gen_probs = [ProbDistribution(gen_map[i]) for i in ids]
    report = evaluation_report(
        ref, gen, k=args.k, seed=args.seed or 0, ref_probs=ref_probs, gen_probs=gen_probs
    )
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_select_survey(args) -> int:
    from .metrics import kmeans_select, load_embedding_dir

    emb = load_embedding_dir(args.embeddings)
    chosen = kmeans_select(emb, k=args.k, seed=args.seed or 0)
    text = json.dumps({"selected": chosen, "k": args.k, "seed": args.seed or 0}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        manifest_path=args.manifest,
        annotators=tuple(args.annotators),
        media_root=args.media_root,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_mood_map(args) -> int:
    from .prompts import mood_map

    text = json.dumps(mood_map(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config (.toml or .json)")
    parser.add_argument("--seed", type=int, default=None)


def _add_thresholds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threshold-silence-weight", type=float, default=None)
    parser.add_argument("--threshold-music-gate", type=float, default=None)
    parser.add_argument("--threshold-min-len", type=float, default=None)
    parser.add_argument("--threshold-max-gap", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cinetrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct the dataset manifest")
    _add_common(p)
    _add_thresholds(p)
    p.add_argument("--input", help="root of per-film directories")
    p.add_argument("--output", help="output root for clip media")
    p.add_argument("--manifest", help="manifest JSONL path")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("export", help="export finalized records for training")
    _add_common(p)
    p.add_argument("--manifest", help="manifest JSONL path")
    p.add_argument("--out", required=True, help="training output directory")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("train", help="fine-tune the toy decoder")
    _add_common(p)
    p.add_argument("--data", help="exported training directory")
    p.add_argument("--out", required=True, help="where to write checkpoint and history")
    p.add_argument("--mode", choices=("adapter", "lora", "full"), default="adapter")
    p.add_argument("--synthetic-benchmark", action="store_true",
                   help="run the video-conditioning benchmark instead of file data")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--warmup-steps", type=int, default=100)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--vocab-size", type=int, default=256)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--n-heads", type=int, default=4)
    p.add_argument("--n-layers", type=int, default=2)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--lora-rank", type=int, default=4)
    p.add_argument("--alpha-init", choices=("zero", "random"), default="zero")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="objective metric report")
    _add_common(p)
    p.add_argument("--ref", required=True, help="reference embedding directory")
    p.add_argument("--gen", required=True, help="generated embedding directory")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ref-probs", help="JSON id->distribution for the reference side")
    p.add_argument("--gen-probs", help="JSON id->distribution for the generated side")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("select-survey", help="k-means representative selection")
    _add_common(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_select_survey)

    p = sub.add_parser("serve", help="run the review service")
    _add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-root", default=".")
    p.add_argument("--annotators", nargs=2, metavar=("A", "B"), required=True)
    p.add_argument("--static", help="built UI directory to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("mood-map", help="dump the quadrant/mood bijection")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_mood_map)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
