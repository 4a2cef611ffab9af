"""Command-line entry points: generate, train, embed, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ExplorerError


def _add_generate(sub):
    p = sub.add_parser("generate", help="write a synthetic cohort dataset directory")
    p.add_argument("--n", type=int, required=True, help="cohort size (>= 30)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_run_generate)


def _run_generate(args) -> None:
    from .synth import generate_cohort

    ds = generate_cohort(args.n, seed=args.seed)
    out = ds.save(args.out)
    sizes = ds.split_sizes()
    print(f"wrote {len(ds)} subjects to {out} "
          f"(train {sizes['train']} / validation {sizes['validation']} / test {sizes['test']})")


def _add_train(sub):
    p = sub.add_parser("train", help="train the cross-modal autoencoder")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint path (model.ckpt)")
    p.add_argument("--latent-dim", type=int, default=16)
    p.add_argument("--temperature", type=float, default=0.1)
    p.add_argument("--contrastive-weight", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", default="384,96",
                   help="comma-separated encoder hidden widths")
    p.add_argument("--augment-noise", type=float, default=0.05)
    p.add_argument("--skip-heads", action="store_true",
                   help="do not fit downstream phenotype heads")
    p.set_defaults(func=_run_train)


def _run_train(args) -> None:
    from .checkpoint import save_checkpoint
    from .dataset import Dataset
    from .model import TrainConfig, compute_latents, train
    from .predict import fit_heads

    ds = Dataset.load(args.dataset)
    hidden = tuple(int(w) for w in args.hidden.split(",") if w)
    config = TrainConfig(
        latent_dim=args.latent_dim,
        temperature=args.temperature,
        contrastive_weight=args.contrastive_weight,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        lr=args.lr,
        seed=args.seed,
        encoder_hidden=hidden,
        augment_noise=args.augment_noise,
    )
    ckpt = train(ds, config)
    if not args.skip_heads:
        store = compute_latents(ckpt, ds)
        ckpt.heads = fit_heads(ckpt, ds, store)
    path = save_checkpoint(ckpt, args.out)
    print(f"wrote {path}: best epoch {ckpt.epoch_of_best}, "
          f"validation loss {ckpt.validation_loss_at_best:.6f} "
          f"(epoch 0: {ckpt.val_history[0]:.6f})")


def _add_embed(sub):
    p = sub.add_parser("embed", help="precompute 2-D t-SNE layouts per modality")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True, help="embeddings JSON path")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=750)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_run_embed)


def _run_embed(args) -> None:
    from .checkpoint import load_checkpoint
    from .dataset import Dataset
    from .model import MODALITIES, compute_latents
    from .service import save_embeddings
    from .tsne import TsneConfig, tsne_fit

    ds = Dataset.load(args.dataset)
    ckpt = load_checkpoint(args.ckpt)
    if ckpt.dataset_fingerprint != ds.fingerprint:
        raise ExplorerError("checkpoint does not match dataset")
    store = compute_latents(ckpt, ds)
    cfg = TsneConfig(perplexity=args.perplexity, iterations=args.iterations,
                     seed=args.seed)
    embeddings = {}
    for m in MODALITIES:
        embeddings[m] = tsne_fit(store.matrices[m], cfg, source_modality=m)
        print(f"{m}: KL {embeddings[m].kl_final:.4f}")
    save_embeddings(embeddings, ds, args.out)
    print(f"wrote {args.out}")


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the interactive HTTP service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--embeddings", default=None,
                   help="precomputed embeddings JSON (else t-SNE runs at startup)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000,
                   help="overridden by XMODAL_PORT if set")
    p.add_argument("--tsne-iterations", type=int, default=750)
    p.add_argument("--tsne-perplexity", type=float, default=30.0)
    p.set_defaults(func=_run_serve)


def _run_serve(args) -> None:
    import uvicorn

    from .checkpoint import load_checkpoint
    from .dataset import Dataset
    from .service import build_session, create_app, load_embeddings
    from .tsne import TsneConfig

    ds = Dataset.load(args.dataset)
    ckpt = load_checkpoint(args.ckpt)
    embeddings = None
    if args.embeddings:
        embeddings = load_embeddings(args.embeddings, ds)
    cfg = TsneConfig(perplexity=args.tsne_perplexity, iterations=args.tsne_iterations)
    session = build_session(ds, ckpt, embeddings=embeddings, tsne_config=cfg)
    app = create_app(session)
    port = int(os.environ.get("XMODAL_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="xmodal",
        description="cross-modal latent-space exploration toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_train(sub)
    _add_embed(sub)
    _add_serve(sub)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ExplorerError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
