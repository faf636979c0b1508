"""Batch entry points: train, explore, edit and transmit from the shell.

Every subcommand is deterministic given ``--seed``, exits 0 on success and
2 on usage or input errors, and records a small provenance manifest beside
its outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, latentops, projection, transmit
from .autoencoder import AutoencoderConfig, TrainConfig, VideoAutoencoder, build_model, train
from .editing import PathSpec, make_texture
from .errors import InvalidTarget, VideoAEError
from .ingest import (
    FrameSequence,
    load_frames,
    load_model,
    resize_bilinear,
    save_frames,
    save_model,
    to_uint8,
)
from .synthetic import flip_study_clip


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
        return h, w
    except ValueError:
        raise InvalidTarget(f"size must look like 256x512, got {text!r}")


def _write_run_manifest(out: Path, args: argparse.Namespace):
    record = {
        "tool": "visa",
        "version": __version__,
        "argv": sys.argv[1:],
        "args": {k: str(v) for k, v in vars(args).items() if k != "func"},
        "time": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    target = out / "run.json" if out.is_dir() else out.parent / (out.name + ".run.json")
    target.write_text(json.dumps(record, indent=2))


def _load_conformed(frames_dir, size: tuple[int, int], label: str = "") -> FrameSequence:
    seq = load_frames(frames_dir, source_label=label)
    h, w = size
    if (seq.height, seq.width) != (h, w):
        frames = np.stack([resize_bilinear(f, h, w) for f in seq.frames])
        seq = FrameSequence(frames, seq.frame_ids, seq.source_label, seq.fps_hint)
    return seq


def _model_and_frames(args) -> tuple[VideoAutoencoder, FrameSequence]:
    model = VideoAutoencoder.from_bundle(load_model(args.bundle))
    seq = _load_conformed(args.frames, (model.config.input_h, model.config.input_w))
    return model, seq


def _codes(model, seq):
    return model.encode_batch(seq.frames)


# --- subcommands -------------------------------------------------------------

def cmd_train(args) -> int:
    h, w = _parse_size(args.size)
    seq = _load_conformed(args.frames, (h, w), label=args.label or Path(args.frames).name)
    config = AutoencoderConfig(
        base_channels=args.k, input_h=h, input_w=w,
        hflip_augmentation=args.hflip, multires_augmentation=args.multires,
    )
    tc = TrainConfig(
        batch_size=args.batch_size, lr=args.lr,
        epochs_constant=args.epochs_constant, epochs_decay=args.epochs_decay,
        seed=args.seed,
    )
    model = build_model(config, seed=args.seed)
    model, history = train(model, seq, tc, log_every=args.log_every)
    out = Path(args.out)
    save_model(model.to_bundle(), out)
    history_path = out / "train_history.json"
    history_path.write_text(history.to_json())
    _write_run_manifest(out, args)
    print(history_path)
    return 0


def cmd_embed(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    em = latentops.fit_embedding(codes)
    points = latentops.embedding_points(em, codes, frame_ids=seq.frame_ids,
                                        source_labels=[seq.source_label] * len(seq))
    out = Path(args.out)
    out.write_text(json.dumps(latentops.points_to_jsonable(points), indent=2))
    _write_run_manifest(out, args)
    print(out)
    return 0


def _write_png(frame: np.ndarray, out: Path):
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(frame)).save(out)


def cmd_superres(args) -> int:
    model = VideoAutoencoder.from_bundle(load_model(args.bundle))
    low = load_frames(Path(args.infile).parent, pattern=Path(args.infile).name)[0]
    th, tw = low.shape[0] * args.scale, low.shape[1] * args.scale
    if th % 64 or tw % 64:
        raise InvalidTarget(f"target {th}x{tw} not divisible by 64; pick another scale")
    out_frame = projection.spatial_superres(model, low, th, tw, args.n)
    out = Path(args.out)
    _write_png(out_frame, out)
    _write_run_manifest(out, args)
    print(out)
    return 0


def cmd_interpolate(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    n = len(codes)
    if not (0 <= args.a < n and 0 <= args.b < n):
        raise VideoAEError(f"frame ids must be in [0, {n})")
    frames = []
    if args.include_endpoints:
        frames.append(latentops.interpolate(model, codes[args.a], codes[args.b], 1.0))
    for j in range(1, args.steps + 1):
        alpha = 1.0 - j / (args.steps + 1)
        frames.append(latentops.interpolate(model, codes[args.a], codes[args.b], alpha))
    if args.include_endpoints:
        frames.append(latentops.interpolate(model, codes[args.a], codes[args.b], 0.0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(frames, out)
    _write_run_manifest(out, args)
    print(out)
    return 0


def cmd_texture(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    spec = PathSpec.from_jsonable(json.loads(Path(args.path).read_text()))
    em = latentops.fit_embedding(codes) if len(codes) >= 3 else None
    texture = make_texture(model, codes, spec, em=em)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(texture, out)
    _write_run_manifest(out, args)
    print(f"{out} ({len(texture)} frames)")
    return 0


def cmd_average(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    ids = [int(v) for v in args.ids.split(",") if v != ""]
    subset = [codes[i] for i in ids]
    frame = latentops.decode_average(model, subset, args.iterations)
    mediod = latentops.nearest_code_id(codes, latentops.average_codes(subset), ids)
    out = Path(args.out)
    _write_png(frame, out)
    _write_run_manifest(out, args)
    print(f"{out} mediod={mediod}")
    return 0


def cmd_cluster(args) -> int:
    model = VideoAutoencoder.from_bundle(load_model(args.bundle))
    size = (model.config.input_h, model.config.input_w)
    labels = args.labels.split(",") if args.labels else [Path(d).name for d in args.frames]
    if len(labels) != len(args.frames):
        raise VideoAEError("need one label per frames directory")
    codes, code_labels = [], []
    for directory, label in zip(args.frames, labels):
        seq = _load_conformed(directory, size, label=label)
        codes.extend(model.encode_batch(seq.frames))
        code_labels.extend([label] * len(seq))
    result = latentops.cluster(codes, args.k, seed=args.seed, labels=code_labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "clusters.json").write_text(result.to_json())
    with open(out / "purity_coverage.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cumulative_coverage", "purity"])
        writer.writerows(result.purity_curve)
    _write_run_manifest(out, args)
    print(f"{out} auc={result.auc:.4f}")
    return 0


def cmd_transmit(args) -> int:
    model = VideoAutoencoder.from_bundle(load_model(args.bundle))
    plan = transmit.TransmissionPlan.parse(args.plan)
    if args.direction == "send":
        seq = _load_conformed(args.frames, (model.config.input_h, model.config.input_w))
        digest16 = model.to_bundle().manifest.digest16()
        packets = transmit.send(seq, plan, digest16)
        out = Path(args.out)
        transmit.write_packets(out, packets)
        report = transmit.bitrate_report(packets, model.to_bundle(),
                                         duration_s=len(seq) / (seq.fps_hint or 10.0))
        (out.parent / (out.name + ".report.json")).write_text(report.to_json())
        _write_run_manifest(out, args)
        print(f"{out} ({len(packets)} packets)")
        return 0
    packets = transmit.read_packets(args.infile)
    seq = transmit.receive(model, packets, plan, target_fps_factor=args.fps_factor)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(seq, out)
    if args.ref:
        ref = _load_conformed(args.ref, (model.config.input_h, model.config.input_w))
        count = min(len(ref), len(seq))
        scores = {
            "psnr": float(np.mean([transmit.psnr(seq[i], ref[i]) for i in range(count)])),
            "ssim": float(np.mean([transmit.ssim(seq[i], ref[i]) for i in range(count)])),
            "frames_compared": count,
        }
        (out / "quality.json").write_text(json.dumps(scores, indent=2))
        print(f"{out} psnr={scores['psnr']:.3f} ssim={scores['ssim']:.4f}")
    else:
        print(out)
    _write_run_manifest(out, args)
    return 0


def cmd_eval_temporal(args) -> int:
    h, w = _parse_size(args.size)
    seq = _load_conformed(args.frames, (h, w), label=Path(args.frames).name)
    if len(seq) < 5:
        raise VideoAEError("temporal evaluation needs at least 5 frames")
    train_idx = np.arange(0, len(seq), 2) if args.mode == "ALT" else np.arange(len(seq))
    mid_idx = np.arange(1, len(seq) - 1, 2)

    config = AutoencoderConfig(base_channels=args.k, input_h=h, input_w=w)
    tc = TrainConfig(epochs_constant=args.epochs_constant, epochs_decay=args.epochs_decay,
                     seed=args.seed)
    model = build_model(config, seed=args.seed)
    train_seq = FrameSequence(seq.frames[train_idx], np.arange(len(train_idx)),
                              seq.source_label)
    model, _ = train(model, train_seq, tc, log_every=args.log_every)

    psnrs, ssims, base_psnrs = [], [], []
    for m in mid_idx:
        code_a = model.encode(seq[m - 1])
        code_b = model.encode(seq[m + 1])
        pred = latentops.interpolate(model, code_a, code_b, 0.5)
        if args.reproject_n > 0:
            pred = projection.iterate_project(model, pred, args.reproject_n)
        psnrs.append(transmit.psnr(pred, seq[m]))
        ssims.append(transmit.ssim(pred, seq[m]))
        base_psnrs.append(transmit.psnr(seq[m - 1], seq[m]))
    report = {
        "mode": args.mode,
        "reproject_n": args.reproject_n,
        "midpoints": len(mid_idx),
        "psnr_mean": float(np.mean(psnrs)),
        "psnr_std": float(np.std(psnrs)),
        "ssim_mean": float(np.mean(ssims)),
        "ssim_std": float(np.std(ssims)),
        "keyframe_copy_psnr_mean": float(np.mean(base_psnrs)),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "temporal_eval.json").write_text(json.dumps(report, indent=2))
    _write_run_manifest(out, args)
    print(f"{out} psnr={report['psnr_mean']:.3f} baseline={report['keyframe_copy_psnr_mean']:.3f}")
    return 0


def _flip_purity(model, frames: np.ndarray, fit_on_union: bool, seed: int) -> tuple[float, list]:
    """K=2 purity of original-vs-flipped frames in the 2D embedding."""
    codes_orig = model.encode_batch(frames)
    codes_flip = model.encode_batch(frames[:, :, ::-1].copy())
    # The embedding is fit on the model's training distribution: with flip
    # augmentation that distribution contains both orientations.
    em = latentops.fit_embedding(codes_orig + codes_flip if fit_on_union else codes_orig)
    xy = em.transform(codes_orig + codes_flip)
    labels = np.asarray(["orig"] * len(codes_orig) + ["flip"] * len(codes_flip))
    assign, _ = latentops.kmeans(xy, 2, seed=seed)
    purity = 0.0
    for c in (0, 1):
        members = labels[assign == c]
        if len(members):
            _, counts = np.unique(members, return_counts=True)
            purity += counts.max()
    purity /= len(labels)
    points = [{"x": float(x), "y": float(y), "orientation": str(l)}
              for (x, y), l in zip(xy, labels)]
    return purity, points


def cmd_analyze_flips(args) -> int:
    h, w = _parse_size(args.size)
    if args.frames:
        seq = _load_conformed(args.frames, (h, w))
    else:
        seq = flip_study_clip(h=h, w=w)
    tc = TrainConfig(epochs_constant=args.epochs_constant, epochs_decay=args.epochs_decay,
                     seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {}
    for flag in (True, False):
        config = AutoencoderConfig(base_channels=args.k, input_h=h, input_w=w,
                                   hflip_augmentation=flag)
        model = build_model(config, seed=args.seed)
        model, _ = train(model, seq, tc, log_every=args.log_every)
        purity, points = _flip_purity(model, seq.frames, fit_on_union=flag, seed=args.seed)
        name = "hflip_on" if flag else "hflip_off"
        (out / f"embedding_{name}.json").write_text(json.dumps(points, indent=2))
        report[name] = {"separation_purity": purity}
    (out / "flip_report.json").write_text(json.dumps(report, indent=2))
    _write_run_manifest(out, args)
    print(f"{out} on={report['hflip_on']['separation_purity']:.3f} "
          f"off={report['hflip_off']['separation_purity']:.3f}")
    return 0


def cmd_analyze_foreign(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    em = latentops.fit_embedding(codes)
    foreign = _load_conformed(args.foreign, (model.config.input_h, model.config.input_w))
    aligned, traces = projection.align_foreign(model, foreign, n=args.n, em=em)
    centroid = np.mean(em.transform(codes), axis=0)
    mean_dist = []
    for it in range(args.n):
        pts = np.array([[t.points[it].x, t.points[it].y] for t in traces])
        mean_dist.append(float(np.mean(np.linalg.norm(pts - centroid, axis=1))))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(aligned, out / "aligned")
    (out / "traces.json").write_text(json.dumps({
        "mean_distance_to_centroid": mean_dist,
        "traces": [t.to_jsonable() for t in traces],
    }, indent=2))
    _write_run_manifest(out, args)
    print(f"{out} distance {mean_dist[0]:.4f} -> {mean_dist[-1]:.4f}")
    return 0


def cmd_analyze_manifold(args) -> int:
    model, seq = _model_and_frames(args)
    codes = _codes(model, seq)
    em = latentops.fit_embedding(codes)
    xy = em.transform(codes)
    rows, cols = (int(v) for v in args.grid.lower().split("x"))
    xs = np.linspace(xy[:, 0].min(), xy[:, 0].max(), cols)
    ys = np.linspace(xy[:, 1].min(), xy[:, 1].max(), rows)
    points = [(float(x), float(y)) for y in ys for x in xs]
    frames = projection.sample_manifold(model, em, points)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(frames, out, pattern="sample_%06d.png")
    (out / "grid.json").write_text(json.dumps({"points": points, "rows": rows, "cols": cols},
                                              indent=2))
    _write_run_manifest(out, args)
    print(f"{out} ({len(points)} samples)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_service_config

    cfg = load_service_config(args.config)
    if args.catalog:
        cfg["catalog_root"] = args.catalog
    if args.host:
        cfg["host"] = args.host
    if args.port:
        cfg["port"] = args.port
    uvicorn.run(create_app(cfg["catalog_root"]), host=cfg["host"], port=cfg["port"])
    return 0


# --- parser -------------------------------------------------------------------

def _add_train_flags(p, k=16, size="128x192", ec=100, ed=100):
    p.add_argument("--k", type=int, default=k)
    p.add_argument("--size", default=size)
    p.add_argument("--epochs-constant", type=int, default=ec)
    p.add_argument("--epochs-decay", type=int, default=ed)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visa",
                                     description="per-video autoencoder toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a per-video autoencoder")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--size", default="256x512")
    p.add_argument("--hflip", action="store_true")
    p.add_argument("--multires", action="store_true")
    p.add_argument("--batch-size", type=int, default=6)
    p.add_argument("--lr", type=float, default=0.0002)
    p.add_argument("--epochs-constant", type=int, default=100)
    p.add_argument("--epochs-decay", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label", default="")
    p.add_argument("--log-every", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="export the 2D latent embedding")
    p.add_argument("--bundle", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("superres", help="spatial super-resolution of one image")
    p.add_argument("--bundle", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_superres)

    p = sub.add_parser("interpolate", help="latent interpolation between two frames")
    p.add_argument("--bundle", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--include-endpoints", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("texture", help="render a waypoint path as a video texture")
    p.add_argument("--bundle", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--path", required=True, help="JSON path spec")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_texture)

    p = sub.add_parser("average", help="decode the mean code of a frame selection")
    p.add_argument("--bundle", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--ids", required=True, help="comma-separated frame ids")
    p.add_argument("--iterations", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("cluster", help="k-means over latent codes with purity")
    p.add_argument("--bundle", required=True)
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--labels", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("transmit", help="packetize or reconstruct a video")
    p.add_argument("direction", choices=["send", "receive"])
    p.add_argument("--bundle", required=True)
    p.add_argument("--plan", default="stride=2,factor=4,n=5")
    p.add_argument("--frames", help="frames dir (send)")
    p.add_argument("--in", dest="infile", help=".vsat stream (receive)")
    p.add_argument("--fps-factor", type=float, default=1.0)
    p.add_argument("--ref", help="ground-truth frames dir for quality report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transmit)

    p = sub.add_parser("eval", help="evaluation protocols")
    evalsub = p.add_subparsers(dest="protocol", required=True)
    pe = evalsub.add_parser("temporal", help="2X temporal super-resolution study")
    pe.add_argument("--mode", choices=["ALT", "ALL"], required=True)
    pe.add_argument("--frames", required=True)
    pe.add_argument("--reproject-n", type=int, default=0)
    pe.add_argument("--out", required=True)
    _add_train_flags(pe)
    pe.set_defaults(func=cmd_eval_temporal)

    p = sub.add_parser("analyze", help="latent-space studies")
    asub = p.add_subparsers(dest="study", required=True)
    pa = asub.add_parser("flips", help="horizontal-flip augmentation ablation")
    pa.add_argument("--frames", default="")
    pa.add_argument("--out", required=True)
    _add_train_flags(pa, ec=40, ed=40)
    pa.set_defaults(func=cmd_analyze_flips)
    pf = asub.add_parser("foreign", help="align a foreign video by reprojection")
    pf.add_argument("--bundle", required=True)
    pf.add_argument("--frames", required=True, help="the model's own frames")
    pf.add_argument("--foreign", required=True)
    pf.add_argument("--n", type=int, default=25)
    pf.add_argument("--out", required=True)
    pf.set_defaults(func=cmd_analyze_foreign)
    pm = asub.add_parser("manifold", help="decode a 2D grid of manifold samples")
    pm.add_argument("--bundle", required=True)
    pm.add_argument("--frames", required=True)
    pm.add_argument("--grid", default="5x5")
    pm.add_argument("--out", required=True)
    pm.set_defaults(func=cmd_analyze_manifold)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--catalog", default="")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="")
    p.add_argument("--port", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (VideoAEError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
