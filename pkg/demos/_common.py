"""Shared setup for the demo scripts: one small model, trained once.

Every demo runs on a 64x96 synthetic clip with a k=8 autoencoder so the
whole directory executes in minutes on a laptop CPU. The trained bundle is
cached under demos/output/shared so later demos start instantly.
"""

from pathlib import Path

import numpy as np

import videoae as v
from videoae.synthetic import moving_sprite_clip

OUTPUT = Path(__file__).parent / "output"
H, W, K = 64, 96, 8


def demo_clip() -> v.FrameSequence:
    return moving_sprite_clip(n_frames=36, h=H, w=W, velocity=(2.0, 0.0),
                              sigma=8.0, seed=7)


def demo_model() -> tuple[v.VideoAutoencoder, v.FrameSequence]:
    clip = demo_clip()
    bundle_dir = OUTPUT / "shared" / "bundle"
    if (bundle_dir / "manifest.json").is_file():
        model = v.VideoAutoencoder.from_bundle(v.load_model(bundle_dir))
        return model, clip
    config = v.AutoencoderConfig(base_channels=K, input_h=H, input_w=W)
    model = v.build_model(config, seed=0)
    print("training the shared demo model (about a minute)...")
    model, history = v.train(model, clip,
                             v.TrainConfig(epochs_constant=60, epochs_decay=30, seed=0),
                             log_every=30)
    v.save_model(model.to_bundle(), bundle_dir)
    (bundle_dir / "train_history.json").write_text(history.to_json())
    return model, clip


def outdir(name: str) -> Path:
    path = OUTPUT / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def save_strip(frames, path, labels=None):
    """Save frames side by side as one comparison image."""
    from PIL import Image

    from videoae.ingest import to_uint8

    arrs = [to_uint8(np.asarray(f)) for f in frames]
    h = max(a.shape[0] for a in arrs)
    gap = np.full((h, 4, 3), 255, np.uint8)
    row = []
    for a in arrs:
        if a.shape[0] < h:
            a = np.pad(a, ((0, h - a.shape[0]), (0, 0), (0, 0)))
        row.extend([a, gap])
    Image.fromarray(np.concatenate(row[:-1], axis=1)).save(path)
    if labels:
        print(f"{path}  [{' | '.join(labels)}]")
    else:
        print(path)
