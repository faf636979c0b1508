"""Pixel correspondence and mask propagation from hypercolumn codes.

Each pixel carries the concatenation of all encoder layers resized to frame
resolution; cosine matching within a search window yields dense flow, which
carries a one-frame annotation through the rest of the clip.
"""

import numpy as np

import videoae as v
from videoae.synthetic import rigid_sprite_clip
from _common import H, W, K, outdir, save_strip

out = outdir("07_masks")

clip, gt_masks = rigid_sprite_clip(n_frames=20, h=H, w=W, velocity=(2, 0),
                                   patch_size=28, seed=4)
config = v.AutoencoderConfig(base_channels=K, input_h=H, input_w=W)
model = v.build_model(config, seed=0)
model, _ = v.train(model, clip, v.TrainConfig(epochs_constant=50, epochs_decay=25, seed=0))

# dense flow between adjacent frames recovers the motion
fa = v.pixel_codes(model, clip[1])
fb = v.pixel_codes(model, clip[0])
flow = v.correspond(fa, fb, search_radius=8)
on_patch = gt_masks[1] > 0
print(f"pixel code dim: {fa.dim}")
print(f"median flow on the moving patch: dx={np.median(flow[on_patch][:, 0]):.0f} "
      f"dy={np.median(flow[on_patch][:, 1]):.0f} (true motion is +2, 0)")

# propagate the first-frame label through the clip
masks = v.propagate_mask(model, clip.frames[:13], gt_masks[0], search_radius=8)
for t in (4, 8, 12):
    gt = gt_masks[t] > 0
    got = masks[t] > 0
    print(f"IoU at frame {t}: {(gt & got).sum() / (gt | got).sum():.3f}")

overlay = []
for t in (0, 6, 12):
    frame = clip[t].copy()
    frame[masks[t] > 0] = 0.6 * frame[masks[t] > 0] + 0.4 * np.float32([1, 0, 0])
    overlay.append(frame)
save_strip(overlay, out / "propagated_masks.png", ["t=0", "t=6", "t=12"])
