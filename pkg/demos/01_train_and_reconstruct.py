"""Train a per-video autoencoder and inspect its reconstructions.

The model sees individual frames only (no temporal information) and
minimizes mean squared reconstruction error. After training, encode-decode
round trips reproduce the video at high PSNR, and the latent code is 16x
smaller than the input at the default width multiplier.
"""

import json

import numpy as np

import videoae as v
from _common import demo_clip, demo_model, outdir, save_strip

out = outdir("01_train")

model, clip = demo_model()
history = json.loads(open(outdir("shared") / "bundle" / "train_history.json").read())

print(f"epochs: {len(history['epoch_loss'])}")
print(f"loss: {history['epoch_loss'][0]:.5f} -> {history['epoch_loss'][-1]:.6f}")

# reconstruction quality across the clip
psnrs = [v.psnr(model.reconstruct(f), f) for f in clip.frames]
print(f"reconstruction PSNR: mean {np.mean(psnrs):.2f} dB, "
      f"min {np.min(psnrs):.2f} dB")

# the latent code is much smaller than the frame
code = model.encode(clip[0])
ratio = clip[0].size / code.values.size
print(f"latent shape {code.values.shape}, compression {ratio:.0f}x")

save_strip([clip[10], model.reconstruct(clip[10])], out / "reconstruction.png",
           ["original", "reconstruction"])

# loss curve
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

plt.figure(figsize=(5, 3))
plt.semilogy(history["epoch_loss"])
plt.xlabel("epoch")
plt.ylabel("mean squared error")
plt.tight_layout()
plt.savefig(out / "loss_curve.png", dpi=120)
print(out / "loss_curve.png")
