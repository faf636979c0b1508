"""Explore a video through its latent codes.

Latent codes of a video trained without temporal information still form a
temporally continuous curve in code space. A 2D PCA view makes the video
browsable at a glance; averaging code subsets summarizes segments, and the
mediod picks the most representative original frame.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import videoae as v
from videoae.latentops import embedding_points, nearest_code_id
from _common import demo_model, outdir, save_strip

out = outdir("02_explore")
model, clip = demo_model()

codes = model.encode_batch(clip.frames)
em = v.fit_embedding(codes)
points = embedding_points(em, codes)

# temporal continuity emerges without temporal supervision
xy = np.array([[p.x, p.y] for p in points])
plt.figure(figsize=(5, 4))
plt.scatter(xy[:, 0], xy[:, 1], c=np.arange(len(xy)), cmap="viridis", s=18)
plt.plot(xy[:, 0], xy[:, 1], lw=0.5, alpha=0.5)
plt.colorbar(label="frame index")
plt.tight_layout()
plt.savefig(out / "embedding.png", dpi=120)
print(out / "embedding.png")

consec = np.linalg.norm(np.diff(xy, axis=0), axis=1).mean()
rand = np.linalg.norm(xy[:, None] - xy[None, :], axis=2).mean()
print(f"mean consecutive distance {consec:.3f} vs mean pair distance {rand:.3f}")

# average a selection of frames and find its mediod
selection = list(range(10, 20))
subset = [codes[i] for i in selection]
avg_plain = v.decode_average(model, subset)
avg_sharp = v.decode_average(model, subset, iterations=5)
pixel_mean = clip.frames[selection].mean(axis=0)
mediod = nearest_code_id(codes, v.average_codes(subset), selection)
print(f"mediod of frames {selection[0]}..{selection[-1]}: frame {mediod}")
save_strip([pixel_mean, avg_plain, avg_sharp], out / "averages.png",
           ["pixel mean", "latent average", "latent average + 5 reprojections"])

# decode points straight off the 2D manifold view
grid = [(float(x), 0.0) for x in np.linspace(xy[:, 0].min(), xy[:, 0].max(), 5)]
samples = v.sample_manifold(model, em, grid)
save_strip(samples, out / "manifold_walk.png")
