"""Video textures and timeline resampling.

Cosine similarity on latent codes finds frames that can follow each other;
latent interpolation bridges the remaining gap, which closes loops without
an exact match. The same interpolation inserts frames between neighbors for
slow motion.
"""

import numpy as np

import videoae as v
from videoae.editing import PathSpec
from videoae.synthetic import periodic_clip
from _common import H, W, K, outdir, save_strip

out = outdir("03_textures")

# a periodic clip is the natural texture source
clip = periodic_clip(n_frames=40, h=H, w=W, period=16, amplitude=20.0, seed=3)
config = v.AutoencoderConfig(base_channels=K, input_h=H, input_w=W)
model = v.build_model(config, seed=0)
model, _ = v.train(model, clip, v.TrainConfig(epochs_constant=40, epochs_decay=20, seed=0))

codes = model.encode_batch(clip.frames)

# who could follow frame 4? mask out immediate neighbors to find the repeat
ranked = [i for i in v.nearest_frames(codes, 4, len(codes) - 1) if abs(i - 4) > 2]
print(f"frame 4's best non-adjacent match: frame {ranked[0]} (period is 16)")

# an infinite loop: play a stretch, bridge back to the start
path = PathSpec(waypoints=list(range(0, 17)), bridge_frames=0, loop=True)
loop = v.make_texture(model, codes, path)
print(f"loop texture: {len(loop)} frames (16 originals + closing bridge)")
v.save_frames(loop, out / "loop_frames")

# bridged jumps are smoother than hard cuts
jump = PathSpec(waypoints=[0, 20], bridge_frames=3)
seq = v.make_texture(model, codes, jump)
save_strip(list(seq.frames), out / "bridge.png")

# slow motion: 2x timeline with latent midpoints
slow = v.resample_timeline(model, codes[:8], factor=2.0)
print(f"2x resample of 8 codes -> {len(slow)} frames")
save_strip(list(slow.frames[:7]), out / "slow_motion.png")
