"""Spatial editing through reprojection.

Copy-paste edits look crude, but a pass through the video-specific
autoencoder projects the collage back onto the video manifold, blending the
seams. The same trick stitches frames side by side, stretches one frame
into a panorama, and extrapolates beyond the borders.
"""

import numpy as np

import videoae as v
from _common import demo_model, outdir, save_strip

out = outdir("04_edits")
model, clip = demo_model()

# remove the sprite by pasting background over it, then reproject
frame = clip[0]
edit = v.PatchEdit(src_rect=(56, 8, 36, 48), dst_rect=(6, 8, 36, 48))
from videoae.editing import apply_patch_edits
raw = apply_patch_edits(frame, [edit])
removed = v.patch_edit_project(model, frame, [edit], n=5)
save_strip([frame, raw, removed], out / "removal.png",
           ["original", "raw paste", "paste + reprojection"])

# insertion: graft the sprite from a late frame into an early one
insert = v.PatchEdit(src_rect=(60, 8, 36, 48), dst_rect=(30, 8, 36, 48),
                     src_frame_id=30)
inserted = v.patch_edit_project(model, clip[2], [insert], n=5,
                                frames=clip.frames)
save_strip([clip[2], inserted], out / "insertion.png",
           ["original", "insertion (content may be redrawn)"])

# stitch far-apart frames into one canvas
stitched = v.stitch(model, [clip[0], clip[30]], axis="horizontal", n=1)
save_strip([stitched], out / "stitched.png")

# panorama stretch and border extrapolation
pano = v.stretch(model, clip[10], target_w=256, n=10)
save_strip([pano], out / "panorama.png")
extrap = v.extrapolate(model, clip[10], 128, 192, pad="mirror", n=5)
save_strip([extrap], out / "extrapolated.png")
print("edit demos written to", out)
