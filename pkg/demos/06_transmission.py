"""Low-bitrate transmission: sparse low-res keyframes in, full video out.

The sender ships every second frame at quarter resolution inside CRC-framed
packets; the receiver upsamples, reprojects onto the manifold, and fills
skipped frames by latent interpolation. The model weights travel once,
offline.
"""

import numpy as np

import videoae as v
from videoae.ingest import resize_bilinear
from videoae.transmit import impair, keyframe_positions
from _common import demo_model, outdir, save_strip

out = outdir("06_transmission")
model, clip = demo_model()
bundle = model.to_bundle()

plan = v.TransmissionPlan(temporal_stride=2, spatial_factor=4, reprojection_n=5)
packets = v.send(clip, plan, bundle.manifest.digest16())
stream = v.write_packets(out / "stream.vsat", packets)
print(f"{len(packets)} packets -> {stream.stat().st_size} bytes on the wire")

received = v.receive(model, v.read_packets(stream), plan, target_fps_factor=1.0)

# compare against the no-model baseline: nearest keyframe, bilinear upsampled
keys = keyframe_positions(len(clip), plan.temporal_stride)
ups = {k: resize_bilinear(p.payload_frame(), clip.height, clip.width)
       for k, p in zip(keys, packets)}
key_arr = np.asarray(keys)
ours = np.mean([v.psnr(received[t], clip[t]) for t in range(len(clip))])
base = np.mean([v.psnr(ups[int(key_arr[np.argmin(np.abs(key_arr - t))])], clip[t])
                for t in range(len(clip))])
print(f"reconstruction {ours:.2f} dB vs keyframe-copy baseline {base:.2f} dB")

report = v.bitrate_report(packets, bundle, duration_s=len(clip) / 10.0)
print(f"online {report.online_bits} bits, offline (weights) {report.offline_bits} bits")
print(f"raw video baseline {report.raw_baseline_bits} bits")

# a lossy channel: drop a fifth of the packets, shuffle the rest
survivors = impair(packets, drop_rate=0.2, reorder=True, seed=1)
degraded = v.receive(model, survivors, plan, target_fps_factor=1.0)
print(f"after 20% loss: {np.mean([v.psnr(degraded[t], clip[t]) for t in range(len(degraded))]):.2f} dB")

mid = len(clip) // 2
save_strip([clip[mid], received[mid]], out / "midframe.png",
           ["original (never sent)", "interpolated at receiver"])
