"""Low-bitrate transmission simulator.

The sender thins a video temporally and spatially and packetizes the
surviving keyframes as raw 8-bit RGB with CRC-guarded framing. The receiver
upsamples each keyframe, reprojects it onto the video manifold, and fills
the gaps by interpolating latent codes, recovering hi-res, hi-frame-rate
output from a sparse low-res stream plus the (offline) model weights.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import CorruptPacket, InvalidPlan, NoFrames, NotAPacket, ShapeError, WrongModel
from .ingest import FrameSequence, ModelBundle, downsample_box, from_uint8, resize_bilinear, to_uint8
from .latentops import interpolate_code
from .projection import iterate_project

MAGIC = b"VSAT"
VERSION = 1
ENCODING_RAW_RGB8 = 0
_HEADER = struct.Struct("<4sBB16sIHHHHBBI")  # magic..payload_len
_CRC = struct.Struct("<I")


@dataclass
class TransmissionPlan:
    temporal_stride: int = 1
    spatial_factor: int = 1
    reprojection_n: int = 5

    def validate(self):
        if self.temporal_stride < 1 or self.spatial_factor < 1 or self.reprojection_n < 0:
            raise InvalidPlan(f"bad plan {self}")

    @classmethod
    def parse(cls, text: str) -> "TransmissionPlan":
        """Parse the CLI mini-grammar ``stride=2,factor=4,n=5``."""
        plan = cls()
        keys = {"stride": "temporal_stride", "factor": "spatial_factor", "n": "reprojection_n"}
        for part in filter(None, text.split(",")):
            try:
                key, value = part.split("=")
                setattr(plan, keys[key.strip()], int(value))
            except (ValueError, KeyError) as exc:
                raise InvalidPlan(f"cannot parse plan fragment {part!r}") from exc
        plan.validate()
        return plan


@dataclass
class TransmissionPacket:
    """One subsampled keyframe, bit-exact on the wire."""

    model_digest16: bytes
    frame_index: int
    orig_h: int
    orig_w: int
    payload_h: int
    payload_w: int
    payload: bytes
    channels: int = 3
    encoding: int = ENCODING_RAW_RGB8
    flags: int = 0
    version: int = VERSION

    def payload_frame(self) -> np.ndarray:
        raw = np.frombuffer(self.payload, dtype=np.uint8)
        return from_uint8(raw.reshape(self.payload_h, self.payload_w, self.channels))


def encode_packet(p: TransmissionPacket) -> bytes:
    if len(p.model_digest16) != 16:
        raise CorruptPacket("model_digest16 must be 16 bytes")
    if p.encoding == ENCODING_RAW_RGB8 and len(p.payload) != p.payload_h * p.payload_w * p.channels:
        raise CorruptPacket("payload length inconsistent with dims")
    head = _HEADER.pack(
        MAGIC, p.version, p.flags, p.model_digest16, p.frame_index,
        p.orig_h, p.orig_w, p.payload_h, p.payload_w,
        p.channels, p.encoding, len(p.payload),
    )
    body = head + p.payload
    return body + _CRC.pack(zlib.crc32(body))


def decode_packet(data: bytes) -> TransmissionPacket:
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotAPacket("missing VSAT magic")
    if len(data) < _HEADER.size + _CRC.size:
        raise CorruptPacket("packet truncated")
    (magic, version, flags, digest16, frame_index, orig_h, orig_w,
     payload_h, payload_w, channels, encoding, payload_len) = _HEADER.unpack_from(data)
    expected_len = _HEADER.size + payload_len + _CRC.size
    if len(data) != expected_len:
        raise CorruptPacket(f"length {len(data)} != declared {expected_len}")
    (crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(data[:-_CRC.size]) != crc:
        raise CorruptPacket("crc mismatch")
    if version != VERSION:
        raise CorruptPacket(f"unsupported version {version}")
    if encoding == ENCODING_RAW_RGB8 and payload_len != payload_h * payload_w * channels:
        raise CorruptPacket("payload length inconsistent with dims")
    return TransmissionPacket(
        model_digest16=digest16, frame_index=frame_index,
        orig_h=orig_h, orig_w=orig_w, payload_h=payload_h, payload_w=payload_w,
        payload=data[_HEADER.size:_HEADER.size + payload_len],
        channels=channels, encoding=encoding, flags=flags, version=version,
    )


def keyframe_positions(n: int, stride: int) -> list[int]:
    """Every stride-th index, always including the first and last frame."""
    pos = list(range(0, n, stride))
    if pos[-1] != n - 1:
        pos.append(n - 1)
    return pos


def send(sequence: FrameSequence, plan: TransmissionPlan, digest16: bytes) -> list[TransmissionPacket]:
    plan.validate()
    if len(sequence) == 0:
        raise NoFrames("nothing to send")
    h, w = sequence.height, sequence.width
    if h % plan.spatial_factor or w % plan.spatial_factor:
        raise InvalidPlan(f"{h}x{w} not divisible by spatial factor {plan.spatial_factor}")
    packets = []
    for pos in keyframe_positions(len(sequence), plan.temporal_stride):
        low = downsample_box(sequence[pos], plan.spatial_factor)
        raw = to_uint8(low)
        packets.append(TransmissionPacket(
            model_digest16=digest16,
            frame_index=int(sequence.frame_ids[pos]),
            orig_h=h, orig_w=w,
            payload_h=raw.shape[0], payload_w=raw.shape[1],
            payload=raw.tobytes(),
        ))
    return packets


def receive(
    model,
    packets: Sequence[TransmissionPacket],
    plan: TransmissionPlan,
    target_fps_factor: float = 1.0,
) -> FrameSequence:
    """Reconstruct hi-res, hi-frame-rate video from keyframe packets.

    Keyframes are bilinearly upsampled to the original resolution and
    reprojected ``plan.reprojection_n`` times; frames between keyframes come
    from latent interpolation at uniform alpha. Missing keyframes (dropped
    packets) simply widen the interpolation span.
    """
    plan.validate()
    if target_fps_factor <= 0:
        raise InvalidPlan(f"target_fps_factor must be positive, got {target_fps_factor}")
    if not packets:
        raise NoFrames("no packets")
    expected = model.to_bundle().manifest.digest16()
    for p in packets:
        if p.model_digest16 != expected:
            raise WrongModel(
                f"packet digest {p.model_digest16.hex()} does not match model {expected.hex()}"
            )

    by_index: dict[int, TransmissionPacket] = {}
    for p in sorted(packets, key=lambda p: p.frame_index):
        by_index.setdefault(p.frame_index, p)
    ids = sorted(by_index)

    key_frames, key_codes = [], []
    for i in ids:
        p = by_index[i]
        up = resize_bilinear(p.payload_frame(), p.orig_h, p.orig_w)
        frame = iterate_project(model, up, plan.reprojection_n)
        key_frames.append(frame)
        key_codes.append(model.encode(frame))

    span = ids[-1] - ids[0] + 1
    count = max(1, int(np.ceil(target_fps_factor * span)))
    if len(ids) == 1 or count == 1:
        positions = np.array([float(ids[0])])
    else:
        positions = np.linspace(ids[0], ids[-1], count)

    id_arr = np.asarray(ids, dtype=np.float64)
    frames = []
    for pos in positions:
        right = int(np.searchsorted(id_arr, pos, side="right"))
        i = max(0, min(right - 1, len(ids) - 1))
        if abs(pos - ids[i]) < 1e-9 or i == len(ids) - 1:
            frames.append(key_frames[i])
            continue
        j = i + 1
        alpha = 1.0 - (pos - ids[i]) / (ids[j] - ids[i])
        frames.append(model.decode(interpolate_code(key_codes[i], key_codes[j], float(alpha))))
    return FrameSequence(np.stack(frames), np.arange(len(frames)),
                         source_label="received")


# --- quality metrics ----------------------------------------------------------

def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] frames, capped at 99."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse < 1e-10:
        return 99.0
    return min(99.0, 10.0 * np.log10(1.0 / mse))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Structural similarity with an 11x11 Gaussian window (sigma 1.5),
    K1=0.01, K2=0.03, averaged over pixels and channels."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    radius = 5  # 11-tap kernel
    truncate = radius / 1.5
    values = []
    for ch in range(a.shape[2]):
        x, y = a[..., ch], b[..., ch]
        blur = lambda img: gaussian_filter(img, sigma=1.5, truncate=truncate)
        mu_x, mu_y = blur(x), blur(y)
        var_x = blur(x * x) - mu_x ** 2
        var_y = blur(y * y) - mu_y ** 2
        cov = blur(x * y) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
        den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
        smap = num / den
        values.append(smap[radius:-radius, radius:-radius].mean())
    return float(np.mean(values))


def sequence_psnr(a: FrameSequence, b: FrameSequence) -> float:
    if len(a) != len(b):
        raise ShapeError("sequences differ in length")
    return float(np.mean([psnr(a[i], b[i]) for i in range(len(a))]))


# --- accounting and persistence -----------------------------------------------

@dataclass
class BitrateReport:
    packet_count: int
    online_bits: int  # full packets, headers included
    online_payload_bits: int
    offline_bits: int  # model weights
    total_bits: int
    duration_s: float
    online_bps: float
    raw_baseline_bits: int  # full-rate full-res 8-bit RGB over the covered span
    raw_baseline_bps: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def bitrate_report(packets: Sequence[TransmissionPacket], bundle: ModelBundle,
                   duration_s: float) -> BitrateReport:
    if duration_s <= 0:
        raise InvalidPlan(f"duration must be positive, got {duration_s}")
    if not packets:
        raise NoFrames("no packets to report on")
    online = sum(8 * len(encode_packet(p)) for p in packets)
    payload = sum(8 * len(p.payload) for p in packets)
    offline = 8 * len(bundle.weights)
    ids = [p.frame_index for p in packets]
    span = max(ids) - min(ids) + 1
    raw = span * packets[0].orig_h * packets[0].orig_w * packets[0].channels * 8
    return BitrateReport(
        packet_count=len(packets),
        online_bits=online,
        online_payload_bits=payload,
        offline_bits=offline,
        total_bits=online + offline,
        duration_s=duration_s,
        online_bps=online / duration_s,
        raw_baseline_bits=raw,
        raw_baseline_bps=raw / duration_s,
    )


def write_packets(path, packets: Sequence[TransmissionPacket]) -> Path:
    """Persist a packet stream as length-prefixed concatenation (.vsat)."""
    path = Path(path)
    with open(path, "wb") as fh:
        for p in packets:
            blob = encode_packet(p)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
    return path


def read_packets(path) -> list[TransmissionPacket]:
    data = Path(path).read_bytes()
    packets, offset = [], 0
    while offset < len(data):
        if offset + 4 > len(data):
            raise CorruptPacket("truncated length prefix")
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise CorruptPacket("truncated packet body")
        packets.append(decode_packet(data[offset:offset + length]))
        offset += length
    return packets


def impair(packets: Sequence[TransmissionPacket], drop_rate: float = 0.0,
           reorder: bool = False, seed: int = 0) -> list[TransmissionPacket]:
    """Simulate channel impairments by dropping and/or shuffling packets."""
    rng = np.random.default_rng(seed)
    kept = [p for p in packets if rng.random() >= drop_rate]
    if reorder and len(kept) > 1:
        kept = [kept[i] for i in rng.permutation(len(kept))]
    return kept
