"""Frame and model IO.

Frames are numpy float32 arrays of shape (H, W, 3) with values in [0, 1].
A directory of ``frame_%06d.png`` files is the canonical on-disk form of a
video; trained models persist as a bundle directory holding a JSON manifest
and a digest-guarded opaque weights blob.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .errors import (
    CorruptBundle,
    InvalidConfig,
    InvalidTarget,
    NoFrames,
    ResolutionMismatch,
    ShapeError,
)

FRAME_PATTERN = "frame_%06d.png"
MANIFEST_NAME = "manifest.json"
WEIGHTS_NAME = "weights.bin"
DIGEST_HEX_LEN = 32  # 128-bit prefix of sha256, lowercase hex

MANIFEST_FIELDS = (
    "format_version",
    "base_channels",
    "input_height",
    "input_width",
    "channel_progression",
    "epochs_trained",
    "trained_frame_count",
    "source_labels",
    "hflip_augmentation",
    "multires_augmentation",
    "weights_digest",
)


def as_frame(arr: np.ndarray) -> np.ndarray:
    """Validate and normalize an array to the frame convention."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ShapeError(f"frame must be (H, W, 3), got {a.shape}")
    if not np.isfinite(a).all():
        raise ShapeError("frame contains non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ShapeError("frame values must lie in [0, 1]")
    return a


@dataclass
class FrameSequence:
    """An ordered stack of uniform-size frames from one (or more) videos."""

    frames: np.ndarray  # (N, H, W, 3) float32 in [0, 1]
    frame_ids: np.ndarray  # (N,) int, strictly increasing
    source_label: str = ""
    fps_hint: Optional[float] = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise ShapeError(f"frames must be (N, H, W, 3), got {self.frames.shape}")
        if len(self.frames) == 0:
            raise NoFrames("sequence has no frames")
        self.frame_ids = np.asarray(self.frame_ids, dtype=np.int64)
        if self.frame_ids.shape != (len(self.frames),):
            raise ShapeError("frame_ids must align with frames")
        if len(self.frame_ids) > 1 and not (np.diff(self.frame_ids) > 0).all():
            raise ShapeError("frame_ids must be strictly increasing")
        if self.frames.min() < 0.0 or self.frames.max() > 1.0:
            raise ShapeError("frame values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.frames[i]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @classmethod
    def from_frames(
        cls,
        frames: Sequence[np.ndarray],
        source_label: str = "",
        fps_hint: Optional[float] = None,
        frame_ids: Optional[Sequence[int]] = None,
    ) -> "FrameSequence":
        frames = [as_frame(f) for f in frames]
        if not frames:
            raise NoFrames("no frames given")
        shapes = {f.shape for f in frames}
        if len(shapes) > 1:
            raise ResolutionMismatch(f"mixed frame shapes: {sorted(shapes)}")
        ids = np.arange(len(frames)) if frame_ids is None else np.asarray(frame_ids)
        return cls(np.stack(frames), ids, source_label, fps_hint)


def load_frames(directory, pattern: str = "*.png", source_label: str = "") -> FrameSequence:
    """Load a directory of image frames; lexicographic order defines time."""
    directory = Path(directory)
    paths = sorted(directory.glob(pattern))
    if pattern == "*.png" and not paths:  # default pattern also accepts JPEG
        paths = sorted(p for p in directory.glob("*") if p.suffix.lower() in {".png", ".jpg", ".jpeg"})
    if not paths:
        raise NoFrames(f"no frames matching {pattern!r} in {directory}")
    frames = []
    for p in paths:
        with Image.open(p) as im:
            frames.append(np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0)
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise ResolutionMismatch(f"mixed resolutions in {directory}: {sorted(shapes)}")
    label = source_label or directory.name
    return FrameSequence(np.stack(frames), np.arange(len(frames)), label)


def save_frames(frames, directory, pattern: str = FRAME_PATTERN) -> list[Path]:
    """Write frames as 8-bit PNGs named by ``pattern % index``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    seq = frames.frames if isinstance(frames, FrameSequence) else frames
    out = []
    for i, f in enumerate(seq):
        path = directory / (pattern % i)
        Image.fromarray(to_uint8(f)).save(path)
        out.append(path)
    return out


def to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(frame) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float32) / 255.0


# --- resampling helpers -----------------------------------------------------

def resize_bilinear(frame: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Bilinear resize of an (H, W, 3) frame; values clipped back to [0, 1]."""
    frame = as_frame(frame)
    if frame.shape[:2] == (target_h, target_w):
        return frame.copy()
    t = torch.from_numpy(frame).permute(2, 0, 1).unsqueeze(0)
    out = F.interpolate(t, size=(target_h, target_w), mode="bilinear", align_corners=False)
    return np.clip(out.squeeze(0).permute(1, 2, 0).numpy(), 0.0, 1.0)


def downsample_box(frame: np.ndarray, factor: int) -> np.ndarray:
    """Box-filter downsample by an integer factor per axis."""
    frame = as_frame(frame)
    if factor < 1:
        raise InvalidTarget(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return frame.copy()
    h, w, _ = frame.shape
    if h % factor or w % factor:
        raise InvalidTarget(f"{h}x{w} not divisible by factor {factor}")
    return frame.reshape(h // factor, factor, w // factor, factor, 3).mean(axis=(1, 3))


def conform(frame: np.ndarray, target_h: int, target_w: int, mode: str = "bilinear") -> np.ndarray:
    """Resize or pad a frame to a target size.

    ``bilinear`` resamples; ``mirror_pad``/``zero_pad`` center the original
    and fill the margins by reflection or zeros. Targets bound for the model
    must be divisible by 64 (the encoder downsampling ratio).
    """
    frame = as_frame(frame)
    h, w, _ = frame.shape
    if target_h < 1 or target_w < 1:
        raise InvalidTarget(f"bad target {target_h}x{target_w}")
    if mode == "bilinear":
        return resize_bilinear(frame, target_h, target_w)
    if mode not in ("mirror_pad", "zero_pad"):
        raise InvalidTarget(f"unknown conform mode {mode!r}")
    if target_h < h or target_w < w:
        raise InvalidTarget(f"pad target {target_h}x{target_w} smaller than source {h}x{w}")
    top = (target_h - h) // 2
    bottom = target_h - h - top
    left = (target_w - w) // 2
    right = target_w - w - left
    pad_mode = "symmetric" if mode == "mirror_pad" else "constant"
    return np.pad(frame, ((top, bottom), (left, right), (0, 0)), mode=pad_mode)


# --- model bundles ----------------------------------------------------------

def weights_digest(weights: bytes) -> str:
    """Lowercase-hex digest of the weights bytes (sha256, 128-bit prefix)."""
    return hashlib.sha256(weights).hexdigest()[:DIGEST_HEX_LEN]


@dataclass
class ModelManifest:
    """Reproducibility record stored beside the weights of a trained model."""

    format_version: int
    base_channels: int
    input_height: int
    input_width: int
    channel_progression: list[int]
    epochs_trained: int
    trained_frame_count: int
    source_labels: list[str] = field(default_factory=list)
    hflip_augmentation: bool = False
    multires_augmentation: bool = False
    weights_digest: str = ""

    def validate(self):
        if self.input_height % 64 or self.input_width % 64:
            raise InvalidConfig(
                f"input dims {self.input_height}x{self.input_width} not divisible by 64"
            )
        if len(self.channel_progression) != 6:
            raise InvalidConfig("channel_progression must have 6 entries")
        if self.channel_progression[5] != 12 * self.base_channels:
            raise InvalidConfig("channel_progression[5] must equal 12*base_channels")
        if len(self.weights_digest) != DIGEST_HEX_LEN or any(
            c not in "0123456789abcdef" for c in self.weights_digest
        ):
            raise InvalidConfig("weights_digest must be 32 lowercase hex chars")

    def digest16(self) -> bytes:
        """Raw 16-byte form of the digest, as carried on the wire."""
        return bytes.fromhex(self.weights_digest)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelManifest":
        data = json.loads(text)
        missing = [k for k in MANIFEST_FIELDS if k not in data]
        if missing:
            raise CorruptBundle(f"manifest missing fields: {missing}")
        return cls(**{k: data[k] for k in MANIFEST_FIELDS})


@dataclass
class ModelBundle:
    """Opaque serialized weights plus their manifest."""

    weights: bytes
    manifest: ModelManifest

    def validate(self):
        self.manifest.validate()
        actual = weights_digest(self.weights)
        if actual != self.manifest.weights_digest:
            raise CorruptBundle(
                f"weights digest {actual} does not match manifest {self.manifest.weights_digest}"
            )


def save_model(bundle: ModelBundle, path) -> Path:
    """Persist a bundle as a directory of {manifest.json, weights.bin}."""
    bundle.validate()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / WEIGHTS_NAME).write_bytes(bundle.weights)
    (path / MANIFEST_NAME).write_text(bundle.manifest.to_json())
    return path


def load_model(path) -> ModelBundle:
    """Load a bundle directory, verifying manifest invariants and digest."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    weights_path = path / WEIGHTS_NAME
    if not manifest_path.is_file() or not weights_path.is_file():
        raise CorruptBundle(f"{path} is not a model bundle")
    manifest = ModelManifest.from_json(manifest_path.read_text())
    try:
        manifest.validate()
    except InvalidConfig as exc:
        raise CorruptBundle(str(exc)) from exc
    weights = weights_path.read_bytes()
    bundle = ModelBundle(weights, manifest)
    bundle.validate()
    return bundle
