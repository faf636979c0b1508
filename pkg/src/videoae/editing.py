"""Latent-similarity and reprojection-based video edits.

Video textures jump between similar frames with latent-interpolated bridge
frames smoothing each transition. Spatial edits paste patches (from the same
frame or others) and let iterated reprojection blend the seams; the same
trick stitches, stretches, and extrapolates frames, because the model is
fully convolutional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .autoencoder import LatentCode
from .errors import InvalidK, InvalidPath, InvalidRect, InvalidTarget, ShapeError
from .ingest import FrameSequence, as_frame, conform, resize_bilinear
from .latentops import EmbeddingModel, interpolate_code
from .projection import iterate_project

Waypoint = Union[int, tuple[float, float]]


@dataclass
class PathSpec:
    """A user trajectory through the video: waypoints joined by bridges."""

    waypoints: list[Waypoint]
    bridge_frames: int = 1
    loop: bool = False

    def validate(self):
        if len(self.waypoints) < 2:
            raise InvalidPath(f"need at least 2 waypoints, got {len(self.waypoints)}")
        if self.bridge_frames < 0:
            raise InvalidPath("bridge_frames must be >= 0")

    @classmethod
    def from_jsonable(cls, data: dict) -> "PathSpec":
        try:
            waypoints = [
                tuple(float(v) for v in w) if isinstance(w, (list, tuple)) else int(w)
                for w in data["waypoints"]
            ]
            return cls(waypoints, int(data.get("bridge_frames", 1)),
                       bool(data.get("loop", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPath(f"malformed path spec: {exc}") from exc


@dataclass
class PatchEdit:
    """Copy ``src_rect`` (from ``src_frame_id``, -1 for the edited frame
    itself) onto ``dst_rect``; rectangles are (x, y, w, h) and equal-sized."""

    src_rect: tuple[int, int, int, int]
    dst_rect: tuple[int, int, int, int]
    src_frame_id: int = -1

    @classmethod
    def from_jsonable(cls, data: dict) -> "PatchEdit":
        try:
            return cls(tuple(int(v) for v in data["src_rect"]),
                       tuple(int(v) for v in data["dst_rect"]),
                       int(data.get("src_frame_id", -1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidRect(f"malformed patch edit: {exc}") from exc


def nearest_frames(codes: Sequence[LatentCode], query_id: int, top_k: int) -> list[int]:
    """Frame ids ranked by cosine similarity to the query's code (self
    excluded, ties broken by smaller id)."""
    if top_k <= 0:
        raise InvalidK(f"top_k must be positive, got {top_k}")
    n = len(codes)
    if not (0 <= query_id < n):
        raise IndexError(f"query_id {query_id} out of range [0, {n})")
    flats = np.stack([c.flat for c in codes]).astype(np.float64)
    norms = np.linalg.norm(flats, axis=1)
    q = flats[query_id]
    sims = flats @ q / np.maximum(norms * max(norms[query_id], 1e-12), 1e-12)
    order = sorted((i for i in range(n) if i != query_id), key=lambda i: (-sims[i], i))
    return order[:top_k]


def cosine_similarity(code_a: LatentCode, code_b: LatentCode) -> float:
    a, b = code_a.flat.astype(np.float64), code_b.flat.astype(np.float64)
    denom = max(np.linalg.norm(a) * np.linalg.norm(b), 1e-12)
    return float(a @ b / denom)


def resolve_waypoints(path: PathSpec, em: Optional[EmbeddingModel],
                      codes: Sequence[LatentCode]) -> list[int]:
    """Map 2D waypoints to the nearest frame id in embedding space."""
    ids: list[int] = []
    xy = None
    for w in path.waypoints:
        if isinstance(w, (int, np.integer)):
            if not (0 <= w < len(codes)):
                raise InvalidPath(f"waypoint id {w} out of range")
            ids.append(int(w))
        else:
            if em is None:
                raise InvalidPath("2D waypoints require an embedding model")
            if xy is None:
                xy = em.transform(codes)
            d = np.sum((xy - np.asarray(w, dtype=np.float64)) ** 2, axis=1)
            ids.append(int(np.argmin(d)))
    return ids


def make_texture(model, codes: Sequence[LatentCode], path: PathSpec,
                 em: Optional[EmbeddingModel] = None) -> FrameSequence:
    """Render a path: each waypoint decodes to its reconstruction and every
    transition inserts ``bridge_frames`` latent-interpolated frames at uniform
    alpha. ``loop=True`` bridges the last waypoint back to the first, which
    is what makes infinite-loop textures possible without an exact match."""
    path.validate()
    ids = resolve_waypoints(path, em, codes)
    out: list[LatentCode] = []
    pairs = list(zip(ids[:-1], ids[1:]))
    if path.loop:
        pairs.append((ids[-1], ids[0]))
    for a, b in pairs:
        out.append(codes[a])
        for j in range(1, path.bridge_frames + 1):
            alpha = 1.0 - j / (path.bridge_frames + 1)
            out.append(interpolate_code(codes[a], codes[b], alpha))
    if not path.loop:
        out.append(codes[ids[-1]])
    frames = model.decode_batch(out)
    return FrameSequence(frames, np.arange(len(out)), source_label="texture")


def _check_rect(rect, h, w):
    x, y, rw, rh = rect
    if rw <= 0 or rh <= 0 or x < 0 or y < 0 or x + rw > w or y + rh > h:
        raise InvalidRect(f"rect {rect} out of bounds for {h}x{w}")


def apply_patch_edits(frame: np.ndarray, edits: Sequence[PatchEdit],
                      frames: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Raw copy-paste of every edit (no reprojection)."""
    frame = as_frame(frame)
    h, w, _ = frame.shape
    out = frame.copy()
    for e in edits:
        _check_rect(e.src_rect, h, w)
        _check_rect(e.dst_rect, h, w)
        if e.src_rect[2:] != e.dst_rect[2:]:
            raise InvalidRect(f"rect sizes differ: {e.src_rect} vs {e.dst_rect}")
        if e.src_frame_id < 0:
            src_img = frame
        else:
            if frames is None or not (0 <= e.src_frame_id < len(frames)):
                raise InvalidRect(f"src_frame_id {e.src_frame_id} unavailable")
            src_img = as_frame(frames[e.src_frame_id])
            if src_img.shape != frame.shape:
                raise ShapeError("source frame size differs from edited frame")
        sx, sy, rw, rh = e.src_rect
        dx, dy, _, _ = e.dst_rect
        out[dy:dy + rh, dx:dx + rw] = src_img[sy:sy + rh, sx:sx + rw]
    return out


def patch_edit_project(model, frame: np.ndarray, edits: Sequence[PatchEdit],
                       n: int = 5,
                       frames: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Paste patches then reproject; the model blends the discontinuities.

    Pasted content is not guaranteed to survive: the output is on the video
    manifold, which may redraw an inserted foreign object entirely.
    """
    edited = apply_patch_edits(frame, edits, frames)
    return iterate_project(model, edited, n)


def stitch(model, frames: Sequence[np.ndarray], axis: str = "horizontal",
           n: int = 1) -> np.ndarray:
    """Naively concatenate frames along an axis and reproject the canvas."""
    if axis not in ("horizontal", "vertical"):
        raise ShapeError(f"axis must be horizontal|vertical, got {axis!r}")
    if not frames:
        raise ShapeError("no frames to stitch")
    frames = [as_frame(f) for f in frames]
    ax = 1 if axis == "horizontal" else 0
    perp = 0 if axis == "horizontal" else 1
    if len({f.shape[perp] for f in frames}) > 1:
        raise ShapeError("frames differ along the perpendicular axis")
    canvas = np.concatenate(frames, axis=ax)
    if canvas.shape[0] % 64 or canvas.shape[1] % 64:
        raise ShapeError(f"stitched canvas {canvas.shape[:2]} not divisible by 64")
    return iterate_project(model, canvas, n)


def stretch(model, frame: np.ndarray, target_w: int, n: int = 30) -> np.ndarray:
    """Horizontally resample to a wider canvas and reproject repeatedly,
    producing a panorama-type output."""
    frame = as_frame(frame)
    h, w, _ = frame.shape
    if target_w < w or target_w % 64:
        raise InvalidTarget(f"target width {target_w} must be >= {w} and divisible by 64")
    wide = resize_bilinear(frame, h, target_w)
    return iterate_project(model, wide, n)


def extrapolate(model, frame: np.ndarray, target_h: int, target_w: int,
                pad: str = "mirror", n: int = 5) -> np.ndarray:
    """Pad to the target (mirror by default, preserving the central structure;
    zeros otherwise) and reproject to hallucinate the margins."""
    frame = as_frame(frame)
    h, w, _ = frame.shape
    if target_h < h or target_w < w:
        raise InvalidTarget(f"target {target_h}x{target_w} smaller than source {h}x{w}")
    if target_h % 64 or target_w % 64:
        raise InvalidTarget(f"target {target_h}x{target_w} must be divisible by 64")
    if pad not in ("mirror", "zero"):
        raise InvalidTarget(f"pad must be mirror|zero, got {pad!r}")
    mode = "mirror_pad" if pad == "mirror" else "zero_pad"
    padded = conform(frame, target_h, target_w, mode)
    return iterate_project(model, padded, n)
