"""Algebra and analysis over latent codes.

Latent codes of one video form a low-dimensional structure: PCA gives a 2D
map of it, arithmetic means summarize subsets, convex combinations realize
temporal interpolation, and k-means discovers visual modes. Pixel-level
hypercolumn codes support dense correspondence and mask propagation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autoencoder import LatentCode
from .errors import (
    EmptySelection,
    InsufficientData,
    InvalidAlpha,
    InvalidFactor,
    InvalidK,
    InvalidRadius,
    ShapeError,
)
from .ingest import FrameSequence


@dataclass
class Point2D:
    x: float
    y: float
    frame_id: int = -1
    source_label: str = ""


@dataclass
class EmbeddingModel:
    """Top-2 PCA over flattened latent codes, with a fixed sign convention."""

    mean: np.ndarray
    basis: np.ndarray  # (D, 2), orthonormal columns
    explained_variance: np.ndarray  # (2,)
    code_shape: tuple[int, int, int]
    source_shape: tuple[int, int]

    def embed(self, code: LatentCode, frame_id: int = -1, source_label: str = "") -> Point2D:
        flat = np.asarray(code.values, dtype=np.float64).reshape(-1)
        if flat.shape != self.mean.shape:
            raise ShapeError(f"code of size {flat.size} does not match embedding ({self.mean.size})")
        xy = self.basis.T @ (flat - self.mean)
        return Point2D(float(xy[0]), float(xy[1]), frame_id, source_label)

    def transform(self, codes: Sequence[LatentCode]) -> np.ndarray:
        flats = np.stack([np.asarray(c.values, dtype=np.float64).reshape(-1) for c in codes])
        return (flats - self.mean) @ self.basis

    def back_project(self, x: float, y: float) -> LatentCode:
        flat = self.mean + x * self.basis[:, 0] + y * self.basis[:, 1]
        return LatentCode(flat.reshape(self.code_shape).astype(np.float32), self.source_shape)


def fit_embedding(codes: Sequence[LatentCode]) -> EmbeddingModel:
    """Exact PCA (SVD of the centered code matrix), top two components.

    Sign convention: each basis vector's largest-magnitude coefficient is
    made positive so layouts are stable across runs.
    """
    if len(codes) < 3:
        raise InsufficientData(f"need at least 3 codes, got {len(codes)}")
    shapes = {tuple(c.values.shape) for c in codes}
    if len(shapes) > 1:
        raise ShapeError(f"mixed code shapes: {sorted(shapes)}")
    flats = np.stack([c.values.reshape(-1) for c in codes]).astype(np.float64)
    mean = flats.mean(axis=0)
    centered = flats - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    basis = np.zeros((flats.shape[1], 2))
    var = np.zeros(2)
    take = min(2, vt.shape[0])
    basis[:, :take] = vt[:take].T
    var[:take] = (s[:take] ** 2) / max(1, len(codes) - 1)
    for j in range(2):
        i = int(np.argmax(np.abs(basis[:, j])))
        if basis[i, j] < 0:
            basis[:, j] = -basis[:, j]
    return EmbeddingModel(mean, basis, var, tuple(codes[0].values.shape),
                          tuple(codes[0].source_shape))


def embed(em: EmbeddingModel, code: LatentCode, frame_id: int = -1,
          source_label: str = "") -> Point2D:
    return em.embed(code, frame_id, source_label)


def embedding_points(em: EmbeddingModel, codes: Sequence[LatentCode],
                     frame_ids=None, source_labels=None) -> list[Point2D]:
    xy = em.transform(codes)
    n = len(codes)
    ids = range(n) if frame_ids is None else frame_ids
    labels = [""] * n if source_labels is None else source_labels
    return [Point2D(float(x), float(y), int(i), str(l))
            for (x, y), i, l in zip(xy, ids, labels)]


def points_to_jsonable(points: Sequence[Point2D]) -> list[dict]:
    return [
        {"frame_id": p.frame_id, "source_label": p.source_label, "x": p.x, "y": p.y}
        for p in points
    ]


# --- code arithmetic --------------------------------------------------------

def average_codes(codes: Sequence[LatentCode]) -> LatentCode:
    """Arithmetic mean of a nonempty, uniform-shape subset of codes."""
    if len(codes) == 0:
        raise EmptySelection("cannot average an empty selection")
    shapes = {tuple(c.values.shape) for c in codes}
    if len(shapes) > 1:
        raise ShapeError(f"mixed code shapes: {sorted(shapes)}")
    mean = np.mean(np.stack([c.values for c in codes]), axis=0, dtype=np.float64)
    return LatentCode(mean.astype(np.float32), codes[0].source_shape)


def decode_average(model, codes: Sequence[LatentCode], iterations: int = 0) -> np.ndarray:
    """Decode the mean code; optionally sharpen by iterated reprojection."""
    frame = model.decode(average_codes(codes))
    for _ in range(iterations):
        frame = model.reconstruct(frame)
    return frame


def nearest_code_id(codes: Sequence[LatentCode], target: LatentCode,
                    candidate_ids: Optional[Sequence[int]] = None) -> int:
    """Index of the code nearest (L2) to a target code: the mediod of a selection."""
    ids = list(range(len(codes))) if candidate_ids is None else list(candidate_ids)
    if not ids:
        raise EmptySelection("no candidates")
    t = target.flat.astype(np.float64)
    dists = [float(np.sum((codes[i].flat.astype(np.float64) - t) ** 2)) for i in ids]
    return ids[int(np.argmin(dists))]


def interpolate_code(code_a: LatentCode, code_b: LatentCode, alpha: float) -> LatentCode:
    """alpha weights the earlier frame: alpha=1 reproduces ``code_a`` exactly."""
    if not (0.0 <= alpha <= 1.0):
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    if code_a.values.shape != code_b.values.shape:
        raise ShapeError("codes must share a shape")
    values = np.float32(alpha) * code_a.values + np.float32(1.0 - alpha) * code_b.values
    return LatentCode(values, code_a.source_shape)


def interpolate(model, code_a: LatentCode, code_b: LatentCode, alpha: float) -> np.ndarray:
    return model.decode(interpolate_code(code_a, code_b, alpha))


def resample_timeline(model, codes: Sequence[LatentCode], factor: float) -> FrameSequence:
    """Slow down (factor > 1, inserting ceil(factor)-1 frames per pair at
    uniform alpha) or speed up (factor < 1, subsampling) an ordered code list."""
    if factor <= 0:
        raise InvalidFactor(f"factor must be positive, got {factor}")
    if len(codes) < 2:
        raise InsufficientData("need at least 2 codes")
    out_codes: list[LatentCode] = []
    if factor >= 1.0:
        inserts = int(np.ceil(factor)) - 1
        for i in range(len(codes) - 1):
            out_codes.append(codes[i])
            for j in range(1, inserts + 1):
                alpha = 1.0 - j / (inserts + 1)
                out_codes.append(interpolate_code(codes[i], codes[i + 1], alpha))
        out_codes.append(codes[-1])
    else:
        stride = max(1, round(1.0 / factor))
        out_codes = list(codes[::stride])
    frames = model.decode_batch(out_codes)
    return FrameSequence(frames, np.arange(len(out_codes)), source_label="resampled")


# --- clustering -------------------------------------------------------------

@dataclass
class ClusterResult:
    K: int
    assignments: np.ndarray  # (N,) ints in [0, K)
    centroids: np.ndarray  # (K, D)
    purity_curve: list[tuple[float, float]] = field(default_factory=list)
    auc: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps({
            "K": self.K,
            "assignments": self.assignments.tolist(),
            "purity_curve": self.purity_curve,
            "auc": self.auc,
        }, indent=2)


def _kmeans_pp(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(data)
    centers = np.empty((k, data.shape[1]), dtype=data.dtype)
    centers[0] = data[rng.integers(n)]
    d2 = np.sum((data - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers[i] = data[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((data - centers[i]) ** 2, axis=1))
    return centers


def _lloyd(data: np.ndarray, centers: np.ndarray, max_iter: int = 100):
    k = len(centers)
    assign = np.zeros(len(data), dtype=np.int64)
    for _ in range(max_iter):
        dists = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)
        for c in range(k):
            members = new_assign == c
            if members.any():
                centers[c] = data[members].mean(axis=0)
            else:  # re-seed an empty cluster at the farthest point
                far = int(dists.min(axis=1).argmax())
                centers[c] = data[far]
                new_assign[far] = c
        if (new_assign == assign).all():
            break
        assign = new_assign
    return assign, centers


def kmeans(data: np.ndarray, k: int, seed: int = 0, n_init: int = 10):
    """Seeded k-means++ with restarts; the lowest-inertia run wins."""
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        assign, centers = _lloyd(data, _kmeans_pp(data, k, rng))
        inertia = float(((data - centers[assign]) ** 2).sum())
        if best is None or inertia < best[0]:
            best = (inertia, assign, centers)
    return best[1], best[2]


def cluster(codes: Sequence[LatentCode], K: int, seed: int = 0,
            labels: Optional[Sequence[str]] = None) -> ClusterResult:
    """k-means (k-means++ seeding, fixed seed) over flattened codes.

    With ground-truth ``labels``, per-cluster purity is computed, clusters
    are sorted by purity descending, and the purity-vs-cumulative-coverage
    curve plus its area-under-curve summarize how well latent clusters
    recover the labels.
    """
    n = len(codes)
    if K < 1 or K > n:
        raise InvalidK(f"K must be in [1, {n}], got {K}")
    data = np.stack([c.flat for c in codes]).astype(np.float64)
    assign, centers = kmeans(data, K, seed=seed)

    result = ClusterResult(K=K, assignments=assign, centroids=centers)
    if labels is not None:
        if len(labels) != n:
            raise ShapeError("labels must align with codes")
        labels = np.asarray(labels)
        stats = []  # (purity, size)
        for c in range(K):
            members = labels[assign == c]
            if len(members) == 0:
                continue
            _, counts = np.unique(members, return_counts=True)
            stats.append((counts.max() / len(members), len(members)))
        stats.sort(key=lambda t: -t[0])
        coverage = 0.0
        curve, auc = [], 0.0
        for purity, size in stats:
            width = size / n
            coverage += width
            curve.append((coverage, float(purity)))
            auc += purity * width
        result.purity_curve = curve
        result.auc = float(auc)
    return result


# --- pixel codes and correspondence ------------------------------------------

@dataclass
class PixelCodeField:
    """Per-pixel hypercolumn features aligned with a frame."""

    height: int
    width: int
    dim: int
    codes: np.ndarray  # (H, W, dim) float32


def pixel_codes(model, frame: np.ndarray) -> PixelCodeField:
    """Hypercolumn pixel codes: all encoder layer maps resized to the frame.

    The feature dimension is the sum of the encoder widths (39*k for the
    default progression).
    """
    field_arr = model.pixel_code_field(frame)
    h, w, d = field_arr.shape
    expected = sum(model.config.channel_progression)
    if d != expected:
        raise ShapeError(f"field dim {d} != sum of encoder widths {expected}")
    return PixelCodeField(h, w, d, field_arr)


def correspond(field_a: PixelCodeField, field_b: PixelCodeField,
               search_radius: int) -> np.ndarray:
    """Dense cosine-similarity matching within a square search window.

    Returns an (H, W, 2) int32 flow map; ``flow[y, x] = (dx, dy)`` means the
    best match of A's pixel (y, x) is B's pixel (y+dy, x+dx). Ties are broken
    by the smallest displacement, so radius 0 yields the identity flow.
    """
    if search_radius < 0:
        raise InvalidRadius(f"radius must be >= 0, got {search_radius}")
    if (field_a.height, field_a.width, field_a.dim) != (field_b.height, field_b.width, field_b.dim):
        raise ShapeError("fields must share dimensions")
    h, w = field_a.height, field_a.width
    r = search_radius

    def normalize(codes):
        norm = np.linalg.norm(codes, axis=2, keepdims=True)
        return codes / np.maximum(norm, 1e-12)

    an = normalize(field_a.codes.astype(np.float32))
    bn = normalize(field_b.codes.astype(np.float32))

    best_sim = np.full((h, w), -np.inf, dtype=np.float32)
    best_cost = np.full((h, w), np.iinfo(np.int32).max, dtype=np.int32)
    best_dx = np.zeros((h, w), dtype=np.int32)
    best_dy = np.zeros((h, w), dtype=np.int32)

    for dy in range(-r, r + 1):
        ya0, ya1 = max(0, -dy), h - max(0, dy)
        if ya0 >= ya1:
            continue
        # All column pairs at once: S[y, xa, xb] = <A[y+ya0, xa], B[y+ya0+dy, xb]>
        s = np.matmul(an[ya0:ya1], bn[ya0 + dy:ya1 + dy].transpose(0, 2, 1))
        for dx in range(-r, r + 1):
            diag = np.diagonal(s, offset=dx, axis1=1, axis2=2)
            if diag.shape[1] == 0:
                continue
            xa0 = max(0, -dx)
            cost = dy * dy + dx * dx
            sl = (slice(ya0, ya1), slice(xa0, xa0 + diag.shape[1]))
            cur_sim, cur_cost = best_sim[sl], best_cost[sl]
            better = (diag > cur_sim) | ((diag == cur_sim) & (cost < cur_cost))
            if better.any():
                best_sim[sl] = np.where(better, diag, cur_sim)
                best_cost[sl] = np.where(better, cost, cur_cost)
                best_dx[sl] = np.where(better, dx, best_dx[sl])
                best_dy[sl] = np.where(better, dy, best_dy[sl])

    return np.stack([best_dx, best_dy], axis=2)


def propagate_mask(model, frames, mask0: np.ndarray, search_radius: int = 16) -> list[np.ndarray]:
    """Sequentially carry integer labels from frame 0 through the video.

    Each pixel of frame t+1 takes the label of its cosine-similarity match
    in frame t; unmatched (zero-code) pixels keep the label at their own
    position, which the identity tie-break provides for free.
    """
    arr = frames.frames if isinstance(frames, FrameSequence) else np.asarray(frames)
    mask0 = np.asarray(mask0)
    if mask0.shape != arr.shape[1:3]:
        raise ShapeError(f"mask {mask0.shape} does not match frames {arr.shape[1:3]}")
    masks = [mask0.astype(np.int32)]
    yy, xx = np.mgrid[0:arr.shape[1], 0:arr.shape[2]]
    prev_field = pixel_codes(model, arr[0])
    for t in range(1, len(arr)):
        cur_field = pixel_codes(model, arr[t])
        flow = correspond(cur_field, prev_field, search_radius)
        src_y = np.clip(yy + flow[..., 1], 0, arr.shape[1] - 1)
        src_x = np.clip(xx + flow[..., 0], 0, arr.shape[2] - 1)
        masks.append(masks[-1][src_y, src_x])
        prev_field = cur_field
    return masks


def gradient_energy(frame: np.ndarray) -> float:
    """Mean squared spatial gradient: the sharpness proxy used for averages."""
    f = np.asarray(frame, dtype=np.float64)
    gx = np.diff(f, axis=1)
    gy = np.diff(f, axis=0)
    return float((gx ** 2).mean() + (gy ** 2).mean())
