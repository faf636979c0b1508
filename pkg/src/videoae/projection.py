"""Manifold reprojection.

A trained autoencoder acts as a projection operator mapping arbitrary
inputs toward the set of reconstructions it can produce. One pass is
``project``; composing n passes is ``iterate_project``, which improves
heavily degraded inputs (there is no convergence guarantee, only measured
residuals). A PCA-based linear autoencoder is provided as the analytic
oracle: its projection is idempotent after a single step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidIterations, ShapeError
from .ingest import FrameSequence, resize_bilinear
from .latentops import EmbeddingModel, Point2D

DEFAULT_ITERATIONS = 5
FOREIGN_ITERATIONS = 25


@dataclass
class ProjectionTrace:
    """Per-iteration record of an iterated reprojection."""

    residuals: list[float] = field(default_factory=list)  # mean sq change per step
    points: list[Optional[Point2D]] = field(default_factory=list)
    codes: list[np.ndarray] = field(default_factory=list)
    frames: list[np.ndarray] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "residuals": self.residuals,
            "points": [None if p is None else {"x": p.x, "y": p.y} for p in self.points],
        }


def project(model, frame: np.ndarray) -> np.ndarray:
    """One encode-decode pass (the reconstruction of ``frame``)."""
    return model.reconstruct(frame)


def iterate_project(
    model,
    frame: np.ndarray,
    n: int = DEFAULT_ITERATIONS,
    trace: bool = False,
    em: Optional[EmbeddingModel] = None,
    keep_frames: bool = True,
):
    """n-fold composition of ``project``; n=0 returns the input unchanged.

    With ``trace=True`` also returns a :class:`ProjectionTrace` holding the
    mean squared change per step and, when an embedding model is given, the
    2D coordinates of each iterate's latent code.
    """
    if n < 0:
        raise InvalidIterations(f"iteration count must be >= 0, got {n}")
    out = np.asarray(frame)
    rec = ProjectionTrace() if trace else None
    for _ in range(n):
        prev = out
        out = model.reconstruct(prev)
        if rec is not None:
            rec.residuals.append(float(np.mean((out - prev) ** 2)))
            if keep_frames:
                rec.frames.append(out)
            if em is not None:
                code = model.encode(out)
                rec.codes.append(np.asarray(code.values if hasattr(code, "values") else code))
                rec.points.append(em.embed(code))
    if trace:
        return out, rec
    return out


def spatial_superres(
    model,
    lowres: np.ndarray,
    target_h: int,
    target_w: int,
    n: int = DEFAULT_ITERATIONS,
) -> np.ndarray:
    """Bilinearly upsample a low-res frame to the target size, then reproject."""
    up = resize_bilinear(lowres, target_h, target_w)
    return iterate_project(model, up, n)


def sample_manifold(model, em: EmbeddingModel, points: Sequence[tuple[float, float]]):
    """Decode 2D embedding coordinates back through the PCA basis."""
    frames = []
    for x, y in points:
        code = em.back_project(x, y)
        frames.append(model.decode(code))
    return frames


def align_foreign(
    model,
    foreign: FrameSequence,
    n: int = FOREIGN_ITERATIONS,
    em: Optional[EmbeddingModel] = None,
) -> tuple[FrameSequence, list[ProjectionTrace]]:
    """Iteratively reproject every frame of a foreign video onto the manifold."""
    outs, traces = [], []
    for i in range(len(foreign)):
        out, rec = iterate_project(model, foreign[i], n, trace=True, em=em,
                                   keep_frames=False)
        outs.append(out)
        traces.append(rec)
    seq = FrameSequence.from_frames(outs, source_label=foreign.source_label + "_aligned",
                                    fps_hint=foreign.fps_hint)
    return seq, traces


class LinearAutoencoder:
    """PCA autoencoder over flattened frames: the reprojection oracle.

    Encoding projects onto the top principal directions; decoding maps the
    coefficients back. Because the decode image is an affine subspace, one
    projection lands exactly on it and further projections are the identity.
    Outputs are intentionally not clipped: clipping would break the
    one-step-convergence property this class exists to demonstrate.
    """

    def __init__(self, data: np.ndarray, n_components: int):
        arr = np.asarray(data, dtype=np.float64)
        self.frame_shape = arr.shape[1:]
        flat = arr.reshape(len(arr), -1)
        if n_components > min(flat.shape):
            raise ShapeError(
                f"n_components {n_components} exceeds data rank bound {min(flat.shape)}"
            )
        self.mean = flat.mean(axis=0)
        centered = flat - self.mean
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        self.basis = vt[:n_components].T  # (D, m), orthonormal columns

    def encode(self, frame: np.ndarray) -> np.ndarray:
        flat = np.asarray(frame, dtype=np.float64).reshape(-1)
        return self.basis.T @ (flat - self.mean)

    def decode(self, coeffs: np.ndarray) -> np.ndarray:
        flat = self.mean + self.basis @ np.asarray(coeffs, dtype=np.float64)
        return flat.reshape(self.frame_shape)

    def reconstruct(self, frame: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(frame))
