"""Procedural test clips.

Small, fully deterministic synthetic videos used by the test suite, the
demo scripts, and the evaluation subcommands: a textured sprite translating
at constant velocity, a periodic oscillation, a two-shot clip with distinct
visual modes, and a flip-study clip whose background is mirror-symmetric.
All generators return frames in [0, 1] at sizes divisible by 64.
"""

from __future__ import annotations

import numpy as np

from .ingest import FrameSequence, resize_bilinear


def smooth_noise(h: int, w: int, cells: int, rng: np.random.Generator) -> np.ndarray:
    """Random low-res RGB grid bilinearly upsampled into a smooth texture."""
    grid = rng.random((max(2, cells), max(2, int(cells * w / h)), 3)).astype(np.float32)
    return resize_bilinear(grid, h, w)


def striped_background(h: int, w: int, seed: int = 0) -> np.ndarray:
    """Background varying only along y (invariant under horizontal flips)."""
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * np.pi, size=3)
    y = np.linspace(0.0, 6 * np.pi, h, dtype=np.float32)[:, None]
    col = 0.45 + 0.25 * np.sin(y + phase[None, :])
    return np.clip(np.repeat(col[:, None, :], w, axis=1), 0.0, 1.0).astype(np.float32)


def textured_background(h: int, w: int, seed: int = 0, detail: float = 0.25) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = smooth_noise(h, w, 6, rng)
    fine = smooth_noise(h, w, 24, rng)
    return np.clip(0.25 + 0.5 * base + detail * (fine - 0.5), 0.0, 1.0)


def _sprite_alpha_pattern(h, w, cx, cy, sigma):
    """Analytic sprite: Gaussian envelope, an asymmetric low-frequency
    pattern, and a fine texture that makes pixel-level matching well-posed."""
    y = np.arange(h, dtype=np.float32)[:, None]
    x = np.arange(w, dtype=np.float32)[None, :]
    dx = (x - cx) / sigma
    dy = (y - cy) / sigma
    r2 = dx * dx + dy * dy
    alpha = np.exp(-0.5 * r2 / 1.44) * (r2 < 9.0)
    pattern = (0.55 + 0.26 * np.sin(2.6 * dx + 1.3 * dy) + 0.2 * dx
               + 0.16 * np.sin(7.0 * dx) * np.cos(6.0 * dy))
    return alpha.astype(np.float32), np.clip(pattern, 0.0, 1.0).astype(np.float32)


def composite_sprite(
    background: np.ndarray,
    cx: float,
    cy: float,
    sigma: float = 11.0,
    color: tuple[float, float, float] = (0.95, 0.55, 0.2),
) -> np.ndarray:
    h, w, _ = background.shape
    alpha, pattern = _sprite_alpha_pattern(h, w, cx, cy, sigma)
    spr = pattern[..., None] * np.asarray(color, dtype=np.float32)
    out = background * (1.0 - alpha[..., None]) + spr * alpha[..., None]
    return np.clip(out, 0.0, 1.0)


def sprite_mask(h: int, w: int, cx: float, cy: float, sigma: float = 11.0,
                threshold: float = 0.35) -> np.ndarray:
    """Ground-truth integer label map (1 on the sprite) for a given position."""
    alpha, _ = _sprite_alpha_pattern(h, w, cx, cy, sigma)
    return (alpha > threshold).astype(np.int32)


def moving_sprite_clip(
    n_frames: int = 60,
    h: int = 128,
    w: int = 192,
    velocity: tuple[float, float] = (3.0, 0.0),
    start: tuple[float, float] | None = None,
    sigma: float = 11.0,
    seed: int = 0,
    background: np.ndarray | None = None,
    label: str = "sprite",
) -> FrameSequence:
    """Textured sprite translating at constant velocity over a fixed background."""
    bg = textured_background(h, w, seed) if background is None else background
    vx, vy = velocity
    if start is None:
        margin = 3 * sigma
        start = (margin if vx >= 0 else w - margin, h / 2.0)
    frames = []
    for t in range(n_frames):
        cx = start[0] + vx * t
        cy = start[1] + vy * t
        frames.append(composite_sprite(bg, cx, cy, sigma))
    return FrameSequence.from_frames(frames, source_label=label, fps_hint=10.0)


def sprite_positions(n_frames, velocity=(3.0, 0.0), start=None, w=192, h=128,
                     sigma: float = 11.0):
    """Centers used by :func:`moving_sprite_clip`, for ground-truth masks."""
    vx, vy = velocity
    if start is None:
        margin = 3 * sigma
        start = (margin if vx >= 0 else w - margin, h / 2.0)
    return [(start[0] + vx * t, start[1] + vy * t) for t in range(n_frames)]


def periodic_clip(
    n_frames: int = 60,
    h: int = 128,
    w: int = 192,
    period: int = 20,
    amplitude: float | None = None,
    seed: int = 1,
    label: str = "periodic",
) -> FrameSequence:
    """Sprite oscillating horizontally with the given period (repetitive motion)."""
    bg = textured_background(h, w, seed)
    amp = amplitude if amplitude is not None else w / 2 - 40
    frames = []
    for t in range(n_frames):
        cx = w / 2 + amp * np.sin(2 * np.pi * t / period)
        cy = h / 2 + 0.15 * amp * np.cos(2 * np.pi * t / period)
        frames.append(composite_sprite(bg, cx, cy))
    return FrameSequence.from_frames(frames, source_label=label, fps_hint=10.0)


def two_shot_clip(
    n_frames: int = 60,
    h: int = 128,
    w: int = 192,
    seed: int = 2,
    label: str = "twoshot",
) -> FrameSequence:
    """Two visually distinct shots back to back (a multi-modal video)."""
    half = n_frames // 2
    bg_a = textured_background(h, w, seed)
    bg_b = np.clip(1.0 - textured_background(h, w, seed + 7, detail=0.35), 0.0, 1.0)
    frames = []
    for t in range(half):
        cx = 40 + (w - 80) * t / max(1, half - 1)
        frames.append(composite_sprite(bg_a, cx, h / 2 - 12, color=(0.9, 0.3, 0.25)))
    for t in range(n_frames - half):
        cy = 35 + (h - 70) * t / max(1, n_frames - half - 1)
        frames.append(composite_sprite(bg_b, w / 2 + 25, cy, color=(0.2, 0.5, 0.95)))
    return FrameSequence.from_frames(frames, source_label=label, fps_hint=10.0)


def flip_study_clip(
    n_frames: int = 48,
    h: int = 128,
    w: int = 192,
    seed: int = 3,
    label: str = "flipstudy",
) -> FrameSequence:
    """Strongly chiral sprite drifting over a horizontally-symmetric background.

    Mirrored frames occupy the same positions as original ones (the motion
    range is symmetric about the frame center), so the sprite's orientation
    is the only thing distinguishing the two populations. The sprite's color
    ramps from warm on the left to cold on the right, making a flip a large
    appearance change rather than a subtle one.
    """
    bg = striped_background(h, w, seed)
    sigma = 12.0
    frames = []
    # A compact center-symmetric orbit rather than a long sweep: the codes
    # of each orientation then form a small closed loop instead of a long
    # arc, which K=2 k-means can actually separate once the two loops move
    # apart. Chirality comes from shape, not color: a satellite lobe trails
    # the main blob, a big appearance change for a model that must
    # reconstruct it, yet only a slight shift of image mass to a model that
    # never saw flips.
    period = 12.0
    y = np.arange(h, dtype=np.float32)[:, None]
    x = np.arange(w, dtype=np.float32)[None, :]

    def symmetric_blob(canvas, cx, cy, s, color):
        # mirror-symmetric interior: mirroring the frame maps this blob onto
        # itself at the mirrored position, so position cues transfer to
        # flipped inputs even for a model that never saw them
        dx = (x - cx) / s
        dy = (y - cy) / s
        r2 = dx * dx + dy * dy
        alpha = (np.exp(-0.5 * r2 / 1.44) * (r2 < 9.0)).astype(np.float32)
        pattern = np.clip(0.55 + 0.28 * np.cos(2.4 * np.sqrt(r2 + 1e-6))
                          + 0.15 * np.cos(5.5 * dy), 0.0, 1.0).astype(np.float32)
        spr = pattern[..., None] * np.asarray(color, dtype=np.float32)
        return np.clip(canvas * (1.0 - alpha[..., None]) + spr * alpha[..., None], 0.0, 1.0)

    for t in range(n_frames):
        cx = w / 2 + 6.0 * np.sin(2 * np.pi * t / period)
        cy = h / 2 + 2.5 * np.cos(2 * np.pi * t / period)
        frame = symmetric_blob(bg, cx, cy, sigma, (0.95, 0.5, 0.2))
        frame = composite_sprite(frame, cx + 1.7 * sigma, cy - 0.8 * sigma,
                                 sigma=0.95 * sigma, color=(0.3, 0.75, 0.5))
        frames.append(frame)
    return FrameSequence.from_frames(frames, source_label=label, fps_hint=10.0)


def rigid_sprite_clip(
    n_frames: int = 28,
    h: int = 128,
    w: int = 192,
    velocity: tuple[int, int] = (2, 0),
    patch_size: int = 44,
    seed: int = 4,
    label: str = "rigid",
) -> tuple[FrameSequence, list[np.ndarray]]:
    """A hard-edged textured patch translating at integer velocity.

    Because both the patch texture and its boundary move by whole pixels,
    every frame-to-frame correspondence inside the patch is an exact pixel
    copy: the ideal oracle for dense matching and mask propagation. Returns
    the clip plus the ground-truth label masks.
    """
    rng = np.random.default_rng(seed)
    bg = textured_background(h, w, seed)
    patch = np.clip(0.2 + 0.7 * smooth_noise(patch_size, patch_size, 8, rng)
                    + 0.12 * (rng.random((patch_size, patch_size, 3)) - 0.5), 0.0, 1.0)
    vx, vy = int(velocity[0]), int(velocity[1])
    x0, y0 = 20, (h - patch_size) // 2
    frames, masks = [], []
    for t in range(n_frames):
        px, py = x0 + vx * t, y0 + vy * t
        if px < 0 or py < 0 or px + patch_size > w or py + patch_size > h:
            raise ValueError("patch leaves the frame; reduce n_frames or velocity")
        frame = bg.copy()
        frame[py:py + patch_size, px:px + patch_size] = patch
        mask = np.zeros((h, w), np.int32)
        mask[py:py + patch_size, px:px + patch_size] = 1
        frames.append(frame)
        masks.append(mask)
    return FrameSequence.from_frames(frames, source_label=label, fps_hint=10.0), masks


def multi_video_set(
    n_frames: int = 20,
    h: int = 128,
    w: int = 192,
    seed: int = 5,
) -> list[FrameSequence]:
    """Three clearly distinct clips for multi-video manifold experiments."""
    a = moving_sprite_clip(n_frames, h, w, velocity=(2.5, 0.0), seed=seed,
                           label="vid_a")
    bg_b = np.clip(textured_background(h, w, seed + 11) * np.float32([0.4, 0.9, 0.5]),
                   0.0, 1.0)
    b = moving_sprite_clip(n_frames, h, w, velocity=(0.0, 1.8), seed=seed + 11,
                           background=bg_b, label="vid_b")
    frames_c = []
    bg_c = np.clip(0.55 + 0.45 * (textured_background(h, w, seed + 23) - 0.5) * 2.0,
                   0.0, 1.0)
    for t in range(n_frames):
        cx = w / 2 + (w / 3) * np.sin(2 * np.pi * t / n_frames)
        frames_c.append(composite_sprite(bg_c, cx, h / 3, sigma=8.0,
                                         color=(0.3, 0.2, 0.8)))
    c = FrameSequence.from_frames(frames_c, source_label="vid_c", fps_hint=10.0)
    return [a, b, c]
