"""The per-video convolutional autoencoder.

Encoder: six 5x5 conv layers (four stride-2, then two stride-1 each followed
by a 2x2 max-pool), every conv followed by batch-norm and ReLU, for a total
spatial reduction of 64x and a latent of 12*k channels. Decoder: six 4x4
stride-2 up-convs with batch-norm and ReLU, then a 3-channel projection with
a sigmoid. No skip connections: the latent code must carry everything.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from .errors import InsufficientData, InvalidConfig, ShapeError
from .ingest import FrameSequence, ModelBundle, ModelManifest, weights_digest

DOWNSAMPLE = 64  # 4 stride-2 convs * 2 max-pools; must cancel the 6 up-convs


def default_progression(k: int) -> list[int]:
    return [k, 2 * k, 4 * k, 8 * k, 12 * k, 12 * k]


@dataclass
class AutoencoderConfig:
    base_channels: int = 64
    input_h: int = 256
    input_w: int = 512
    channel_progression: Optional[list[int]] = None
    hflip_augmentation: bool = False
    multires_augmentation: bool = False
    multires_scales: list[float] = field(default_factory=lambda: [0.125, 0.25, 0.5, 1.0])

    def __post_init__(self):
        if self.channel_progression is None:
            self.channel_progression = default_progression(self.base_channels)
        self.validate()

    def validate(self):
        k = self.base_channels
        if k < 1:
            raise InvalidConfig(f"base_channels must be positive, got {k}")
        if len(self.channel_progression) != 6:
            raise InvalidConfig("channel_progression must have exactly 6 entries")
        if self.channel_progression[5] != 12 * k:
            raise InvalidConfig("last progression entry must equal 12*base_channels")
        if self.input_h % DOWNSAMPLE or self.input_w % DOWNSAMPLE:
            raise InvalidConfig(
                f"input dims {self.input_h}x{self.input_w} must be divisible by {DOWNSAMPLE}"
            )
        if any(s <= 0 or s > 1 for s in self.multires_scales):
            raise InvalidConfig("multires_scales must lie in (0, 1]")

    @property
    def latent_channels(self) -> int:
        return 12 * self.base_channels

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return (self.latent_channels, self.input_h // DOWNSAMPLE, self.input_w // DOWNSAMPLE)

    @property
    def compression_ratio(self) -> float:
        """Input elements per latent element at the training resolution."""
        c, h, w = self.latent_shape
        return (self.input_h * self.input_w * 3) / (c * h * w)


@dataclass
class TrainConfig:
    batch_size: int = 6
    lr: float = 0.0002
    epochs_constant: int = 100
    epochs_decay: int = 100
    large_video_threshold: int = 3000
    large_video_epochs: int = 40
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "lr", "epochs_constant", "epochs_decay",
                     "large_video_threshold", "large_video_epochs"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"TrainConfig.{name} must be positive")


@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_lr: list[float] = field(default_factory=list)
    epoch_wall_s: list[float] = field(default_factory=list)
    epochs_constant: int = 0
    epochs_decay: int = 0
    hflip_augmentation: bool = False
    multires_augmentation: bool = False
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


@dataclass
class LatentCode:
    """Encoder output for one frame: (12*k, h/64, w/64) plus the source size."""

    values: np.ndarray
    source_shape: tuple[int, int]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 3:
            raise ShapeError(f"latent code must be (C, h', w'), got {self.values.shape}")
        h, w = self.source_shape
        c, ch, cw = self.values.shape
        if ch * DOWNSAMPLE != h or cw * DOWNSAMPLE != w:
            raise ShapeError(
                f"latent spatial dims {ch}x{cw} inconsistent with source {h}x{w}"
            )

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


class _Encoder(nn.Module):
    def __init__(self, progression: Sequence[int]):
        super().__init__()
        p = list(progression)
        ins = [3] + p[:-1]
        blocks = []
        for i in range(6):
            stride = 2 if i < 4 else 1
            layers = [
                nn.Conv2d(ins[i], p[i], kernel_size=5, stride=stride, padding=2),
                nn.BatchNorm2d(p[i]),
                nn.ReLU(inplace=True),
            ]
            if i >= 4:
                layers.append(nn.MaxPool2d(kernel_size=2, stride=2))
            blocks.append(nn.Sequential(*layers))
        self.blocks = nn.ModuleList(blocks)

    def forward(self, x):
        for block in self.blocks:
            x = block(x)
        return x

    def feature_maps(self, x):
        """Per-block outputs, for hypercolumn pixel codes."""
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return feats


class _Decoder(nn.Module):
    def __init__(self, progression: Sequence[int]):
        super().__init__()
        p = list(progression)
        outs = [p[4], p[3], p[2], p[1], p[0], p[0]]
        ins = [p[5]] + outs[:-1]
        blocks = []
        for i in range(6):
            blocks.append(nn.Sequential(
                nn.ConvTranspose2d(ins[i], outs[i], kernel_size=4, stride=2, padding=1),
                nn.BatchNorm2d(outs[i]),
                nn.ReLU(inplace=True),
            ))
        self.blocks = nn.ModuleList(blocks)
        self.project = nn.Conv2d(outs[-1], 3, kernel_size=3, padding=1)

    def forward(self, z):
        for block in self.blocks:
            z = block(z)
        return torch.sigmoid(self.project(z))


class VideoAutoencoder:
    """Encoder/decoder pair with its config and training provenance."""

    def __init__(self, config: AutoencoderConfig, encoder: _Encoder, decoder: _Decoder):
        self.config = config
        self.encoder = encoder
        self.decoder = decoder
        self.epochs_trained = 0
        self.trained_frame_count = 0
        self.source_labels: list[str] = []
        self._eval()

    def _eval(self):
        self.encoder.eval()
        self.decoder.eval()

    # --- inference --------------------------------------------------------

    def _check_dims(self, h: int, w: int):
        if h % DOWNSAMPLE or w % DOWNSAMPLE:
            raise ShapeError(f"frame dims {h}x{w} must be divisible by {DOWNSAMPLE}")

    @torch.no_grad()
    def encode(self, frame: np.ndarray) -> LatentCode:
        return self.encode_batch(frame[None])[0]

    @torch.no_grad()
    def encode_batch(self, frames: np.ndarray) -> list[LatentCode]:
        """Encode (N, H, W, 3) frames; any size divisible by 64 is accepted."""
        frames = np.asarray(frames, dtype=np.float32)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise ShapeError(f"expected (N, H, W, 3), got {frames.shape}")
        n, h, w, _ = frames.shape
        self._check_dims(h, w)
        self._eval()
        x = torch.from_numpy(frames).permute(0, 3, 1, 2)
        z = self.encoder(x).numpy()
        return [LatentCode(z[i], (h, w)) for i in range(n)]

    @torch.no_grad()
    def decode(self, code: LatentCode) -> np.ndarray:
        return self.decode_batch([code])[0]

    @torch.no_grad()
    def decode_batch(self, codes: Sequence[LatentCode]) -> np.ndarray:
        if not codes:
            return np.zeros((0, 0, 0, 3), dtype=np.float32)
        c = self.config.latent_channels
        shapes = {tuple(code.values.shape) for code in codes}
        if len(shapes) > 1:
            raise ShapeError(f"mixed latent shapes: {sorted(shapes)}")
        if codes[0].values.shape[0] != c:
            raise ShapeError(
                f"latent has {codes[0].values.shape[0]} channels, model expects {c}"
            )
        self._eval()
        z = torch.from_numpy(np.stack([code.values for code in codes]))
        out = self.decoder(z).permute(0, 2, 3, 1).numpy()
        return np.clip(out, 0.0, 1.0)

    def reconstruct(self, frame: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(frame))

    @torch.no_grad()
    def pixel_code_field(self, frame: np.ndarray) -> np.ndarray:
        """Hypercolumn features: every encoder block output bilinearly resized
        to the frame resolution and concatenated per pixel -> (H, W, sum(widths)).

        Each layer's pixel vector is L2-normalized before concatenation so
        the cosine similarity of two hypercolumns is the mean of per-layer
        cosines; without this the wide, smooth deep layers drown out the
        spatially precise early layers and dense matching loses pixel
        accuracy.
        """
        frame = np.asarray(frame, dtype=np.float32)
        h, w = frame.shape[:2]
        self._check_dims(h, w)
        self._eval()
        x = torch.from_numpy(frame[None]).permute(0, 3, 1, 2)
        feats = self.encoder.feature_maps(x)
        up = []
        for f in feats:
            u = torch.nn.functional.interpolate(f, size=(h, w), mode="bilinear",
                                                align_corners=False)
            up.append(u / u.norm(dim=1, keepdim=True).clamp_min(1e-12))
        return torch.cat(up, dim=1).squeeze(0).permute(1, 2, 0).numpy()

    # --- persistence --------------------------------------------------------

    def state_bytes(self) -> bytes:
        buf = io.BytesIO()
        torch.save(
            {"encoder": self.encoder.state_dict(), "decoder": self.decoder.state_dict()},
            buf,
        )
        return buf.getvalue()

    def to_bundle(self) -> ModelBundle:
        weights = self.state_bytes()
        manifest = ModelManifest(
            format_version=1,
            base_channels=self.config.base_channels,
            input_height=self.config.input_h,
            input_width=self.config.input_w,
            channel_progression=list(self.config.channel_progression),
            epochs_trained=self.epochs_trained,
            trained_frame_count=self.trained_frame_count,
            source_labels=list(self.source_labels),
            hflip_augmentation=self.config.hflip_augmentation,
            multires_augmentation=self.config.multires_augmentation,
            weights_digest=weights_digest(weights),
        )
        return ModelBundle(weights=weights, manifest=manifest)

    @classmethod
    def from_bundle(cls, bundle: ModelBundle) -> "VideoAutoencoder":
        bundle.validate()
        m = bundle.manifest
        config = AutoencoderConfig(
            base_channels=m.base_channels,
            input_h=m.input_height,
            input_w=m.input_width,
            channel_progression=list(m.channel_progression),
            hflip_augmentation=m.hflip_augmentation,
            multires_augmentation=m.multires_augmentation,
        )
        model = build_model(config, seed=0)
        state = torch.load(io.BytesIO(bundle.weights), weights_only=True)
        model.encoder.load_state_dict(state["encoder"])
        model.decoder.load_state_dict(state["decoder"])
        model.epochs_trained = m.epochs_trained
        model.trained_frame_count = m.trained_frame_count
        model.source_labels = list(m.source_labels)
        model._eval()
        return model


def build_model(config: AutoencoderConfig, seed: int = 0) -> VideoAutoencoder:
    """Construct a randomly-initialized model (torch default fan-in init)."""
    config.validate()
    # Downsampling bookkeeping: the encoder's reduction must cancel the
    # decoder's six 2x up-convs exactly.
    assert 2 ** 4 * 2 ** 2 == DOWNSAMPLE == 2 ** 6
    torch.manual_seed(seed)
    model = VideoAutoencoder(config, _Encoder(config.channel_progression),
                             _Decoder(config.channel_progression))
    c, h, w = config.latent_shape
    assert h * DOWNSAMPLE == config.input_h and w * DOWNSAMPLE == config.input_w
    return model


def reconstruction_loss(model: VideoAutoencoder, frames) -> float:
    """Mean over frames of mean squared pixel error under encode-decode."""
    arr = frames.frames if isinstance(frames, FrameSequence) else np.asarray(frames)
    total = 0.0
    with torch.no_grad():
        model._eval()
        for start in range(0, len(arr), 8):
            chunk = np.asarray(arr[start:start + 8], dtype=np.float32)
            x = torch.from_numpy(chunk).permute(0, 3, 1, 2)
            out = model.decoder(model.encoder(x))
            total += float(((out - x) ** 2).mean(dim=(1, 2, 3)).sum())
    return total / len(arr)


def resolve_epochs(n_frames: int, tc: TrainConfig) -> tuple[int, int]:
    """(constant, decay) epoch counts; large videos train for fewer epochs."""
    if n_frames > tc.large_video_threshold:
        half = tc.large_video_epochs // 2
        return half, tc.large_video_epochs - half
    return tc.epochs_constant, tc.epochs_decay


def train(
    model: VideoAutoencoder,
    frames: FrameSequence,
    tc: TrainConfig = TrainConfig(),
    log_every: int = 0,
) -> tuple[VideoAutoencoder, TrainHistory]:
    """Minimize mean squared reconstruction error with Adam.

    Frames are treated as an unordered set and reshuffled every epoch. The
    learning rate stays constant for ``epochs_constant`` epochs, then decays
    linearly toward zero over ``epochs_decay`` more. Videos longer than
    ``large_video_threshold`` frames train for ``large_video_epochs`` total
    (split evenly between the constant and decay phases).
    """
    if len(frames) < 2:
        raise InsufficientData(f"need at least 2 frames, got {len(frames)}")
    cfg = model.config
    if frames.height != cfg.input_h or frames.width != cfg.input_w:
        raise ShapeError(
            f"frames are {frames.height}x{frames.width}, model expects "
            f"{cfg.input_h}x{cfg.input_w}; conform them first"
        )

    epochs_constant, epochs_decay = resolve_epochs(len(frames), tc)
    total_epochs = epochs_constant + epochs_decay

    history = TrainHistory(
        epochs_constant=epochs_constant,
        epochs_decay=epochs_decay,
        hflip_augmentation=cfg.hflip_augmentation,
        multires_augmentation=cfg.multires_augmentation,
        seed=tc.seed,
    )

    data = torch.from_numpy(frames.frames).permute(0, 3, 1, 2).contiguous()
    n = len(frames)
    rng = np.random.default_rng(tc.seed)
    optimizer = torch.optim.Adam(
        list(model.encoder.parameters()) + list(model.decoder.parameters()), lr=tc.lr
    )

    def lr_factor(epoch: int) -> float:
        if epoch < epochs_constant:
            return 1.0
        return 1.0 - (epoch + 1 - epochs_constant) / (epochs_decay + 1)

    model.encoder.train()
    model.decoder.train()
    for epoch in range(total_epochs):
        t0 = time.monotonic()
        lr = tc.lr * lr_factor(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, tc.batch_size):
            idx = order[start:start + tc.batch_size]
            target = data[idx]
            inputs = target
            if cfg.hflip_augmentation:
                flip = rng.random(len(idx)) < 0.5
                if flip.any():
                    inputs = target.clone()
                    inputs[flip] = torch.flip(inputs[flip], dims=[3])
                    target = inputs
            if cfg.multires_augmentation:
                # Degrade inputs only: random downsample, bilinear restore.
                scale = float(rng.choice(cfg.multires_scales))
                if scale < 1.0:
                    lh = max(1, round(cfg.input_h * scale))
                    lw = max(1, round(cfg.input_w * scale))
                    low = torch.nn.functional.interpolate(inputs, size=(lh, lw), mode="area")
                    inputs = torch.nn.functional.interpolate(
                        low, size=(cfg.input_h, cfg.input_w), mode="bilinear",
                        align_corners=False,
                    )
            optimizer.zero_grad()
            out = model.decoder(model.encoder(inputs))
            loss = torch.mean((out - target) ** 2)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
        history.epoch_loss.append(epoch_loss / n)
        history.epoch_lr.append(lr)
        history.epoch_wall_s.append(time.monotonic() - t0)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}/{total_epochs} loss {history.epoch_loss[-1]:.6f}")

    model._eval()
    model.epochs_trained += total_epochs
    model.trained_frame_count = n
    if frames.source_label and frames.source_label not in model.source_labels:
        model.source_labels.append(frames.source_label)
    return model, history
