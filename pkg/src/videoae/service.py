"""HTTP JSON API over trained model bundles.

The catalog root holds one directory per video id, each with a ``frames/``
directory and (once trained) a ``bundle/`` model directory. All endpoints
are reads over immutable bundles: training happens in the CLI only. Latent
codes are computed once per bundle and cached on disk beside it, keyed by
the weights digest.

Single images travel as PNG bodies; frame lists travel as JSON arrays of
base64 PNGs; mask propagation returns a zip archive of label PNGs. Errors
are always ``{"code", "message"}`` JSON with a 4xx status.
"""

from __future__ import annotations

import base64
import configparser
import io
import os
import zipfile
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, UploadFile, File, Form
from fastapi.responses import JSONResponse, Response
from PIL import Image, UnidentifiedImageError

from . import latentops
from .autoencoder import VideoAutoencoder
from .editing import PatchEdit, PathSpec, make_texture, patch_edit_project
from .errors import VideoAEError
from .ingest import FrameSequence, load_frames, load_model, to_uint8
from .projection import spatial_superres

CODES_CACHE = "codes.npz"


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _png_bytes(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(to_uint8(frame)).save(buf, format="PNG")
    return buf.getvalue()


def _png_b64(frame: np.ndarray) -> str:
    return base64.b64encode(_png_bytes(frame)).decode("ascii")


class VideoSession:
    """Lazy per-video state: model, conformed frames, codes, embedding."""

    def __init__(self, video_id: str, root: Path):
        self.video_id = video_id
        self.root = root
        self.frames_dir = root / "frames"
        self.bundle_dir = root / "bundle"
        self._model: Optional[VideoAutoencoder] = None
        self._frames: Optional[FrameSequence] = None
        self._codes = None
        self._em = None
        self._points = None

    @property
    def trained(self) -> bool:
        return (self.bundle_dir / "manifest.json").is_file()

    def frame_count(self) -> int:
        return sum(1 for p in self.frames_dir.glob("*.png"))

    def resolution(self) -> list[int]:
        paths = sorted(self.frames_dir.glob("*.png"))
        if not paths:
            return [0, 0]
        with Image.open(paths[0]) as im:
            return [im.height, im.width]

    def model(self) -> VideoAutoencoder:
        if not self.trained:
            raise ServiceError(409, "untrained", f"video {self.video_id!r} has no trained bundle")
        if self._model is None:
            self._model = VideoAutoencoder.from_bundle(load_model(self.bundle_dir))
        return self._model

    def frames(self) -> FrameSequence:
        """Source frames conformed (bilinear) to the model training size."""
        if self._frames is None:
            model = self.model()
            seq = load_frames(self.frames_dir, source_label=self.video_id)
            cfg = model.config
            if (seq.height, seq.width) != (cfg.input_h, cfg.input_w):
                from .ingest import resize_bilinear
                frames = np.stack([resize_bilinear(f, cfg.input_h, cfg.input_w) for f in seq.frames])
                seq = FrameSequence(frames, seq.frame_ids, seq.source_label, seq.fps_hint)
            self._frames = seq
        return self._frames

    def codes(self):
        if self._codes is None:
            model = self.model()
            digest = model.to_bundle().manifest.weights_digest
            cache = self.bundle_dir / CODES_CACHE
            arr = None
            if cache.is_file():
                with np.load(cache) as stored:
                    if "digest" in stored.files and str(stored["digest"]) == digest:
                        arr = stored["codes"]
            if arr is None:
                codes = model.encode_batch(self.frames().frames)
                arr = np.stack([c.values for c in codes])
                np.savez_compressed(cache, codes=arr, digest=np.array(digest))
            h, w = self.frames().height, self.frames().width
            from .autoencoder import LatentCode
            self._codes = [LatentCode(arr[i], (h, w)) for i in range(len(arr))]
        return self._codes

    def embedding(self):
        if self._em is None:
            codes = self.codes()
            self._em = latentops.fit_embedding(codes)
            seq = self.frames()
            points = latentops.embedding_points(
                self._em, codes, frame_ids=seq.frame_ids,
                source_labels=[seq.source_label] * len(seq),
            )
            self._points = latentops.points_to_jsonable(points)
        return self._em, self._points


class SessionCatalog:
    def __init__(self, root):
        self.root = Path(root)
        self._sessions: dict[str, VideoSession] = {}

    def video_ids(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "frames").is_dir())

    def session(self, video_id: str) -> VideoSession:
        if video_id not in self._sessions:
            if video_id not in self.video_ids():
                raise ServiceError(404, "unknown_video", f"no video {video_id!r} in catalog")
            self._sessions[video_id] = VideoSession(video_id, self.root / video_id)
        return self._sessions[video_id]


def _require(body: dict, key: str):
    if key not in body:
        raise ServiceError(400, "missing_field", f"request body needs {key!r}")
    return body[key]


def create_app(catalog_root) -> FastAPI:
    app = FastAPI(title="videoae service")
    catalog = SessionCatalog(catalog_root)
    app.state.catalog = catalog

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=exc.status)

    @app.exception_handler(VideoAEError)
    async def _toolkit_error(_req: Request, exc: VideoAEError):
        code = type(exc).__name__
        return JSONResponse({"code": code, "message": str(exc)}, status_code=400)

    @app.get("/videos")
    def videos():
        out = []
        for vid in catalog.video_ids():
            s = catalog.session(vid)
            out.append({
                "video_id": vid,
                "frame_count": s.frame_count(),
                "resolution": s.resolution(),
                "trained": s.trained,
            })
        return out

    @app.get("/videos/{video_id}/embedding")
    def embedding(video_id: str):
        _, points = catalog.session(video_id).embedding()
        return points

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise ServiceError(400, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise ServiceError(400, "bad_json", "request body must be a JSON object")
        return body

    @app.post("/videos/{video_id}/average")
    async def average(video_id: str, request: Request):
        body = await _json_body(request)
        frame_ids = _require(body, "frame_ids")
        iterations = int(body.get("iterations", 0))
        s = catalog.session(video_id)
        codes = s.codes()
        if not isinstance(frame_ids, list) or not frame_ids:
            raise ServiceError(400, "empty_selection", "frame_ids must be a nonempty list")
        try:
            subset = [codes[int(i)] for i in frame_ids]
        except (IndexError, ValueError):
            raise ServiceError(400, "bad_frame_id", "frame_ids out of range")
        frame = latentops.decode_average(s.model(), subset, iterations)
        mediod = latentops.nearest_code_id(codes, latentops.average_codes(subset),
                                           [int(i) for i in frame_ids])
        return Response(_png_bytes(frame), media_type="image/png",
                        headers={"X-Mediod-Frame-Id": str(mediod)})

    @app.post("/videos/{video_id}/path")
    async def path(video_id: str, request: Request):
        body = await _json_body(request)
        spec = PathSpec.from_jsonable(body)
        s = catalog.session(video_id)
        em, _ = s.embedding()
        seq = make_texture(s.model(), s.codes(), spec, em=em)
        return {"count": len(seq), "frames": [_png_b64(f) for f in seq.frames]}

    @app.post("/videos/{video_id}/edit")
    async def edit(video_id: str, request: Request):
        body = await _json_body(request)
        frame_id = int(_require(body, "frame_id"))
        iterations = int(body.get("iterations", 5))
        edits = [PatchEdit.from_jsonable(e) for e in body.get("edits", [])]
        s = catalog.session(video_id)
        frames = s.frames()
        if not (0 <= frame_id < len(frames)):
            raise ServiceError(400, "bad_frame_id", f"frame_id {frame_id} out of range")
        out = patch_edit_project(s.model(), frames[frame_id], edits, iterations,
                                 frames=frames.frames)
        return Response(_png_bytes(out), media_type="image/png")

    @app.post("/videos/{video_id}/superres")
    async def superres(video_id: str, file: UploadFile = File(...), n: int = Form(5)):
        s = catalog.session(video_id)
        model = s.model()
        raw = await file.read()
        try:
            with Image.open(io.BytesIO(raw)) as im:
                low = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
        except (UnidentifiedImageError, OSError):
            raise ServiceError(415, "bad_image", "upload is not a decodable image")
        out = spatial_superres(model, low, model.config.input_h, model.config.input_w, n)
        return Response(_png_bytes(out), media_type="image/png")

    @app.post("/videos/{video_id}/propagate_mask")
    async def propagate(video_id: str, mask: UploadFile = File(...), frame_id: int = Form(0),
                        search_radius: int = Form(16)):
        s = catalog.session(video_id)
        frames = s.frames()
        if not (0 <= frame_id < len(frames)):
            raise ServiceError(400, "bad_frame_id", f"frame_id {frame_id} out of range")
        raw = await mask.read()
        try:
            with Image.open(io.BytesIO(raw)) as im:
                labels = np.asarray(im.convert("I"), dtype=np.int32)
        except (UnidentifiedImageError, OSError):
            raise ServiceError(415, "bad_image", "mask is not a decodable image")
        if labels.shape != (frames.height, frames.width):
            raise ServiceError(400, "dim_mismatch",
                               f"mask {labels.shape} does not match frames "
                               f"{(frames.height, frames.width)}")
        masks = latentops.propagate_mask(s.model(), frames.frames[frame_id:], labels,
                                         search_radius)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for i, m in enumerate(masks):
                png = io.BytesIO()
                Image.fromarray(m.astype(np.uint8), mode="L").save(png, format="PNG")
                zf.writestr("mask_%06d.png" % (frame_id + i), png.getvalue())
        return Response(buf.getvalue(), media_type="application/zip")

    @app.post("/videos/{video_id}/interpolate")
    async def interpolate(video_id: str, request: Request):
        body = await _json_body(request)
        a = int(_require(body, "frame_a"))
        b = int(_require(body, "frame_b"))
        steps = int(body.get("steps", 1))
        include_endpoints = bool(body.get("include_endpoints", False))
        if steps < 1:
            raise ServiceError(400, "bad_steps", "steps must be >= 1")
        s = catalog.session(video_id)
        codes = s.codes()
        if not (0 <= a < len(codes) and 0 <= b < len(codes)):
            raise ServiceError(400, "bad_frame_id", "frame ids out of range")
        model = s.model()
        frames = []
        if include_endpoints:
            frames.append(latentops.interpolate(model, codes[a], codes[b], 1.0))
        for j in range(1, steps + 1):
            alpha = 1.0 - j / (steps + 1)
            frames.append(latentops.interpolate(model, codes[a], codes[b], alpha))
        if include_endpoints:
            frames.append(latentops.interpolate(model, codes[a], codes[b], 0.0))
        return {"count": len(frames), "frames": [_png_b64(f) for f in frames]}

    return app


def load_service_config(path=None) -> dict:
    """INI config with env overrides (VISA_HOST/VISA_PORT/VISA_CATALOG)."""
    cfg = {"host": "127.0.0.1", "port": 8008, "catalog_root": "."}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.read(str(path))
        if parser.has_section("service"):
            section = parser["service"]
            cfg["host"] = section.get("host", cfg["host"])
            cfg["port"] = section.getint("port", cfg["port"])
            cfg["catalog_root"] = section.get("catalog_root", cfg["catalog_root"])
    cfg["host"] = os.environ.get("VISA_HOST", cfg["host"])
    cfg["port"] = int(os.environ.get("VISA_PORT", cfg["port"]))
    cfg["catalog_root"] = os.environ.get("VISA_CATALOG", cfg["catalog_root"])
    return cfg
