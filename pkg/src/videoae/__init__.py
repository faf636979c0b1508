"""videoae: per-video autoencoders for exploring, editing and transmitting video."""

from . import errors
from .autoencoder import (
    AutoencoderConfig,
    LatentCode,
    TrainConfig,
    TrainHistory,
    VideoAutoencoder,
    build_model,
    reconstruction_loss,
    train,
)
from .editing import (
    PatchEdit,
    PathSpec,
    extrapolate,
    make_texture,
    nearest_frames,
    patch_edit_project,
    stitch,
    stretch,
)
from .ingest import (
    FrameSequence,
    ModelBundle,
    ModelManifest,
    conform,
    load_frames,
    load_model,
    save_frames,
    save_model,
)
from .latentops import (
    ClusterResult,
    EmbeddingModel,
    PixelCodeField,
    Point2D,
    average_codes,
    cluster,
    correspond,
    decode_average,
    embed,
    fit_embedding,
    gradient_energy,
    interpolate,
    interpolate_code,
    pixel_codes,
    propagate_mask,
    resample_timeline,
)
from .projection import (
    LinearAutoencoder,
    ProjectionTrace,
    align_foreign,
    iterate_project,
    project,
    sample_manifold,
    spatial_superres,
)
from .transmit import (
    BitrateReport,
    TransmissionPacket,
    TransmissionPlan,
    bitrate_report,
    decode_packet,
    encode_packet,
    psnr,
    read_packets,
    receive,
    send,
    ssim,
    write_packets,
)

__version__ = "0.1.0"
