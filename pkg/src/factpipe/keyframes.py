"""Keyframe sampling and near-duplicate removal.

Timestamps are the fixed grid {0, i, 2i, ...} clipped to [0, duration).
Frames hash to a 64-bit perceptual hash (32x32 grayscale, orthonormal
DCT-II, sign of the top-left 8x8 block, row major) and a greedy pass keeps
a frame only when it differs from every kept frame by more than the
Hamming threshold. Decoding video files is delegated to an external tool
through a small subprocess contract; pre-extracted frame directories need
no decoder at all.
"""

from __future__ import annotations

import logging
import math
import re
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.fft import dctn

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL_S = 2.0
DEFAULT_HAMMING_THRESHOLD = 10

# tolerance for "duration is an exact multiple of the interval"
_INTEGRALITY_EPS = 1e-9


class EmptyVideo(ValueError):
    pass


class DecodeError(Exception):
    pass


@dataclass(frozen=True)
class Keyframe:
    media_id: str
    timestamp_s: float
    image_path: str
    phash: int


def sample_timestamps(duration_s: float, interval_s: float) -> list[float]:
    """Grid {0, i, 2i, ...} intersected with [0, duration).

    An exact multiple yields duration/interval frames, anything else one
    more (the count is ceil(duration/interval)).
    """
    if interval_s <= 0:
        raise ValueError(f"interval_s must be positive, got {interval_s}")
    if duration_s <= 0:
        raise EmptyVideo(f"non-positive duration {duration_s}")
    ratio = duration_s / interval_s
    nearest = round(ratio)
    if nearest > 0 and abs(ratio - nearest) <= _INTEGRALITY_EPS * max(1.0, abs(ratio)):
        count = nearest
    else:
        count = math.ceil(ratio)
    return [k * interval_s for k in range(count)]


def phash64(image: str | Path | Image.Image) -> int:
    """64-bit perceptual hash; bit k (row major, MSB first) is coeff > 0."""
    if isinstance(image, (str, Path)):
        try:
            with Image.open(image) as img:
                gray = img.convert("L").resize((32, 32), Image.LANCZOS)
        except (OSError, UnidentifiedImageError) as exc:
            raise DecodeError(f"cannot read image {image}: {exc}") from exc
    else:
        gray = image.convert("L").resize((32, 32), Image.LANCZOS)
    pixels = np.asarray(gray, dtype=np.float64)
    coeffs = dctn(pixels, norm="ortho")[:8, :8]
    value = 0
    for i in range(8):
        for j in range(8):
            value = (value << 1) | (1 if coeffs[i, j] > 0 else 0)
    return value


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def dedup_frames(frames: list[Keyframe], hamming_threshold: int = DEFAULT_HAMMING_THRESHOLD) -> list[Keyframe]:
    """Greedy near-duplicate removal in timestamp order; first frame stays."""
    kept: list[Keyframe] = []
    for frame in sorted(frames, key=lambda f: f.timestamp_s):
        if all(hamming(frame.phash, other.phash) > hamming_threshold for other in kept):
            kept.append(frame)
    return kept


_FRAME_FILE_RE = re.compile(r"^(?:[A-Za-z0-9]+_)?(\d+)\.(?:jpg|jpeg|png)$", re.IGNORECASE)


def _frames_from_directory(directory: Path, media_id: str) -> list[Keyframe]:
    entries: list[tuple[int, Path]] = []
    for path in directory.iterdir():
        m = _FRAME_FILE_RE.match(path.name)
        if m:
            entries.append((int(m.group(1)), path))
    entries.sort(key=lambda e: e[0])
    frames = [
        Keyframe(media_id=media_id, timestamp_s=ms / 1000.0, image_path=str(path), phash=phash64(path))
        for ms, path in entries
    ]
    return frames


@dataclass(frozen=True)
class FrameDecoder:
    """Subprocess contract for turning a video file into frame images.

    The argument template is formatted with video (input path), interval
    (seconds, as text) and out_dir; the tool must write files named
    <milliseconds>.jpg into out_dir. The stock template fits ffmpeg-style
    tools; swap it for whatever the deployment has.
    """

    tool: str
    args_template: tuple[str, ...] = (
        "-i", "{video}", "-vf", "fps=1/{interval}", "{out_dir}/%d.jpg",
    )
    timeout_s: float = 300.0

    def run(self, video: Path, interval_s: float, out_dir: Path) -> None:
        args = [self.tool] + [
            part.format(video=str(video), interval=f"{interval_s:g}", out_dir=str(out_dir))
            for part in self.args_template
        ]
        try:
            proc = subprocess.run(args, capture_output=True, timeout=self.timeout_s)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise DecodeError(f"frame decoder failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise DecodeError(
                f"frame decoder exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:200]}"
            )


def sample_keyframes(
    source: str | Path,
    interval_s: float = DEFAULT_INTERVAL_S,
    *,
    media_id: str | None = None,
    out_dir: str | Path | None = None,
    decoder: FrameDecoder | None = None,
    duration_s: float | None = None,
) -> list[Keyframe]:
    """Sample keyframes from a video file or a pre-extracted frame directory.

    Directory sources are trusted to already lie on the sampling grid (their
    file names carry the millisecond timestamps). File sources require a
    decoder and an out_dir to write into. Frames come back in timestamp
    order, hashes computed, before any deduplication.
    """
    source = Path(source)
    if media_id is None:
        media_id = source.stem if re.fullmatch(r"VID\d+", source.stem) else "VID1"
    if source.is_dir():
        frames = _frames_from_directory(source, media_id)
        if not frames:
            raise EmptyVideo(f"no frames in {source}")
        return frames
    if not source.is_file():
        raise DecodeError(f"video source {source} does not exist")
    if decoder is None or out_dir is None:
        raise DecodeError("decoding a video file needs a decoder and an out_dir")
    if duration_s is not None:
        # pure arithmetic up front so an empty grid fails before decoding
        sample_timestamps(duration_s, interval_s)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    decoder.run(source, interval_s, out_dir)
    produced = _frames_from_directory(out_dir, media_id)
    if not produced:
        raise EmptyVideo(f"decoder produced no frames for {source}")
    # decoder output is sequence-numbered; rename onto the timestamp grid
    frames: list[Keyframe] = []
    for index, frame in enumerate(produced):
        ms = round(index * interval_s * 1000)
        target = out_dir / f"{media_id}_{ms}.jpg"
        Path(frame.image_path).rename(target)
        frames.append(Keyframe(media_id=media_id, timestamp_s=ms / 1000.0, image_path=str(target), phash=frame.phash))
    return frames
