"""Frame sequences, temporal-difference spike encoding, and file formats.

Encoding follows the sensory-receptor scheme: a pixel fires whenever its
intensity changes by more than a threshold between two adjacent frames,
so a static scene is silent and motion edges drive the network. An
optional preprocessing step crops each frame to a window centered on the
intensity center of gravity, discarding static surroundings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spikes import SpikeTrain

__all__ = [
    "FrameSequence",
    "encode_frames",
    "filter_frames",
    "save_frames_binary",
    "load_frames_binary",
    "load_frames_csv_dir",
]

_MAGIC = b"FSQ1"


@dataclass(frozen=True)
class FrameSequence:
    """Stack of H x W nonnegative intensity frames sampled every frame_period ms."""

    frames: np.ndarray
    frame_period: float

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise ValueError(f"frames must be a (T, H, W) stack, got shape {frames.shape}")
        if np.any(frames < 0):
            raise ValueError("frame intensities must be nonnegative")
        if self.frame_period <= 0.0:
            raise ValueError(f"frame period must be positive, got {self.frame_period}")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]


def encode_frames(seq: FrameSequence, threshold: float = 0.5) -> SpikeTrain:
    """Temporal-difference encoding of a frame sequence.

    Pixel p (row-major input neuron index) fires at time t*frame_period
    for every frame t >= 1 where |frame_t(p) - frame_{t-1}(p)| exceeds the
    threshold. The train duration is the full sequence length.
    """
    if seq.n_frames < 2:
        raise ValueError(f"need at least two frames to difference, got {seq.n_frames}")
    h, w = seq.shape
    diffs = np.abs(np.diff(seq.frames, axis=0)) > threshold
    t_idx, r_idx, c_idx = np.nonzero(diffs)
    neuron = r_idx * w + c_idx
    times = (t_idx + 1).astype(np.float64) * seq.frame_period
    order = np.lexsort((neuron, times))
    duration = seq.n_frames * seq.frame_period
    return SpikeTrain(neuron[order], times[order], duration)


def _cog(frame: np.ndarray) -> tuple[float, float]:
    """Intensity center of gravity; geometric center for an empty frame."""
    total = frame.sum()
    h, w = frame.shape
    if total == 0.0:
        return (h - 1) / 2.0, (w - 1) / 2.0
    rows = np.arange(h) @ frame.sum(axis=1) / total
    cols = np.arange(w) @ frame.sum(axis=0) / total
    return float(rows), float(cols)


def filter_frames(seq: FrameSequence, box: tuple[int, int]) -> FrameSequence:
    """Crop each frame to a box centered on its center of gravity.

    The window is clamped to the frame borders, so off-center mass near an
    edge yields the closest fully contained window.
    """
    bh, bw = box
    h, w = seq.shape
    if not (0 < bh <= h and 0 < bw <= w):
        raise ValueError(f"crop box {box} does not fit frames of shape {(h, w)}")
    out = np.empty((seq.n_frames, bh, bw))
    for t, frame in enumerate(seq.frames):
        cr, cc = _cog(frame)
        r0 = int(round(cr - (bh - 1) / 2.0))
        c0 = int(round(cc - (bw - 1) / 2.0))
        r0 = min(max(r0, 0), h - bh)
        c0 = min(max(c0, 0), w - bw)
        out[t] = frame[r0 : r0 + bh, c0 : c0 + bw]
    return FrameSequence(out, seq.frame_period)


def save_frames_binary(seq: FrameSequence, path) -> None:
    """Write the documented binary form.

    Layout: magic ``FSQ1``, then little-endian uint32 T, H, W, float64
    frame period, then T*H*W float32 intensities in row-major order.
    """
    t, (h, w) = seq.n_frames, seq.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIId", t, h, w, seq.frame_period))
        fh.write(seq.frames.astype("<f4").tobytes(order="C"))


def load_frames_binary(path) -> FrameSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic bytes {magic!r}, expected {_MAGIC!r}")
        t, h, w, period = struct.unpack("<IIId", fh.read(20))
        data = np.frombuffer(fh.read(t * h * w * 4), dtype="<f4")
    if data.size != t * h * w:
        raise ValueError("truncated frame data")
    return FrameSequence(data.reshape(t, h, w).astype(np.float64), period)


def load_frames_csv_dir(directory, frame_period: float) -> FrameSequence:
    """Load one frame per ``*.csv`` grid file, in sorted filename order."""
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise ValueError(f"no csv frames found in {directory}")
    frames = [np.loadtxt(p, delimiter=",", ndmin=2) for p in paths]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise ValueError(f"frames disagree on shape: {sorted(shapes)}")
    return FrameSequence(np.stack(frames), frame_period)
