"""Synthetic spatio-temporal classification tasks at desk scale.

Three task families generate labeled frame sequences whose classes differ
by motion direction (moving_bar), by spatial template under positional
jitter (jitter_pattern), or purely by temporal blink rate of a shared
template (rate_pattern). Pixel-flip noise and all per-instance randomness
derive from one seed, so a dataset is reproducible byte-for-byte.
"""

from __future__ import annotations

import numpy as np

from .encoding import FrameSequence

__all__ = ["gen_synthetic", "jitter_templates", "TASKS"]

TASKS = ("moving_bar", "jitter_pattern", "rate_pattern")

# Cardinal directions first (row, col steps), then diagonals.
_DIRECTIONS = [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1)]


def _moving_bar(label: int, dims, n_frames: int, rng: np.random.Generator) -> np.ndarray:
    h, w = dims
    dr, dc = _DIRECTIONS[label]
    frames = np.zeros((n_frames, h, w))
    r0 = int(rng.integers(h))
    c0 = int(rng.integers(w))
    for t in range(n_frames):
        r = (r0 + t * dr) % h
        c = (c0 + t * dc) % w
        if dr == 0:
            frames[t, :, c] = 1.0
        elif dc == 0:
            frames[t, r, :] = 1.0
        else:
            # Diagonal classes move a 3x3 blob with wraparound.
            rows = (np.arange(r - 1, r + 2)) % h
            cols = (np.arange(c - 1, c + 2)) % w
            frames[t][np.ix_(rows, cols)] = 1.0
    return frames


def jitter_templates(n_classes: int, dims, rng_seed: int, density: float = 0.3) -> np.ndarray:
    """Per-class random binary templates for the jitter task."""
    h, w = dims
    rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(0,)))
    return (rng.random((n_classes, h, w)) < density).astype(np.float64)


def _jitter_pattern(template: np.ndarray, n_frames: int, rng: np.random.Generator) -> np.ndarray:
    h, w = template.shape
    frames = np.empty((n_frames, h, w))
    r_off = int(rng.integers(h))
    c_off = int(rng.integers(w))
    for t in range(n_frames):
        frames[t] = np.roll(template, (r_off, c_off), axis=(0, 1))
        r_off = (r_off + int(rng.integers(-1, 2))) % h
        c_off = (c_off + int(rng.integers(-1, 2))) % w
    return frames


def _rate_pattern(
    template: np.ndarray, label: int, n_frames: int, rng: np.random.Generator
) -> np.ndarray:
    period = label + 1
    phase = int(rng.integers(2 * period))
    frames = np.empty((n_frames,) + template.shape)
    for t in range(n_frames):
        on = ((t + phase) // period) % 2 == 0
        frames[t] = template if on else 0.0
    return frames


def _apply_flip_noise(frames: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    if noise <= 0.0:
        return frames
    flips = rng.random(frames.shape) < noise
    return np.where(flips, 1.0 - frames, frames)


def gen_synthetic(
    task: str,
    n_classes: int,
    n_per_class: int,
    dims: tuple[int, int] = (10, 10),
    noise: float = 0.0,
    rng_seed: int = 0,
    n_frames: int = 12,
    frame_period: float = 10.0,
) -> list[tuple[FrameSequence, int]]:
    """Generate a balanced labeled set of frame sequences.

    Returns ``n_classes * n_per_class`` (sequence, label) pairs in
    class-major order. Instance randomness (start positions, jitter
    walks, blink phases, noise) comes from per-instance child seeds, so
    the same seed reproduces the full set exactly.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; choose from {TASKS}")
    if n_classes < 2:
        raise ValueError(f"need at least two classes, got {n_classes}")
    if task == "moving_bar" and n_classes > len(_DIRECTIONS):
        raise ValueError(f"moving_bar supports at most {len(_DIRECTIONS)} classes")
    if n_per_class < 1:
        raise ValueError("need at least one instance per class")

    templates = None
    if task == "jitter_pattern":
        templates = jitter_templates(n_classes, dims, rng_seed)
    shared = None
    if task == "rate_pattern":
        shared_rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(0,)))
        shared = (shared_rng.random(dims) < 0.3).astype(np.float64)

    out: list[tuple[FrameSequence, int]] = []
    for label in range(n_classes):
        for inst in range(n_per_class):
            child = np.random.SeedSequence(entropy=rng_seed, spawn_key=(1, label, inst))
            rng = np.random.default_rng(child)
            if task == "moving_bar":
                frames = _moving_bar(label, dims, n_frames, rng)
            elif task == "jitter_pattern":
                frames = _jitter_pattern(templates[label], n_frames, rng)
            else:
                frames = _rate_pattern(shared, label, n_frames, rng)
            frames = _apply_flip_noise(frames, noise, rng)
            out.append((FrameSequence(frames, frame_period), label))
    return out
