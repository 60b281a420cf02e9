"""Sample-set expansion: each input yields the original plus t seeded variants.

Every variant applies exactly one transformation family (round-robin over
perturb / translate / rotate / perspective) so per-family effects stay
attributable. Per-variant RNGs derive from (seed, sample content digest,
variant index): expansion is bit-reproducible at any degree of parallelism,
and the expanded multiset is invariant under input reordering, which the
functional score's algebra (reorder invariance, concatenation as weighted
mean) depends on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .corpus import SampleSet

GEOMETRIC_FAMILIES = ("perturb", "translate", "rotate", "perspective")
SUITES = ("full-geometric", "perturb-only")


@dataclass(frozen=True)
class ExpansionConfig:
    variants_per_sample: int = 8
    epsilon: float = 0.03
    max_translate: float = 0.10
    max_rotate_deg: float = 15.0
    max_perspective_jitter: float = 0.10
    seed: int = 0
    suite: str = "full-geometric"

    def __post_init__(self):
        if self.variants_per_sample < 0:
            raise ValueError("variants_per_sample must be >= 0")
        for name in ("epsilon", "max_translate", "max_rotate_deg", "max_perspective_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.suite not in SUITES:
            raise ValueError(f"suite must be one of {SUITES}")


def _as_image(x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if len(shape) != 3:
        raise ValueError(f"geometric transforms need an (H, W, C) shape, got {shape}")
    return x.reshape(shape)


def _bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample img at float coords (xs=col, ys=row), bilinear, zero outside."""
    h, w, c = img.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def grab(yy, xx):
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = img[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return vals * valid[..., None]

    v00 = grab(y0, x0)
    v01 = grab(y0, x0 + 1)
    v10 = grab(y0 + 1, x0)
    v11 = grab(y0 + 1, x0 + 1)
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bot * fy


def _perturb(x: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.uniform(-epsilon, epsilon, size=x.shape)
    return np.clip(x.astype(np.float64) + noise, 0.0, 1.0).astype(np.float32)


def _translate(x: np.ndarray, shape: tuple[int, ...], max_translate: float,
               rng: np.random.Generator) -> np.ndarray:
    img = _as_image(x, shape)
    h, w, _ = img.shape
    mx = int(round(max_translate * w))
    my = int(round(max_translate * h))
    dx = int(rng.integers(-mx, mx + 1)) if mx else 0
    dy = int(rng.integers(-my, my + 1)) if my else 0
    return shift_image(img, dx, dy).reshape(x.shape)


def shift_image(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer-pixel shift (dx cols right, dy rows down) with zero fill."""
    h, w, _ = img.shape
    out = np.zeros_like(img)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src_y = slice(max(0, -dy), min(h, h - dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_y = slice(max(0, dy), min(h, h + dy))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[dst_y, dst_x] = img[src_y, src_x]
    return out


def _rotate(x: np.ndarray, shape: tuple[int, ...], max_rotate_deg: float,
            rng: np.random.Generator) -> np.ndarray:
    angle = float(rng.uniform(-max_rotate_deg, max_rotate_deg))
    return rotate_image(_as_image(x, shape), angle).reshape(x.shape)


def rotate_image(img: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotate about the image center by angle_deg (clockwise in display
    orientation), bilinear resampling, zero fill."""
    h, w, _ = img.shape
    theta = np.deg2rad(angle_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    cols, rows = np.meshgrid(np.arange(w, dtype=np.float64),
                             np.arange(h, dtype=np.float64))
    u = cols - cx
    v = rows - cy
    xs = cos_t * u + sin_t * v + cx
    ys = -sin_t * u + cos_t * v + cy
    out = _bilinear(img.astype(np.float64), xs, ys)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _perspective(x: np.ndarray, shape: tuple[int, ...], max_jitter: float,
                 rng: np.random.Generator) -> np.ndarray:
    img = _as_image(x, shape)
    h, w, _ = img.shape
    offsets = rng.uniform(-max_jitter, max_jitter, size=(4, 2))
    offsets[:, 0] *= (w - 1)
    offsets[:, 1] *= (h - 1)
    return perspective_image(img, offsets).reshape(x.shape)


def perspective_image(img: np.ndarray, corner_offsets: np.ndarray) -> np.ndarray:
    """Warp by the homography that pulls each output corner from the matching
    input corner displaced by corner_offsets (pixels); bilinear, zero fill."""
    h, w, _ = img.shape
    if not np.any(corner_offsets):
        return img.copy()
    dst = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], dtype=np.float64)
    src = dst + np.asarray(corner_offsets, dtype=np.float64)

    # direct linear transform for the 8 homography coefficients (dst -> src)
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((xd, yd), (xs_, ys_)) in enumerate(zip(dst, src)):
        a[2 * i] = [xd, yd, 1, 0, 0, 0, -xd * xs_, -yd * xs_]
        a[2 * i + 1] = [0, 0, 0, xd, yd, 1, -xd * ys_, -yd * ys_]
        b[2 * i] = xs_
        b[2 * i + 1] = ys_
    coef = np.linalg.solve(a, b)
    m = np.append(coef, 1.0).reshape(3, 3)

    cols, rows = np.meshgrid(np.arange(w, dtype=np.float64),
                             np.arange(h, dtype=np.float64))
    denom = m[2, 0] * cols + m[2, 1] * rows + m[2, 2]
    xs = (m[0, 0] * cols + m[0, 1] * rows + m[0, 2]) / denom
    ys = (m[1, 0] * cols + m[1, 1] * rows + m[1, 2]) / denom
    out = _bilinear(img.astype(np.float64), xs, ys)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def variant_seed(seed: int, row: np.ndarray, variant_index: int) -> list[int]:
    """Entropy for one variant's RNG, derived from the sample's content."""
    digest = hashlib.blake2b(np.ascontiguousarray(row).tobytes(), digest_size=8).digest()
    return [seed, variant_index, int.from_bytes(digest, "little")]


def transform_one(x: np.ndarray, kind: str, cfg: ExpansionConfig, seed) -> np.ndarray:
    """Apply one transformation family to a sample in its natural shape.

    Geometric kinds need x with ndim == 3 (H, W, C); perturb accepts any shape.
    seed feeds numpy's seeding machinery, so an int or a sequence of ints works.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    flat = x.reshape(-1)
    if kind == "perturb":
        return _perturb(x, cfg.epsilon, rng)
    if x.ndim != 3:
        raise ValueError(f"{kind} needs an (H, W, C) sample, got shape {x.shape}")
    if kind == "translate":
        return _translate(flat, x.shape, cfg.max_translate, rng).reshape(x.shape)
    if kind == "rotate":
        return _rotate(flat, x.shape, cfg.max_rotate_deg, rng).reshape(x.shape)
    if kind == "perspective":
        return _perspective(flat, x.shape, cfg.max_perspective_jitter, rng).reshape(x.shape)
    raise ValueError(f"unknown transform kind {kind!r}")


def expand(samples: SampleSet, cfg: ExpansionConfig) -> SampleSet:
    """Original-plus-variants expansion: |output| = |input| * (1 + t).

    Output rows are grouped per input sample, original first. All values stay
    in [0,1]; identical (samples, cfg) produce bit-identical output.
    """
    if cfg.suite == "full-geometric" and len(samples.shape) != 3:
        raise ValueError(
            f"full-geometric suite needs an (H, W, C) sample shape, got {samples.shape}"
        )
    t = cfg.variants_per_sample
    n = len(samples)
    width = samples.data.shape[1]
    out = np.empty((n * (1 + t), width), dtype=np.float32)
    families = GEOMETRIC_FAMILIES if cfg.suite == "full-geometric" else ("perturb",)
    shaped = samples.shape
    for i in range(n):
        base = i * (1 + t)
        row = samples.data[i]
        out[base] = row
        for v in range(t):
            kind = families[v % len(families)]
            variant = transform_one(row.reshape(shaped), kind, cfg,
                                    variant_seed(cfg.seed, row, v))
            out[base + 1 + v] = variant.reshape(width)
    return SampleSet(samples.shape, out)
