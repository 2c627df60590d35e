"""Domain types, quality metrics and the two built-in generative codecs.

Two codecs are provided:

* ``ToyImageCodec``: block-mean downsampling (2x/4x/8x, one factor per
  pretrained variant) with a quantized latent, nearest-neighbour upsampling at
  the generator and optional pixel swapping to reach larger prompt sizes.
* ``SyntheticCodec``: no pixels at all; quality is drawn from a closed-form
  ``SyntheticRQLaw`` so Monte Carlo experiments have a known ground truth.

Prompt sizes are always in bits per pixel (bpp).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    MissingLabel,
    PromptTooSmall,
    ShapeMismatch,
    UnsupportedVariant,
    VariantMismatch,
)

Q_CAP = 1000.0
EPS_FLOOR = 1e-6

DEVIATION = "deviation"
GOAL = "goal"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class DataPoint:
    id: int
    width: int
    height: int
    depth: int = 8
    pixels: Optional[np.ndarray] = None
    label: Optional[int] = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.depth <= 0:
            raise ValueError("data point dimensions must be positive")
        if self.pixels is not None and self.pixels.shape != (self.height, self.width):
            raise ShapeMismatch(f"pixels {self.pixels.shape} != {(self.height, self.width)}")

    @classmethod
    def from_pixels(cls, id, pixels, depth=8, label=None):
        pixels = np.asarray(pixels, dtype=np.uint8)
        if pixels.ndim != 2:
            raise ShapeMismatch("only single-channel pixel grids are supported")
        pixels.setflags(write=False)
        h, w = pixels.shape
        return cls(id=id, width=w, height=h, depth=depth, pixels=pixels, label=label)

    @classmethod
    def opaque(cls, id, width=640, height=480, depth=8, label=None):
        return cls(id=id, width=width, height=height, depth=depth, label=label)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def size_bits(self) -> float:
        return float(self.width * self.height * self.depth)


@dataclass(frozen=True, eq=False)
class Prompt:
    source_id: int
    size_bpp: float
    latent: object
    augmentation_fraction: float
    variant: object
    rng_seed: int
    codec: str
    shape: tuple
    depth: int = 8

    @property
    def pixel_count(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def size_bits(self) -> float:
        return self.size_bpp * self.pixel_count


@dataclass(frozen=True, eq=False)
class Approximation:
    source_id: int
    pixels: Optional[np.ndarray]
    generating_prompt_size_bpp: float
    size_bits: float
    variant: object = None
    rng_seed: int = 0

    def to_bytes(self) -> bytes:
        return b"" if self.pixels is None else self.pixels.tobytes()


@dataclass(frozen=True)
class QualityValue:
    value: float
    kind: str = DEVIATION
    underlying_distance: Optional[float] = None


@dataclass(frozen=True)
class CodecDescriptor:
    family: str
    modality: str
    L_min: float
    size_range: tuple
    supports_augmented_generation: bool
    generation_time: float
    variants: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.L_min <= 0:
            raise ValueError("L_min must be positive")

    def to_dict(self):
        return {
            "family": self.family,
            "modality": self.modality,
            "L_min": self.L_min,
            "size_range": list(self.size_range),
            "supports_augmented_generation": self.supports_augmented_generation,
            "generation_time": self.generation_time,
            "variants": list(self.variants),
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            family=d["family"],
            modality=d.get("modality", "image"),
            L_min=float(d["L_min"]),
            size_range=tuple(d.get("size_range", (d["L_min"], math.inf))),
            supports_augmented_generation=bool(d.get("supports_augmented_generation", False)),
            generation_time=float(d.get("generation_time", 0.0)),
            variants=tuple(d.get("variants", ())),
            params=dict(d.get("params", {})),
        )


@dataclass(frozen=True)
class SyntheticRQLaw:
    """Ground-truth rate-quality law: saturating mean, exponentially shrinking noise.

    ``noise`` selects the residual family; ``"student-t"`` draws from a
    t-distribution with ``df`` degrees of freedom rescaled to the same
    standard deviation as the Gaussian case.
    """

    q_max: float = 10.0
    beta: float = 1.0
    sigma0: float = 1.0
    gamma: float = 0.0
    noise: str = "gaussian"
    df: float = 3.0

    def __post_init__(self):
        if self.q_max <= 0 or self.beta <= 0:
            raise ValueError("q_max and beta must be positive")
        if self.sigma0 < 0 or self.gamma < 0:
            raise ValueError("sigma0 and gamma must be non-negative")
        if self.noise not in ("gaussian", "student-t"):
            raise ValueError(f"unknown noise family {self.noise!r}")
        if self.noise == "student-t" and self.df <= 2:
            raise ValueError("student-t noise needs df > 2 for a finite variance")

    def mean(self, L_p):
        return self.q_max * (1.0 - np.exp(-self.beta * np.asarray(L_p, dtype=float)))

    def sd(self, L_p):
        return self.sigma0 * np.exp(-self.gamma * np.asarray(L_p, dtype=float))

    def standard_noise(self, rng, size):
        if self.noise == "gaussian":
            return rng.standard_normal(size)
        return rng.standard_t(self.df, size) * math.sqrt((self.df - 2.0) / self.df)

    def sample(self, grid, n, rng):
        """Draw an ``(n, len(grid))`` matrix of qualities."""
        grid = np.asarray(grid, dtype=float)
        z = self.standard_noise(rng, (n, grid.size))
        return np.maximum(self.mean(grid) + self.sd(grid) * z, EPS_FLOOR)


def sample_quality(law: SyntheticRQLaw, L_p: float, seed) -> QualityValue:
    if L_p <= 0:
        raise ValueError("L_p must be positive")
    rng = np.random.default_rng(seed)
    q = float(law.mean(L_p) + law.sd(L_p) * law.standard_noise(rng, None))
    return QualityValue(max(q, EPS_FLOOR), DEVIATION)


# ---------------------------------------------------------------- quality

def _distance(a: np.ndarray, b: np.ndarray, metric: str) -> float:
    diff = a.astype(float) - b.astype(float)
    if metric == "mse":
        return float(np.mean(diff * diff))
    if metric == "mae":
        return float(np.mean(np.abs(diff)))
    raise ValueError(f"unknown distance metric {metric!r}")


def quality_deviation(x: DataPoint, xhat: Approximation, metric="mse", q_cap=Q_CAP) -> QualityValue:
    if x.pixels is None or xhat.pixels is None:
        raise ShapeMismatch("deviation quality needs pixel payloads on both sides")
    if x.pixels.shape != xhat.pixels.shape:
        raise ShapeMismatch(f"{x.pixels.shape} vs {xhat.pixels.shape}")
    delta = _distance(x.pixels, xhat.pixels, metric)
    value = q_cap if delta == 0 else min(1.0 / delta, q_cap)
    return QualityValue(value, DEVIATION, delta)


def brightest_quadrant(pixels: np.ndarray) -> Optional[int]:
    """Index (0 TL, 1 TR, 2 BL, 3 BR) of the brightest quadrant, None on a tie."""
    h, w = pixels.shape
    hh, hw = h // 2, w // 2
    p = pixels.astype(float)
    means = np.array([
        p[:hh, :hw].mean(), p[:hh, hw:].mean(),
        p[hh:, :hw].mean(), p[hh:, hw:].mean(),
    ])
    best = int(np.argmax(means))
    if np.count_nonzero(means == means[best]) > 1:
        return None
    return best


def quality_goal(xhat: Approximation, label, rule=brightest_quadrant) -> QualityValue:
    if label is None:
        raise MissingLabel("goal-oriented quality needs a labelled data point")
    if xhat.pixels is None:
        raise ShapeMismatch("goal-oriented quality needs a pixel payload")
    ok = rule(xhat.pixels) == label
    return QualityValue(1.0 if ok else EPS_FLOOR, GOAL)


# ---------------------------------------------------------------- pixel swap

def swap_indices(pixel_count: int, fraction: float, seed) -> np.ndarray:
    """Flat indices of the swapped pixels.

    The first ``k`` entries of one seeded permutation, so a larger fraction
    always swaps a superset of the pixels of a smaller one.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    k = round_half_up(fraction * pixel_count)
    perm = np.random.default_rng(seed).permutation(pixel_count)
    return perm[:k]


def pixel_swap(generated: Approximation, original: DataPoint, fraction: float, seed) -> Approximation:
    if generated.pixels is None or original.pixels is None:
        raise ShapeMismatch("pixel swapping needs pixel payloads")
    if generated.pixels.shape != original.pixels.shape:
        raise ShapeMismatch(f"{generated.pixels.shape} vs {original.pixels.shape}")
    idx = swap_indices(original.pixel_count, fraction, seed)
    out = generated.pixels.copy().ravel()
    out[idx] = original.pixels.ravel()[idx]
    out = out.reshape(original.pixels.shape)
    out.setflags(write=False)
    return replace(generated, pixels=out)


# ---------------------------------------------------------------- codecs

def downsample(pixels: np.ndarray, factor: int, latent_bits: int) -> np.ndarray:
    h, w = pixels.shape
    ph, pw = -h % factor, -w % factor
    p = np.pad(pixels.astype(float), ((0, ph), (0, pw)), mode="edge")
    blocks = p.reshape(p.shape[0] // factor, factor, p.shape[1] // factor, factor).mean(axis=(1, 3))
    levels = (1 << latent_bits) - 1
    return np.floor(blocks / 255.0 * levels + 0.5).astype(np.uint16)


def upsample(latent: np.ndarray, factor: int, latent_bits: int, shape) -> np.ndarray:
    levels = (1 << latent_bits) - 1
    values = latent.astype(float) * 255.0 / levels
    up = np.repeat(np.repeat(values, factor, axis=0), factor, axis=1)
    return up[: shape[0], : shape[1]]


class ToyImageCodec:
    family = "toy-image"

    def __init__(self, factors=(2, 4, 8), latent_bits=4, depth=8, noise=0.0,
                 generation_time=0.0, modality="image"):
        self.factors = tuple(int(f) for f in factors)
        self.latent_bits = int(latent_bits)
        self.depth = int(depth)
        self.noise = float(noise)
        self.generation_time = float(generation_time)
        self.modality = modality

    @property
    def variants(self):
        return self.factors

    def base_latent_bpp(self, variant) -> float:
        self._check_variant(variant)
        return self.latent_bits / variant ** 2

    def L_min(self, variant=None) -> float:
        if variant is None:
            return min(self.base_latent_bpp(v) for v in self.factors)
        return self.base_latent_bpp(variant)

    def max_bpp(self, variant) -> float:
        return self.base_latent_bpp(variant) + self.depth

    def fraction_for(self, target_bpp: float, variant, pixel_count: int) -> float:
        """Augmentation fraction (a multiple of 1/pixel_count) closest to ``target_bpp``."""
        base = self.base_latent_bpp(variant)
        if target_bpp < base - 1e-12:
            raise PromptTooSmall(f"{target_bpp} bpp < L_min {base} bpp for variant {variant}")
        raw = min(max((target_bpp - base) / self.depth, 0.0), 1.0)
        return round_half_up(raw * pixel_count) / pixel_count

    def _check_variant(self, variant):
        if variant not in self.factors:
            raise UnsupportedVariant(f"variant {variant!r} not in {self.factors}")

    def encode(self, x: DataPoint, target_L_p: float, variant, seed) -> Prompt:
        self._check_variant(variant)
        if x.pixels is None:
            raise ShapeMismatch("the toy codec needs a pixel payload")
        fraction = self.fraction_for(target_L_p, variant, x.pixel_count)
        coarse = downsample(x.pixels, variant, self.latent_bits)
        idx = swap_indices(x.pixel_count, fraction, seed)
        carried = x.pixels.ravel()[idx].copy()
        return Prompt(
            source_id=x.id,
            size_bpp=self.base_latent_bpp(variant) + fraction * x.depth,
            latent=(coarse, carried),
            augmentation_fraction=fraction,
            variant=variant,
            rng_seed=int(seed),
            codec=self.family,
            shape=(x.height, x.width),
            depth=x.depth,
        )

    def decode(self, p: Prompt) -> np.ndarray:
        coarse, _ = p.latent
        up = upsample(coarse, p.variant, self.latent_bits, p.shape)
        if self.noise > 0:
            up = up + np.random.default_rng([p.rng_seed, 1]).normal(0.0, self.noise, up.shape)
        return np.clip(np.floor(up + 0.5), 0, 255).astype(np.uint8)

    def generate(self, p: Prompt) -> Approximation:
        if p.codec != self.family or p.variant not in self.factors:
            raise VariantMismatch(f"prompt from {p.codec}/{p.variant} given to {self.family}")
        out = self.decode(p).ravel()
        _, carried = p.latent
        idx = swap_indices(p.pixel_count, p.augmentation_fraction, p.rng_seed)
        out[idx] = carried
        out = out.reshape(p.shape)
        out.setflags(write=False)
        return Approximation(p.source_id, out, p.size_bpp, float(p.pixel_count * p.depth),
                             p.variant, p.rng_seed)

    def augment(self, base: Approximation, x: DataPoint, target_L_p: float, seed) -> Approximation:
        """Node-side augmented generation from an already generated minimal prompt."""
        fraction = self.fraction_for(target_L_p, base.variant, x.pixel_count)
        out = pixel_swap(base, x, fraction, seed)
        return replace(out, generating_prompt_size_bpp=self.base_latent_bpp(base.variant) + fraction * x.depth)

    def measure(self, x: DataPoint, xhat: Approximation, metric="mse") -> QualityValue:
        if metric == GOAL:
            return quality_goal(xhat, x.label)
        return quality_deviation(x, xhat, metric)

    def descriptor(self) -> CodecDescriptor:
        return CodecDescriptor(
            family=self.family,
            modality=self.modality,
            L_min=self.L_min(),
            size_range=(self.L_min(), max(self.max_bpp(v) for v in self.factors)),
            supports_augmented_generation=True,
            generation_time=self.generation_time,
            variants=self.factors,
            params={"latent_bits": self.latent_bits, "depth": self.depth, "noise": self.noise},
        )


class SyntheticCodec:
    family = "synthetic"

    def __init__(self, law: SyntheticRQLaw, L_min=0.1, generation_time=0.0,
                 modality="image", augmented=True):
        self.law = law
        self._L_min = float(L_min)
        self.generation_time = float(generation_time)
        self.modality = modality
        self.augmented = augmented
        self.variants = ("default",)

    def L_min(self, variant=None) -> float:
        return self._L_min

    def encode(self, x: DataPoint, target_L_p: float, variant="default", seed=0) -> Prompt:
        if variant not in self.variants:
            raise UnsupportedVariant(f"variant {variant!r} not in {self.variants}")
        if target_L_p < self._L_min - 1e-12:
            raise PromptTooSmall(f"{target_L_p} bpp < L_min {self._L_min} bpp")
        return Prompt(x.id, float(target_L_p), None, 0.0, variant, int(seed), self.family,
                      (x.height, x.width), x.depth)

    def generate(self, p: Prompt) -> Approximation:
        if p.codec != self.family or p.variant not in self.variants:
            raise VariantMismatch(f"prompt from {p.codec}/{p.variant} given to {self.family}")
        return Approximation(p.source_id, None, p.size_bpp, float(p.pixel_count * p.depth),
                             p.variant, p.rng_seed)

    def augment(self, base: Approximation, x: DataPoint, target_L_p: float, seed) -> Approximation:
        if target_L_p < self._L_min - 1e-12:
            raise PromptTooSmall(f"{target_L_p} bpp < L_min {self._L_min} bpp")
        return replace(base, generating_prompt_size_bpp=float(target_L_p), rng_seed=int(seed))

    def measure(self, x: DataPoint, xhat: Approximation, metric="mse") -> QualityValue:
        q = sample_quality(self.law, xhat.generating_prompt_size_bpp, xhat.rng_seed)
        return replace(q, kind=GOAL if metric == GOAL else DEVIATION)

    def descriptor(self) -> CodecDescriptor:
        law = self.law
        return CodecDescriptor(
            family=self.family,
            modality=self.modality,
            L_min=self._L_min,
            size_range=(self._L_min, math.inf),
            supports_augmented_generation=self.augmented,
            generation_time=self.generation_time,
            variants=self.variants,
            params={"q_max": law.q_max, "beta": law.beta, "sigma0": law.sigma0,
                    "gamma": law.gamma, "noise": law.noise, "df": law.df},
        )


def make_codec(desc: CodecDescriptor):
    p = desc.params
    if desc.family == "toy-image":
        return ToyImageCodec(
            factors=desc.variants or (2, 4, 8),
            latent_bits=p.get("latent_bits", 4),
            depth=p.get("depth", 8),
            noise=p.get("noise", 0.0),
            generation_time=desc.generation_time,
            modality=desc.modality,
        )
    if desc.family == "synthetic":
        law = SyntheticRQLaw(**{k: p[k] for k in ("q_max", "beta", "sigma0", "gamma", "noise", "df") if k in p})
        return SyntheticCodec(law, L_min=desc.L_min, generation_time=desc.generation_time,
                              modality=desc.modality,
                              augmented=desc.supports_augmented_generation)
    raise UnsupportedVariant(f"unknown codec family {desc.family!r}")


# ---------------------------------------------------------------- corpora

def make_image_corpus(n: int, width=16, height=16, seed=0, depth=8) -> list:
    """Seeded smooth grayscale images, each labelled by its brightest quadrant."""
    rng = np.random.default_rng(seed)
    out = []
    i = 0
    while len(out) < n:
        coarse = rng.uniform(30, 200, (height // 4 + 1, width // 4 + 1))
        img = np.kron(coarse, np.ones((4, 4)))[:height, :width]
        q = rng.integers(4)
        r0, c0 = (q // 2) * (height // 2), (q % 2) * (width // 2)
        img[r0:r0 + height // 2, c0:c0 + width // 2] += rng.uniform(20, 50)
        img += rng.normal(0, 12, img.shape)
        pixels = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
        label = brightest_quadrant(pixels)
        if label is None:
            continue
        out.append(DataPoint.from_pixels(i, pixels, depth, label))
        i += 1
    return out


def make_opaque_corpus(n: int, width=640, height=480, depth=8, start_id=0) -> list:
    return [DataPoint.opaque(start_id + i, width, height, depth) for i in range(n)]


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = int(tokens[1]), int(tokens[2])
    pixels = data[pos + 1: pos + 1 + w * h]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)


def corpus_size_stats(points: Sequence[DataPoint]):
    """Mean and variance of pixel intensity over a corpus (used for profile matching)."""
    vals = np.concatenate([p.pixels.ravel().astype(float) for p in points if p.pixels is not None])
    return float(vals.mean()), float(vals.var())
