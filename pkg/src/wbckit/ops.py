"""Degradation operators, recipe sampling and recipe application.

All operators take and return float64 arrays on the 0-255 scale; pixel values
are quantized back to 8 bits only between operators. Every random choice is
drawn from a Philox stream derived from the recipe seed, so a recipe applies
identically on any platform and under any parallel schedule.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .config import OperatorCountRule, OperatorRanges, ParamRanges
from .core import Severity, ValidationError
from .rng import stream


class OperatorKind(enum.Enum):
    CROP = "crop"
    GAUSSIAN_BLUR = "gaussian_blur"
    MOTION_BLUR = "motion_blur"
    GAUSSIAN_NOISE = "gaussian_noise"
    POISSON_NOISE = "poisson_noise"
    SATURATION = "saturation"
    GAMMA = "gamma"
    BRIGHTNESS = "brightness"
    VIGNETTING = "vignetting"
    COLOR_JITTER = "color_jitter"

    def __str__(self):
        return self.value


OPERATOR_ORDER = tuple(OperatorKind)


@dataclass(frozen=True)
class RecipeStep:
    op: OperatorKind
    params: dict
    realized: dict


@dataclass(frozen=True)
class DegradationRecipe:
    image_id: str
    severity: Severity
    steps: tuple[RecipeStep, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        kinds = [s.op for s in self.steps]
        if len(set(kinds)) != len(kinds):
            raise ValidationError(f"recipe for {self.image_id!r} repeats an operator")
        if self.severity == Severity.PRISTINE and self.steps:
            raise ValidationError("pristine recipe must be empty")

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "severity": str(self.severity),
            "seed": self.seed,
            "steps": [
                {"op": str(s.op), "params": s.params, "realized": s.realized}
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DegradationRecipe":
        from .core import parse_severity

        return cls(
            image_id=data["image_id"],
            severity=parse_severity(data["severity"]),
            steps=tuple(
                RecipeStep(OperatorKind(s["op"]), dict(s["params"]), dict(s["realized"]))
                for s in data["steps"]
            ),
            seed=data["seed"],
        )


def sample_recipe(
    image_id: str,
    severity: Severity,
    ranges: ParamRanges,
    rule: OperatorCountRule,
    seed: int,
) -> DegradationRecipe:
    """Draw a fully parameterised recipe for one image.

    Operator count is uniform over the severity's bounds, operators are drawn
    uniformly without replacement (application order = draw order) and each
    parameter is uniform over its severity-specific interval.
    """
    if severity == Severity.PRISTINE:
        return DegradationRecipe(image_id, severity, (), seed)
    rng = stream(seed, "recipe", image_id, severity.name)
    lo, hi = rule.bounds(severity)
    n = int(rng.integers(lo, hi + 1))
    draw = rng.permutation(len(OPERATOR_ORDER))[:n]
    sev_ranges: OperatorRanges = ranges[severity]
    steps = tuple(_sample_step(OPERATOR_ORDER[i], sev_ranges, rng) for i in draw)
    return DegradationRecipe(image_id, severity, steps, seed)


def _sample_step(kind: OperatorKind, r: OperatorRanges, rng) -> RecipeStep:
    if kind == OperatorKind.CROP:
        return RecipeStep(kind, {"ratio": r.crop_ratio.sample(rng)},
                          {"offset_u": float(rng.random()), "offset_v": float(rng.random())})
    if kind == OperatorKind.GAUSSIAN_BLUR:
        return RecipeStep(kind, {"sigma": r.blur_sigma.sample(rng)}, {})
    if kind == OperatorKind.MOTION_BLUR:
        kernel = r.motion_kernel.sample(rng)
        prob = r.motion_prob.sample(rng)
        angle = float(rng.uniform(0.0, 360.0))
        applied = bool(rng.random() < prob)
        return RecipeStep(kind, {"kernel": kernel, "apply_prob": prob},
                          {"angle_deg": angle, "applied": applied})
    if kind == OperatorKind.GAUSSIAN_NOISE:
        return RecipeStep(kind, {"sigma": r.noise_sigma.sample(rng)}, {})
    if kind == OperatorKind.POISSON_NOISE:
        return RecipeStep(kind, {"rate": r.poisson_rate.sample(rng)}, {})
    if kind == OperatorKind.SATURATION:
        return RecipeStep(kind, {"delta_s": r.saturation_delta.sample(rng)}, {})
    if kind == OperatorKind.GAMMA:
        return RecipeStep(kind, {"gamma": r.gamma.sample(rng)}, {})
    if kind == OperatorKind.BRIGHTNESS:
        return RecipeStep(kind, {"delta_i": r.brightness_delta.sample(rng)}, {})
    if kind == OperatorKind.VIGNETTING:
        return RecipeStep(kind, {"strength": r.vignette_strength.sample(rng)}, {})
    if kind == OperatorKind.COLOR_JITTER:
        prob = r.jitter_prob.sample(rng)
        apply_flags = [bool(rng.random() < prob) for _ in range(3)]
        factors = [r.jitter_factor.sample(rng) for _ in range(3)]
        return RecipeStep(kind, {"apply_prob": prob},
                          {"channel_applied": apply_flags, "channel_factors": factors})
    raise ValidationError(f"unhandled operator {kind}")


def quantize(img: np.ndarray) -> np.ndarray:
    """Clamp to [0,255] and round to 8 bits."""
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def apply_recipe(image: np.ndarray, recipe: DegradationRecipe) -> np.ndarray:
    """Apply all steps in order. Pure function of (image, recipe)."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 image, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise ValidationError(f"expected uint8 image, got {image.dtype}")
    out = image
    for idx, step in enumerate(recipe.steps):
        rng = stream(recipe.seed, "apply", idx, step.op.value)
        out = quantize(apply_operator(step.op, step.params, step.realized,
                                      out.astype(np.float64), rng))
    return out.copy() if out is image else out


def apply_operator(kind: OperatorKind, params: dict, realized: dict,
                   img: np.ndarray, rng) -> np.ndarray:
    fn = _OPERATORS[kind]
    return fn(img, params, realized, rng)


def _op_crop(img, params, realized, rng):
    h, w = img.shape[:2]
    ratio = params["ratio"]
    win_h = max(1, int(round((1.0 - ratio) * h)))
    win_w = max(1, int(round((1.0 - ratio) * w)))
    oy = min(int(realized["offset_u"] * (h - win_h + 1)), h - win_h)
    ox = min(int(realized["offset_v"] * (w - win_w + 1)), w - win_w)
    window = img[oy:oy + win_h, ox:ox + win_w]
    return _bilinear_resize(window, h, w)


def _bilinear_resize(img, out_h, out_w):
    h, w = img.shape[:2]
    ys = np.linspace(0.0, h - 1.0, out_h)
    xs = np.linspace(0.0, w - 1.0, out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def _gaussian_kernel(sigma):
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _op_gaussian_blur(img, params, realized, rng):
    k = _gaussian_kernel(params["sigma"])
    out = correlate1d(img, k, axis=0, mode="reflect")
    return correlate1d(out, k, axis=1, mode="reflect")


def motion_kernel(length: float, angle_deg: float) -> np.ndarray:
    """Normalized line kernel: length rounded to the nearest odd integer >= 3."""
    k = max(3, 2 * int(math.floor((length - 1.0) / 2.0 + 0.5)) + 1)
    c = (k - 1) / 2.0
    theta = math.radians(angle_deg)
    dy, dx = math.sin(theta), math.cos(theta)
    kernel = np.zeros((k, k), dtype=np.float64)
    for t in np.linspace(-c, c, k):
        y = int(math.floor(c + t * dy + 0.5))
        x = int(math.floor(c + t * dx + 0.5))
        kernel[min(max(y, 0), k - 1), min(max(x, 0), k - 1)] += 1.0
    return kernel / kernel.sum()


def _convolve_sparse(img, kernel):
    c = kernel.shape[0] // 2
    pad = np.pad(img, ((c, c), (c, c), (0, 0)), mode="reflect")
    out = np.zeros_like(img)
    h, w = img.shape[:2]
    ys, xs = np.nonzero(kernel)
    for y, x in zip(ys, xs):
        out += kernel[y, x] * pad[y:y + h, x:x + w]
    return out


def _op_motion_blur(img, params, realized, rng):
    if not realized["applied"]:
        return img
    kernel = motion_kernel(params["kernel"], realized["angle_deg"])
    return _convolve_sparse(img, kernel)


def _op_gaussian_noise(img, params, realized, rng):
    return img + rng.normal(0.0, params["sigma"], size=img.shape)


def _op_poisson_noise(img, params, realized, rng):
    lam = params["rate"]
    return rng.poisson(img / lam).astype(np.float64) * lam


def _op_saturation(img, params, realized, rng):
    h, s, v = _rgb_to_hsv(img)
    s = np.clip(s + params["delta_s"] / 255.0, 0.0, 1.0)
    return _hsv_to_rgb(h, s, v)


def _op_gamma(img, params, realized, rng):
    return 255.0 * np.power(img / 255.0, params["gamma"])


def _op_brightness(img, params, realized, rng):
    return img + params["delta_i"]


def _op_vignetting(img, params, realized, rng):
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.ogrid[:h, :w]
    d2 = (yy - cy) ** 2 + (xx - cx) ** 2
    d2_max = cy * cy + cx * cx
    mask = 1.0 - params["strength"] * (d2 / d2_max if d2_max > 0 else d2)
    return img * mask[:, :, None]


def _op_color_jitter(img, params, realized, rng):
    out = img.copy()
    for ch in range(3):
        if realized["channel_applied"][ch]:
            out[:, :, ch] *= realized["channel_factors"][ch]
    return out


_OPERATORS = {
    OperatorKind.CROP: _op_crop,
    OperatorKind.GAUSSIAN_BLUR: _op_gaussian_blur,
    OperatorKind.MOTION_BLUR: _op_motion_blur,
    OperatorKind.GAUSSIAN_NOISE: _op_gaussian_noise,
    OperatorKind.POISSON_NOISE: _op_poisson_noise,
    OperatorKind.SATURATION: _op_saturation,
    OperatorKind.GAMMA: _op_gamma,
    OperatorKind.BRIGHTNESS: _op_brightness,
    OperatorKind.VIGNETTING: _op_vignetting,
    OperatorKind.COLOR_JITTER: _op_color_jitter,
}


def _rgb_to_hsv(rgb):
    """HSV with H in [0,6), S in [0,1], V on the 0-255 scale."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1)
    mn = np.min(rgb, axis=-1)
    c = v - mn
    safe_c = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    mask = (v == r) & (c > 0)
    h = np.where(mask, ((g - b) / safe_c) % 6.0, h)
    mask = (v == g) & (v != r) & (c > 0)
    h = np.where(mask, (b - r) / safe_c + 2.0, h)
    mask = (v == b) & (v != r) & (v != g) & (c > 0)
    h = np.where(mask, (r - g) / safe_c + 4.0, h)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    return h, s, v


def _hsv_to_rgb(h, s, v):
    c = v * s
    x = c * (1.0 - np.abs(h % 2.0 - 1.0))
    m = v - c
    zeros = np.zeros_like(h)
    sector = np.floor(h).astype(int) % 6
    r = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [c, x, zeros, zeros, x, c])
    g = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [x, c, c, x, zeros, zeros])
    b = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [zeros, zeros, x, c, c, x])
    return np.stack([r + m, g + m, b + m], axis=-1)
