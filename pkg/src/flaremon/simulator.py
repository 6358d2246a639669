"""Synthetic flare scenes with exact ground truth.

Each stack is a rotated-ellipse flame (radial color interpolation core ->
edge) with an optional gray smoke blob strictly above the flame's top
edge.  Positions drift linearly; seeded pixel noise and box jitter make
the annotations realistic while masks stay exact.  Rendering is
deterministic per (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .core import BBox, DetClass, Detection, Frame, Mask
from .errors import InvalidPreset
from .ingest import FrameAnnotation

BACKGROUND = (20, 22, 28)
FPS = 25.0


@dataclass(frozen=True)
class FlameSpec:
    base_x: float
    base_y: float
    major: float  # semi-axis, pixels
    minor: float
    tilt_deg: float  # from vertical, [0, 90)
    drift: Tuple[float, float] = (0.0, 0.0)  # px / frame
    core_color: Tuple[int, int, int] = (90, 110, 245)
    edge_color: Tuple[int, int, int] = (130, 150, 250)

    def __post_init__(self):
        if self.major <= 0 or self.minor <= 0:
            raise ValueError("axes must be positive")
        if not (0.0 <= self.tilt_deg < 90.0):
            raise ValueError("tilt must lie in [0, 90)")


@dataclass(frozen=True)
class SmokeSpec:
    area_multiplier: float  # smoke area relative to flame area
    gray: int = 110
    gap: float = 8.0  # px between flame top and smoke bottom; must exceed
    # the +/-2 px annotation box jitter so smoke stays attributable


@dataclass(frozen=True)
class StackSpec:
    flame: FlameSpec
    smoke: Optional[SmokeSpec]
    regime: str  # high | low, by construction


@dataclass(frozen=True)
class SceneSpec:
    width: int = 320
    height: int = 240
    frame_count: int = 200
    rng_seed: int = 7
    stacks: Tuple[StackSpec, ...] = ()
    noise_amplitude: int = 6

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")


@dataclass(frozen=True)
class StackTruth:
    stack_id: int
    regime: str
    tilt_deg: float
    truncated: bool
    flame_box: Optional[BBox]
    flame_mask: Optional[Mask]
    smoke_box: Optional[BBox]
    smoke_mask: Optional[Mask]


@dataclass(frozen=True)
class RenderedFrame:
    frame: Frame
    truths: Tuple[StackTruth, ...]
    annotation: FrameAnnotation


def _ellipse_mask(width, height, cx, cy, a, b, axis_dir):
    """Boolean mask plus normalized radius field for a rotated ellipse.

    axis_dir is the unit direction of the major axis; returns
    (mask, rho, truncated) where rho is the normalized elliptic radius on
    foreground pixels (0 at center, 1 at the rim).
    """
    ax, ay = axis_dir
    x_lo = max(0, int(math.floor(cx - a - 2)))
    x_hi = min(width - 1, int(math.ceil(cx + a + 2)))
    y_lo = max(0, int(math.floor(cy - a - 2)))
    y_hi = min(height - 1, int(math.ceil(cy + a + 2)))
    mask = np.zeros((height, width), dtype=bool)
    rho = np.zeros((height, width))
    if x_hi < x_lo or y_hi < y_lo:
        return mask, rho, True
    ys, xs = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
    dx = xs - cx
    dy = ys - cy
    u = dx * ax + dy * ay
    v = -dx * ay + dy * ax
    r2 = (u / a) ** 2 + (v / b) ** 2
    inside = r2 <= 1.0
    mask[y_lo:y_hi + 1, x_lo:x_hi + 1] = inside
    rho_win = np.sqrt(np.clip(r2, 0.0, 1.0))
    rho[y_lo:y_hi + 1, x_lo:x_hi + 1][inside] = rho_win[inside]
    truncated = (cx - a < 0 or cx + a > width - 1
                 or cy - a < 0 or cy + a > height - 1)
    return mask, rho, truncated


def _tight_bbox(mask_arr) -> Optional[BBox]:
    ys, xs = np.nonzero(mask_arr)
    if xs.size == 0:
        return None
    return BBox(float(xs.min()), float(ys.min()),
                float(xs.max() + 1), float(ys.max() + 1))


def _jitter_box(box: BBox, rng, width, height) -> BBox:
    j = rng.uniform(-2.0, 2.0, size=4)
    x0 = min(max(box.x_min + j[0], 0.0), width - 2.0)
    y0 = min(max(box.y_min + j[1], 0.0), height - 2.0)
    x1 = max(min(box.x_max + j[2], float(width)), x0 + 1.0)
    y1 = max(min(box.y_max + j[3], float(height)), y0 + 1.0)
    return BBox(x0, y0, x1, y1)


def render(spec: SceneSpec) -> Iterator[RenderedFrame]:
    """Yield (frame, ground truth, annotation) for every frame of the scene."""
    rng = np.random.default_rng(spec.rng_seed)
    w, h = spec.width, spec.height
    for fi in range(spec.frame_count):
        img = np.empty((h, w, 3), dtype=np.int16)
        img[:, :] = BACKGROUND
        truths: List[StackTruth] = []

        for si, stack in enumerate(spec.stacks):
            fl = stack.flame
            cx = fl.base_x + fl.drift[0] * fi
            cy = fl.base_y + fl.drift[1] * fi
            t = math.radians(fl.tilt_deg)
            axis_dir = (math.sin(t), -math.cos(t))  # y is down; up-tilted major axis
            fmask, rho, truncated = _ellipse_mask(w, h, cx, cy, fl.major,
                                                  fl.minor, axis_dir)
            core = np.array(fl.core_color, dtype=float)
            edge = np.array(fl.edge_color, dtype=float)
            if fmask.any():
                mix = rho[fmask][:, None]
                img[fmask] = np.round(core * (1.0 - mix) + edge * mix)
            fbox = _tight_bbox(fmask)

            sbox = smask = None
            if stack.smoke is not None and fbox is not None:
                sm = stack.smoke
                area = sm.area_multiplier * math.pi * fl.major * fl.minor
                a_s = math.sqrt(area / math.pi * 1.5)
                b_s = area / (math.pi * a_s)
                scy = fbox.y_min - sm.gap - b_s
                smask_arr, _, _ = _ellipse_mask(w, h, cx, scy, a_s, b_s,
                                                (1.0, 0.0))
                if smask_arr.any():
                    img[smask_arr] = sm.gray
                    sbox = _tight_bbox(smask_arr)
                    smask = Mask.from_array(smask_arr)

            truths.append(StackTruth(
                stack_id=si,
                regime=stack.regime,
                tilt_deg=fl.tilt_deg,
                truncated=truncated,
                flame_box=fbox,
                flame_mask=Mask.from_array(fmask) if fbox is not None else None,
                smoke_box=sbox,
                smoke_mask=smask,
            ))

        if spec.noise_amplitude > 0:
            noise = rng.integers(-spec.noise_amplitude,
                                 spec.noise_amplitude + 1, size=img.shape)
            img = img + noise
        pixels = np.clip(img, 0, 255).astype(np.uint8)
        frame = Frame(index=fi, timestamp=fi / FPS, width=w, height=h,
                      pixels=pixels)

        detections: List[Detection] = []
        masks: List[Tuple[int, Mask]] = []
        for truth in truths:
            if truth.flame_box is not None:
                conf = float(rng.uniform(0.85, 0.99))
                detections.append(Detection(
                    _jitter_box(truth.flame_box, rng, w, h),
                    DetClass.FLAME, round(conf, 4)))
                masks.append((len(detections) - 1, truth.flame_mask))
        for truth in truths:
            if truth.smoke_box is not None:
                conf = float(rng.uniform(0.80, 0.99))
                detections.append(Detection(
                    _jitter_box(truth.smoke_box, rng, w, h),
                    DetClass.SMOKE, round(conf, 4)))
                masks.append((len(detections) - 1, truth.smoke_mask))

        annotation = FrameAnnotation(frame_index=fi,
                                     detections=tuple(detections),
                                     masks=tuple(masks))
        yield RenderedFrame(frame=frame, truths=tuple(truths),
                            annotation=annotation)


_CLEAN_FLAME = dict(major=45.0, minor=18.0,
                    core_color=(90, 110, 245), edge_color=(130, 150, 250))
_SMOKY_FLAME = dict(major=45.0, minor=18.0,
                    core_color=(250, 90, 40), edge_color=(255, 150, 70))


def preset(name: str) -> SceneSpec:
    """Canned scenarios with known regimes and geometry."""
    if name == "clean_high":
        return SceneSpec(stacks=(
            StackSpec(FlameSpec(160, 150, tilt_deg=8.0, drift=(0.05, 0.0),
                                **_CLEAN_FLAME),
                      SmokeSpec(area_multiplier=0.2, gray=120), "high"),
        ))
    if name == "smoky_low":
        return SceneSpec(stacks=(
            StackSpec(FlameSpec(160, 150, tilt_deg=8.0, drift=(0.05, 0.0),
                                **_SMOKY_FLAME),
                      SmokeSpec(area_multiplier=2.0, gray=90), "low"),
        ))
    if name == "windy":
        return SceneSpec(stacks=(
            StackSpec(FlameSpec(160, 150, tilt_deg=30.0, **_CLEAN_FLAME),
                      SmokeSpec(area_multiplier=0.2, gray=120), "high"),
        ))
    if name == "three_stacks":
        clean = dict(major=40.0, minor=16.0,
                     core_color=(90, 110, 245), edge_color=(130, 150, 250))
        smoky = dict(major=40.0, minor=16.0,
                     core_color=(250, 90, 40), edge_color=(255, 150, 70))
        return SceneSpec(stacks=(
            StackSpec(FlameSpec(60, 150, tilt_deg=5.0, drift=(0.08, 0.0),
                                **clean),
                      SmokeSpec(area_multiplier=0.25, gray=120), "high"),
            StackSpec(FlameSpec(160, 150, tilt_deg=12.0, drift=(0.0, 0.0),
                                **smoky),
                      SmokeSpec(area_multiplier=1.8, gray=90), "low"),
            StackSpec(FlameSpec(260, 150, tilt_deg=20.0, drift=(-0.08, 0.0),
                                **clean),
                      SmokeSpec(area_multiplier=0.25, gray=120), "high"),
        ))
    if name == "crossing_near_miss":
        spec = dict(major=35.0, minor=14.0,
                    core_color=(90, 110, 245), edge_color=(130, 150, 250))
        return SceneSpec(stacks=(
            StackSpec(FlameSpec(90, 150, tilt_deg=6.0, drift=(0.25, 0.0),
                                **spec),
                      SmokeSpec(area_multiplier=0.2, gray=120), "high"),
            StackSpec(FlameSpec(230, 150, tilt_deg=10.0, drift=(-0.25, 0.0),
                                **spec),
                      SmokeSpec(area_multiplier=0.2, gray=120), "high"),
        ))
    raise InvalidPreset(f"unknown preset {name!r}")


PRESET_NAMES = ("clean_high", "smoky_low", "windy", "three_stacks",
                "crossing_near_miss")
