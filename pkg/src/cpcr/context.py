"""Class-mean background images and double-image composition.

A case image can be overlaid on the per-class mean images of its training
fold: every non-background case pixel wins, background shows the mean. The
overlays are concatenated side by side (one half per class) and padded with
background rows to a square, which gives the classifier the case in the
context of each class's average appearance.
"""

from __future__ import annotations

import numpy as np

from sklearn.base import BaseEstimator, TransformerMixin

from .encoding import BACKGROUND, CpcrImage


class MeanImage:
    """Pixel-wise arithmetic mean of a class's images, kept at float precision.

    Quantization to 8 bits (round half up) happens only when rendering.
    """

    def __init__(self, pixels: np.ndarray, label: int, case_ids=()):
        self.pixels = np.asarray(pixels, dtype=np.float64)
        if self.pixels.ndim != 3:
            raise ValueError("mean pixels must be (H, W, C)")
        self.label = int(label)
        self.case_ids = tuple(int(c) for c in case_ids)

    @property
    def count(self) -> int:
        return len(self.case_ids)

    @property
    def shape(self):
        return self.pixels.shape

    def render(self, as_gray: bool = False) -> np.ndarray:
        """Quantize to uint8; optionally collapse color to the channel average."""
        px = self.pixels
        if as_gray and px.shape[2] == 3:
            px = px.mean(axis=2, keepdims=True)
        return np.floor(px + 0.5).astype(np.uint8)


def class_mean(images, label: int | None = None) -> MeanImage:
    """Mean image of a list of same-shaped rasters.

    Args:
        images: CpcrImage objects or raw (H, W, C) arrays, all identical in
            shape and channel count.
        label: class label recorded on the result; defaults to -1.
    """
    if not images:
        raise ValueError("cannot average an empty image list")
    arrays = []
    case_ids = []
    for img in images:
        if isinstance(img, CpcrImage):
            arrays.append(img.pixels)
            if img.case_id is not None:
                case_ids.append(img.case_id)
        else:
            arrays.append(np.asarray(img))
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise ValueError(f"image shapes differ: {shape} vs {a.shape}")
    acc = np.zeros(shape, dtype=np.float64)
    for a in arrays:
        acc += a
    acc /= len(arrays)
    return MeanImage(acc, -1 if label is None else label, case_ids)


def _promote(pixels: np.ndarray, channels: int) -> np.ndarray:
    if pixels.shape[2] == channels:
        return pixels
    if pixels.shape[2] == 1 and channels == 3:
        return np.repeat(pixels, 3, axis=2)
    raise ValueError(f"cannot convert {pixels.shape[2]}-channel image to {channels}")


def compose_double(case: CpcrImage, means, mean_as_gray: bool = False) -> CpcrImage:
    """Overlay a case on every class mean and concatenate the halves.

    The output is height w and width (n_means * w). Non-background case
    pixels (any channel below 255) replace the mean; background pixels show
    the mean through.
    """
    if len(means) < 2:
        raise ValueError("need one mean per class, at least 2")
    h, w = case.pixels.shape[:2]
    rendered = []
    for m in means:
        if m.shape[0] != h or m.shape[1] != w:
            raise ValueError(
                f"mean for class {m.label} is {m.shape[1]}x{m.shape[0]}, case is {w}x{h}"
            )
        rendered.append(m.render(as_gray=mean_as_gray))
    channels = max([case.channels] + [r.shape[2] for r in rendered])
    case_px = _promote(case.pixels, channels)
    mask = np.any(case.pixels != BACKGROUND, axis=2)
    halves = []
    for r in rendered:
        half = _promote(r, channels).copy()
        half[mask] = case_px[mask]
        halves.append(half)
    return CpcrImage(
        pixels=np.concatenate(halves, axis=1),
        config=case.config,
        pairing=case.pairing,
        case_id=case.case_id,
        dataset=case.dataset,
        composition={
            "n_halves": len(halves),
            "half_width": w,
            "pad_top": 0,
            "pad_bottom": 0,
        },
    )


def pad_square(image: CpcrImage) -> CpcrImage:
    """Pad background rows above and below until the image is square.

    Width must be an integer multiple of height; the split is even, with the
    extra row below when the total is odd. Already-square images pass through.
    """
    h, w = image.pixels.shape[:2]
    if w % h != 0:
        raise ValueError(f"width {w} is not a multiple of height {h}")
    if w == h:
        return image
    pad = w - h
    top = pad // 2
    bottom = pad - top
    blocks = [
        np.full((top, w, image.channels), BACKGROUND, dtype=np.uint8),
        image.pixels,
        np.full((bottom, w, image.channels), BACKGROUND, dtype=np.uint8),
    ]
    composition = dict(image.composition or {"n_halves": 1, "half_width": w})
    composition["pad_top"] = composition.get("pad_top", 0) + top
    composition["pad_bottom"] = composition.get("pad_bottom", 0) + bottom
    return CpcrImage(
        pixels=np.concatenate(blocks, axis=0),
        config=image.config,
        pairing=image.pairing,
        case_id=image.case_id,
        dataset=image.dataset,
        composition=composition,
    )


class ClassMeanContext(BaseEstimator, TransformerMixin):
    """Transformer adding class-mean context to case images.

    fit() computes one mean per class from training images; transform()
    overlays each image on every mean, concatenates and (optionally) pads to
    a square. Means are fold-local by construction when fit only sees the
    training fold.
    """

    def __init__(self, mean_as_gray: bool = False, pad: bool = True):
        self.mean_as_gray = mean_as_gray
        self.pad = pad

    def fit(self, images, y):
        y = np.asarray(y)
        if len(images) != len(y):
            raise ValueError("images and labels must align")
        self.classes_ = np.unique(y)
        self.class_means_ = [
            class_mean([img for img, lab in zip(images, y) if lab == cls], label=int(cls))
            for cls in self.classes_
        ]
        return self

    def transform(self, images) -> list[CpcrImage]:
        if not hasattr(self, "class_means_"):
            raise RuntimeError("ClassMeanContext must be fitted before transform")
        out = []
        for img in images:
            double = compose_double(img, self.class_means_, mean_as_gray=self.mean_as_gray)
            out.append(pad_square(double) if self.pad else double)
        return out
