"""File formats: PNG/PGM/PPM images, JSON sidecars, model checkpoints.

Every exported image gets a JSON sidecar carrying the encoding config and
pairing, which is the schema needed both to decode the image and to train
external models on the exports. Model checkpoints are a single-line JSON
header followed by the raw little-endian float32 weight arrays.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .encoding import CpcrImage, EncodingConfig, Pairing
from .mlp import MlpModel

CHECKPOINT_MAGIC = "cpcr-mlp-1"


def write_json(obj, path) -> None:
    """Canonical JSON (sorted keys, 2-space indent, trailing newline)."""
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _to_pil(pixels: np.ndarray) -> Image.Image:
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        return Image.fromarray(pixels[:, :, 0], mode="L")
    return Image.fromarray(pixels, mode="RGB")


def write_png(image, path) -> None:
    pixels = image.pixels if isinstance(image, CpcrImage) else np.asarray(image)
    _to_pil(pixels).save(str(path), format="PNG")


def read_png(path) -> np.ndarray:
    """Read a PNG into (H, W, 1) or (H, W, 3) uint8."""
    with Image.open(str(path)) as im:
        if im.mode in ("L", "1", "I;16"):
            arr = np.asarray(im.convert("L"), dtype=np.uint8)[:, :, np.newaxis]
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return arr


def write_pnm(image, path) -> None:
    """Binary PGM (grayscale) or PPM (color)."""
    pixels = image.pixels if isinstance(image, CpcrImage) else np.asarray(image)
    h, w = pixels.shape[:2]
    channels = pixels.shape[2] if pixels.ndim == 3 else 1
    magic = b"P5" if channels == 1 else b"P6"
    with open(str(path), "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes())


def read_pnm(path) -> np.ndarray:
    with open(str(path), "rb") as fh:
        magic = fh.readline().strip()
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"{path}: not a binary PGM/PPM file")
        fields = []
        while len(fields) < 3:
            line = fh.readline()
            if line.startswith(b"#"):
                continue
            fields.extend(line.split())
        w, h, maxval = (int(f) for f in fields[:3])
        if maxval != 255:
            raise ValueError(f"{path}: only 8-bit PNM supported")
        channels = 1 if magic == b"P5" else 3
        data = fh.read(w * h * channels)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, channels)


def sidecar_path(image_path) -> Path:
    p = Path(image_path)
    return p.with_suffix(p.suffix + ".json") if p.suffix == "" else p.with_suffix(".json")


def write_sidecar(image: CpcrImage, image_path) -> Path:
    """JSON sidecar with the encoding schema next to an exported image."""
    meta = {
        "config": image.config.to_dict(),
        "pairing": list(image.pairing.order) if image.pairing else None,
        "case_id": image.case_id,
        "dataset": image.dataset,
        "composition": image.composition,
    }
    path = sidecar_path(image_path)
    write_json(meta, path)
    return path


def read_sidecar(path):
    """Load (config, pairing, meta) from a sidecar or an image path."""
    p = Path(path)
    if p.suffix != ".json":
        p = sidecar_path(p)
    meta = read_json(p)
    config = EncodingConfig.from_dict(meta["config"])
    pairing = Pairing(tuple(meta["pairing"])) if meta.get("pairing") else None
    return config, pairing, meta


def load_image(path, config: EncodingConfig | None = None,
               pairing: Pairing | None = None) -> CpcrImage:
    """Read an exported image and its sidecar back into a CpcrImage."""
    p = Path(path)
    pixels = read_pnm(p) if p.suffix in (".pgm", ".ppm", ".pnm") else read_png(p)
    composition = None
    case_id = None
    dataset = None
    if config is None or pairing is None:
        sc = sidecar_path(p)
        if sc.exists():
            file_config, file_pairing, meta = read_sidecar(sc)
            config = config or file_config
            pairing = pairing or file_pairing
            composition = meta.get("composition")
            case_id = meta.get("case_id")
            dataset = meta.get("dataset")
    if config is None:
        raise ValueError(f"{path}: no sidecar found and no config given")
    return CpcrImage(pixels=pixels, config=config, pairing=pairing,
                     case_id=case_id, dataset=dataset, composition=composition)


def export_images(images, out_dir, fmt: str = "png",
                  dataset: str | None = None) -> list[Path]:
    """Write `{dataset}_{case_id}.{fmt}` plus a sidecar for every image."""
    if fmt not in ("png", "pgm"):
        raise ValueError("fmt must be png or pgm")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(images):
        name = dataset or img.dataset or "case"
        case_id = img.case_id if img.case_id is not None else i
        suffix = fmt if fmt == "png" else ("pgm" if img.channels == 1 else "ppm")
        path = out / f"{name}_{case_id}.{suffix}"
        if fmt == "png":
            write_png(img, path)
        else:
            write_pnm(img, path)
        write_sidecar(img, path)
        paths.append(path)
    return paths


def saliency_png(norm_map: np.ndarray, path) -> None:
    """Write a normalized [0, 1] saliency map as a grayscale heatmap PNG
    (bright = influential)."""
    arr = np.asarray(norm_map, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    img = np.floor(np.clip(arr, 0.0, 1.0) * 255 + 0.5).astype(np.uint8)
    Image.fromarray(img, mode="L").save(str(path), format="PNG")


def save_model(model: MlpModel, path) -> None:
    """Single-line JSON header, then each weight/bias array as raw
    little-endian float32 in declared order."""
    arrays = []
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays.append({"name": f"w{layer}", "shape": list(w.shape)})
        arrays.append({"name": f"b{layer}", "shape": list(b.shape)})
    header = {
        "magic": CHECKPOINT_MAGIC,
        "n_inputs": model.n_inputs,
        "n_classes": model.n_classes,
        "hidden_sizes": list(model.hidden_sizes),
        "dropout": model.dropout,
        "seed": model.seed if isinstance(model.seed, int) else None,
        "arrays": arrays,
    }
    with open(str(path), "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for w, b in zip(model.weights, model.biases):
            fh.write(w.astype("<f4").tobytes())
            fh.write(b.astype("<f4").tobytes())


def load_model(path) -> MlpModel:
    with open(str(path), "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        model = MlpModel(
            n_inputs=header["n_inputs"],
            n_classes=header["n_classes"],
            hidden_sizes=tuple(header["hidden_sizes"]),
            dropout=header["dropout"],
            seed=header.get("seed") or 0,
        )
        for layer, _ in enumerate(model.weights):
            for attr in ("weights", "biases"):
                arr = getattr(model, attr)[layer]
                raw = fh.read(arr.size * 4)
                if len(raw) != arr.size * 4:
                    raise ValueError(f"{path}: truncated checkpoint")
                getattr(model, attr)[layer] = np.frombuffer(
                    raw, dtype="<f4"
                ).astype(np.float64).reshape(arr.shape)
    return model
