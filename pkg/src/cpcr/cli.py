"""Command-line interface.

Every run resolves its options (flags win over a ``--config`` JSON file,
which wins over built-in defaults), writes the resolved RunConfig next to its
outputs, and can be reproduced bit-identically by rerunning from that file.
Results go to files in --out; progress and warnings go to stderr. Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import icc_cells, icc_rank, pair_frequency
from .datasets import CsvFormatError, gen_swiss_roll, load_csv, save_csv
from .encoding import (DecodeError, EncodingConfig, IntensitySchedule, Pairing,
                       decode)
from .evaluate import cross_validate, encode_all
from .imageio import (export_images, load_image, read_json, saliency_png,
                      write_json, write_png)
from .mlp import MlpClassifier, TrainConfig
from .preprocessing import BinningSchema, discretize, make_folds
from .search import SearchSpec, random_search

COLLISIONS = {
    "overwrite": "overwrite_last",
    "cross": "cross_adjacent",
    "spiral": "spiral_adjacent",
    "strip": "strip_split",
    "darkest": "darkest_wins",
}
COLORS = {"gray": "grayscale", "red": "red_levels", "rgb": "random_rgb"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


COMMON_DEFAULTS = {
    "data": None,
    "label_col": "-1",
    "delimiter": ",",
    "header": "auto",
    "grid": 10,
    "cell_px": 3,
    "origin": "ulc",
    "collision": "overwrite",
    "color": "gray",
    "marker": "cell",
    "rgb_seed": 0,
    "bin_min": None,
    "bin_max": None,
    "pairing": None,
    "schedule": None,
    "seed": 0,
}
TRAIN_DEFAULTS = {
    "folds": 10,
    "stratified": False,
    "epochs": 50,
    "batch": 32,
    "lr": 0.01,
    "momentum": 0.9,
    "context": False,
    "mean_gray": False,
}


def _add_common(p: Parser):
    p.add_argument("--data", help="input CSV file")
    p.add_argument("--label-col", dest="label_col", help="label column name or index")
    p.add_argument("--delimiter")
    p.add_argument("--header", choices=["auto", "yes", "no"])
    p.add_argument("--grid", type=int, help="grid resolution G")
    p.add_argument("--cell-px", dest="cell_px", type=int, help="pixels per cell side")
    p.add_argument("--origin", choices=["ulc", "llc"])
    p.add_argument("--collision", choices=sorted(COLLISIONS))
    p.add_argument("--color", choices=sorted(COLORS))
    p.add_argument("--marker", choices=["cell", "plus"])
    p.add_argument("--rgb-seed", dest="rgb_seed", type=int)
    p.add_argument("--bin-min", dest="bin_min", type=float,
                   help="uniform binning lower bound for every attribute")
    p.add_argument("--bin-max", dest="bin_max", type=float,
                   help="uniform binning upper bound for every attribute")
    p.add_argument("--pairing", help="comma-separated value index permutation")
    p.add_argument("--schedule", help="comma-separated ascending intensity levels")
    p.add_argument("--seed", type=int, help="master seed (folds, training, search)")
    p.add_argument("--config", help="JSON run config; explicit flags override it")
    p.add_argument("--out", help="output directory (default cpcr_out)")
    p.add_argument("--jobs", type=int, help="parallel workers (default: all cores)")


def _add_train(p: Parser):
    p.add_argument("--folds", type=int)
    p.add_argument("--stratified", action="store_const", const=True, default=None)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--context", action="store_const", const=True, default=None,
                   help="overlay cases on fold-local class means")
    p.add_argument("--mean-gray", dest="mean_gray", action="store_const", const=True,
                   default=None, help="render class means in grayscale")


def build_parser() -> Parser:
    parser = Parser(prog="cpcr", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cpcr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a dataset to per-case images")
    _add_common(p)
    p.add_argument("--fmt", choices=["png", "pgm"])
    p.set_defaults(func=cmd_encode, extra_defaults={"fmt": "png"})

    p = sub.add_parser("synth", help="generate a two-arm spiral dataset CSV")
    p.add_argument("--dim", type=int, choices=[2, 3])
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_synth, extra_defaults={
        "dim": 2, "n_per_class": 500, "noise": 0.0, "seed": 0})

    p = sub.add_parser("cv", help="cross-validated classifier run")
    _add_common(p)
    _add_train(p)
    p.set_defaults(func=cmd_cv, extra_defaults=dict(TRAIN_DEFAULTS))

    p = sub.add_parser("optimize", help="random search over pairings/intensities")
    _add_common(p)
    _add_train(p)
    p.add_argument("--search-k", dest="search_k", type=int)
    p.add_argument("--inner-folds", dest="inner_folds", type=int)
    p.add_argument("--target", choices=["pairing", "intensities", "both"])
    p.set_defaults(func=cmd_optimize, extra_defaults={
        **TRAIN_DEFAULTS, "search_k": 30, "inner_folds": 3, "target": "both",
        "epochs": 20})

    p = sub.add_parser("icc", help="rank covering blocks by accuracy drop")
    _add_common(p)
    _add_train(p)
    p.add_argument("--block", type=int, help="covering block side in grid cells")
    p.set_defaults(func=cmd_icc, extra_defaults={**TRAIN_DEFAULTS, "block": 2})

    p = sub.add_parser("freq", help="value-pair frequencies inside covering blocks")
    _add_common(p)
    p.add_argument("--block", type=int)
    p.add_argument("--cells", help="comma-separated block ids, or 'all'")
    p.set_defaults(func=cmd_freq, extra_defaults={"block": 2, "cells": "all"})

    p = sub.add_parser("saliency", help="class-score gradient maps for chosen cases")
    _add_common(p)
    _add_train(p)
    p.add_argument("--cases", help="comma-separated case ids (default: first 4)")
    p.add_argument("--class-index", dest="class_index", type=int,
                   help="class whose score is differentiated (default: prediction)")
    p.set_defaults(func=cmd_saliency, extra_defaults={
        **TRAIN_DEFAULTS, "cases": None, "class_index": None})

    p = sub.add_parser("decode", help="recover the point behind an exported image")
    p.add_argument("--image", help="image file (sidecar JSON found next to it)")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_decode, extra_defaults={"image": None})

    return parser


def resolve_options(args, defaults: dict) -> dict:
    """Flag value if given, else config-file value, else default."""
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = read_json(args.config)
        unknown = set(file_cfg) - set(defaults) - {"command"}
        if unknown:
            print(f"warning: ignoring unknown config keys {sorted(unknown)}",
                  file=sys.stderr)
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _parse_int_list(value, name: str):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(tok) for tok in str(value).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated integers, got {value!r}")


def _load_discrete(opts):
    if not opts["data"]:
        raise UsageError("--data is required")
    header = {"auto": None, "yes": True, "no": False}[opts["header"]]
    dataset = load_csv(opts["data"], label_column=opts["label_col"],
                       delimiter=opts["delimiter"], header=header)
    if (opts["bin_min"] is None) != (opts["bin_max"] is None):
        raise UsageError("--bin-min and --bin-max must be given together")
    if opts["bin_min"] is not None:
        schema = BinningSchema.uniform(opts["bin_min"], opts["bin_max"],
                                       opts["grid"], dataset.n_attributes)
    else:
        schema = BinningSchema.from_data(dataset.X, opts["grid"])
    return dataset, discretize(dataset, schema)


def _encoding_config(opts) -> EncodingConfig:
    schedule = _parse_int_list(opts.get("schedule"), "schedule")
    return EncodingConfig(
        grid=opts["grid"],
        cell_px=opts["cell_px"],
        origin=opts["origin"],
        collision=COLLISIONS[opts["collision"]],
        schedule=IntensitySchedule(tuple(schedule)) if schedule else None,
        color_mode=COLORS[opts["color"]],
        marker=opts["marker"],
        rgb_seed=opts["rgb_seed"],
    )


def _pairing(opts, n_values: int) -> Pairing:
    order = _parse_int_list(opts.get("pairing"), "pairing")
    if order is None:
        return Pairing.identity(n_values)
    return Pairing(tuple(order))


def _train_config(opts) -> TrainConfig:
    return TrainConfig(
        epochs=opts["epochs"], batch_size=opts["batch"], learning_rate=opts["lr"],
        momentum=opts["momentum"], seed=opts["seed"],
    )


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "cpcr_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jobs(args) -> int:
    jobs = getattr(args, "jobs", None)
    return jobs if jobs else (os.cpu_count() or 1)


def _finish(out: Path, command: str, opts: dict, started: float, files: list) -> int:
    run_config = {"command": command}
    run_config.update(opts)
    write_json(run_config, out / "run_config.json")
    write_json(
        {"wall_clock_s": time.perf_counter() - started,
         "version": __version__,
         "outputs": sorted(str(f.name) for f in files)},
        out / "run_meta.json",
    )
    for f in files:
        print(f"wrote {f}", file=sys.stderr)
    return 0


def cmd_encode(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    config = _encoding_config(opts)
    pairing = _pairing(opts, ds.n_values)
    images = encode_all(ds, pairing, config)
    paths = export_images(images, out / "images", fmt=opts["fmt"], dataset=ds.name)
    manifest = {
        "dataset": ds.name,
        "grid": ds.grid,
        "class_names": ds.class_names,
        "cases": [
            {"case_id": int(cid), "label": int(lab), "file": f"images/{p.name}"}
            for cid, lab, p in zip(ds.case_ids, ds.y, paths)
        ],
    }
    write_json(manifest, out / "manifest.json")
    return _finish(out, "encode", opts, started, [out / "manifest.json"])


def cmd_synth(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, args.extra_defaults)
    out = _out_dir(args)
    ds = gen_swiss_roll(dim=opts["dim"], n_per_class=opts["n_per_class"],
                        noise=opts["noise"], seed=opts["seed"])
    path = out / f"{ds.name}.csv"
    save_csv(ds, path)
    return _finish(out, "synth", opts, started, [path])


def cmd_cv(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    plan = make_folds(ds, opts["folds"], stratified=opts["stratified"],
                      seed=opts["seed"])
    report = cross_validate(
        ds, _pairing(opts, ds.n_values), _encoding_config(opts), plan,
        _train_config(opts), context=opts["context"], mean_as_gray=opts["mean_gray"],
        n_jobs=_jobs(args),
    )
    write_json(report.to_dict(), out / "cv_report.json")
    print(f"mean accuracy {report.mean_accuracy:.4f} over {plan.k} folds",
          file=sys.stderr)
    return _finish(out, "cv", opts, started, [out / "cv_report.json"])


def cmd_optimize(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    spec = SearchSpec(
        k=opts["search_k"], target=opts["target"], seed=opts["seed"],
        inner_folds=opts["inner_folds"], train=_train_config(opts),
        stratified=opts["stratified"],
    )
    trace = random_search(ds, spec, _encoding_config(opts), n_jobs=_jobs(args))
    write_json({"spec": spec.to_dict(), **trace.to_dict()}, out / "search_trace.json")
    best = trace.best
    write_json(
        {"pairing": list(best.pairing.order), "schedule": list(best.schedule.levels)},
        out / "best_config.json",
    )
    print(f"best candidate {trace.best_index} accuracy {best.accuracy:.4f} "
          f"(baseline {trace.baseline.accuracy:.4f})", file=sys.stderr)
    return _finish(out, "optimize", opts, started,
                   [out / "search_trace.json", out / "best_config.json"])


def cmd_icc(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    plan = make_folds(ds, opts["folds"], stratified=opts["stratified"],
                      seed=opts["seed"])
    report = icc_rank(
        ds, _pairing(opts, ds.n_values), _encoding_config(opts), plan,
        _train_config(opts), block_size=opts["block"], context=opts["context"],
        mean_as_gray=opts["mean_gray"], n_jobs=_jobs(args),
    )
    write_json(report.to_dict(), out / "icc_report.json")
    (out / "icc_report.txt").write_text(report.to_text())
    return _finish(out, "icc", opts, started,
                   [out / "icc_report.json", out / "icc_report.txt"])


def cmd_freq(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    cells = icc_cells(opts["grid"], opts["block"])
    if opts["cells"] != "all":
        wanted = set(_parse_int_list(opts["cells"], "cells"))
        missing = wanted - {c.id for c in cells}
        if missing:
            raise UsageError(f"no such covering blocks: {sorted(missing)}")
        cells = [c for c in cells if c.id in wanted]
    pairing = _pairing(opts, ds.n_values)
    files = []
    for cell in cells:
        table = pair_frequency(ds, pairing, cell)
        write_json(table.to_dict(), out / f"freq_cell_{cell.id:02d}.json")
        (out / f"freq_cell_{cell.id:02d}.txt").write_text(table.to_text())
        files.append(out / f"freq_cell_{cell.id:02d}.json")
    return _finish(out, "freq", opts, started, files)


def cmd_saliency(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, {**COMMON_DEFAULTS, **args.extra_defaults})
    out = _out_dir(args)
    dataset, ds = _load_discrete(opts)
    config = _encoding_config(opts)
    pairing = _pairing(opts, ds.n_values)
    images = encode_all(ds, pairing, config)
    clf = MlpClassifier(epochs=opts["epochs"], batch_size=opts["batch"],
                        learning_rate=opts["lr"], momentum=opts["momentum"],
                        seed=opts["seed"])
    clf.fit(images, ds.y)
    case_ids = _parse_int_list(opts["cases"], "cases")
    if case_ids is None:
        case_ids = [int(c) for c in ds.case_ids[:4]]
    by_id = {int(cid): i for i, cid in enumerate(ds.case_ids)}
    files = []
    summary = []
    for cid in case_ids:
        if cid not in by_id:
            raise UsageError(f"case id {cid} not in the dataset")
        img = images[by_id[cid]]
        target = opts["class_index"]
        if target is None:
            target = int(np.flatnonzero(clf.classes_ == clf.predict([img])[0])[0])
        _, norm = clf.saliency_map(img, target)
        src = out / f"{ds.name}_{cid}.png"
        sal = out / f"{ds.name}_{cid}_saliency.png"
        write_png(img, src)
        saliency_png(norm, sal)
        files.extend([src, sal])
        summary.append({"case_id": cid, "class_index": target,
                        "label": int(ds.y[by_id[cid]])})
    write_json({"dataset": ds.name, "cases": summary}, out / "saliency_summary.json")
    return _finish(out, "saliency", opts, started, files)


def cmd_decode(args) -> int:
    started = time.perf_counter()
    opts = resolve_options(args, args.extra_defaults)
    out = _out_dir(args)
    if not opts["image"]:
        raise UsageError("--image is required")
    image = load_image(opts["image"])
    point = decode(image)
    result = {
        "image": str(Path(opts["image"]).name),
        "case_id": image.case_id,
        "grid": point.grid,
        "values": list(point.values),
    }
    write_json(result, out / "decoded.json")
    return _finish(out, "decode", opts, started, [out / "decoded.json"])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (CsvFormatError, DecodeError, FileNotFoundError, IsADirectoryError,
            PermissionError, json.JSONDecodeError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
