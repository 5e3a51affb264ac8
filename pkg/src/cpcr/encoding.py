"""Pair-values raster encoding: cell placement, collision handling, rendering
and decoding.

A discrete point with values in [1, grid] is split into consecutive value
pairs under a pairing permutation; pair (v1, v2) occupies grid cell
(x=v1, y=v2) and is painted with its slot from an intensity schedule
(darkest first, so pair order is recoverable from intensity). Colliding pairs
are resolved by one of five strategies; adjacent-cell strategies keep the
encoding invertible, and :func:`decode` performs that inversion.

Grid coordinates are 1-based with y increasing upward; the render origin
(upper-left or lower-left) only affects the cell-to-pixel mapping, never
placement. The spiral fill order around a cell is right, down, left, up,
lower-right, lower-left, upper-right, upper-left.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .preprocessing import DiscreteDataset, DiscretePoint
from .validation import as_rng, check_grid_values

logger = logging.getLogger(__name__)

BACKGROUND = 255

COLLISION_STRATEGIES = (
    "overwrite_last",
    "cross_adjacent",
    "spiral_adjacent",
    "strip_split",
    "darkest_wins",
)
COLOR_MODES = ("grayscale", "red_levels", "random_rgb")
MARKERS = ("cell", "plus")
ORIGINS = ("ulc", "llc")

# Neighbor offsets in grid coordinates (x right, y up).
OFFSETS = {
    "right": (1, 0),
    "left": (-1, 0),
    "top": (0, 1),
    "bottom": (0, -1),
    "down": (0, -1),
    "up": (0, 1),
}

SPIRAL_ORDER = (
    (1, 0),  # right
    (0, -1),  # down
    (-1, 0),  # left
    (0, 1),  # up
    (1, -1),  # lower-right
    (-1, -1),  # lower-left
    (1, 1),  # upper-right
    (-1, 1),  # upper-left
)

_CROSS_CYCLE_CW = ("right", "bottom", "left", "top")
_CROSS_CYCLE_CCW = ("right", "top", "left", "bottom")
_CROSS_FIXED = ("right", "left", "top", "bottom")


class DecodeError(ValueError):
    """The image cannot be inverted back to a discrete point."""


class MissingLevelError(DecodeError):
    """A schedule level is absent from the image (a lossy overwrite occurred)."""

    def __init__(self, levels):
        self.levels = tuple(levels)
        super().__init__(f"schedule levels {self.levels} are missing from the image")


class AmbiguousDecodeError(DecodeError):
    """Displacement inversion has several equally plausible nominal cells."""

    def __init__(self, level, candidates):
        self.level = level
        self.candidates = tuple(candidates)
        super().__init__(
            f"level {level} could have been displaced from any of {self.candidates}"
        )


@dataclass(frozen=True)
class Pairing:
    """Permutation of value indices, consumed as consecutive pairs."""

    order: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if n % 2 != 0:
            raise ValueError("pairing length must be even (pad the point first)")
        if sorted(self.order) != list(range(n)):
            raise ValueError(f"pairing {self.order} is not a permutation of 0..{n - 1}")

    @classmethod
    def identity(cls, n: int) -> "Pairing":
        return cls(tuple(range(n)))

    @property
    def n_values(self) -> int:
        return len(self.order)

    @property
    def n_pairs(self) -> int:
        return len(self.order) // 2

    def index_pairs(self) -> tuple[tuple[int, int], ...]:
        o = self.order
        return tuple((o[2 * k], o[2 * k + 1]) for k in range(self.n_pairs))


@dataclass(frozen=True)
class IntensitySchedule:
    """Strictly increasing 8-bit levels, one per pair, darkest for pair 0."""

    levels: tuple[int, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("schedule needs at least one level")
        for lvl in self.levels:
            if not 0 <= lvl < BACKGROUND:
                raise ValueError(f"level {lvl} outside [0, {BACKGROUND - 1}]")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError(f"levels must be strictly increasing, got {self.levels}")

    def __len__(self) -> int:
        return len(self.levels)

    def level(self, pair_index: int) -> int:
        return self.levels[pair_index]


def default_schedule(m: int) -> IntensitySchedule:
    """Evenly spread levels floor(k * 255 / m); five pairs give 0, 51, 102, 153, 204."""
    if not 1 <= m <= 255:
        raise ValueError("pair count must be in 1..255")
    return IntensitySchedule(tuple(k * 255 // m for k in range(m)))


@dataclass(frozen=True)
class EncodingConfig:
    """Everything needed to encode a discrete point and to decode the result."""

    grid: int = 10
    cell_px: int = 3
    origin: str = "ulc"
    collision: str = "overwrite_last"
    schedule: IntensitySchedule | None = None
    color_mode: str = "grayscale"
    marker: str = "cell"
    rgb_seed: int = 0
    cross_start: str = "right"
    cross_order: str = "fixed"

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must be >= 2")
        if self.cell_px < 1:
            raise ValueError("cell_px must be >= 1")
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        if self.collision not in COLLISION_STRATEGIES:
            raise ValueError(f"collision must be one of {COLLISION_STRATEGIES}")
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color_mode must be one of {COLOR_MODES}")
        if self.marker not in MARKERS:
            raise ValueError(f"marker must be one of {MARKERS}")
        if self.cross_start not in _CROSS_FIXED:
            raise ValueError(f"cross_start must be one of {_CROSS_FIXED}")
        if self.cross_order not in ("fixed", "clockwise", "counterclockwise"):
            raise ValueError("cross_order must be fixed, clockwise or counterclockwise")

    @property
    def image_side(self) -> int:
        return self.grid * self.cell_px

    @property
    def channels(self) -> int:
        return 1 if self.color_mode == "grayscale" else 3

    def neighbor_order(self) -> tuple[tuple[int, int], ...]:
        """Fill order offsets for the configured adjacent-cell strategy."""
        if self.collision == "spiral_adjacent":
            return SPIRAL_ORDER
        if self.cross_order == "clockwise":
            names = _CROSS_CYCLE_CW
        elif self.cross_order == "counterclockwise":
            names = _CROSS_CYCLE_CCW
        else:
            names = _CROSS_FIXED
        start = names.index(self.cross_start)
        rotated = names[start:] + names[:start]
        return tuple(OFFSETS[name] for name in rotated)

    def resolve_schedule(self, n_pairs: int) -> IntensitySchedule:
        if self.schedule is None:
            return default_schedule(n_pairs)
        if len(self.schedule) != n_pairs:
            raise ValueError(
                f"schedule has {len(self.schedule)} levels but the point has "
                f"{n_pairs} pairs"
            )
        return self.schedule

    def with_schedule(self, n_pairs: int) -> "EncodingConfig":
        return replace(self, schedule=self.resolve_schedule(n_pairs))

    def pair_colors(self, n_pairs: int) -> np.ndarray:
        """Per-pair pixel values: (n_pairs, channels) uint8."""
        schedule = self.resolve_schedule(n_pairs)
        if self.color_mode == "grayscale":
            return np.array([[lvl] for lvl in schedule.levels], dtype=np.uint8)
        if self.color_mode == "red_levels":
            return np.array(
                [[lvl, BACKGROUND, BACKGROUND] for lvl in schedule.levels], dtype=np.uint8
            )
        rng = as_rng(self.rgb_seed)
        return rng.integers(0, 201, (n_pairs, 3)).astype(np.uint8)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "cell_px": self.cell_px,
            "origin": self.origin,
            "collision": self.collision,
            "schedule": list(self.schedule.levels) if self.schedule else None,
            "color_mode": self.color_mode,
            "marker": self.marker,
            "rgb_seed": self.rgb_seed,
            "cross_start": self.cross_start,
            "cross_order": self.cross_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingConfig":
        d = dict(d)
        sched = d.pop("schedule", None)
        return cls(schedule=IntensitySchedule(tuple(sched)) if sched else None, **d)


@dataclass
class CollisionEvent:
    """One collision resolution: what pair, where it aimed, where it ended up.

    ``placed`` is None when the pair's own value was dropped (overwritten,
    merged into a darker cell, or lost to neighbor overflow).
    """

    pair_index: int
    intended: tuple[int, int]
    placed: tuple[int, int] | None
    action: str


@dataclass
class CellPlacement:
    """Cell contents after collision resolution, plus the event log."""

    grid: int
    collision: str
    cells: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    events: list[CollisionEvent] = field(default_factory=list)

    def placed_pair_count(self) -> int:
        return sum(len(v) for v in self.cells.values())

    def cell_of_pair(self, pair_index: int) -> tuple[int, int] | None:
        for cell, pairs in self.cells.items():
            if pair_index in pairs:
                return cell
        return None

    def pairs_in_order(self) -> list[tuple[int, tuple[int, int]]]:
        """(pair_index, cell) for every placed pair, by pair index."""
        out = []
        for cell, pairs in self.cells.items():
            out.extend((k, cell) for k in pairs)
        out.sort()
        return out


@dataclass
class CpcrImage:
    """A rendered raster with the provenance needed to reproduce or invert it."""

    pixels: np.ndarray  # (H, W, C) uint8, background 255
    config: EncodingConfig
    pairing: Pairing | None = None
    case_id: int | None = None
    dataset: str | None = None
    composition: dict | None = None  # set on double images: halves and padding

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def copy(self) -> "CpcrImage":
        return CpcrImage(
            pixels=self.pixels.copy(),
            config=self.config,
            pairing=self.pairing,
            case_id=self.case_id,
            dataset=self.dataset,
            composition=dict(self.composition) if self.composition else None,
        )


def pair_split(point, pairing: Pairing | None = None) -> list[tuple[int, int]]:
    """Split a discrete point into value pairs under a pairing permutation."""
    values = point.values if isinstance(point, DiscretePoint) else tuple(point)
    if pairing is None:
        pairing = Pairing.identity(len(values))
    if len(values) % 2 != 0:
        raise ValueError("point length must be even (pad odd points first)")
    if pairing.n_values != len(values):
        raise ValueError(
            f"pairing covers {pairing.n_values} values, point has {len(values)}"
        )
    return [(values[i], values[j]) for i, j in pairing.index_pairs()]


def cell_block(config: EncodingConfig, x: int, y: int) -> tuple[slice, slice]:
    """Pixel (rows, cols) slices of grid cell (x, y) under the config origin."""
    s = config.cell_px
    cols = slice((x - 1) * s, x * s)
    if config.origin == "ulc":
        rows = slice((y - 1) * s, y * s)
    else:
        rows = slice((config.grid - y) * s, (config.grid - y + 1) * s)
    return rows, cols


def strip_widths(cell_px: int, n_strips: int) -> tuple[int, ...]:
    """Vertical strip widths for n colliders: as even as possible, wider first."""
    if n_strips < 1:
        raise ValueError("need at least one strip")
    if n_strips > cell_px:
        raise ValueError(f"cannot fit {n_strips} strips in a {cell_px}px cell")
    base, rem = divmod(cell_px, n_strips)
    return tuple(base + 1 if i < rem else base for i in range(n_strips))


def place_pairs(pairs, config: EncodingConfig) -> CellPlacement:
    """Assign each value pair to a grid cell, resolving collisions.

    Pairs are processed in order. A pair whose cell is free takes it; a
    collider is handled per the configured strategy. When every candidate
    neighbor of an adjacent-cell strategy is occupied the collider's value is
    dropped in favor of the darker occupant (logged, warned), so the image is
    never silently wrong.
    """
    g = config.grid
    placement = CellPlacement(grid=g, collision=config.collision)
    cells = placement.cells
    for k, (vx, vy) in enumerate(pairs):
        if not (1 <= vx <= g and 1 <= vy <= g):
            raise ValueError(f"pair {k} = ({vx}, {vy}) outside the {g}x{g} grid")
        target = (int(vx), int(vy))
        if target not in cells:
            cells[target] = [k]
            continue
        if config.collision == "strip_split":
            cells[target].append(k)
            placement.events.append(CollisionEvent(k, target, target, "strip_shared"))
        elif config.collision == "overwrite_last":
            evicted = cells[target][0]
            cells[target] = [k]
            placement.events.append(CollisionEvent(evicted, target, None, "overwritten"))
        elif config.collision == "darkest_wins":
            placement.events.append(CollisionEvent(k, target, None, "merged_darkest"))
        else:  # cross_adjacent / spiral_adjacent
            placed = None
            for ox, oy in config.neighbor_order():
                cand = (target[0] + ox, target[1] + oy)
                if not (1 <= cand[0] <= g and 1 <= cand[1] <= g):
                    continue
                if cand not in cells:
                    placed = cand
                    break
            if placed is None:
                placement.events.append(
                    CollisionEvent(k, target, None, "overflow_darkest")
                )
                logger.warning(
                    "pair %d at cell %s: all neighbors occupied, keeping darkest", k, target
                )
            else:
                cells[placed] = [k]
                placement.events.append(CollisionEvent(k, target, placed, "displaced"))
    return placement


def render(placement: CellPlacement, config: EncodingConfig,
           pairing: Pairing | None = None, case_id: int | None = None,
           dataset: str | None = None) -> CpcrImage:
    """Paint a placement onto a uint8 raster.

    Strip cells are divided into vertical strips, pair order left to right,
    wider strips first. The plus marker additionally paints the four
    edge-adjacent cell blocks of each pair (clipped at the borders) without
    touching cells that hold pair content.
    """
    n_pairs = max((k for ps in placement.cells.values() for k in ps), default=-1) + 1
    for ev in placement.events:
        n_pairs = max(n_pairs, ev.pair_index + 1)
    colors = config.pair_colors(max(n_pairs, 1))
    side = config.image_side
    pixels = np.full((side, side, config.channels), BACKGROUND, dtype=np.uint8)

    for (x, y), pair_list in placement.cells.items():
        rows, cols = cell_block(config, x, y)
        if len(pair_list) == 1:
            pixels[rows, cols] = colors[pair_list[0]]
        else:
            widths = strip_widths(config.cell_px, len(pair_list))
            offset = cols.start
            for w, k in zip(widths, pair_list):
                pixels[rows, offset:offset + w] = colors[k]
                offset += w

    if config.marker == "plus":
        occupied = set(placement.cells)
        for k, (x, y) in placement.pairs_in_order():
            for name in ("right", "left", "top", "bottom"):
                ox, oy = OFFSETS[name]
                arm = (x + ox, y + oy)
                if not (1 <= arm[0] <= config.grid and 1 <= arm[1] <= config.grid):
                    continue
                if arm in occupied:
                    continue
                rows, cols = cell_block(config, *arm)
                pixels[rows, cols] = colors[k]

    return CpcrImage(
        pixels=pixels,
        config=config.with_schedule(max(n_pairs, 1)),
        pairing=pairing,
        case_id=case_id,
        dataset=dataset,
    )


def encode(point, pairing: Pairing | None = None,
           config: EncodingConfig | None = None,
           case_id: int | None = None, dataset: str | None = None) -> CpcrImage:
    """Full pipeline: split into pairs, place, render."""
    if config is None:
        config = EncodingConfig()
    values = point.values if isinstance(point, DiscretePoint) else tuple(point)
    if len(values) % 2 != 0:
        raise ValueError("point length must be even (pad odd points first)")
    if pairing is None:
        pairing = Pairing.identity(len(values))
    pairs = pair_split(values, pairing)
    config = config.with_schedule(len(pairs))
    placement = place_pairs(pairs, config)
    return render(placement, config, pairing=pairing, case_id=case_id, dataset=dataset)


def _read_cells(pixels: np.ndarray, config: EncodingConfig) -> dict[int, tuple[int, int]]:
    """Map intensity level -> grid cell; blocks must be uniform and unique."""
    found: dict[int, tuple[int, int]] = {}
    for x in range(1, config.grid + 1):
        for y in range(1, config.grid + 1):
            rows, cols = cell_block(config, x, y)
            block = pixels[rows, cols, 0]
            lvl = int(block[0, 0])
            if not np.all(block == lvl):
                raise DecodeError(
                    f"cell ({x}, {y}) is not uniform; strip or corrupted images "
                    "cannot be decoded"
                )
            if lvl == BACKGROUND:
                continue
            if lvl in found:
                raise DecodeError(f"level {lvl} appears in two cells: {found[lvl]}, {(x, y)}")
            found[lvl] = (x, y)
    return found


def _first_free_neighbor(cell, occupied, order, grid):
    for ox, oy in order:
        cand = (cell[0] + ox, cell[1] + oy)
        if not (1 <= cand[0] <= grid and 1 <= cand[1] <= grid):
            continue
        if cand not in occupied:
            return cand
    return None


def decode(image: CpcrImage, pairing: Pairing | None = None,
           config: EncodingConfig | None = None) -> DiscretePoint:
    """Invert a grayscale raster back to its discrete point.

    Requires the overwrite_last, cross_adjacent or spiral_adjacent strategy,
    grayscale mode and the plain cell marker. Pairs are recovered darkest
    first. For adjacent-cell strategies each pair's nominal cell is inferred
    by checking which earlier-occupied cell would have displaced it to where
    it was found; when several qualify, the cell already nominal for the most
    earlier pairs is preferred (the collision-cluster reading), and remaining
    ties raise :class:`AmbiguousDecodeError`. Missing schedule levels raise
    :class:`MissingLevelError`.
    """
    config = config or image.config
    pairing = pairing or image.pairing
    if config is None or config.schedule is None:
        raise ValueError("decoding needs the encoding config with its schedule")
    if config.collision not in ("overwrite_last", "cross_adjacent", "spiral_adjacent"):
        raise ValueError(f"images with {config.collision} collisions cannot be decoded")
    if config.color_mode != "grayscale":
        raise ValueError("only grayscale images can be decoded")
    if config.marker != "cell":
        raise ValueError("plus-marker images cannot be decoded (arms duplicate levels)")
    pixels = image.pixels if isinstance(image, CpcrImage) else np.asarray(image)
    if pixels.ndim == 2:
        pixels = pixels[:, :, np.newaxis]
    if pixels.shape[0] != config.image_side or pixels.shape[1] != config.image_side:
        raise ValueError(
            f"image is {pixels.shape[1]}x{pixels.shape[0]}, config expects "
            f"{config.image_side}x{config.image_side}"
        )

    schedule = config.schedule
    m = len(schedule)
    if pairing is None:
        pairing = Pairing.identity(2 * m)
    if pairing.n_pairs != m:
        raise ValueError("pairing and schedule disagree on the pair count")

    by_level = _read_cells(pixels, config)
    unknown = set(by_level) - set(schedule.levels)
    if unknown:
        raise DecodeError(f"intensities {sorted(unknown)} are not schedule levels")
    missing = [lvl for lvl in schedule.levels if lvl not in by_level]
    if missing:
        raise MissingLevelError(missing)

    nominal: list[tuple[int, int]] = []
    if config.collision == "overwrite_last":
        nominal = [by_level[schedule.level(k)] for k in range(m)]
    else:
        order = config.neighbor_order()
        occupied: set[tuple[int, int]] = set()
        nominated: dict[tuple[int, int], int] = {}
        for k in range(m):
            actual = by_level[schedule.level(k)]
            candidates = [
                cell for cell in occupied
                if _first_free_neighbor(cell, occupied, order, config.grid) == actual
            ]
            if not candidates:
                chosen = actual
            elif len(candidates) == 1:
                chosen = candidates[0]
            else:
                best = max(nominated.get(c, 0) for c in candidates)
                top = [c for c in candidates if nominated.get(c, 0) == best]
                if len(top) > 1:
                    raise AmbiguousDecodeError(schedule.level(k), sorted(top))
                chosen = top[0]
            nominal.append(chosen)
            nominated[chosen] = nominated.get(chosen, 0) + 1
            occupied.add(actual)

    values = [0] * pairing.n_values
    for k, (i, j) in enumerate(pairing.index_pairs()):
        values[i], values[j] = nominal[k]
    return DiscretePoint(tuple(values), None, config.grid)


class CpcrEncoder(BaseEstimator, TransformerMixin):
    """Transformer from discrete grid values to raster images.

    Parameters mirror :class:`EncodingConfig`; ``pairing`` and ``schedule``
    default to the identity permutation and the evenly spread schedule for
    the fitted width. ``transform`` returns a (n_cases, H, W, C) uint8 array;
    :meth:`encode_case` returns a full :class:`CpcrImage` with provenance.
    """

    def __init__(self, grid=10, cell_px=3, origin="ulc", collision="overwrite_last",
                 color_mode="grayscale", marker="cell", schedule=None, pairing=None,
                 rgb_seed=0, cross_start="right", cross_order="fixed"):
        self.grid = grid
        self.cell_px = cell_px
        self.origin = origin
        self.collision = collision
        self.color_mode = color_mode
        self.marker = marker
        self.schedule = schedule
        self.pairing = pairing
        self.rgb_seed = rgb_seed
        self.cross_start = cross_start
        self.cross_order = cross_order

    def _base_config(self) -> EncodingConfig:
        schedule = self.schedule
        if schedule is not None and not isinstance(schedule, IntensitySchedule):
            schedule = IntensitySchedule(tuple(schedule))
        return EncodingConfig(
            grid=self.grid, cell_px=self.cell_px, origin=self.origin,
            collision=self.collision, schedule=schedule, color_mode=self.color_mode,
            marker=self.marker, rgb_seed=self.rgb_seed, cross_start=self.cross_start,
            cross_order=self.cross_order,
        )

    def fit(self, X, y=None):
        X = check_grid_values(X, self.grid, "X")
        if X.shape[1] % 2 != 0:
            raise ValueError("attribute count must be even (use Discretizer padding)")
        self.n_features_in_ = X.shape[1]
        pairing = self.pairing
        if pairing is None:
            pairing = Pairing.identity(X.shape[1])
        elif not isinstance(pairing, Pairing):
            pairing = Pairing(tuple(pairing))
        if pairing.n_values != X.shape[1]:
            raise ValueError("pairing length must match the attribute count")
        self.pairing_ = pairing
        self.config_ = self._base_config().with_schedule(pairing.n_pairs)
        return self

    def encode_case(self, values, case_id=None, dataset=None) -> CpcrImage:
        if not hasattr(self, "config_"):
            raise RuntimeError("CpcrEncoder must be fitted before encoding")
        return encode(tuple(int(v) for v in values), self.pairing_, self.config_,
                      case_id=case_id, dataset=dataset)

    def encode_dataset(self, ds: DiscreteDataset) -> list[CpcrImage]:
        if not hasattr(self, "config_"):
            self.fit(ds.values)
        return [
            self.encode_case(ds.values[i], case_id=int(ds.case_ids[i]), dataset=ds.name)
            for i in range(ds.n_cases)
        ]

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "config_"):
            raise RuntimeError("CpcrEncoder must be fitted before transform")
        X = check_grid_values(X, self.grid, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.stack([self.encode_case(row).pixels for row in X])

    def inverse_transform(self, images) -> np.ndarray:
        """Decode a stack of grayscale images back to grid values."""
        out = []
        for img in images:
            if not isinstance(img, CpcrImage):
                img = CpcrImage(pixels=np.asarray(img), config=self.config_,
                                pairing=self.pairing_)
            out.append(decode(img, self.pairing_, self.config_).values)
        return np.asarray(out, dtype=np.int64)
