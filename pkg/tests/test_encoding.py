import numpy as np
import pytest
from sklearn.base import clone

from cpcr import (AmbiguousDecodeError, CpcrEncoder, EncodingConfig,
                  IntensitySchedule, MissingLevelError, Pairing, decode,
                  default_schedule, encode, pair_split, place_pairs, render,
                  strip_widths)

FIG5_POINT = (8, 10, 10, 8, 7, 10, 9, 7, 1, 1)
FIG5_CELLS = [(8, 10), (10, 8), (7, 10), (9, 7), (1, 1)]


def cfg(**kw):
    base = dict(grid=10, cell_px=1, origin="ulc", collision="overwrite_last")
    base.update(kw)
    return EncodingConfig(**base)


class TestPairSplit:
    def test_consecutive_pairs(self):
        assert pair_split(FIG5_POINT) == FIG5_CELLS

    def test_two_values(self):
        assert pair_split((4, 7)) == [(4, 7)]

    def test_permuted(self):
        assert pair_split((1, 2, 3, 4), Pairing((2, 3, 0, 1))) == [(3, 4), (1, 2)]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pair_split((1, 2, 3, 4), Pairing((0, 1)))
        with pytest.raises(ValueError):
            pair_split((1, 2, 3))

    def test_pairing_must_be_permutation(self):
        with pytest.raises(ValueError):
            Pairing((0, 0, 1, 2))
        with pytest.raises(ValueError):
            Pairing((0, 1, 2))


class TestSchedules:
    def test_five_pairs(self):
        assert default_schedule(5).levels == (0, 51, 102, 153, 204)

    def test_single_pair_black(self):
        assert default_schedule(1).levels == (0,)

    def test_seventeen_pairs(self):
        # floor(k * 255 / 17) = 15k
        assert default_schedule(17).levels == tuple(range(0, 255, 15))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            default_schedule(0)
        with pytest.raises(ValueError):
            default_schedule(256)

    def test_schedule_invariants(self):
        with pytest.raises(ValueError):
            IntensitySchedule((0, 0))
        with pytest.raises(ValueError):
            IntensitySchedule((10, 5))
        with pytest.raises(ValueError):
            IntensitySchedule((0, 255))


class TestPlacePairs:
    def test_no_collision(self):
        placement = place_pairs(FIG5_CELLS, cfg())
        assert set(placement.cells) == set(FIG5_CELLS)
        assert placement.events == []
        assert placement.placed_pair_count() == 5

    def test_cross_first_goes_right(self):
        placement = place_pairs([(3, 3), (3, 3)], cfg(collision="cross_adjacent"))
        assert placement.cells[(3, 3)] == [0]
        assert placement.cells[(4, 3)] == [1]
        (ev,) = placement.events
        assert (ev.pair_index, ev.intended, ev.placed) == (1, (3, 3), (4, 3))

    def test_cross_fixed_fill_order(self):
        placement = place_pairs([(5, 5)] * 5, cfg(collision="cross_adjacent"))
        order = [c for _, c in placement.pairs_in_order()]
        # right, left, top, bottom around the nominal cell
        assert order == [(5, 5), (6, 5), (4, 5), (5, 6), (5, 4)]

    def test_spiral_full_order(self):
        placement = place_pairs([(5, 5)] * 9, cfg(collision="spiral_adjacent"))
        order = [c for _, c in placement.pairs_in_order()]
        assert order == [
            (5, 5),
            (6, 5),   # right
            (5, 4),   # down
            (4, 5),   # left
            (5, 6),   # up
            (6, 4),   # lower-right
            (4, 4),   # lower-left
            (6, 6),   # upper-right
            (4, 6),   # upper-left
        ]

    def test_spiral_three_colliders(self):
        placement = place_pairs([(3, 3)] * 3, cfg(collision="spiral_adjacent"))
        order = [c for _, c in placement.pairs_in_order()]
        assert order == [(3, 3), (4, 3), (3, 2)]

    def test_darkest_wins_keeps_earliest(self):
        config = cfg(collision="darkest_wins", schedule=IntensitySchedule((0, 51)))
        placement = place_pairs([(5, 5), (5, 5)], config)
        assert placement.cells[(5, 5)] == [0]
        (ev,) = placement.events
        assert ev.placed is None and ev.action == "merged_darkest"

    def test_overwrite_keeps_last(self):
        placement = place_pairs([(5, 5), (5, 5)], cfg())
        assert placement.cells[(5, 5)] == [1]
        (ev,) = placement.events
        assert ev.pair_index == 0 and ev.placed is None

    def test_strip_accumulates_in_order(self):
        placement = place_pairs([(2, 2), (2, 2), (2, 2)], cfg(collision="strip_split"))
        assert placement.cells[(2, 2)] == [0, 1, 2]

    def test_boundary_neighbors_skipped(self):
        # at the lower-left corner: right, up, upper-right remain in grid
        placement = place_pairs([(1, 1)] * 4, cfg(collision="spiral_adjacent"))
        order = [c for _, c in placement.pairs_in_order()]
        assert order == [(1, 1), (2, 1), (1, 2), (2, 2)]

    def test_overflow_falls_back_to_darkest(self):
        placement = place_pairs([(1, 1)] * 5, cfg(collision="spiral_adjacent"))
        assert placement.placed_pair_count() == 4
        last = placement.events[-1]
        assert last.action == "overflow_darkest" and last.placed is None

    def test_pair_count_conservation(self):
        for strategy in ("cross_adjacent", "spiral_adjacent", "strip_split"):
            placement = place_pairs([(4, 4)] * 5, cfg(collision=strategy))
            assert placement.placed_pair_count() == 5

    def test_out_of_grid_pair(self):
        with pytest.raises(ValueError, match="outside"):
            place_pairs([(0, 3)], cfg())
        with pytest.raises(ValueError, match="outside"):
            place_pairs([(3, 11)], cfg())

    def test_cross_rotations(self):
        cw = cfg(collision="cross_adjacent", cross_order="clockwise")
        order = [c for _, c in place_pairs([(5, 5)] * 5, cw).pairs_in_order()]
        assert order == [(5, 5), (6, 5), (5, 4), (4, 5), (5, 6)]
        ccw = cfg(collision="cross_adjacent", cross_order="counterclockwise",
                  cross_start="top")
        order = [c for _, c in place_pairs([(5, 5)] * 5, ccw).pairs_in_order()]
        assert order == [(5, 5), (5, 6), (4, 5), (5, 4), (6, 5)]


class TestStripWidths:
    @pytest.mark.parametrize("cell_px", [5, 8, 10])
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_invariants(self, cell_px, n):
        widths = strip_widths(cell_px, n)
        assert sum(widths) == cell_px
        assert len(widths) == n
        assert all(a >= b for a, b in zip(widths, widths[1:]))
        assert max(widths) - min(widths) <= 1

    def test_paper_examples(self):
        assert strip_widths(8, 2) == (4, 4)
        assert strip_widths(8, 3) == (3, 3, 2)

    def test_too_many_strips(self):
        with pytest.raises(ValueError):
            strip_widths(4, 5)


class TestRender:
    def test_golden_five_pixels(self):
        img = encode(FIG5_POINT, config=cfg())
        gray = img.pixels[:, :, 0]
        assert gray.shape == (10, 10)
        assert (gray != 255).sum() == 5
        for (x, y), lvl in zip(FIG5_CELLS, (0, 51, 102, 153, 204)):
            assert gray[y - 1, x - 1] == lvl  # ULC: row y-1, col x-1

    def test_llc_flips_rows(self):
        img = encode((1, 1), config=cfg(origin="llc"))
        gray = img.pixels[:, :, 0]
        assert gray[9, 0] == 0  # cell (1,1) is bottom-left under LLC
        assert (gray != 255).sum() == 1

    def test_cell_px_blocks(self):
        img = encode((2, 3), config=cfg(cell_px=4))
        gray = img.pixels[:, :, 0]
        assert gray.shape == (40, 40)
        block = gray[8:12, 4:8]
        assert (block == 0).all()
        assert (gray != 255).sum() == 16

    def test_strip_rendering_two_colliders(self):
        config = cfg(cell_px=8, collision="strip_split")
        img = encode((2, 2, 2, 2), config=config)
        gray = img.pixels[:, :, 0]
        block = gray[8:16, 8:16]
        assert (block[:, :4] == 0).all()
        assert (block[:, 4:] == 127).all()

    def test_single_occupant_strip_cell_fills_whole_block(self):
        config = cfg(cell_px=8, collision="strip_split")
        img = encode((2, 2, 5, 5), config=config)
        gray = img.pixels[:, :, 0]
        assert (gray[8:16, 8:16] == 0).all()

    def test_red_levels_channels(self):
        img = encode((3, 3), config=cfg(color_mode="red_levels"))
        assert img.channels == 3
        px = img.pixels[2, 2]
        assert px.tolist() == [0, 255, 255]
        # background stays white on all channels
        assert img.pixels[0, 0].tolist() == [255, 255, 255]

    def test_random_rgb_deterministic_per_seed(self):
        a = encode(FIG5_POINT, config=cfg(color_mode="random_rgb", rgb_seed=5))
        b = encode(FIG5_POINT, config=cfg(color_mode="random_rgb", rgb_seed=5))
        c = encode(FIG5_POINT, config=cfg(color_mode="random_rgb", rgb_seed=6))
        assert np.array_equal(a.pixels, b.pixels)
        assert not np.array_equal(a.pixels, c.pixels)
        filled = a.pixels[a.pixels[:, :, 0] != 255]
        assert filled.max() <= 200  # triples stay below background

    def test_plus_marker_fills_adjacent_cells(self):
        img = encode((5, 5), config=cfg(marker="plus"))
        gray = img.pixels[:, :, 0]
        assert gray[4, 4] == 0
        for r, c in [(4, 5), (4, 3), (3, 4), (5, 4)]:
            assert gray[r, c] == 0
        assert (gray != 255).sum() == 5

    def test_plus_marker_clipped_at_border(self):
        img = encode((1, 1), config=cfg(marker="plus"))
        gray = img.pixels[:, :, 0]
        assert (gray != 255).sum() == 3  # cell plus right and below arms only

    def test_plus_marker_never_overwrites_content(self):
        img = encode((5, 5, 6, 5), config=cfg(marker="plus"))
        gray = img.pixels[:, :, 0]
        assert gray[4, 4] == 0
        assert gray[4, 5] == 127  # second pair's cell survives the first arm

    def test_every_dark_pixel_belongs_to_a_cell_block(self):
        rng = np.random.default_rng(0)
        config = cfg(cell_px=3, collision="spiral_adjacent")
        for _ in range(20):
            point = tuple(rng.integers(1, 11, 10))
            img = encode(point, config=config)
            placement = place_pairs(pair_split(point), config)
            allowed = np.zeros((30, 30), dtype=bool)
            from cpcr.encoding import cell_block
            for cell in placement.cells:
                rows, cols = cell_block(config, *cell)
                allowed[rows, cols] = True
            dark = img.pixels[:, :, 0] != 255
            assert not (dark & ~allowed).any()

    def test_intensity_order_recovers_pair_order(self):
        img = encode(FIG5_POINT, config=cfg())
        gray = img.pixels[:, :, 0]
        cells = [(int(c) + 1, int(r) + 1) for r, c in zip(*np.nonzero(gray != 255))]
        cells.sort(key=lambda cell: gray[cell[1] - 1, cell[0] - 1])
        assert cells == FIG5_CELLS

    def test_deterministic_rendering(self):
        a = encode(FIG5_POINT, config=cfg(cell_px=3))
        b = encode(FIG5_POINT, config=cfg(cell_px=3))
        assert np.array_equal(a.pixels, b.pixels)


class TestDecode:
    def test_round_trip_collision_free(self):
        rng = np.random.default_rng(1)
        hits = 0
        trials = 0
        while hits < 1000:
            point = tuple(int(v) for v in rng.integers(1, 11, 10))
            pairs = pair_split(point)
            trials += 1
            if len(set(pairs)) != len(pairs):
                continue
            img = encode(point, config=cfg())
            assert decode(img).values == point
            hits += 1
        assert trials < 1300  # distinct pairs are the common case

    def test_missing_level_after_overwrite(self):
        img = encode((5, 5, 5, 5), config=cfg())
        with pytest.raises(MissingLevelError) as err:
            decode(img)
        assert 0 in err.value.levels  # the overwritten darkest pair

    def test_spiral_two_step_inversion(self):
        img = encode((3, 3, 3, 3), config=cfg(collision="spiral_adjacent"))
        assert decode(img).values == (3, 3, 3, 3)

    def test_spiral_cluster_of_eight(self):
        point = (5, 5) * 8
        img = encode(point, config=cfg(collision="spiral_adjacent"))
        assert decode(img).values == point

    def test_separated_clusters(self):
        point = (2, 2, 2, 2, 2, 2, 8, 8, 8, 8)
        img = encode(point, config=cfg(collision="spiral_adjacent"))
        assert decode(img).values == point

    def test_canonical_preference_documents_lossiness(self):
        # (3,3)+(4,3) renders identically to (3,3)+(3,3); the decoder prefers
        # the collision-cluster reading by design
        img = encode((3, 3, 4, 3), config=cfg(collision="spiral_adjacent"))
        assert decode(img).values == (3, 3, 3, 3)

    def test_ambiguous_inversion_raises(self):
        # (3,2) could be nominal, displaced from (3,3), or displaced from
        # (2,2): two displacement candidates with equal standing
        point = (4, 3, 3, 3, 2, 2, 3, 2)
        img = encode(point, config=cfg(collision="spiral_adjacent"))
        with pytest.raises(AmbiguousDecodeError) as err:
            decode(img)
        assert set(err.value.candidates) == {(2, 2), (3, 3)}

    def test_pairing_inversion(self):
        pairing = Pairing((2, 3, 0, 1))
        img = encode((1, 2, 3, 4), pairing, cfg())
        assert decode(img).values == (1, 2, 3, 4)

    def test_cross_round_trip(self):
        img = encode((7, 7, 7, 7), config=cfg(collision="cross_adjacent"))
        assert decode(img).values == (7, 7, 7, 7)

    def test_rejects_unsupported_configs(self):
        img = encode((2, 2, 2, 2), config=cfg(collision="strip_split", cell_px=8))
        with pytest.raises(ValueError, match="cannot be decoded"):
            decode(img)
        img = encode((2, 2), config=cfg(color_mode="red_levels"))
        with pytest.raises(ValueError, match="grayscale"):
            decode(img)
        img = encode((2, 2), config=cfg(marker="plus"))
        with pytest.raises(ValueError, match="plus"):
            decode(img)

    def test_larger_cells_decode(self):
        img = encode(FIG5_POINT, config=cfg(cell_px=5, origin="llc"))
        assert decode(img).values == FIG5_POINT


class TestCpcrEncoder:
    def test_transform_stack(self):
        X = np.array([[1, 2, 3, 4], [5, 6, 7, 8]])
        enc = CpcrEncoder(grid=10, cell_px=2).fit(X)
        out = enc.transform(X)
        assert out.shape == (2, 20, 20, 1)
        assert out.dtype == np.uint8

    def test_inverse_transform(self):
        X = np.array([[1, 2, 3, 4], [5, 6, 7, 8]])
        enc = CpcrEncoder(grid=10, cell_px=2).fit(X)
        assert np.array_equal(enc.inverse_transform(enc.transform(X)), X)

    def test_requires_even_width(self):
        with pytest.raises(ValueError, match="even"):
            CpcrEncoder().fit(np.array([[1, 2, 3]]))

    def test_rejects_out_of_grid(self):
        with pytest.raises(ValueError):
            CpcrEncoder(grid=4).fit(np.array([[1, 5]]))

    def test_sklearn_clone(self):
        enc = CpcrEncoder(grid=8, collision="spiral_adjacent", marker="plus")
        assert clone(enc).get_params() == enc.get_params()

    def test_fit_derives_schedule(self):
        enc = CpcrEncoder().fit(np.array([[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]]))
        assert enc.config_.schedule.levels == (0, 51, 102, 153, 204)
