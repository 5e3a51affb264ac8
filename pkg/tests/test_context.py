import numpy as np
import pytest

from cpcr import (ClassMeanContext, CpcrImage, EncodingConfig, class_mean,
                  compose_double, encode, pad_square)
from cpcr.context import MeanImage


def image(values, **kw):
    config = EncodingConfig(grid=10, cell_px=3, **kw)
    return encode(values, config=config)


def random_images(n, channels=1, side=12, seed=0):
    rng = np.random.default_rng(seed)
    config = EncodingConfig(grid=4, cell_px=3)
    return [
        CpcrImage(pixels=rng.integers(0, 256, (side, side, channels)).astype(np.uint8),
                  config=config, case_id=i)
        for i in range(n)
    ]


class TestClassMean:
    def test_mean_of_one_is_identity(self):
        img = image((3, 4, 5, 6))
        mean = class_mean([img], label=0)
        assert np.array_equal(mean.render(), img.pixels)

    def test_midpoint_rounds_half_up(self):
        a = CpcrImage(np.zeros((4, 4, 1), np.uint8), EncodingConfig())
        b = CpcrImage(np.full((4, 4, 1), 255, np.uint8), EncodingConfig())
        mean = class_mean([a, b])
        assert np.allclose(mean.pixels, 127.5)
        assert (mean.render() == 128).all()

    def test_matches_brute_force_summation(self):
        imgs = random_images(7, channels=3, seed=3)
        mean = class_mean(imgs, label=1)
        h, w, c = imgs[0].pixels.shape
        for r in range(h):
            for col in range(w):
                for ch in range(c):
                    total = sum(int(im.pixels[r, col, ch]) for im in imgs)
                    assert abs(mean.pixels[r, col, ch] - total / len(imgs)) < 1e-9

    def test_records_contributing_case_ids(self):
        imgs = random_images(4)
        mean = class_mean(imgs, label=0)
        assert mean.case_ids == (0, 1, 2, 3)
        assert mean.count == 4

    def test_empty_and_mismatched(self):
        with pytest.raises(ValueError, match="empty"):
            class_mean([])
        a = random_images(1, side=12)[0]
        b = random_images(1, side=15, seed=1)[0]
        with pytest.raises(ValueError, match="shapes differ"):
            class_mean([a, b])

    def test_gray_render_of_color_mean(self):
        px = np.zeros((2, 2, 3))
        px[..., 0] = 30
        px[..., 1] = 60
        px[..., 2] = 90
        mean = MeanImage(px, label=0)
        assert (mean.render(as_gray=True) == 60).all()


class TestComposeDouble:
    def make_case_and_means(self, case_values=(3, 4, 5, 6)):
        case = image(case_values)
        means = [
            class_mean([image((1, 1, 2, 2))], label=0),
            class_mean([image((9, 9, 10, 10))], label=1),
        ]
        return case, means

    def test_dimensions(self):
        case, means = self.make_case_and_means()
        double = compose_double(case, means)
        assert double.height == case.height
        assert double.width == 2 * case.width
        assert double.composition == {
            "n_halves": 2, "half_width": case.width, "pad_top": 0, "pad_bottom": 0}

    def test_background_case_shows_means_side_by_side(self):
        case, means = self.make_case_and_means()
        blank = CpcrImage(np.full_like(case.pixels, 255), case.config)
        double = compose_double(blank, means)
        w = case.width
        assert np.array_equal(double.pixels[:, :w], means[0].render())
        assert np.array_equal(double.pixels[:, w:], means[1].render())

    def test_case_pixels_win_in_every_half(self):
        case, means = self.make_case_and_means()
        double = compose_double(case, means)
        mask = np.any(case.pixels != 255, axis=2)
        w = case.width
        for h in range(2):
            half = double.pixels[:, h * w:(h + 1) * w]
            assert np.array_equal(half[mask], case.pixels[mask])

    def test_three_class_strip(self):
        case, means = self.make_case_and_means()
        means.append(class_mean([image((5, 5, 6, 6))], label=2))
        double = compose_double(case, means)
        assert double.width == 3 * case.width

    def test_requires_two_means(self):
        case, means = self.make_case_and_means()
        with pytest.raises(ValueError, match="at least 2"):
            compose_double(case, means[:1])

    def test_dimension_mismatch(self):
        case, _ = self.make_case_and_means()
        small = class_mean([CpcrImage(np.full((6, 6, 1), 255, np.uint8),
                                      case.config)], label=0)
        with pytest.raises(ValueError):
            compose_double(case, [small, small])

    def test_color_combinations_promote_channels(self):
        gray_case = image((3, 4, 5, 6))
        red_case = image((3, 4, 5, 6), color_mode="red_levels")
        gray_means = [class_mean([image((1, 1, 2, 2))], label=0),
                      class_mean([image((9, 9, 8, 8))], label=1)]
        color_means = [class_mean([image((1, 1, 2, 2), color_mode="random_rgb")],
                                  label=0),
                       class_mean([image((9, 9, 8, 8), color_mode="random_rgb")],
                                  label=1)]
        # red case + grey means, red + colored, grey case + colored, all colored
        for case, means, gray_flag in [
            (red_case, color_means, True),
            (red_case, color_means, False),
            (gray_case, color_means, False),
            (red_case, gray_means, False),
        ]:
            double = compose_double(case, means, mean_as_gray=gray_flag)
            assert double.channels == 3
        assert compose_double(gray_case, gray_means).channels == 1


class TestPadSquare:
    def pad_case(self, h, n_means):
        pixels = np.full((h, h * n_means, 1), 7, np.uint8)
        return CpcrImage(pixels, EncodingConfig(),
                         composition={"n_halves": n_means, "half_width": h,
                                      "pad_top": 0, "pad_bottom": 0})

    def test_even_split(self):
        out = pad_square(self.pad_case(30, 2))
        assert out.pixels.shape == (60, 60, 1)
        assert (out.pixels[:15] == 255).all()
        assert (out.pixels[45:] == 255).all()
        assert (out.pixels[15:45] == 7).all()
        assert out.composition["pad_top"] == 15
        assert out.composition["pad_bottom"] == 15

    def test_three_class(self):
        out = pad_square(self.pad_case(30, 3))
        assert out.pixels.shape == (90, 90, 1)
        assert (out.pixels[:30] == 255).all()
        assert (out.pixels[60:] == 255).all()

    def test_square_unchanged(self):
        img = self.pad_case(30, 1)
        assert pad_square(img) is img

    def test_odd_pad_extra_row_below(self):
        pixels = np.full((31, 62, 1), 7, np.uint8)
        out = pad_square(CpcrImage(pixels, EncodingConfig()))
        assert out.pixels.shape == (62, 62, 1)
        assert (out.pixels[:15] == 255).all()      # 15 rows above
        assert (out.pixels[46:] == 255).all()      # 16 rows below

    def test_rejects_non_multiple(self):
        pixels = np.full((30, 45, 1), 7, np.uint8)
        with pytest.raises(ValueError, match="multiple"):
            pad_square(CpcrImage(pixels, EncodingConfig()))


class TestClassMeanContext:
    def test_fit_transform_shapes(self):
        images = [image((i + 1, i + 1, i + 2, i + 2)) for i in range(6)]
        y = np.array([0, 0, 0, 1, 1, 1])
        ctx = ClassMeanContext().fit(images, y)
        out = ctx.transform(images[:2])
        assert out[0].pixels.shape == (60, 60, 1)
        assert len(ctx.class_means_) == 2
        assert ctx.class_means_[0].label == 0

    def test_means_are_fold_local(self):
        images = [image((i + 1, i + 1, i + 2, i + 2)) for i in range(6)]
        for img, cid in zip(images, range(6)):
            img.case_id = cid
        y = np.array([0, 0, 0, 1, 1, 1])
        ctx = ClassMeanContext().fit(images[:4], y[:4])
        assert ctx.class_means_[0].case_ids == (0, 1, 2)
        assert ctx.class_means_[1].case_ids == (3,)
