"""Independent reference values for the color-metric tests.

Uses scikit-image (rgb2lab, deltaE_ciede2000, structural_similarity) as the
reference. The pseudo-random images are produced by the same 64-bit LCG the
C++ tests use (see tests/test_support.hpp), so both sides see identical data.
"""
import numpy as np
from skimage.color import rgb2lab, deltaE_ciede2000
from skimage.metrics import structural_similarity

MASK = (1 << 64) - 1


class Lcg:
    def __init__(self, seed):
        self.state = seed & MASK

    def next_unit(self):
        self.state = (self.state * 6364136223846793005 + 1442695040888963407) & MASK
        return (self.state >> 11) * (1.0 / (1 << 53))


def lcg_image(seed, w, h):
    g = Lcg(seed)
    img = np.zeros((h, w, 3))
    for y in range(h):
        for x in range(w):
            for c in range(3):
                img[y, x, c] = g.next_unit()
    return img


def main():
    print("lab(1,0,0) =", rgb2lab(np.array([[[1.0, 0.0, 0.0]]]))[0, 0])
    print("lab(0,1,0) =", rgb2lab(np.array([[[0.0, 1.0, 0.0]]]))[0, 0])
    print("lab(0.2,0.5,0.8) =", rgb2lab(np.array([[[0.2, 0.5, 0.8]]]))[0, 0])

    a = lcg_image(7, 24, 20)
    b = np.clip(a + 0.15 * (lcg_image(8, 24, 20) - 0.5), 0, 1)
    ssim = np.mean([
        structural_similarity(a[..., c], b[..., c], gaussian_weights=True, sigma=1.5,
                              use_sample_covariance=False, data_range=1.0)
        for c in range(3)])
    print("ssim(lcg7, lcg7+noise8) = %.12f" % ssim)

    c = lcg_image(11, 16, 16)
    d = lcg_image(12, 16, 16)
    ssim2 = np.mean([
        structural_similarity(c[..., k], d[..., k], gaussian_weights=True, sigma=1.5,
                              use_sample_covariance=False, data_range=1.0)
        for k in range(3)])
    print("ssim(lcg11, lcg12) = %.12f" % ssim2)

    de = deltaE_ciede2000(rgb2lab(a), rgb2lab(b)).mean()
    print("mean de00(lcg7, lcg7+noise8) = %.12f" % de)


if __name__ == "__main__":
    main()
