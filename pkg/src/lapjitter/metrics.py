"""Full-reference image quality metrics.

All metrics take images scaled to a peak of 1.0.  ``margin`` crops that many
pixels from every border before evaluation, which keeps the invalid edges of
pre-corrected images out of the score.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
# 170 on the 0..255 scale, rescaled to peak 1
GMSD_C = 170.0 / 255.0 ** 2


def crop_margin(image, margin: int = 0) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if margin == 0:
        return image
    H, W = image.shape
    if 2 * margin >= H or 2 * margin >= W:
        raise ValueError(f"margin {margin} leaves nothing of a {H}x{W} image")
    return image[margin:H - margin, margin:W - margin]


def _pair(ref, test, margin=0):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"image shapes differ: {ref.shape} vs {test.shape}")
    if ref.ndim != 2:
        raise ValueError("expected 2-D images")
    return crop_margin(ref, margin), crop_margin(test, margin)


def psnr(ref, test, peak: float = 1.0, margin: int = 0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    if not peak > 0:
        raise ValueError("peak must be positive")
    ref, test = _pair(ref, test, margin)
    mse = np.mean((ref - test) ** 2)
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(peak ** 2 / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _valid_filter(image, taps):
    # separable correlation, keeping only fully-covered window positions
    half = len(taps) // 2
    out = ndimage.correlate1d(image, taps, axis=0, mode="constant")
    out = ndimage.correlate1d(out, taps, axis=1, mode="constant")
    return out[half:image.shape[0] - half, half:image.shape[1] - half]


def ssim(ref, test, margin: int = 0, peak: float = 1.0) -> float:
    """Mean single-scale SSIM over valid 11x11 Gaussian window positions."""
    ref, test = _pair(ref, test, margin)
    if min(ref.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    taps = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu1 = _valid_filter(ref, taps)
    mu2 = _valid_filter(test, taps)
    mu1_sq = mu1 * mu1
    mu2_sq = mu2 * mu2
    mu12 = mu1 * mu2
    s1 = _valid_filter(ref * ref, taps) - mu1_sq
    s2 = _valid_filter(test * test, taps) - mu2_sq
    s12 = _valid_filter(ref * test, taps) - mu12
    num = (2.0 * mu12 + c1) * (2.0 * s12 + c2)
    den = (mu1_sq + mu2_sq + c1) * (s1 + s2 + c2)
    return float(np.mean(num / den))


_PREWITT_X = np.array([[1.0, 0.0, -1.0]] * 3) / 3.0


def _gradient_magnitude(image):
    # edge replication so that flat images have exactly zero gradient
    gx = ndimage.convolve(image, _PREWITT_X, mode="nearest")
    gy = ndimage.convolve(image, _PREWITT_X.T, mode="nearest")
    return np.sqrt(gx ** 2 + gy ** 2)


def _downsample2(image):
    # 2x2 box average anchored at the top-left, edge-replicated past the border
    padded = np.pad(image, ((0, 1), (0, 1)), mode="edge")
    box = (padded[:-1, :-1] + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:]) / 4.0
    return box[::2, ::2]


def gms_map(ref, test, margin: int = 0) -> np.ndarray:
    ref, test = _pair(ref, test, margin)
    if min(ref.shape) < 4:
        raise ValueError("GMSD needs images of at least 4x4")
    mr = _gradient_magnitude(_downsample2(ref))
    mt = _gradient_magnitude(_downsample2(test))
    return (2.0 * mr * mt + GMSD_C) / (mr ** 2 + mt ** 2 + GMSD_C)


def gmsd(ref, test, margin: int = 0) -> float:
    """Gradient magnitude similarity deviation (lower is better).

    2x downsampling by box averaging, Prewitt gradients with replicated
    borders, and the sample standard deviation of the similarity map.
    """
    g = gms_map(ref, test, margin)
    if g.size < 2:
        return 0.0
    return float(np.std(g, ddof=1))


def spectral_l1(ref, test, margin: int = 0) -> float:
    """Mean absolute difference of unnormalized 2-D DFT coefficients.

    The mean runs over the real and imaginary parts of all ``H*W`` bins.
    """
    ref, test = _pair(ref, test, margin)
    d = np.fft.fft2(ref) - np.fft.fft2(test)
    return float((np.abs(d.real).sum() + np.abs(d.imag).sum()) / (2 * d.size))


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    gmsd: float
    spectral_l1: float
    region: tuple[int, int, int, int]  # (row0, col0, height, width)

    FIELDS = ("psnr_db", "ssim", "gmsd", "spectral_l1", "region")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["region"] = list(self.region)
        d["psnr_db"] = _encode_float(self.psnr_db)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            psnr_db=float(d["psnr_db"]),
            ssim=float(d["ssim"]),
            gmsd=float(d["gmsd"]),
            spectral_l1=float(d["spectral_l1"]),
            region=tuple(int(v) for v in d["region"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list[str]:
        r = self.region
        return [str(_encode_float(self.psnr_db)), repr(self.ssim), repr(self.gmsd), repr(self.spectral_l1),
                f"{r[0]}:{r[1]}:{r[2]}:{r[3]}"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        w.writerow(self.csv_row())
        return buf.getvalue()


def _encode_float(v: float):
    # strict JSON has no infinity; PSNR of identical images is written as "inf"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def evaluate(ref, test, margin: int = 0) -> MetricReport:
    """All metrics for one pair on the interior crop."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    H, W = ref.shape
    return MetricReport(
        psnr_db=psnr(ref, test, margin=margin),
        ssim=ssim(ref, test, margin=margin),
        gmsd=gmsd(ref, test, margin=margin),
        spectral_l1=spectral_l1(ref, test, margin=margin),
        region=(margin, margin, H - 2 * margin, W - 2 * margin),
    )
