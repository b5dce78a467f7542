"""2-D cell-averaging CFAR on a range-Doppler map."""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import ndimage, signal

from ..errors import DomainError
from .fmcw import Detection, RangeDopplerMap, correct_coupling, refine_peak

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CfarConfig:
    """
    Args:
        num_training: Training cells on each side of the cell under test, per axis
        num_guard: Guard cells on each side, per axis
        target_pfa: Design false-alarm probability per cell
        relative_floor: Cells weaker than this fraction of the map maximum are never detected
    """
    num_training: int = 4
    num_guard: int = 2
    target_pfa: float = 1e-3
    relative_floor: float = 1e-10

    def __post_init__(self):
        if self.num_training < 1 or self.num_guard < 0:
            raise DomainError("CFAR needs at least one training cell and non-negative guard cells")
        if not 0 < self.target_pfa < 1:
            raise DomainError("target_pfa must lie in (0, 1)")

    @property
    def window_size(self) -> int:
        return 1 + 2 * self.num_guard + 2 * self.num_training

    def kernel(self) -> np.ndarray:
        """Ring of training cells around the guard block"""
        nc = self.window_size
        t, g = self.num_training, self.num_guard
        kernel = np.ones((nc, nc))
        kernel[t:t + 2 * g + 1, t:t + 2 * g + 1] = 0
        return kernel

    @property
    def num_training_cells(self) -> int:
        return int(self.kernel().sum())

    def threshold_factor(self) -> float:
        """CA-CFAR scale Nt (Pfa^(-1/Nt) - 1) for exponential cell powers"""
        nt = self.num_training_cells
        return nt * (self.target_pfa ** (-1.0 / nt) - 1.0)


def cfar_mask(rd_map: RangeDopplerMap, cfar: CfarConfig) -> np.ndarray:
    """Boolean map of cells whose power exceeds the scaled local noise estimate"""
    rows, cols = rd_map.shape
    if rows < cfar.window_size or cols < cfar.window_size:
        raise DomainError(
            f"CFAR window {cfar.window_size}x{cfar.window_size} does not fit a {rows}x{cols} map")
    kernel = cfar.kernel()
    noise = signal.convolve2d(rd_map.power, kernel / kernel.sum(), mode='same', boundary='wrap')
    floor = cfar.relative_floor * float(rd_map.power.max())
    return (rd_map.power > cfar.threshold_factor() * noise) & (rd_map.power > floor)


def cfar_detect(rd_map: RangeDopplerMap, cfar: CfarConfig = CfarConfig()) -> List[Detection]:
    """
    Detects targets and returns one coupling-corrected Detection per cluster.

    Adjacent above-threshold cells (8-connectivity) form one cluster; its
    strongest cell is refined parabolically on both axes.
    """
    mask = cfar_mask(rd_map, cfar)
    labels, count = ndimage.label(mask, structure=np.ones((3, 3)))
    detections = []
    for label in range(1, count + 1):
        cells = np.argwhere(labels == label)
        powers = rd_map.power[cells[:, 0], cells[:, 1]]
        row, col = cells[int(np.argmax(powers))]
        tau_hat, nu_hat = refine_peak(rd_map, int(row), int(col))
        det = Detection(tau_hat=tau_hat, nu_hat=nu_hat, peak_power=float(powers.max()))
        detections.append(correct_coupling(det, rd_map.config))
    detections.sort(key=lambda d: d.peak_power, reverse=True)
    logger.debug("CFAR: %d cells above threshold, %d clusters", int(mask.sum()), count)
    return detections
