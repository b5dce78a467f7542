import numpy as np

class Position:
    """A point on the road plane: x along the carriageway, y across it (metres)"""
    def __init__(self, x: float, y: float):
        self.x = float(x)
        self.y = float(y)

    def distance_to(self, other: 'Position') -> float:
        """Calculates Euclidean distance to another position"""
        return float(np.hypot(self.x - other.x, self.y - other.y))

    def bearing_to(self, other: 'Position') -> float:
        """Angle of the vector towards other, measured from the +x axis, in (-pi, pi]"""
        return float(np.arctan2(other.y - self.y, other.x - self.x))

    def sees(self, other: 'Position', facing_rad: float, fov_rad: float) -> bool:
        """True if other lies inside a sensor's azimuth FOV centred on facing_rad"""
        offset = np.angle(np.exp(1j * (self.bearing_to(other) - facing_rad)))
        return bool(abs(offset) <= fov_rad / 2.0)

    def __eq__(self, other):
        """Enables position comparison with == operator"""
        if not isinstance(other, Position):
            return False
        return self.x == other.x and self.y == other.y

    def __repr__(self):
        return f"Position({self.x:.1f}, {self.y:.1f})"
