from ..position import Position

class Agent:
    """Base class for all nodes taking part in the MAC simulation"""
    def __init__(self, agent_id: int, position: Position):
        self.agent_id = agent_id
        self.position = position

    def in_range(self, other: 'Agent', radio_range_m: float) -> bool:
        """Disk model for control-channel reachability"""
        return self.position.distance_to(other.position) <= radio_range_m
