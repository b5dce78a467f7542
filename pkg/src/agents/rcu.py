"""Radar communication unit state, control packets and the allocation database."""
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Set, Tuple

from ..position import Position

Resource = Tuple[int, int]  # (slot, band)


@dataclass
class RcuState:
    """One radar of a vehicle and its current resource"""
    rcu_id: int
    vehicle_id: int
    slot: int
    band: int
    position: Position
    facing_rad: float = 0.0
    fov_rad: float = 2.0
    start_time: float = 0.0

    @property
    def resource(self) -> Resource:
        return (self.slot, self.band)


@dataclass(frozen=True)
class ControlPacket:
    """
    Broadcast of all RCU allocations of one vehicle.

    allocations holds (rcu_id, slot, band, start_time) per RCU.
    """
    vehicle_id: int
    allocations: Tuple[Tuple[int, int, int, float], ...]
    priority: int
    timestamp: float


@dataclass
class AllocationEntry:
    slot: int
    band: int
    heard_at: float
    priority: int

    @property
    def resource(self) -> Resource:
        return (self.slot, self.band)


@dataclass
class AllocationDb:
    """What a vehicle knows about other vehicles' RCU allocations"""
    entries: Dict[Tuple[int, int], AllocationEntry] = field(default_factory=dict)

    def merge(self, packet: ControlPacket, now: float):
        """Replaces everything known about the sender with the packet's content"""
        for key in [k for k in self.entries if k[0] == packet.vehicle_id]:
            del self.entries[key]
        for rcu_id, slot, band, _ in packet.allocations:
            self.entries[(packet.vehicle_id, rcu_id)] = AllocationEntry(slot, band, now, packet.priority)

    def expire(self, older_than: float) -> int:
        stale = [k for k, e in self.entries.items() if e.heard_at < older_than]
        for key in stale:
            del self.entries[key]
        return len(stale)

    def known_vehicles(self) -> Set[int]:
        return {vehicle for vehicle, _ in self.entries}

    def occupied(self) -> Set[Resource]:
        return {e.resource for e in self.entries.values()}

    def holders(self, resource: Resource) -> Iterator[Tuple[int, AllocationEntry]]:
        """(vehicle_id, entry) pairs currently holding a resource"""
        for (vehicle, _), entry in self.entries.items():
            if entry.resource == resource:
                yield vehicle, entry

    def get(self, vehicle_id: int, rcu_id: int) -> Optional[AllocationEntry]:
        return self.entries.get((vehicle_id, rcu_id))
