import logging
from typing import Callable, List, Optional

import numpy as np

from ..enums import EventKind
from ..errors import CapacityError
from ..position import Position
from .base_agent import Agent
from .rcu import AllocationDb, ControlPacket, RcuState, Resource

logger = logging.getLogger(__name__)


class Vehicle(Agent):
    """
    A vehicle carrying one or more RCUs.

    It broadcasts its allocations once per frame and moves any of its RCUs
    that clash with a higher-priority holder it has heard of.
    """
    def __init__(self, vehicle_id: int, position: Position):
        super().__init__(vehicle_id, position)
        self.rcus: List[RcuState] = []
        self.db = AllocationDb()
        self.persistent_conflict = False

    @property
    def vehicle_id(self) -> int:
        return self.agent_id

    def priority(self) -> int:
        """Size of the group this vehicle knows about, itself included"""
        return 1 + len(self.db.known_vehicles() - {self.vehicle_id})

    def outranks(self, other_priority: int, other_id: int) -> bool:
        """Larger group first, then lower vehicle id"""
        return (self.priority(), -self.vehicle_id) > (other_priority, -other_id)

    def make_packet(self, now: float) -> ControlPacket:
        allocations = tuple((r.rcu_id, r.slot, r.band, r.start_time) for r in self.rcus)
        return ControlPacket(self.vehicle_id, allocations, self.priority(), now)

    def own_resources(self, exclude: Optional[RcuState] = None) -> set:
        return {r.resource for r in self.rcus if r is not exclude}

    def handle_packet(self, packet: ControlPacket, now: float, num_slots: int, num_bands: int,
                      record: Optional[Callable] = None) -> bool:
        """
        Merges a received packet and relocates RCUs that lost a conflict.

        Returns:
            True if any RCU moved
        """
        if packet.vehicle_id == self.vehicle_id:
            return False
        my_priority_before = self.priority()
        self.db.merge(packet, now)
        moved = False
        for rcu in self.rcus:
            winner = self._stronger_holder(rcu.resource, my_priority_before)
            if winner is None:
                continue
            free = self._lowest_free(rcu, num_slots, num_bands)
            if free is None:
                self.persistent_conflict = True
                if record:
                    record(now, self.vehicle_id, EventKind.CONFLICT, {'rcu': rcu.rcu_id, 'resource': rcu.resource})
                continue
            old = rcu.resource
            rcu.slot, rcu.band = free
            moved = True
            if record:
                record(now, self.vehicle_id, EventKind.REALLOCATE,
                       {'rcu': rcu.rcu_id, 'from': old, 'to': free, 'yield_to': winner})
        if moved:
            self.persistent_conflict = False
        return moved

    def _stronger_holder(self, resource: Resource, own_priority: int) -> Optional[int]:
        for vehicle, entry in self.db.holders(resource):
            if vehicle == self.vehicle_id:
                continue
            if (entry.priority, -vehicle) > (own_priority, -self.vehicle_id):
                return vehicle
        return None

    def _lowest_free(self, rcu: RcuState, num_slots: int, num_bands: int) -> Optional[Resource]:
        taken = self.db.occupied() | self.own_resources(exclude=rcu)
        for slot in range(num_slots):
            for band in range(num_bands):
                if (slot, band) not in taken:
                    return (slot, band)
        return None


def init_vehicle(vehicle: Vehicle, num_rcus: int, num_slots: int, num_bands: int,
                 rng: np.random.Generator, facings: Optional[List[float]] = None,
                 fov_rad: float = 2.0) -> List[RcuState]:
    """
    Assigns mutually disjoint random (slot, band) resources to a vehicle's RCUs.

    Raises:
        CapacityError: more RCUs than slots x bands
    """
    capacity = num_slots * num_bands
    if num_rcus > capacity:
        raise CapacityError(f"{num_rcus} RCUs do not fit into {num_slots} slots x {num_bands} bands")
    picks = rng.choice(capacity, size=num_rcus, replace=False)
    if facings is None:
        facings = [np.pi * (i % 2) for i in range(num_rcus)]
    vehicle.rcus = [
        RcuState(rcu_id=i, vehicle_id=vehicle.vehicle_id, slot=int(p) // num_bands, band=int(p) % num_bands,
                 position=vehicle.position, facing_rad=facings[i % len(facings)], fov_rad=fov_rad)
        for i, p in enumerate(picks)
    ]
    return vehicle.rcus


def csma_broadcast(vehicle: Vehicle, env, channel, window_end: float, rng: np.random.Generator,
                   record: Optional[Callable] = None):
    """
    simpy process: senses the control channel and broadcasts once before window_end.

    A busy channel defers the attempt by a uniform backoff drawn from what is
    left of the window. The attempt is dropped when the remaining window can
    no longer hold a packet.
    """
    while True:
        latest_start = window_end - channel.airtime_s
        if env.now > latest_start:
            logger.debug("vehicle %d gave up broadcasting at t=%.6e", vehicle.vehicle_id, env.now)
            return False
        if not channel.busy(vehicle):
            yield from channel.transmit(vehicle, vehicle.make_packet(env.now))
            return True
        if record:
            record(env.now, vehicle.vehicle_id, EventKind.SENSE_BUSY, {})
        remaining = latest_start - env.now
        if remaining <= 0:
            return False
        yield env.timeout(float(rng.uniform(0.0, remaining)))
