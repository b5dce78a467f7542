"""Shared CSMA control channel with a disk range model and overlap collisions."""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from ..agents.rcu import ControlPacket
from ..enums import EventKind

logger = logging.getLogger(__name__)


@dataclass
class Transmission:
    sender: object
    packet: ControlPacket
    start: float
    end: float


class ControlChannel:
    """
    Control channel of bandwidth B_c shared by every vehicle.

    A transmission becomes audible to carrier sense cca_delay_s after it
    starts. A receiver loses a packet if any other transmission audible to it
    overlaps the packet in time, or if it was transmitting itself.

    Args:
        env: simpy environment
        nodes: All vehicles; receivers are those within radio range of the sender
        radio_range_m: Disk radius for reception and carrier sense
        airtime_s: Duration of one control packet
        cca_delay_s: Carrier-sense detection delay
        on_deliver: Called as on_deliver(receiver, packet, now) for each successful reception
        record: Trace callback record(time, node, kind, payload)
    """
    def __init__(self, env, nodes: List, radio_range_m: float = 400.0, airtime_s: float = 100e-6,
                 cca_delay_s: float = 4e-6, on_deliver: Optional[Callable] = None,
                 record: Optional[Callable] = None):
        self.env = env
        self.nodes = nodes
        self.radio_range_m = radio_range_m
        self.airtime_s = airtime_s
        self.cca_delay_s = cca_delay_s
        self.on_deliver = on_deliver
        self.record = record
        self.history: List[Transmission] = []
        self.delivered = 0
        self.lost = 0

    def _hears(self, receiver, sender) -> bool:
        return receiver is sender or receiver.in_range(sender, self.radio_range_m)

    def busy(self, node) -> bool:
        """Carrier sense at the current instant"""
        now = self.env.now
        return any(tx.start + self.cca_delay_s <= now < tx.end and self._hears(node, tx.sender)
                   for tx in self.history)

    def _prune(self):
        horizon = self.env.now - 2 * self.airtime_s
        self.history = [tx for tx in self.history if tx.end >= horizon]

    def transmit(self, sender, packet: ControlPacket):
        """simpy process: occupies the channel for one airtime, then resolves receptions"""
        self._prune()
        tx = Transmission(sender, packet, self.env.now, self.env.now + self.airtime_s)
        self.history.append(tx)
        if self.record:
            self.record(tx.start, sender.agent_id, EventKind.TRANSMIT, {'priority': packet.priority})
        yield self.env.timeout(self.airtime_s)

        overlapping = [q for q in self.history if q is not tx and q.start < tx.end and tx.start < q.end]
        for receiver in self.nodes:
            if receiver is sender or not receiver.in_range(sender, self.radio_range_m):
                continue
            if any(self._hears(receiver, q.sender) for q in overlapping):
                self.lost += 1
                if self.record:
                    self.record(self.env.now, receiver.agent_id, EventKind.COLLISION, {'from': sender.agent_id})
                continue
            self.delivered += 1
            if self.record:
                self.record(self.env.now, receiver.agent_id, EventKind.DELIVER, {'from': sender.agent_id})
            if self.on_deliver:
                self.on_deliver(receiver, packet, self.env.now)

    def stats(self) -> Dict[str, int]:
        return {'delivered': self.delivered, 'lost': self.lost}
