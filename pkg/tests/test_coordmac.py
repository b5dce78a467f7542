import unittest

import numpy as np
import simpy
from scipy.special import comb

from src.agents.rcu import ControlPacket, RcuState
from src.agents.vehicle import Vehicle, csma_broadcast, init_vehicle
from src.enums import EventKind
from src.environment.control_channel import ControlChannel
from src.environment.mac_simulator import (FrameConfig, MacSettings, MacSimulator, apply_sync_error,
                                           count_overlaps, measure_interference, run)
from src.errors import CapacityError, DomainError
from src.position import Position


def default_frame(**overrides):
    params = dict(frame_s=2e-3, chirp_s=20e-6, chirps_per_frame=99, carrier_hz=79e9,
                  bandwidth_hz=1e9, interest_bandwidth_hz=50e6, sync_error_bound_s=1e-6)
    params.update(overrides)
    return FrameConfig(**params)


class TestFrameConfig(unittest.TestCase):
    def setUp(self):
        self.frame = default_frame()

    def test_resource_grid(self):
        """One burst slot per frame and six start offsets at 1 us sync error."""
        self.assertAlmostEqual(self.frame.modified_duty_cycle, 1.0)
        self.assertEqual(self.frame.burst_slots, 1)
        self.assertAlmostEqual(self.frame.tau_max_s, 1e-6)
        self.assertEqual(self.frame.offsets_per_chirp, 6)
        self.assertEqual(self.frame.capacity, 6)

    def test_slots_do_not_overlap(self):
        """Slot starts are strictly increasing and fit inside the frame."""
        frame = default_frame(frame_s=10e-3)
        starts = [frame.slot_start(s) for s in range(frame.num_slots)]
        self.assertTrue(np.all(np.diff(starts) > 0))
        self.assertLess(starts[-1], frame.frame_s)

    def test_bands_partition_and_comm_band(self):
        """Sub-bands tile B and the control channel sits outside them."""
        frame = default_frame(num_bands=4, interest_bandwidth_hz=50e6)
        bands = frame.radar_bands
        self.assertAlmostEqual(bands[0][0], 79e9)
        self.assertAlmostEqual(bands[-1][1], 80e9)
        for (_, hi), (lo, _) in zip(bands[:-1], bands[1:]):
            self.assertAlmostEqual(hi, lo)
        self.assertGreaterEqual(frame.comm_band[0], bands[-1][1])

    def test_overfull_frame_rejected(self):
        """(K+1)T longer than the frame is rejected."""
        with self.assertRaises(DomainError):
            default_frame(chirps_per_frame=150)


class TestInitVehicle(unittest.TestCase):
    def test_disjoint_resources(self):
        """Four RCUs in eight slots get four different slots."""
        vehicle = Vehicle(0, Position(0, 0))
        rcus = init_vehicle(vehicle, 4, 8, 1, np.random.default_rng(1))
        self.assertEqual(len({r.resource for r in rcus}), 4)
        for r in rcus:
            self.assertTrue(0 <= r.slot < 8 and r.band == 0)

    def test_capacity_exceeded(self):
        """More RCUs than slots x bands raises CapacityError."""
        with self.assertRaises(CapacityError):
            init_vehicle(Vehicle(0, Position(0, 0)), 5, 2, 2, np.random.default_rng(0))

    def test_same_seed_same_assignment(self):
        """Initial assignment is reproducible from the seed."""
        a = init_vehicle(Vehicle(0, Position(0, 0)), 3, 6, 2, np.random.default_rng(7))
        b = init_vehicle(Vehicle(0, Position(0, 0)), 3, 6, 2, np.random.default_rng(7))
        self.assertEqual([r.resource for r in a], [r.resource for r in b])

    def test_cross_vehicle_collision_rate(self):
        """Two independently initialised vehicles collide at the combinatorial rate."""
        capacity, k, trials = 8, 2, 4000
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(trials):
            a = {r.resource for r in init_vehicle(Vehicle(0, Position(0, 0)), k, capacity, 1, rng)}
            b = {r.resource for r in init_vehicle(Vehicle(1, Position(0, 0)), k, capacity, 1, rng)}
            hits += bool(a & b)
        expected = 1.0 - comb(capacity - k, k) / comb(capacity, k)
        self.assertAlmostEqual(hits / trials, expected, delta=0.03)


class TestHandlePacket(unittest.TestCase):
    def setUp(self):
        self.receiver = Vehicle(0, Position(0, 0))
        self.receiver.rcus = [RcuState(0, 0, slot=0, band=0, position=self.receiver.position)]

    def packet(self, sender, slot, priority=1, band=0):
        return ControlPacket(sender, ((0, slot, band, 0.0),), priority, 0.0)

    def test_empty_db_learns_sender(self):
        """An empty database holds the sender's allocation after one packet."""
        self.receiver.handle_packet(self.packet(4, slot=3), 0.0, 6, 1)
        entry = self.receiver.db.get(4, 0)
        self.assertIsNotNone(entry)
        self.assertEqual(entry.resource, (3, 0))

    def test_larger_group_wins(self):
        """A sender reporting a larger group pushes the receiver to the lowest free slot."""
        moved = self.receiver.handle_packet(self.packet(5, slot=0, priority=3), 0.0, 6, 1)
        self.assertTrue(moved)
        self.assertEqual(self.receiver.rcus[0].resource, (1, 0))

    def test_tie_goes_to_lower_id(self):
        """On equal priority the lower vehicle id keeps the slot."""
        self.assertFalse(self.receiver.handle_packet(self.packet(2, slot=0), 0.0, 6, 1))
        self.assertEqual(self.receiver.rcus[0].resource, (0, 0))

        loser = Vehicle(3, Position(0, 0))
        loser.rcus = [RcuState(0, 3, slot=0, band=0, position=loser.position)]
        self.assertTrue(loser.handle_packet(self.packet(1, slot=0), 0.0, 6, 1))
        self.assertNotEqual(loser.rcus[0].resource, (0, 0))

    def test_no_conflict_is_stable(self):
        """A packet for other slots causes no reallocation."""
        self.assertFalse(self.receiver.handle_packet(self.packet(9, slot=2, priority=10), 0.0, 6, 1))
        self.assertEqual(self.receiver.rcus[0].resource, (0, 0))

    def test_full_grid_flags_conflict(self):
        """Without a free slot the node keeps its slot and flags the conflict."""
        events = []
        moved = self.receiver.handle_packet(self.packet(5, slot=0, priority=3), 0.0, 1, 1,
                                            record=lambda *e: events.append(e))
        self.assertFalse(moved)
        self.assertTrue(self.receiver.persistent_conflict)
        self.assertEqual(self.receiver.rcus[0].resource, (0, 0))
        self.assertEqual(events[0][2], EventKind.CONFLICT)

    def test_relocation_avoids_own_rcus(self):
        """The lowest free slot skips slots held by the node's other RCUs."""
        self.receiver.rcus.append(RcuState(1, 0, slot=1, band=0, position=self.receiver.position))
        self.receiver.handle_packet(self.packet(5, slot=0, priority=3), 0.0, 6, 1)
        self.assertEqual(self.receiver.rcus[0].resource, (2, 0))


class TestControlChannel(unittest.TestCase):
    def setUp(self):
        self.env = simpy.Environment()
        self.events = []
        self.received = []
        self.nodes = [Vehicle(0, Position(0, 0)), Vehicle(1, Position(100, 0))]
        for v in self.nodes:
            v.rcus = [RcuState(0, v.vehicle_id, 0, 0, v.position)]
        self.channel = ControlChannel(self.env, self.nodes, on_deliver=lambda r, p, t: self.received.append((r.vehicle_id, p.vehicle_id)),
                                      record=lambda *e: self.events.append(e))

    def start_at(self, node, at, rng_seed=0):
        def process():
            yield self.env.timeout(at)
            yield from csma_broadcast(node, self.env, self.channel, 1e-3, np.random.default_rng(rng_seed),
                                      record=lambda *e: self.events.append(e))
        self.env.process(process())

    def test_single_node_transmits(self):
        """A lone node always finds the channel idle."""
        self.start_at(self.nodes[0], 0.0)
        self.env.run()
        kinds = [e[2] for e in self.events]
        self.assertIn(EventKind.TRANSMIT, kinds)
        self.assertNotIn(EventKind.SENSE_BUSY, kinds)

    def test_separate_times_both_delivered(self):
        """Non-overlapping broadcasts reach each other."""
        self.start_at(self.nodes[0], 0.0)
        self.start_at(self.nodes[1], 300e-6)
        self.env.run()
        self.assertEqual(sorted(self.received), [(0, 1), (1, 0)])
        self.assertEqual(self.channel.stats()['lost'], 0)

    def test_same_instant_collides(self):
        """Two nodes starting together in range destroy both packets."""
        self.start_at(self.nodes[0], 0.0)
        self.start_at(self.nodes[1], 0.0)
        self.env.run()
        self.assertEqual(self.received, [])
        self.assertEqual(self.channel.stats()['lost'], 2)
        self.assertEqual(sum(e[2] == EventKind.COLLISION for e in self.events), 2)

    def test_busy_channel_defers(self):
        """A node sensing an ongoing packet backs off and still gets through."""
        self.start_at(self.nodes[0], 0.0)
        self.start_at(self.nodes[1], 20e-6)
        self.env.run()
        self.assertIn(EventKind.SENSE_BUSY, [e[2] for e in self.events])
        self.assertEqual(sorted(self.received), [(0, 1), (1, 0)])

    def test_out_of_range_not_heard(self):
        """Nodes beyond the radio range neither hear nor block each other."""
        self.nodes[1].position = Position(1000, 0)
        self.start_at(self.nodes[0], 0.0)
        self.start_at(self.nodes[1], 0.0)
        self.env.run()
        self.assertEqual(self.received, [])
        self.assertEqual(self.channel.stats()['lost'], 0)


class TestSyncAndInterference(unittest.TestCase):
    def setUp(self):
        self.frame = default_frame()

    def rcus(self, slots, bands=None, spacing_m=10.0):
        """Radars in a row, neighbours facing each other"""
        bands = bands or [0] * len(slots)
        return [RcuState(0, i, s, b, Position(i * spacing_m, 0), facing_rad=np.pi * (i % 2))
                for i, (s, b) in enumerate(zip(slots, bands))]

    def test_zero_bound_is_identity(self):
        """With bound 0 every start equals its slot start."""
        states = self.rcus(range(6))
        starts = apply_sync_error(states, self.frame, np.random.default_rng(0), bound_s=0.0)
        np.testing.assert_allclose(starts, [self.frame.slot_start(s) for s in range(6)])

    def test_guard_absorbs_sync_error(self):
        """Distinct offsets never collide while the error stays within the guard."""
        states = self.rcus(range(6))
        rng = np.random.default_rng(3)
        for _ in range(200):
            apply_sync_error(states, self.frame, rng)
            self.assertEqual(count_overlaps(states, self.frame), 0)

    def test_excess_error_creates_overlaps(self):
        """An error bound beyond the guard produces collisions."""
        states = self.rcus(range(6))
        rng = np.random.default_rng(3)
        total = 0
        for _ in range(200):
            apply_sync_error(states, self.frame, rng, bound_s=3e-6)
            total += count_overlaps(states, self.frame)
        self.assertGreater(total, 0)

    def test_single_radar_sees_nothing(self):
        """One radar has no interferer."""
        states = self.rcus([0])
        apply_sync_error(states, self.frame, np.random.default_rng(0))
        self.assertEqual(measure_interference(states, self.frame), 0.0)

    def test_shared_resource_interferes(self):
        """Two radars on the same slot and band interfere."""
        states = self.rcus([0, 0])
        apply_sync_error(states, self.frame, None, bound_s=0.0)
        self.assertGreater(measure_interference(states, self.frame), 0.0)

    def test_different_band_or_view_is_clean(self):
        """Different sub-bands, or radars facing away, do not interfere."""
        frame = default_frame(num_bands=2)
        states = self.rcus([0, 0], bands=[0, 1])
        apply_sync_error(states, frame, None, bound_s=0.0)
        self.assertEqual(measure_interference(states, frame), 0.0)

        states = self.rcus([0, 0])
        for s in states:
            s.facing_rad, s.fov_rad = np.pi, np.deg2rad(30)
        apply_sync_error(states, self.frame, None, bound_s=0.0)
        self.assertEqual(measure_interference(states, self.frame), 0.0)
        self.assertGreater(measure_interference(states, self.frame, all_in_view=True), 0.0)


class TestCoordinationRun(unittest.TestCase):
    def setUp(self):
        self.frame = default_frame()
        # every pair in view: the densest case the protocol has to resolve
        self.in_view = MacSettings(all_in_view=True)

    def test_single_radar_zero(self):
        """One radar gives identically zero trajectories."""
        result = run(1, 3, self.frame, master_seed=0)
        np.testing.assert_array_equal(result.f_coordinated, 0.0)
        np.testing.assert_array_equal(result.f_uncoordinated, 0.0)

    def test_converges_within_capacity(self):
        """Up to capacity, coordination drives interference to zero and keeps it there."""
        for seed in range(5):
            result = run(self.frame.capacity, 8, self.frame, master_seed=seed, settings=self.in_view)
            np.testing.assert_array_equal(result.f_coordinated[-4:], 0.0)

    def test_plateau_above_capacity(self):
        """More radars than resources leaves residual interference."""
        tails = [run(16, 4, self.frame, master_seed=seed, settings=self.in_view).f_coordinated[-1]
                 for seed in range(3)]
        self.assertGreater(np.mean(tails), 0.0)

    def test_coordination_beats_baseline(self):
        """Coordination lowers the time-averaged interference for every radar count."""
        for radars in (2, 4, 8, 16, 32):
            seeds = 30 if radars == 2 else 6
            coord, unc = [], []
            for seed in range(seeds):
                result = run(radars, 5, self.frame, master_seed=seed, settings=self.in_view)
                coord.append(result.f_coordinated.mean())
                unc.append(result.f_uncoordinated.mean())
                if radars == 2:
                    self.assertLessEqual(coord[-1], unc[-1] + 1e-12)
            self.assertLess(np.mean(coord), np.mean(unc), msg=f"{radars} radars")

    def test_deterministic_trace(self):
        """Same seed and configuration reproduce the event trace exactly."""
        a = run(8, 3, self.frame, master_seed=42)
        b = run(8, 3, self.frame, master_seed=42)
        self.assertEqual([e.line() for e in a.trace], [e.line() for e in b.trace])
        np.testing.assert_array_equal(a.f_coordinated, b.f_coordinated)

    def test_rcus_of_a_vehicle_stay_disjoint(self):
        """Vehicles with two RCUs never stack them on one resource."""
        frame = default_frame(num_bands=2, interest_bandwidth_hz=25e6)
        sim = MacSimulator(frame, 6, MacSettings(rcus_per_vehicle=2), master_seed=5)
        sim.run(6)
        for v in sim.vehicles:
            self.assertEqual(len({r.resource for r in v.rcus}), len(v.rcus))

    def test_radars_face_their_lane_direction(self):
        """Front radars face the travel direction of their lane, rear radars the other way."""
        positions = [Position(0, 0), Position(30, 3.5), Position(60, 7.0), Position(90, 10.5)]
        sim = MacSimulator(self.frame, 4, MacSettings(rcus_per_vehicle=2), positions=positions)
        fronts = [v.rcus[0].facing_rad for v in sim.vehicles]
        np.testing.assert_allclose(fronts, [0.0, 0.0, np.pi, np.pi])
        for v in sim.vehicles:
            self.assertAlmostEqual(v.rcus[1].facing_rad - v.rcus[0].facing_rad, np.pi)

    def test_hidden_pairs_do_not_count(self):
        """A default run leaves radars that cannot see each other out of the measured interference."""
        frame = default_frame(sync_error_bound_s=0.0)

        def uncoordinated(positions, settings):
            sim = MacSimulator(frame, 2, settings, master_seed=1, positions=positions)
            for rcu in sim.baseline:
                rcu.slot, rcu.band = 0, 0
            return sim.run(1).f_uncoordinated[0]

        # same lane, both looking towards +x: the front car never sees the one behind
        convoy = [Position(0, 0), Position(40, 0)]
        # the car in lane 3 travels towards -x and looks back at the first one
        oncoming = [Position(0, 0), Position(40, 10.5)]
        self.assertEqual(uncoordinated(convoy, MacSettings()), 0.0)
        self.assertGreater(uncoordinated(convoy, self.in_view), 0.0)
        self.assertGreater(uncoordinated(oncoming, MacSettings()), 0.0)

if __name__ == '__main__':
    unittest.main()
