from enum import Enum

class CoherenceClass(Enum):
    """How the dechirped interference energy is distributed in the delay-Doppler map"""
    COHERENT = 0            # Same chirp parameters: a ghost target
    PARTIALLY_COHERENT = 1  # Slight mismatch or phase noise: local smearing
    INCOHERENT = 2          # Strong slope mismatch: raised noise floor

class ExperimentKind(Enum):
    """Experiment pipelines the runner can dispatch to"""
    SINGLE_LINK = "single_link"  # Range profiles versus interferer slope ratio
    PHASE_NOISE = "phase_noise"  # Phase-noise smearing of target and ghost
    HIGHWAY = "highway"          # SINR versus mean vehicle spacing
    SLOWCHIRP = "slowchirp"      # Quasi-orthogonal long chirps
    COORDMAC = "coordmac"        # Coordinated slot assignment
    OFDM_COUNT = "ofdm_count"    # Vehicles per time-frequency budget


class OfdmScheme(Enum):
    """RadCom waveform families compared in the vehicle-count study"""
    STEPPED = "stepped"        # M hops of an ADC-limited band
    NARROWBAND = "narrowband"  # One ADC-limited band, M = 1
    WIDEBAND = "wideband"      # Whole band at once

class HopPattern(Enum):
    """Carrier order across consecutive OFDM frames"""
    LINEAR = "linear"
    RANDOM = "random"

class TravelDirection(Enum):
    """Direction of a lane relative to the victim vehicle"""
    SAME = 0      # Passing lanes
    ONCOMING = 1  # Opposite carriageway

class EventKind(Enum):
    """Kinds of control-channel events recorded in the MAC trace"""
    SENSE_BUSY = "sense_busy"
    TRANSMIT = "transmit"
    DELIVER = "deliver"
    COLLISION = "collision"
    REALLOCATE = "reallocate"
    CONFLICT = "conflict"
