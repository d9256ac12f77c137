"""Secure data aggregation for clustered wireless sensor networks.

EC-ElGamal aggregation with digest / MAC / identity-signature validation at
cluster agents, radio-energy accounting, and cache-based recovery at the
base station.
"""
__version__ = "0.1.0"

from ._accel import BACKEND, NUMBA_ENABLED
from .config import EnergyModelParams, FaultModel, SimConfig, load_config, parse_config
from .curve import IDENTITY, CurveParams, Point, get_curve, map_to_point, point_add, scalar_mul, unmap_point
from .crypto import (
    Ciphertext,
    IdentSignature,
    KeyPair,
    NodeCredentials,
    ct_add,
    decrypt,
    encrypt,
    hash_digest,
    init_node,
    keygen,
    mac_sign,
    mac_verify,
    verify_identity,
)
from .protocol import RoundResult, Simulation, run_simulation
