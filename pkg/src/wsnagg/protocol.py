"""Round engine: sensing, packet protection, validation at the cluster
agent, homomorphic aggregation, delivery to the base station, and
cache-based recovery of lost readings.

Wire format of a member packet (all integers 8-byte big-endian unsigned,
identity points as all-ones words)::

    sender | round | C.x | C.y | CT.x | CT.y | timestamp     56 bytes, header
    digest                                                  32 bytes, SHA-256 of C||CT
    mac                                                     32 bytes, over header||digest
    r.x | r.y | ct1 | ct2                                   32 bytes, identity signature

The MAC and the identity signature both cover ``header || digest``.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import seeding
from .config import SimConfig
from .crypto import (
    Ciphertext,
    IdentSignature,
    NodeCredentials,
    ZERO_CIPHERTEXT,
    ct_sum,
    decode_point,
    decrypt,
    encode_point,
    encrypt,
    hash_digest,
    init_node,
    keygen,
    mac_sign,
    mac_verify,
    sign_identity,
    verify_identity,
)
from .curve import CurveParams, Point, is_on_curve
from .errors import (
    CorruptCiphertextError,
    DeadClusterError,
    InvalidPointError,
    NetworkDeadError,
    ReportRejectedError,
    WsnAggError,
)
from .network import (
    AGENT,
    MEMBER,
    Cluster,
    Topology,
    aggregation_energy,
    build_network,
    cluster_nodes,
    deduct_energy,
    distance,
    rx_energy,
    select_cluster_agent,
    tx_energy,
)

REJECT_HASH = "hash"
REJECT_MAC = "mac"
REJECT_SIGNATURE = "signature"
REJECT_STALE = "stale-timestamp"

_U64 = struct.Struct(">Q")
_HEADER = struct.Struct(">QQ16s16sQ")

HEADER_SIZE = _HEADER.size
DIGEST_OFFSET = HEADER_SIZE
MAC_OFFSET = DIGEST_OFFSET + 32
SIG_OFFSET = MAC_OFFSET + 32
PACKET_SIZE = SIG_OFFSET + 32
PACKET_BITS = PACKET_SIZE * 8
CIPHERTEXT_SLICE = slice(16, 48)


def ciphertext_bytes(c: Ciphertext) -> bytes:
    return encode_point(c.C) + encode_point(c.CT)


def _sig_bytes(sig: IdentSignature) -> bytes:
    return encode_point(sig.r) + _U64.pack(sig.ct1) + _U64.pack(sig.ct2)


def _sig_from(data: bytes) -> IdentSignature:
    return IdentSignature(decode_point(data[:16]), _U64.unpack(data[16:24])[0], _U64.unpack(data[24:32])[0])


@dataclass(frozen=True)
class DataPacket:
    sender: int
    round: int
    ciphertext: Ciphertext
    timestamp: int
    digest: bytes
    mac: bytes
    signature: IdentSignature

    def header(self) -> bytes:
        return _HEADER.pack(
            self.sender,
            self.round,
            encode_point(self.ciphertext.C),
            encode_point(self.ciphertext.CT),
            self.timestamp,
        )

    def signed_region(self) -> bytes:
        return self.header() + self.digest

    def to_bytes(self) -> bytes:
        return self.signed_region() + self.mac + _sig_bytes(self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DataPacket":
        if len(data) != PACKET_SIZE:
            raise ValueError(f"packet must be {PACKET_SIZE} bytes, got {len(data)}")
        sender, rnd, c, ct, ts = _HEADER.unpack(data[:HEADER_SIZE])
        return cls(
            sender=sender,
            round=rnd,
            ciphertext=Ciphertext(decode_point(c), decode_point(ct)),
            timestamp=ts,
            digest=data[DIGEST_OFFSET:MAC_OFFSET],
            mac=data[MAC_OFFSET:SIG_OFFSET],
            signature=_sig_from(data[SIG_OFFSET:]),
        )


@dataclass(frozen=True)
class AggregateReport:
    cluster_id: int
    round: int
    agent_id: int
    aggregate: Ciphertext
    contributor_ids: tuple[int, ...]
    # (node id, ciphertext) for every contributor when the cache feed is per-node
    per_node: tuple[tuple[int, Ciphertext], ...]
    mac: bytes
    signature: IdentSignature

    def body(self) -> bytes:
        return report_body(
            self.cluster_id, self.round, self.agent_id, self.aggregate, self.contributor_ids, self.per_node
        )

    def to_bytes(self) -> bytes:
        return self.body() + self.mac + _sig_bytes(self.signature)


def report_body(cluster_id, rnd, agent_id, aggregate, contributor_ids, per_node) -> bytes:
    parts = [_U64.pack(cluster_id), _U64.pack(rnd), _U64.pack(agent_id), ciphertext_bytes(aggregate)]
    parts.append(_U64.pack(len(contributor_ids)))
    parts.extend(_U64.pack(i) for i in contributor_ids)
    parts.append(_U64.pack(len(per_node)))
    for i, c in per_node:
        parts.append(_U64.pack(i) + ciphertext_bytes(c))
    return b"".join(parts)


def sense_reading(seed: int, node_id: int, rnd: int, max_reading: int) -> int:
    rng = seeding.stream(seed, seeding.SENSE, node_id, rnd)
    return int(rng.integers(0, max_reading + 1))


def make_packet(
    curve: CurveParams,
    creds: NodeCredentials,
    rnd: int,
    reading: int,
    bs_pk: Point,
    k: int,
    nonce: int,
    timestamp: Optional[int] = None,
) -> DataPacket:
    """Encrypt ``reading`` under the BS key and attach digest, MAC and signature."""
    ct = encrypt(curve, bs_pk, reading, k)
    digest = hash_digest(ciphertext_bytes(ct))
    ts = rnd if timestamp is None else timestamp
    unsigned = DataPacket(creds.node_id, rnd, ct, ts, digest, b"", IdentSignature(Point(-1, -1), 0, 0))
    region = unsigned.signed_region()
    mac = mac_sign(creds.mac_key, region)
    sig = sign_identity(curve, creds.s1, creds.pk, nonce, region)
    return DataPacket(creds.node_id, rnd, ct, ts, digest, mac, sig)


def sense_and_encrypt(
    curve: CurveParams,
    creds: NodeCredentials,
    rnd: int,
    bs_pk: Point,
    seed: int,
    max_reading: int,
) -> tuple[DataPacket, int]:
    """Sense this round's reading and protect it.  Returns (packet, reading)."""
    reading = sense_reading(seed, creds.node_id, rnd, max_reading)
    k = seeding.random_scalar(seeding.stream(seed, seeding.EPHEMERAL, creds.node_id, rnd), curve.n)
    nonce = seeding.random_scalar(seeding.stream(seed, seeding.SIGN, creds.node_id, rnd), curve.n)
    return make_packet(curve, creds, rnd, reading, bs_pk, k, nonce), reading


def ca_validate(
    curve: CurveParams,
    packet: DataPacket,
    expected_round: int,
    mac_key: Optional[bytes],
    sender_pk: Optional[Point],
) -> Optional[str]:
    """Check digest, MAC, identity signature and freshness, in that order.

    Returns None when the packet is accepted, else the first failing check.
    An unknown sender (no key material) fails as ``mac``.
    """
    c = packet.ciphertext
    if hash_digest(ciphertext_bytes(c)) != packet.digest:
        return REJECT_HASH
    if not (is_on_curve(curve, c.C) and is_on_curve(curve, c.CT)):
        return REJECT_HASH
    region = packet.signed_region()
    if not mac_key or not mac_verify(mac_key, region, packet.mac):
        return REJECT_MAC
    if sender_pk is None or not verify_identity(curve, sender_pk, packet.signature, region):
        return REJECT_SIGNATURE
    if packet.round != expected_round or packet.timestamp != expected_round:
        return REJECT_STALE
    return None


def ca_aggregate(
    curve: CurveParams,
    validated: Sequence[DataPacket],
    cluster_id: int,
    rnd: int,
    agent_creds: NodeCredentials,
    agent_mac_key: bytes,
    nonce: int,
    per_node: bool = True,
) -> AggregateReport:
    """Sum validated ciphertexts; MAC and sign the report as the agent."""
    ordered = sorted(validated, key=lambda p: p.sender)
    aggregate = ct_sum(curve, (p.ciphertext for p in ordered))
    ids = tuple(p.sender for p in ordered)
    feed = tuple((p.sender, p.ciphertext) for p in ordered) if per_node else ()
    body = report_body(cluster_id, rnd, agent_creds.node_id, aggregate, ids, feed)
    mac = mac_sign(agent_mac_key, body)
    sig = sign_identity(curve, agent_creds.s1, agent_creds.pk, nonce, body)
    return AggregateReport(cluster_id, rnd, agent_creds.node_id, aggregate, ids, feed, mac, sig)


def bs_receive(
    curve: CurveParams,
    report: AggregateReport,
    sk: int,
    agent_pk: Point,
    agent_mac_key: bytes,
    max_t: int,
) -> int:
    """Authenticate a report and decrypt its aggregate.

    Raises ReportRejectedError on a bad MAC, signature, or a per-node feed
    that does not sum to the aggregate; CorruptCiphertextError when the
    aggregate falls outside [0, max_t].
    """
    body = report.body()
    if not mac_verify(agent_mac_key, body, report.mac):
        raise ReportRejectedError(REJECT_MAC, report.cluster_id)
    if not verify_identity(curve, agent_pk, report.signature, body):
        raise ReportRejectedError(REJECT_SIGNATURE, report.cluster_id)
    if report.per_node:
        if tuple(i for i, _ in report.per_node) != report.contributor_ids:
            raise ReportRejectedError("inconsistent", report.cluster_id)
        try:
            if ct_sum(curve, (c for _, c in report.per_node)) != report.aggregate:
                raise ReportRejectedError("inconsistent", report.cluster_id)
        except InvalidPointError:
            raise ReportRejectedError("inconsistent", report.cluster_id) from None
    try:
        return decrypt(curve, sk, report.aggregate, max_t)
    except InvalidPointError as exc:
        raise CorruptCiphertextError(str(exc)) from None


class BsCache:
    """Validated readings per key (node id, or ``("cluster", id)``), kept for
    ``depth`` rounds after the round they were sensed in."""

    def __init__(self, depth: int):
        self.depth = depth
        self._entries: dict = {}

    def store(self, key, rnd: int, value: int) -> None:
        self._entries.setdefault(key, {})[rnd] = value

    def lookup(self, key, rnd: int) -> Optional[tuple[int, int]]:
        """Most recent (round, value) older than ``rnd`` and at most ``depth`` rounds old."""
        rounds = self._entries.get(key)
        if not rounds:
            return None
        usable = [r for r in rounds if r < rnd and rnd - r <= self.depth]
        if not usable:
            return None
        r = max(usable)
        return r, rounds[r]

    def evict(self, current_round: int) -> None:
        for key in list(self._entries):
            rounds = self._entries[key]
            for r in [r for r in rounds if current_round - r >= self.depth]:
                del rounds[r]
            if not rounds:
                del self._entries[key]

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())


def bs_recover(
    expected: Iterable[int],
    received: Iterable[int],
    cache: BsCache,
    rnd: int,
) -> tuple[dict[int, tuple[int, int]], list[int]]:
    """Fill in expected-but-absent readings from the cache.

    Returns ({node: (reading, source_round)}, missing-permanently ids).
    """
    got = set(received)
    recovered, missing = {}, []
    for node in sorted(set(expected) - got):
        hit = cache.lookup(node, rnd)
        if hit is None:
            missing.append(node)
        else:
            recovered[node] = (hit[1], hit[0])
    return recovered, missing


def cluster_centroid(cluster: Cluster, topo: Topology) -> tuple[float, float]:
    xy = np.array([topo.nodes[m].position for m in cluster.members])
    return float(xy[:, 0].mean()), float(xy[:, 1].mean())


def relay_fallback(cluster: Cluster, clusters: Sequence[Cluster], topo: Topology) -> int:
    """Nearest alive agent of another cluster, measured from this cluster's centroid."""
    centre = cluster_centroid(cluster, topo)
    best = None
    for other in clusters:
        if other.cluster_id == cluster.cluster_id or other.agent is None:
            continue
        node = topo.nodes[other.agent]
        if not node.alive:
            continue
        key = (distance(centre, node.position), node.id)
        if best is None or key < best:
            best = key
    if best is None:
        raise NetworkDeadError("no alive cluster agent left to relay through")
    return best[1]


def tamper_bytes(data: bytes, kind: str, rng: np.random.Generator, n: int) -> bytes:
    buf = bytearray(data)
    if kind == "flip-ciphertext":
        bit = int(rng.integers(CIPHERTEXT_SLICE.start * 8, CIPHERTEXT_SLICE.stop * 8))
        buf[bit // 8] ^= 1 << (bit % 8)
    elif kind == "flip-mac":
        bit = int(rng.integers(MAC_OFFSET * 8, SIG_OFFSET * 8))
        buf[bit // 8] ^= 1 << (bit % 8)
    elif kind == "forge-signature":
        off = SIG_OFFSET + 24
        ct2 = _U64.unpack(bytes(buf[off : off + 8]))[0]
        buf[off : off + 8] = _U64.pack((ct2 + 1) % n)
    else:
        raise ValueError(f"unknown tamper kind {kind!r}")
    return bytes(buf)


@dataclass
class ClusterOutcome:
    cluster_id: int
    agent: Optional[int]
    relay: Optional[int]
    sensed: list[int]
    accepted: list[int]
    rejected: dict[int, str]
    dropped: list[int]
    tampered: list[int]
    report: str
    aggregate: Optional[int]
    expected_sum: Optional[int]


@dataclass
class RoundResult:
    round: int
    clusters: list[ClusterOutcome]
    recovered: dict[int, tuple[int, int]]
    missing: list[int]
    energy_spent: dict[int, float]
    radio_energy: float
    residual_energy: float
    bs_messages: int
    ground_truth_ok: bool
    # cluster-granularity recovery when the cache feed is aggregate-only
    recovered_clusters: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def accepted(self) -> list[int]:
        return sorted(i for c in self.clusters for i in c.accepted)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


@dataclass
class EnergyEvent:
    round: int
    node: int
    kind: str
    joules: float


class Simulation:
    """Owns all mutable state of one run.  Single-threaded by contract."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.curve = cfg.curve_params
        self.energy_params = cfg.energy
        self.topo = build_network(cfg)
        self.bs_keys = keygen(self.curve, cfg.seed)
        master = seeding.random_scalar(seeding.stream(cfg.seed, seeding.MASTER), self.curve.n)
        self.creds = {n.id: init_node(self.curve, n.id, master, cfg.seed) for n in self.topo.nodes}
        for c in self.creds.values():
            # registration: pre-stacked credentials must verify against PK
            if not verify_identity(self.curve, c.pk, c.signature):
                raise WsnAggError(f"node {c.node_id} failed credential registration")
        self.clusters = cluster_nodes(self.topo, cfg.cluster_count)
        self.cache = BsCache(cfg.cache_rounds)
        self.faults = cfg.faults
        self.fault_rng = seeding.stream(self.faults.seed, seeding.FAULT)
        self.energy_log: list[EnergyEvent] = []
        self.truth: dict[tuple[int, int], int] = {}
        # scripted losses on top of the random fault model: {(round, node)}
        self.forced_drops: set[tuple[int, int]] = set()
        self._recluster = False

    # energy -----------------------------------------------------------------

    def _charge(self, rnd, node_id, kind, amount, spent) -> bool:
        """Charge a node; False if it could not pay in full (and so died)."""
        node = self.topo.nodes[node_id]
        if not node.alive:
            return False
        drawn = deduct_energy(node, amount)
        if drawn > 0:
            self.energy_log.append(EnergyEvent(rnd, node_id, kind, drawn))
            spent.append((node_id, drawn))
        return drawn == amount and (node.alive or amount == 0)

    def _agent_budget(self, cluster: Cluster, agent: int) -> float:
        p = self.energy_params
        n_alive = sum(1 for m in cluster.members if self.topo.nodes[m].alive)
        report_bits = (8 * 8 + 32 + 8 * n_alive + 40 * n_alive + 64) * 8
        return (
            rx_energy(p, PACKET_BITS) * (n_alive - 1)
            + aggregation_energy(p, PACKET_BITS, n_alive)
            + tx_energy(p, report_bits, self.topo.dist_to_bs(agent))
        )

    # phases -----------------------------------------------------------------

    def _maybe_recluster(self) -> None:
        alive = self.topo.alive_ids()
        if not alive:
            raise NetworkDeadError("every sensor node is dead")
        dead_cluster = any(not any(self.topo.nodes[m].alive for m in c.members) for c in self.clusters)
        if self._recluster or dead_cluster:
            for n in self.topo.nodes:
                n.cluster = None
            self.clusters = cluster_nodes(self.topo, min(self.cfg.cluster_count, len(alive)))
            self._recluster = False

    def _elect(self) -> dict[int, int]:
        """Elect agents; returns cluster id -> node the members send to."""
        for n in self.topo.nodes:
            if n.alive:
                n.role = MEMBER
        live = []
        for c in self.clusters:
            try:
                c.agent = select_cluster_agent(c, self.topo, self.cfg.weights)
            except DeadClusterError:
                c.agent = None
                continue
            self.topo.nodes[c.agent].role = AGENT
            live.append(c)
        healthy = [c for c in live if self.topo.nodes[c.agent].energy >= self._agent_budget(c, c.agent)]
        dest = {}
        for c in live:
            dest[c.cluster_id] = c.agent
            if c in healthy:
                continue
            try:
                dest[c.cluster_id] = relay_fallback(c, healthy, self.topo)
            except NetworkDeadError:
                pass  # nobody to relay through: the weak agent carries on
        return dest

    def run_round(self, rnd: int) -> RoundResult:
        cfg, curve, topo = self.cfg, self.curve, self.topo
        ep = self.energy_params
        self._maybe_recluster()
        dest = self._elect()
        spent: list[tuple[int, float]] = []
        outcomes = []
        reports = []  # (cluster, report, receiver)
        expected_all = []
        for c in self.clusters:
            if c.cluster_id not in dest:
                continue
            receiver = dest[c.cluster_id]
            relay = receiver if receiver != c.agent else None
            sensed = [m for m in c.members if topo.nodes[m].alive]
            expected_all.extend(sensed)
            accepted, rejected, dropped, tampered = [], {}, [], []
            validated, seen = [], set()
            for m in sensed:
                packet, reading = sense_and_encrypt(curve, self.creds[m], rnd, self.bs_keys.public, cfg.seed, cfg.max_reading)
                topo.nodes[m].seq += 1
                self.truth[(rnd, m)] = reading
                wire = packet.to_bytes()
                # both draws always happen so the fault stream stays aligned
                u_drop, u_tamper = self.fault_rng.random(2)
                lost = u_drop < self.faults.drop_prob or (rnd, m) in self.forced_drops
                if not lost and u_tamper < self.faults.tamper_prob:
                    wire = tamper_bytes(wire, self.faults.tamper_kind, self.fault_rng, curve.n)
                    tampered.append(m)
                if m != receiver:
                    d = distance(topo.nodes[m].position, topo.nodes[receiver].position)
                    if not self._charge(rnd, m, "tx", tx_energy(ep, PACKET_BITS, d), spent):
                        lost = True
                    if not lost and not self._charge(rnd, receiver, "rx", rx_energy(ep, PACKET_BITS), spent):
                        lost = True
                if lost or not topo.nodes[receiver].alive:
                    dropped.append(m)
                    continue
                pkt = DataPacket.from_bytes(wire)
                creds = self.creds.get(pkt.sender)
                member_ok = pkt.sender in c.members and creds is not None
                reason = ca_validate(
                    curve,
                    pkt,
                    rnd,
                    creds.mac_key if member_ok else None,
                    creds.pk if member_ok else None,
                )
                if reason is None and pkt.sender in seen:
                    reason = REJECT_MAC  # duplicate within the round counts as replay
                if reason is None:
                    seen.add(pkt.sender)
                    validated.append(pkt)
                    accepted.append(pkt.sender)
                else:
                    rejected[m] = reason
            report_status, report = "lost", None
            if topo.nodes[receiver].alive:
                self._charge(rnd, receiver, "aggregate", aggregation_energy(ep, PACKET_BITS, len(validated)), spent)
            if topo.nodes[receiver].alive:
                nonce = seeding.random_scalar(
                    seeding.stream(cfg.seed, seeding.AGENT_SIGN, receiver, rnd, c.cluster_id), curve.n
                )
                rcreds = self.creds[receiver]
                report = ca_aggregate(
                    curve, validated, c.cluster_id, rnd, rcreds, rcreds.mac_key, nonce, cfg.cache_feed == "per-node"
                )
                bits = len(report.to_bytes()) * 8
                if self._charge(rnd, receiver, "tx", tx_energy(ep, bits, topo.dist_to_bs(receiver)), spent):
                    reports.append((c, report, receiver))
                    report_status = "sent"
                else:
                    report = None
            if c.agent is not None and not topo.nodes[c.agent].alive:
                self._recluster = True
            if not topo.nodes[receiver].alive:
                self._recluster = True
            outcomes.append(
                ClusterOutcome(
                    cluster_id=c.cluster_id,
                    agent=c.agent,
                    relay=relay,
                    sensed=sensed,
                    accepted=sorted(accepted),
                    rejected=rejected,
                    dropped=dropped,
                    tampered=tampered,
                    report=report_status,
                    aggregate=None,
                    expected_sum=None,
                )
            )

        # base station ---------------------------------------------------------
        by_id = {o.cluster_id: o for o in outcomes}
        received, truth_ok = [], True
        recovered_clusters = {}
        for c, report, receiver in reports:
            o = by_id[c.cluster_id]
            max_t = len(report.contributor_ids) * cfg.max_reading
            try:
                value = bs_receive(
                    curve, report, self.bs_keys.private, self.creds[receiver].pk, self.creds[receiver].mac_key, max_t
                )
            except ReportRejectedError as exc:
                o.report = f"rejected:{exc.reason}"
                continue
            except CorruptCiphertextError:
                o.report = "corrupt"
                continue
            o.report = "ok"
            o.aggregate = value
            o.expected_sum = sum(self.truth[(rnd, i)] for i in report.contributor_ids)
            truth_ok = truth_ok and value == o.expected_sum
            received.extend(report.contributor_ids)
            if report.per_node:
                for i, ct in report.per_node:
                    try:
                        self.cache.store(i, rnd, decrypt(curve, self.bs_keys.private, ct, cfg.max_reading))
                    except CorruptCiphertextError:
                        pass  # never cache what does not decrypt into range
            else:
                self.cache.store(("cluster", c.cluster_id), rnd, value)
        bs_messages = len(reports)

        if cfg.cache_feed == "per-node":
            recovered, missing = bs_recover(expected_all, received, self.cache, rnd)
        else:
            recovered = {}
            missing = sorted(set(expected_all) - set(received))
            for o in outcomes:
                if o.report != "ok":
                    hit = self.cache.lookup(("cluster", o.cluster_id), rnd)
                    if hit is not None:
                        recovered_clusters[o.cluster_id] = (hit[1], hit[0])
        self.cache.evict(rnd)

        per_node: dict[int, list[float]] = {}
        for node, j in spent:
            per_node.setdefault(node, []).append(j)
        energy_spent = {k: math.fsum(v) for k, v in sorted(per_node.items())}
        return RoundResult(
            round=rnd,
            clusters=outcomes,
            recovered=recovered,
            missing=missing,
            energy_spent=energy_spent,
            radio_energy=math.fsum(j for _, j in spent),
            residual_energy=topo.total_energy(),
            bs_messages=bs_messages,
            ground_truth_ok=truth_ok,
            recovered_clusters=recovered_clusters,
        )


def run_simulation(cfg: SimConfig, sim: Optional[Simulation] = None) -> list[RoundResult]:
    """Run ``cfg.rounds`` rounds, stopping early if the network dies."""
    sim = sim or Simulation(cfg)
    results = []
    for rnd in range(cfg.rounds):
        try:
            results.append(sim.run_round(rnd))
        except NetworkDeadError:
            break
    return results
