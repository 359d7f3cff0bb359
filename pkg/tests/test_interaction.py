import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import all_pair_cosines, cosine
from portids.ingest import PROTOCOLS, CountBin, Direction, Node, Protocol
from portids.interaction import (
    GraphIdentityError,
    ProfileTracker,
    ProtocolProfile,
    build_graph,
    profile_from_counts,
    protocol_profile,
    strength,
)

IN, OUT = Direction.INCOMING, Direction.OUTGOING
TCP, UDP, ICMP = Protocol.TCP, Protocol.UDP, Protocol.ICMP


def prof(port, **mix):
    return ProtocolProfile(port, IN, {Protocol(k): v for k, v in mix.items()})


class TestProfile:
    def test_proportions(self):
        bins = [CountBin(0, 80, IN, 20, {TCP: 20}), CountBin(1000, 80, IN, 20, {TCP: 10, UDP: 10})]
        assert protocol_profile(bins).proportions == {TCP: 0.75, UDP: 0.25}

    def test_single_protocol(self):
        assert protocol_profile([CountBin(0, 1, IN, 5, {ICMP: 5})]).proportions == {ICMP: 1.0}

    def test_empty(self):
        assert protocol_profile([]).empty
        assert protocol_profile([CountBin(0, 1, IN, 0, {})]).empty

    def test_mixed_nodes_rejected(self):
        with pytest.raises(GraphIdentityError):
            protocol_profile([CountBin(0, 1, IN, 1, {TCP: 1}), CountBin(0, 2, IN, 1, {TCP: 1})])


class TestStrength:
    def test_identical(self):
        assert strength(prof(1, tcp=0.3, udp=0.7), prof(2, tcp=0.3, udp=0.7)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert strength(prof(1, tcp=1.0), prof(2, udp=1.0)) == 0.0

    def test_hand_computed(self):
        # (0.5*1) / (sqrt(0.5) * 1) = 1/sqrt(2)
        assert strength(prof(1, tcp=0.5, udp=0.5), prof(2, tcp=1.0)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_empty_is_zero(self):
        assert strength(prof(1), prof(2, tcp=1.0)) == 0.0


class TestGraph:
    def test_single_node(self):
        g = build_graph([prof(1, tcp=1.0)])
        assert len(g.nodes) == 1 and len(g.edges) == 0

    def test_three_nodes(self):
        g = build_graph([prof(1, tcp=1.0), prof(2, udp=1.0), prof(3, tcp=1.0)])
        assert len(g.edges) == 3

    def test_duplicate(self):
        with pytest.raises(GraphIdentityError):
            build_graph([prof(1, tcp=1.0), prof(1, udp=1.0)])

    def test_seeded_against_pairwise_oracle(self):
        rng = random.Random(5)
        profiles = []
        for port in range(12):
            counts = {p: rng.randrange(0, 100) for p in PROTOCOLS}
            profiles.append(profile_from_counts(port, IN, counts))
        g = build_graph(profiles)
        assert len(g.edges) == 66
        vectors = [[p.proportions.get(k, 0.0) for k in PROTOCOLS] for p in profiles]
        for (i, j), expected in all_pair_cosines(vectors).items():
            assert g.strength(profiles[i].node, profiles[j].node) == pytest.approx(expected, abs=1e-12)

    def test_dump_records(self):
        g = build_graph([ProtocolProfile(80, IN, {TCP: 1.0}), ProtocolProfile(80, OUT, {TCP: 1.0})])
        assert g.records() == [{"port_a": 80, "dir_a": "in", "port_b": 80, "dir_b": "out", "strength": 1.0}]


class TestTracker:
    def test_keeps_only_recent_bins(self):
        tr = ProfileTracker(window=2)
        tr.push(CountBin(0, 1, IN, 5, {UDP: 5}))
        tr.push(CountBin(1000, 1, IN, 1, {TCP: 1}))
        tr.push(CountBin(2000, 1, IN, 1, {TCP: 1}))
        assert tr.profile(Node(1, IN)).proportions == {TCP: 1.0}

    def test_matches_batch_profile(self):
        rng = random.Random(2)
        bins = []
        for t in range(200):
            pc = {p: rng.randrange(0, 4) for p in PROTOCOLS}
            pc = {p: c for p, c in pc.items() if c}
            bins.append(CountBin(t * 1000, 9, OUT, sum(pc.values()), pc))
        tr = ProfileTracker(window=60)
        for b in bins:
            tr.push(b)
        assert tr.profile(Node(9, OUT)) == protocol_profile(bins[-60:])


count_maps = st.fixed_dictionaries({p: st.integers(0, 1000) for p in PROTOCOLS})


@settings(max_examples=300, deadline=None)
@given(count_maps, count_maps, st.integers(1, 1000))
def test_strength_properties(ca, cb, k):
    a = profile_from_counts(1, IN, ca)
    b = profile_from_counts(2, IN, cb)
    s = strength(a, b)
    assert 0.0 <= s <= 1.0
    assert s == strength(b, a)
    if not a.empty:
        assert strength(a, a) == pytest.approx(1.0, abs=1e-12)
        assert sum(a.proportions.values()) == pytest.approx(1.0, abs=1e-9)
    scaled = profile_from_counts(1, IN, {p: c * k for p, c in ca.items()})
    assert strength(scaled, b) == pytest.approx(s, abs=1e-12)
    u = [a.proportions.get(p, 0.0) for p in PROTOCOLS]
    v = [b.proportions.get(p, 0.0) for p in PROTOCOLS]
    assert s == pytest.approx(cosine(u, v), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(count_maps, min_size=0, max_size=15))
def test_graph_is_complete(maps):
    g = build_graph([profile_from_counts(i, IN, m) for i, m in enumerate(maps)])
    n = len(g.nodes)
    assert len(g.edges) == n * (n - 1) // 2
    assert all(0.0 <= s <= 1.0 for s in g.edges.values())
