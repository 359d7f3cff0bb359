import pytest
from hypothesis import given, settings, strategies as st

from portids.ingest import (
    Binner,
    CountBin,
    Direction,
    EventParseError,
    EventValidationError,
    LateEventError,
    Protocol,
    TrafficEvent,
    bin_events,
    parse_event,
    read_events,
)

IN, OUT = Direction.INCOMING, Direction.OUTGOING


def ev(ts, port=80, d=IN, proto=Protocol.TCP, n=1):
    return TrafficEvent(ts, port, d, proto, n)


class TestParseEvent:
    def test_default_count(self):
        e = parse_event('{"ts_ms":1000,"port":80,"dir":"in","proto":"tcp"}')
        assert e == TrafficEvent(1000, 80, IN, Protocol.TCP, 1)

    def test_port_out_of_range(self):
        with pytest.raises(EventValidationError):
            parse_event('{"ts_ms":1000,"port":70000,"dir":"in","proto":"tcp"}')

    def test_explicit_count(self):
        e = parse_event('{"ts_ms":5,"port":22,"dir":"out","proto":"udp","n":3}')
        assert e == TrafficEvent(5, 22, OUT, Protocol.UDP, 3)

    def test_unknown_direction(self):
        with pytest.raises(EventValidationError):
            parse_event('{"ts_ms":5,"port":22,"dir":"sideways","proto":"udp"}')

    @pytest.mark.parametrize("line,field", [
        ('{"port":22,"dir":"out","proto":"udp"}', "ts_ms"),
        ('{"ts_ms":"x","port":22,"dir":"out","proto":"udp"}', "ts_ms"),
        ('{"ts_ms":1,"port":2.5,"dir":"out","proto":"udp"}', "port"),
        ('{"ts_ms":1,"port":22,"proto":"udp"}', "dir"),
        ('{"ts_ms":1,"port":22,"dir":"in"}', "proto"),
        ('{"ts_ms":1,"port":22,"dir":"in","proto":"tcp","n":true}', "n"),
        ("not json", "record"),
    ])
    def test_parse_error_names_field(self, line, field):
        with pytest.raises(EventParseError) as info:
            parse_event(line)
        assert info.value.field == field

    def test_zero_count_rejected(self):
        with pytest.raises(EventValidationError):
            parse_event('{"ts_ms":1,"port":22,"dir":"in","proto":"tcp","n":0}')

    def test_unknown_keys_ignored(self):
        e = parse_event('{"ts_ms":1,"port":22,"dir":"in","proto":"icmp","src":"10.0.0.1"}')
        assert e.protocol is Protocol.ICMP

    def test_line_round_trip(self):
        e = TrafficEvent(123, 443, OUT, Protocol.OTHER, 9)
        assert parse_event(e.to_line()) == e

    def test_read_events_skips_blank(self):
        lines = ['{"ts_ms":1,"port":1,"dir":"in","proto":"tcp"}', "", "  "]
        assert len(list(read_events(lines))) == 1


class TestBinEvents:
    def test_single_bin_sum(self):
        bins = list(bin_events([ev(0), ev(400), ev(900)], 1000))
        assert bins == [CountBin(0, 80, IN, 3, {Protocol.TCP: 3})]

    def test_bin_boundary(self):
        bins = list(bin_events([ev(0), ev(1500)], 1000))
        assert [(b.bin_start_ms, b.count) for b in bins] == [(0, 1), (1000, 1)]

    def test_empty(self):
        assert list(bin_events([], 1000)) == []

    def test_zero_fill_between_events(self):
        bins = list(bin_events([ev(0), ev(3500)], 1000))
        assert [(b.bin_start_ms, b.count) for b in bins] == [(0, 1), (1000, 0), (2000, 0), (3000, 1)]

    def test_zero_fill_for_quiet_node(self):
        events = [ev(0, port=1), ev(0, port=2), ev(1000, port=1), ev(2000, port=1)]
        bins = list(bin_events(events, 1000))
        port2 = [(b.bin_start_ms, b.count) for b in bins if b.port == 2]
        assert port2 == [(0, 1), (1000, 0), (2000, 0)]

    def test_expiry(self):
        events = [ev(0, port=1), ev(0, port=2)] + [ev(t * 1000, port=1) for t in range(1, 10)]
        bins = list(bin_events(events, 1000, expiry_bins=3))
        port2 = [b.bin_start_ms for b in bins if b.port == 2]
        assert port2 == [0, 1000, 2000, 3000]

    def test_long_gap_stops_after_expiry(self):
        bins = list(bin_events([ev(0), ev(10_000_000)], 1000, expiry_bins=5))
        assert len(bins) == 1 + 5 + 1

    def test_late_event_in_closed_bin(self):
        binner = Binner(1000)
        binner.push(ev(5000))
        binner.push(ev(6100))
        with pytest.raises(LateEventError) as info:
            binner.push(ev(5999))
        assert info.value.event.timestamp_ms == 5999

    def test_out_of_order_inside_open_bin_is_accepted(self):
        bins = list(bin_events([ev(900), ev(100), ev(500)], 1000))
        assert bins[0].count == 3

    def test_protocol_counts(self):
        events = [ev(0, proto=Protocol.TCP, n=4), ev(1, proto=Protocol.UDP, n=2), ev(2, proto=Protocol.TCP)]
        (b,) = bin_events(events, 1000)
        assert b.protocol_counts == {Protocol.TCP: 5, Protocol.UDP: 2}
        assert b.count == 7

    def test_directions_are_separate_series(self):
        bins = list(bin_events([ev(0, d=IN), ev(1, d=OUT, n=2)], 1000))
        assert {(b.direction, b.count) for b in bins} == {(IN, 1), (OUT, 2)}


event_lists = st.lists(
    st.tuples(st.integers(0, 4_000), st.sampled_from([22, 80, 443]), st.sampled_from(list(Direction)),
              st.sampled_from(list(Protocol)), st.integers(1, 50)),
    max_size=60,
).map(lambda xs: [TrafficEvent(*x) for x in sorted(xs, key=lambda x: x[0])])


@settings(max_examples=200, deadline=None)
@given(event_lists, st.sampled_from([3, 7, 250, 1000, 3000]))
def test_conservation_alignment_determinism(events, width):
    bins = list(bin_events(events, width))
    assert sum(b.count for b in bins) == sum(e.packet_count for e in events)
    assert all(b.bin_start_ms % width == 0 for b in bins)
    assert all(b.count == sum(b.protocol_counts.values()) for b in bins)
    starts = [b.bin_start_ms for b in bins]
    assert starts == sorted(starts)
    assert bins == list(bin_events(events, width))
