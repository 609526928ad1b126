import pytest

from ipcensus.active import ingest_probes, parse_probes
from ipcensus.blockmap import block_of
from ipcensus.errors import ParseError


def test_icmp_matching_responder_counts():
    obs = ingest_probes(parse_probes(["icmp_echo|5.6.7.8|5.6.7.8|1"]))
    assert block_of("5.6.7.0") in obs.sets["icmp_echo"]
    assert obs.icmp_octets[block_of("5.6.7.0")] == 1 << 8


def test_icmp_mismatched_responder_discarded():
    obs = ingest_probes(parse_probes(["icmp_echo|5.6.7.8|5.6.7.9|1"]))
    assert len(obs.sets["icmp_echo"]) == 0
    assert obs.icmp_mismatched == 1


def test_ttl_exceeded_uses_hop_address():
    obs = ingest_probes(parse_probes(["ttl_exceeded|77.1.2.3|9.9.9.1|1"]))
    assert block_of("9.9.9.0") in obs.sets["ttl_exceeded"]
    assert block_of("77.1.2.0") not in obs.sets["ttl_exceeded"]


def test_http_counts_accumulate():
    lines = ["http_get|5.6.7.8|5.6.7.8|3", "http_get|5.6.7.9|5.6.7.9|2"]
    obs = ingest_probes(parse_probes(lines))
    assert obs.http_counts[block_of("5.6.7.0")] == 5
    assert block_of("5.6.7.0") in obs.sets["http_get"]


def test_octet_masks_collect_all_responders():
    lines = ["icmp_echo|5.6.7.1|5.6.7.1|1", "icmp_echo|5.6.7.254|5.6.7.254|1"]
    obs = ingest_probes(parse_probes(lines))
    mask = obs.icmp_octets[block_of("5.6.7.0")]
    assert mask == (1 << 1) | (1 << 254)


def test_reingestion_idempotent():
    lines = ["icmp_echo|5.6.7.8|5.6.7.8|1", "http_get|1.2.3.4|1.2.3.4|2"]
    a = ingest_probes(parse_probes(lines))
    b = ingest_probes(parse_probes(lines + lines))
    for kind in a.sets:
        assert a.sets[kind] == b.sets[kind]
    assert a.icmp_octets == b.icmp_octets


def test_union_cardinality_bound():
    lines = [
        "icmp_echo|5.6.7.8|5.6.7.8|1",
        "http_get|5.6.7.8|5.6.7.8|1",
        "ttl_exceeded|8.8.8.8|5.6.8.1|1",
    ]
    obs = ingest_probes(parse_probes(lines))
    union = obs.sets["icmp_echo"] | obs.sets["http_get"] | obs.sets["ttl_exceeded"]
    assert len(union) <= sum(len(s) for s in obs.sets.values())


@pytest.mark.parametrize("line", [
    "wat|1.2.3.4|1.2.3.4|1",
    "icmp_echo|1.2.3.4|1.2.3.4|0",
    "icmp_echo|1.2.3.4|1.2.3.4",
    "icmp_echo|1.2.3.999|1.2.3.4|1",
])
def test_parse_probe_errors(line):
    with pytest.raises(ParseError):
        parse_probes([line])
