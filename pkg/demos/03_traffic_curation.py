# Spoofing removal at the four vantage-point kinds.
#
# Passive traffic is the richest source of used-block evidence, and the
# dirtiest: spoofed source addresses would wildly inflate the census.  Each
# vantage-point kind gets its own curation strategy; all of them are
# validated the same way, by how little unrouted and known-dark space the
# surviving set claims.

from ipcensus.blockmap import BlockSet, ip_to_int
from ipcensus.curation import (
    DarknetConfig,
    TrafficRecord,
    curate_darknet,
    curate_flowlog,
    curate_sampled,
    parse_rules,
    validation_metrics,
)


def pkt(src, ttl=64, proto=6, flags=0x18, payload=120, ts=1000, dport=80,
        dst="198.51.200.1"):
    return TrafficRecord(kind="packet", ts=ts, src=ip_to_int(src), dst=ip_to_int(dst),
                         proto=proto, sport=4242, dport=dport, ttl=ttl, flags=flags,
                         payload_len=payload)


# --- darknet: a rule chain against known spoofing signatures ------------------
rules = parse_rules([
    "rule dns-flood-august",
    "  ts 5000-6000",
    "  proto 17",
    "  dport 53",
    "end",
])
records = [
    pkt("198.51.7.9"),                              # clean
    pkt("1.2.3.4", ttl=250),                        # absurd TTL: spoofed
    pkt("5.6.7.0"),                                 # .0 source
    pkt("5.6.8.255"),                               # .255 source
    pkt("9.9.9.9", proto=47, flags=None),           # non-traditional protocol
    pkt("7.7.7.7", flags=0),                        # flagless TCP
    pkt("8.8.8.8", proto=17, flags=None, payload=0),  # payloadless UDP
    pkt("6.6.6.6", proto=17, flags=None, ts=5500, dport=53),  # the flood event
]
blocks, metrics = curate_darknet(records, DarknetConfig(specific_filters=tuple(rules)))
print("darknet: kept", len(blocks), "of", metrics.blocks_before, "source /24s")
for tally in metrics.tallies:
    if tally.records:
        print(f"  {tally.name:<28} dropped {tally.records}")

# --- flow logs: bidirectional TCP with enough substance ------------------------


def flw(src, pkts, avg, bidir=True):
    return TrafficRecord(kind="flow", ts=0, src=ip_to_int(src), dst=ip_to_int("10.0.0.1"),
                         proto=6, sport=1, dport=2, pkts=pkts, bytes=pkts * avg, bidir=bidir)


flows = [flw("1.1.1.1", 5, 80), flw("2.2.2.2", 4, 200), flw("3.3.3.3", 10, 79),
         flw("4.4.4.4", 50, 1000, bidir=False)]
kept, _ = curate_flowlog(flows)
print("flow log: kept", len(kept), "of 4 flows (exactly the 5-packet, 80-byte one)")

# --- sampled packets: a threshold search tuned against contamination -----------
routed = BlockSet.from_prefixes(["198.51.0.0/16"])
dark = BlockSet.from_prefixes(["203.0.113.0/24"])
sampled = []
for i in range(40):  # real hosts: many big packets
    sampled += [pkt(f"198.51.{i}.9", payload=700)] * 6
for i in range(10):  # spoofed: few small packets from unrouted space
    sampled += [pkt(f"77.1.{i}.9", payload=60)] * 2
blocks, metrics, choices = curate_sampled(sampled, routed, dark)
print("sampled: chose src thresholds "
      f"(pkts >= {choices['src'].min_packets}, avg >= {choices['src'].min_avg_size}) "
      f"keeping {choices['src'].set_size} /24s")
check = validation_metrics(blocks, routed, dark)
print(f"  unrouted fraction after curation: {check.unrouted_fraction:.4f}")
