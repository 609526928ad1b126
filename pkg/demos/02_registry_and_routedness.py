# From delegation files and BGP visibility to the routed set.
#
# Delegations label blocks reserved / available / assigned; peer visibility
# then decides routedness: a /24 is routed only when a covering prefix was
# seen by at least 10 distinct peers on some day AND the registry says the
# block is assigned.  Available space never classifies as routed, no matter
# how many peers announce it.

from ipcensus.bgp import accumulate_visibility, classify_routed, parse_visibility
from ipcensus.blockmap import block_of
from ipcensus.registry import build_registry_state, parse_delegations, rfc5735_prefixes

delegations = [
    "arin|US|ipv4|20.0.0.0|65536|20090101|assigned",     # a /16 to an org
    "ripencc|DE|ipv4|20.1.0.0|4096|20120101|allocated",  # a /20 via an LIR
    "apnic|ZZ|ipv4|20.2.0.0|4096|20130101|available",    # back in the free pool
]
state = build_registry_state(parse_delegations(delegations), rfc5735_prefixes())
counts = state.counts()
print("registry state over the whole universe:")
for code, count in counts.items():
    print(f"  {code.name.lower():>9}: {count:,}")
print("(the IETF-reserved total is the familiar 2.3M blocks, 13.7%)")

# Twelve peers see the /16; only three see the /20; many see the available
# /20 (a leak or hijack) but it stays unrouted.
visibility = []
visibility += [f"2013-07-23|peer{i}|20.0.0.0/16" for i in range(12)]
visibility += [f"2013-07-23|peer{i}|20.1.0.0/20" for i in range(3)]
visibility += [f"2013-07-23|peer{i}|20.2.0.0/20" for i in range(12)]

index = accumulate_visibility(parse_visibility(visibility))
routed = classify_routed(index, state, threshold=10)
print("routed blocks:", len(routed))
print("  20.0.5.0/24 routed?", block_of("20.0.5.0") in routed)
print("  20.1.5.0/24 routed?", block_of("20.1.5.0") in routed, "(only 3 peers)")
print("  20.2.5.0/24 routed?", block_of("20.2.5.0") in routed, "(available space)")
