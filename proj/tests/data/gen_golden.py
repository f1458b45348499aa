#!/usr/bin/env python3
"""Writes golden_certs.json: hashes computed with hashlib, independent of the C++ code."""
import hashlib
import json
import struct
import sys


def enc(client, seq, kind, payload):
    p = payload.encode()
    return struct.pack("<QQBI", client, seq, kind, len(p)) + p


def H(b):
    return hashlib.sha256(b).digest()


def leaf(c):
    return H(b"\x00" + enc(*c))


def node(l, r):
    return H(b"\x01" + l + r)


def root(leaves):
    if len(leaves) == 1:
        return leaves[0]
    h = len(leaves) // 2
    return node(root(leaves[:h]), root(leaves[h:]))


def peaks(leaves):
    out, start, m = [], 0, len(leaves)
    for h in range(m.bit_length() - 1, -1, -1):
        if m >> h & 1:
            out.append({"height": h, "hash": root(leaves[start:start + (1 << h)]).hex()})
            start += 1 << h
    return out


cmds = [(1 + i % 3, 1 + i // 3, 0, "cmd-%d" % i) for i in range(13)]
cmds[5] = (cmds[5][0], cmds[5][1], 1, "")
leaves = [leaf(c) for c in cmds]
digest, digests = bytes(32), []
for l in leaves:
    digest = H(b"\x02" + digest + l)
    digests.append(digest.hex())

# certificate for the first command (position 1) in a two-leaf forest: sibling on the right
cert = enc(*cmds[0]) + b"\x01" + struct.pack("<Q", 1) + struct.pack("<I", 1) + b"\x01" + leaves[1]

doc = {
    "commands": [{"client": c, "seq": s, "kind": k, "payload": p} for c, s, k, p in cmds],
    "leaves": [l.hex() for l in leaves],
    "prefixes": [{"size": m, "peaks": peaks(leaves[:m])} for m in range(1, len(leaves) + 1)],
    "digests": digests,
    "certificate": {"command": 0, "position": 1, "chain": [{"side": "right", "hash": leaves[1].hex()}],
                    "bytes": cert.hex()},
}
json.dump(doc, open(sys.argv[1] if len(sys.argv) > 1 else "golden_certs.json", "w"), indent=1)
