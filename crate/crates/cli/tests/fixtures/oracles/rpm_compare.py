# Reads "a b" EVR pairs on stdin, prints -1/0/1 per line (rpm labelCompare order).
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from rpm_vercmp import vercmp


def split_evr(s):
    epoch = "0"
    if ":" in s:
        e, rest = s.split(":", 1)
        if e.isdigit():
            epoch, s = e, rest
    version, _, release = s.partition("-")
    return int(epoch), version, release


def label_compare(a, b):
    ea, va, ra = split_evr(a)
    eb, vb, rb = split_evr(b)
    if ea != eb:
        return -1 if ea < eb else 1
    return vercmp(va, vb) or vercmp(ra, rb)


out = []
for line in sys.stdin:
    a, b = line.split()
    out.append(str(label_compare(a, b)))
sys.stdout.write("\n".join(out) + "\n")
