#!/usr/bin/env python3
"""Derives one corrupted trace per checker property from the two clean traces.

Regenerate the clean inputs first:
  vcm run --scenario examples/scenarios/basic.scn --trace-out tests/fixtures/clean.trace
  vcm run --scenario examples/scenarios/compensation.scn --trace-out tests/fixtures/clean_compensation.trace
"""
import os
import re

here = os.path.dirname(os.path.abspath(__file__))
B = open(os.path.join(here, 'clean.trace')).read().splitlines()
C = open(os.path.join(here, 'clean_compensation.trace')).read().splitlines()
out = here + '/'

def idx(lines, pat, n=0):
    hits = [i for i, l in enumerate(lines) if re.search(pat, l)]
    return hits[n]

def sub(lines, pat, a, b, n=0):
    L = list(lines); i = idx(L, pat, n); assert a in L[i], (pat, a); L[i] = L[i].replace(a, b, 1); return L

def delete(lines, *pats):
    L = list(lines)
    for p in pats:
        del L[idx(L, p)]
    return L

def insert_after(lines, pat, new, n=0):
    L = list(lines); i = idx(L, pat, n); L.insert(i + 1, new); return L

fx = {}
fx['5.1'] = sub(B, r' 4 view id=1 ', 'members=1:g1,2:g2,3:g3', 'members=1:g1,3:g3')
fx['5.2'] = insert_after(B, r' 4 view id=3 ', B[idx(B, r' 4 view id=3 ')])
fx['5.3'] = sub(B, r' 7 view id=2 ', 'members=1:g1,3:g3', 'members=1:g1,2:g2,3:g3')
fx['5.4'] = sub(B, r' final gid=3 ', 'view=5 members=1:g1,2:g2,3:g3', 'view=4 members=1:g1,3:g3')
nv = idx(B, r'type=NewViewG .*view=2\b')
msg = re.search(r'msg=(\d+)', B[nv]).group(1)
fx['single-round'] = [l for i, l in enumerate(B) if i != nv and not re.search(r' recv msg=%s ' % msg, l)]
fx['compensation'] = sub(C, r' 1 view id=3 ', 'members=1:g1,3:g3,4:g4,5:g5', 'members=1:g1,3:g3,4:g4')
v1 = re.search(r'^\S+ (\d+) spawn name=v1 ', B[idx(B, r' spawn name=v1 ')]).group(1)
fx['detection'] = insert_after(B, r'^19\.534000 22 result', '30.000000 %s crash cause=process name=v1' % v1)
fx['no-false-suspicion'] = insert_after(B, r'^19\.534000 22 result', '30.000000 1 suspect kind=gsd target=7 id=3 view=1')
fx['suspect-once'] = insert_after(B, r' suspect .*view=1', B[idx(B, r' suspect .*view=1')])
fx['recovery'] = delete(B, r' recovered kind=gsd', r' recovered kind=gsd')
fx['rejoin-gid'] = sub(B, r' 4 view id=3 ', 'gid=2', 'gid=4')
fx['cascade'] = sub(B, r' partition part=2 ', 'vms=4113:R', 'vms=4097:R|4113:R')
fx['referential'] = sub(B, r' partition part=3 ', 'vms=8193:R', 'vms=17:R|8193:R')
fx['consistency'] = sub(B, r' 4 cluster_view request=5 ', 'digest=b4e739f36c2d366b', 'digest=0000000000000000')
fx['fanout'] = sub(B, r' cluster_view request=3 ', 'remote_msgs=4', 'remote_msgs=6')
fx['coverage'] = insert_after(B, r' 7 partition part=3 ', B[idx(B, r' 4 partition part=2 ')].replace(' 4 partition part=2 by=2', ' 7 partition part=2 by=3'))
fx['transactionality'] = delete(B, r' wal .*phase=committed')
fx['slot-capacity'] = sub(B, r' delta partition=1 deltas=v4:R', 'v4:R', 'v0:R')
fx['lifecycle'] = insert_after(insert_after(B, r' wal .*phase=committed', '19.533000 1 delta partition=1 deltas=v3:H'), r'deltas=v3:H', '19.533000 1 delta partition=1 deltas=v3:S')
seen = {}
for i, l in enumerate(B):
    m = re.search(r'^\S+ (\d+) recv msg=(\d+) from=(\d+) ', l)
    if not m: continue
    k = (m.group(1), m.group(3))
    if k in seen:
        r1, r2 = seen[k], i
        break
    seen[k] = i
L = list(B)
m1 = re.search(r'msg=\d+ from=\d+ type=\S+', L[r1]).group(0)
m2 = re.search(r'msg=\d+ from=\d+ type=\S+', L[r2]).group(0)
L[r1] = L[r1].replace(m1, m2); L[r2] = L[r2].replace(m2, m1)
fx['fifo'] = L
fx['reliability'] = delete(B, r' recv ')
fx['clock'] = sub(B, r' change cause=crash subjects=2 from=1', '44.001000', '43.000000')
for name, lines in fx.items():
    open(out + name + '.trace', 'w').write('\n'.join(lines) + '\n')
