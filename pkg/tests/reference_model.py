"""Naive MOESI reference: per-set MRU-ordered slot lists, full rescans, no directory.

Written directly from the protocol rules and independent of both kernels; the
write decision goes through the public ``snoopsim.schemes.decide``.
"""

from snoopsim.core import CoherenceState as St
from snoopsim.core import TxnKind
from snoopsim.schemes import PolicyDecision, WriteContext, decide


class Slot:
    __slots__ = ("tag", "state", "counter")

    def __init__(self):
        self.tag = None
        self.state = St.I
        self.counter = 0


class ReferenceSim:
    def __init__(self, geometry, scheme):
        self.g = geometry
        self.scheme = scheme
        self.ceiling = scheme.counter_ceiling
        # slots[core][set] ordered most- to least-recently used
        self.slots = [[[Slot() for _ in range(geometry.ways)] for _ in range(geometry.num_sets)]
                      for _ in range(geometry.num_cores)]
        self.counts = [[0] * 6 for _ in range(geometry.num_cores)]

    def _split(self, addr):
        block = addr // self.g.block_size_bytes
        return block % self.g.num_sets, block // self.g.num_sets

    def _lookup(self, core, s, t):
        for slot in self.slots[core][s]:
            if slot.tag == t:
                return slot
        return None

    def _touch(self, core, s, slot):
        lst = self.slots[core][s]
        lst.remove(slot)
        lst.insert(0, slot)

    def _victim(self, core, s):
        lst = self.slots[core][s]
        invalid = [x for x in lst if x.state == St.I]
        v = invalid[-1] if invalid else lst[-1]
        if v.tag is not None and v.state in (St.M, St.O):
            self.counts[core][5] += 1
        v.tag, v.state, v.counter = None, St.I, 0
        return v

    def _others(self, core, s, t):
        out = []
        for c in range(self.g.num_cores):
            if c != core:
                x = self._lookup(c, s, t)
                if x is not None and x.state != St.I:
                    out.append(x)
        return out

    def load(self, core, addr):
        s, t = self._split(addr)
        slot = self._lookup(core, s, t)
        if slot is not None and slot.state != St.I:
            self._touch(core, s, slot)
            return None
        if slot is None:
            slot = self._victim(core, s)
        others = self._others(core, s, t)
        for x in others:
            x.counter = min(x.counter + 1, self.ceiling)
            if x.state == St.M:
                x.state = St.O
            elif x.state == St.E:
                x.state = St.S
        slot.tag, slot.state, slot.counter = t, (St.S if others else St.E), 0
        self._touch(core, s, slot)
        return TxnKind.READ_REQ

    def store(self, core, addr):
        s, t = self._split(addr)
        slot = self._lookup(core, s, t)
        st = slot.state if slot is not None else St.I
        txn = None
        if st in (St.M, St.E):
            slot.state = St.M
        else:
            others = self._others(core, s, t)
            ctx = WriteContext(st, slot.counter if slot is not None else 0, len(others))
            d = decide(self.scheme, ctx)
            if slot is None:
                slot = self._victim(core, s)
            if st == St.I:
                slot.tag, slot.counter = t, 0
            if d is PolicyDecision.UPDATE:
                for x in others:
                    x.state = St.S
                slot.state = St.O if others else St.M
                txn = TxnKind.UPDATE_REQ
            else:
                for x in others:
                    x.state = St.I
                slot.state = St.M
                txn = TxnKind.INVALIDATE_REQ
        slot.counter = max(slot.counter - 1, 0)
        self._touch(core, s, slot)
        return txn

    def step(self, op, core, addr):
        self.counts[core][int(op)] += 1
        txn = self.store(core, addr) if op else self.load(core, addr)
        if txn is not None:
            self.counts[core][2 + int(txn)] += 1
        return txn

    def snapshot(self):
        """{(core, block, state, counter)} for every slot holding a tag."""
        out = set()
        for c, sets in enumerate(self.slots):
            for s, lst in enumerate(sets):
                for x in lst:
                    if x.tag is not None:
                        out.add((c, x.tag * self.g.num_sets + s, int(x.state), x.counter))
        return out


def engine_snapshot(engine):
    g = engine.geometry
    return {(c, t * g.num_sets + s, st, ctr) for c, s, _, t, st, ctr, _, _ in engine._k.lines()}
