"""Pure-Python simulation kernel.

Mirrors ``_ckernel.pyx`` operation for operation; used when the compiled
extension is unavailable or when ``SNOOPSIM_BACKEND=python`` is set.

Line storage is flat: index ``(core * num_sets + set) * ways + way``.
State codes follow :class:`snoopsim.core.CoherenceState` (I=0 S=1 E=2 O=3 M=4),
transaction codes follow :class:`snoopsim.core.TxnKind` (-1 means no
transaction).
"""

from .errors import CoherenceViolation, Violation
from .schemes import decide_raw

I, S, E, O, M = 0, 1, 2, 3, 4
READ, INV, UPD = 0, 1, 2
NO_TXN = -1
LOADS, STORES, READS, INVS, UPDS, WBS = range(6)
_STATE_NAMES = "ISEOM"


class Kernel:
    backend = "python"

    def __init__(self, num_cores, num_sets, ways, block_shift, variant, param,
                 ceiling=15, verify=False, count_local_reads=False):
        self.num_cores = num_cores
        self.num_sets = num_sets
        self.ways = ways
        self.block_shift = block_shift
        self.set_shift = num_sets.bit_length() - 1
        self.set_mask = num_sets - 1
        self.variant = variant
        self.param = param
        self.ceiling = ceiling
        self.verify = verify
        self.count_local_reads = count_local_reads

        n = num_cores * num_sets * ways
        self.tag = [-1] * n
        self.state = [I] * n
        self.counter = [0] * n
        self.recency = [i % ways for i in range(n)]
        self.version = [0] * n
        self.dir = {}
        self.counts = [[0] * 6 for _ in range(num_cores)]
        self.latest = {}
        self.memver = {}
        self.steps = 0
        self._victim_block = -1

    # -- line lookup ---------------------------------------------------

    def _find(self, core, set_index, tag):
        base = (core * self.num_sets + set_index) * self.ways
        tags = self.tag
        for idx in range(base, base + self.ways):
            if tags[idx] == tag:
                return idx
        return -1

    def _touch(self, idx):
        ways = self.ways
        base = idx - idx % ways
        rec = self.recency
        r = rec[idx]
        for j in range(base, base + ways):
            if rec[j] < r:
                rec[j] += 1
        rec[idx] = 0

    def _pick_victim(self, base):
        ways = self.ways
        state = self.state
        rec = self.recency
        best = -1
        best_rec = -1
        for j in range(base, base + ways):
            if state[j] == I and rec[j] > best_rec:
                best, best_rec = j, rec[j]
        if best >= 0:
            return best
        for j in range(base, base + ways):
            if rec[j] > best_rec:
                best, best_rec = j, rec[j]
        return best

    def _evict_at(self, core, idx):
        """Empty line ``idx``; returns (victim block or -1, wrote_back)."""
        t = self.tag[idx]
        if t < 0:
            return -1, False
        st = self.state[idx]
        ver = self.version[idx]
        block = (t << self.set_shift) | ((idx // self.ways) % self.num_sets)
        self.tag[idx] = -1
        self.state[idx] = I
        self.counter[idx] = 0
        self.version[idx] = 0
        if st == I:
            return -1, False
        self._dir_remove(block, core)
        self._victim_block = block
        if st == M or st == O:
            self.counts[core][WBS] += 1
            if self.verify:
                self.memver[block] = ver
            return block, True
        return block, False

    def evict(self, core, set_index):
        base = (core * self.num_sets + set_index) * self.ways
        return self._evict_at(core, self._pick_victim(base))

    def _dir_remove(self, block, core):
        mask = self.dir[block] & ~(1 << core)
        if mask:
            self.dir[block] = mask
        else:
            del self.dir[block]

    # -- snooping ------------------------------------------------------

    def snoop(self, kind, issuer, block, version=None):
        """Apply ``kind`` to every valid remote copy; returns (remote mask, owner version)."""
        mask = self.dir.get(block, 0) & ~(1 << issuer)
        if not mask:
            return 0, -1
        set_index = block & self.set_mask
        tag = block >> self.set_shift
        state = self.state
        owner_version = -1
        c = 0
        m = mask
        while m:
            if m & 1:
                idx = self._find(c, set_index, tag)
                st = state[idx]
                if kind == READ:
                    if self.counter[idx] < self.ceiling:
                        self.counter[idx] += 1
                    if st == M:
                        state[idx] = O
                        owner_version = self.version[idx]
                    elif st == O:
                        owner_version = self.version[idx]
                    elif st == E:
                        state[idx] = S
                elif kind == INV:
                    state[idx] = I
                else:
                    state[idx] = S
                    self.version[idx] = self.latest.get(block, 0) if version is None else version
            m >>= 1
            c += 1
        if kind == INV:
            self.dir[block] = self.dir[block] & ~mask
            if not self.dir[block]:
                del self.dir[block]
        return mask, owner_version

    # -- local operations ----------------------------------------------

    def _fill_slot(self, core, set_index, tag):
        idx = self._find(core, set_index, tag)
        if idx >= 0:
            return idx
        base = (core * self.num_sets + set_index) * self.ways
        idx = self._pick_victim(base)
        self._evict_at(core, idx)
        return idx

    def read(self, core, addr):
        block = addr >> self.block_shift
        set_index = block & self.set_mask
        tag = block >> self.set_shift
        idx = self._find(core, set_index, tag)
        if idx >= 0 and self.state[idx] != I:
            self._touch(idx)
            if self.count_local_reads and self.counter[idx] < self.ceiling:
                self.counter[idx] += 1
            if self.verify:
                self._check_load(core, idx, block)
            return NO_TXN
        if idx < 0:
            idx = self._fill_slot(core, set_index, tag)
        mask, owner_version = self.snoop(READ, core, block)
        self.tag[idx] = tag
        self.state[idx] = S if mask else E
        self.counter[idx] = 0
        if self.verify:
            self.version[idx] = owner_version if owner_version >= 0 else self.memver.get(block, 0)
        self.dir[block] = self.dir.get(block, 0) | (1 << core)
        self._touch(idx)
        if self.verify:
            self._check_load(core, idx, block)
        return READ

    def write(self, core, addr):
        block = addr >> self.block_shift
        set_index = block & self.set_mask
        tag = block >> self.set_shift
        idx = self._find(core, set_index, tag)
        st = self.state[idx] if idx >= 0 else I
        txn = NO_TXN
        if st == M or st == E:
            self.state[idx] = M
        else:
            bit = 1 << core
            remote_mask = self.dir.get(block, 0) & ~bit
            counter = self.counter[idx] if idx >= 0 else 0
            update = decide_raw(self.variant, self.param, st, counter,
                                bin(remote_mask).count("1"))
            if idx < 0:
                idx = self._fill_slot(core, set_index, tag)
            if st == I:
                self.tag[idx] = tag
                self.counter[idx] = 0
            if update:
                self.snoop(UPD, core, block, self.latest.get(block, 0) + 1)
                self.state[idx] = O if remote_mask else M
                self.dir[block] = remote_mask | bit
                txn = UPD
            else:
                self.snoop(INV, core, block)
                self.state[idx] = M
                self.dir[block] = bit
                txn = INV
        if self.counter[idx] > 0:
            self.counter[idx] -= 1
        if self.verify:
            v = self.latest.get(block, 0) + 1
            self.latest[block] = v
            self.version[idx] = v
        self._touch(idx)
        return txn

    def access(self, op, core, addr):
        if not 0 <= core < self.num_cores:
            raise ValueError(f"core {core} out of range for {self.num_cores} cores")
        self._victim_block = -1
        counts = self.counts[core]
        if op:
            counts[STORES] += 1
            txn = self.write(core, addr)
        else:
            counts[LOADS] += 1
            txn = self.read(core, addr)
        if txn >= 0:
            counts[READS + txn] += 1
        self.steps += 1
        if self.verify:
            self._verify_step(addr >> self.block_shift)
        return txn

    def run_batch(self, ops, cores, addrs):
        access = self.access
        for i in range(len(ops)):
            access(ops[i], cores[i], addrs[i])

    # -- verification --------------------------------------------------

    def _check_load(self, core, idx, block):
        want = self.latest.get(block, 0)
        if self.version[idx] != want:
            raise CoherenceViolation(Violation(
                "stale-read", block,
                ((core, _STATE_NAMES[self.state[idx]], self.version[idx]),),
                f"load observed version {self.version[idx]}, latest is {want}"), self.steps)

    def _verify_step(self, block):
        bad = self.check_block(block)
        if bad is None and self._victim_block >= 0:
            bad = self.check_block(self._victim_block)
        if bad is not None:
            raise CoherenceViolation(bad, self.steps)

    def check_block(self, block):
        """Local invariant check for one block; returns a Violation or None."""
        set_index = block & self.set_mask
        tag = block >> self.set_shift
        holders = []
        mask = 0
        owners = 0
        exclusive = 0
        for c in range(self.num_cores):
            idx = self._find(c, set_index, tag)
            if idx >= 0 and self.state[idx] != I:
                st = self.state[idx]
                holders.append((c, _STATE_NAMES[st], self.version[idx]))
                mask |= 1 << c
                if st == M or st == O:
                    owners += 1
                if st == M or st == E:
                    exclusive += 1
        held = tuple(holders)
        if owners > 1:
            return Violation("single-owner", block, held, "more than one M/O holder")
        if exclusive and len(holders) > 1:
            return Violation("exclusivity", block, held, "M/E copy coexists with another valid copy")
        if self.dir.get(block, 0) != mask:
            return Violation("directory", block, held,
                             f"directory mask {self.dir.get(block, 0):#x} != caches {mask:#x}")
        if self.verify:
            latest = self.latest.get(block, 0)
            for h in holders:
                if h[2] != latest:
                    return Violation("stale-copy", block, held, f"valid copy behind latest version {latest}")
            if not owners and self.memver.get(block, 0) != latest:
                return Violation("stale-memory", block, held, "no dirty owner but memory is stale")
        return None

    # -- inspection ----------------------------------------------------

    def lines(self):
        out = []
        ways = self.ways
        for idx, t in enumerate(self.tag):
            if t >= 0:
                core, rest = divmod(idx, self.num_sets * ways)
                set_index, way = divmod(rest, ways)
                out.append((core, set_index, way, t, self.state[idx], self.counter[idx],
                            self.recency[idx], self.version[idx]))
        return out

    def directory(self):
        return dict(self.dir)

    def get_counts(self):
        return [list(c) for c in self.counts]

    def latest_version(self, block):
        return self.latest.get(block, 0)

    def memory_version(self, block):
        return self.memver.get(block, 0)

    def install(self, core, addr, state, counter=0, version=0):
        """Force a line into ``state`` (test hook; keeps the directory in sync)."""
        block = addr >> self.block_shift
        set_index = block & self.set_mask
        tag = block >> self.set_shift
        idx = self._fill_slot(core, set_index, tag)
        self.tag[idx] = tag
        self.state[idx] = state
        self.counter[idx] = counter
        self.version[idx] = version
        self._touch(idx)
        if state != I:
            self.dir[block] = self.dir.get(block, 0) | (1 << core)
        elif block in self.dir and self.dir[block] & (1 << core):
            self._dir_remove(block, core)
