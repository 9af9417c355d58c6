# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled simulation kernel; same interface and semantics as ``_pykernel``."""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint32_t, uint64_t
from libc.stdlib cimport calloc, free, malloc
from libcpp.unordered_map cimport unordered_map
from cython.operator cimport dereference as deref
from cpython cimport array
import array

from snoopsim.errors import CoherenceViolation, Violation

cdef extern from *:
    int __builtin_popcount(unsigned int) nogil

cdef enum:
    ST_I = 0
    ST_S = 1
    ST_E = 2
    ST_O = 3
    ST_M = 4
    T_READ = 0
    T_INV = 1
    T_UPD = 2
    NO_TXN = -1
    C_LOADS = 0
    C_STORES = 1
    C_READS = 2
    C_WBS = 5

_STATE_NAMES = "ISEOM"


cdef class Kernel:
    cdef readonly int num_cores, num_sets, ways, block_shift, set_shift
    cdef readonly int variant, ceiling
    cdef readonly long long param
    cdef readonly bint verify, count_local_reads
    cdef readonly int64_t steps
    cdef int64_t set_mask
    cdef int64_t victim_block
    cdef int64_t *tag
    cdef uint8_t *state
    cdef int32_t *counter
    cdef int32_t *recency
    cdef uint64_t *version
    cdef int64_t *counts
    cdef unordered_map[int64_t, uint32_t] dirmap
    cdef unordered_map[int64_t, uint64_t] latest
    cdef unordered_map[int64_t, uint64_t] memver

    backend = "cython"

    def __cinit__(self, int num_cores, int num_sets, int ways, int block_shift,
                  int variant, long long param, int ceiling=15, bint verify=False,
                  bint count_local_reads=False):
        cdef Py_ssize_t n = <Py_ssize_t>num_cores * num_sets * ways
        cdef Py_ssize_t i
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
        self.steps = 0
        self.victim_block = -1
        self.tag = <int64_t *>malloc(n * sizeof(int64_t))
        self.state = <uint8_t *>calloc(n, sizeof(uint8_t))
        self.counter = <int32_t *>calloc(n, sizeof(int32_t))
        self.recency = <int32_t *>malloc(n * sizeof(int32_t))
        self.version = <uint64_t *>calloc(n, sizeof(uint64_t))
        self.counts = <int64_t *>calloc(num_cores * 6, sizeof(int64_t))
        if not (self.tag and self.state and self.counter and self.recency
                and self.version and self.counts):
            raise MemoryError()
        for i in range(n):
            self.tag[i] = -1
            self.recency[i] = i % ways

    def __dealloc__(self):
        free(self.tag)
        free(self.state)
        free(self.counter)
        free(self.recency)
        free(self.version)
        free(self.counts)

    # -- line lookup ---------------------------------------------------

    cdef inline Py_ssize_t _base(self, int core, int64_t set_index) nogil:
        return (<Py_ssize_t>core * self.num_sets + set_index) * self.ways

    cdef inline Py_ssize_t _find(self, int core, int64_t set_index, int64_t tag) nogil:
        cdef Py_ssize_t base = self._base(core, set_index)
        cdef Py_ssize_t idx
        for idx in range(base, base + self.ways):
            if self.tag[idx] == tag:
                return idx
        return -1

    cdef inline void _touch(self, Py_ssize_t idx) nogil:
        cdef Py_ssize_t base = idx - idx % self.ways
        cdef int32_t r = self.recency[idx]
        cdef Py_ssize_t j
        for j in range(base, base + self.ways):
            if self.recency[j] < r:
                self.recency[j] += 1
        self.recency[idx] = 0

    cdef Py_ssize_t _pick_victim(self, Py_ssize_t base) nogil:
        cdef Py_ssize_t best = -1, j
        cdef int32_t best_rec = -1
        for j in range(base, base + self.ways):
            if self.state[j] == ST_I and self.recency[j] > best_rec:
                best = j
                best_rec = self.recency[j]
        if best >= 0:
            return best
        for j in range(base, base + self.ways):
            if self.recency[j] > best_rec:
                best = j
                best_rec = self.recency[j]
        return best

    cdef inline void _dir_remove(self, int64_t block, int core):
        cdef unordered_map[int64_t, uint32_t].iterator it = self.dirmap.find(block)
        if it == self.dirmap.end():
            return
        cdef uint32_t mask = deref(it).second & ~(<uint32_t>1 << core)
        if mask:
            deref(it).second = mask
        else:
            self.dirmap.erase(it)

    cdef inline uint32_t _dir_get(self, int64_t block):
        cdef unordered_map[int64_t, uint32_t].iterator it = self.dirmap.find(block)
        if it == self.dirmap.end():
            return 0
        return deref(it).second

    cdef inline uint64_t _get_latest(self, int64_t block):
        cdef unordered_map[int64_t, uint64_t].iterator it = self.latest.find(block)
        if it == self.latest.end():
            return 0
        return deref(it).second

    cdef inline uint64_t _get_memver(self, int64_t block):
        cdef unordered_map[int64_t, uint64_t].iterator it = self.memver.find(block)
        if it == self.memver.end():
            return 0
        return deref(it).second

    cdef int _evict_at(self, int core, Py_ssize_t idx, int64_t *out_block):
        """Empty line ``idx``; returns 1 on writeback, else 0."""
        cdef int64_t t = self.tag[idx]
        cdef uint8_t st
        cdef int64_t block
        out_block[0] = -1
        if t < 0:
            return 0
        st = self.state[idx]
        block = (t << self.set_shift) | ((idx // self.ways) % self.num_sets)
        self.tag[idx] = -1
        self.state[idx] = ST_I
        self.counter[idx] = 0
        if st == ST_I:
            self.version[idx] = 0
            return 0
        self._dir_remove(block, core)
        self.victim_block = block
        out_block[0] = block
        if st == ST_M or st == ST_O:
            self.counts[core * 6 + C_WBS] += 1
            if self.verify:
                self.memver[block] = self.version[idx]
            self.version[idx] = 0
            return 1
        self.version[idx] = 0
        return 0

    def evict(self, int core, int set_index):
        cdef int64_t block
        cdef int wb = self._evict_at(core, self._pick_victim(self._base(core, set_index)), &block)
        return block, bool(wb)

    cdef Py_ssize_t _fill_slot(self, int core, int64_t set_index, int64_t tag):
        cdef Py_ssize_t idx = self._find(core, set_index, tag)
        cdef int64_t dummy
        if idx >= 0:
            return idx
        idx = self._pick_victim(self._base(core, set_index))
        self._evict_at(core, idx, &dummy)
        return idx

    # -- snooping ------------------------------------------------------

    cdef uint32_t _snoop(self, int kind, int issuer, int64_t block, uint64_t version,
                         int64_t *owner_version):
        cdef uint32_t mask = self._dir_get(block) & ~(<uint32_t>1 << issuer)
        cdef uint32_t m = mask
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef int c = 0
        cdef Py_ssize_t idx
        cdef uint8_t st
        owner_version[0] = -1
        if not mask:
            return 0
        while m:
            if m & 1:
                idx = self._find(c, set_index, tag)
                st = self.state[idx]
                if kind == T_READ:
                    if self.counter[idx] < self.ceiling:
                        self.counter[idx] += 1
                    if st == ST_M:
                        self.state[idx] = ST_O
                        owner_version[0] = <int64_t>self.version[idx]
                    elif st == ST_O:
                        owner_version[0] = <int64_t>self.version[idx]
                    elif st == ST_E:
                        self.state[idx] = ST_S
                elif kind == T_INV:
                    self.state[idx] = ST_I
                else:
                    self.state[idx] = ST_S
                    self.version[idx] = version
            m >>= 1
            c += 1
        if kind == T_INV:
            m = self._dir_get(block) & ~mask
            if m:
                self.dirmap[block] = m
            else:
                self.dirmap.erase(block)
        return mask

    def snoop(self, int kind, int issuer, int64_t block):
        cdef int64_t owner
        self._snoop(kind, issuer, block, self._get_latest(block), &owner)

    # -- local operations ----------------------------------------------

    cdef int _read(self, int core, uint64_t addr) except -9:
        cdef int64_t block = <int64_t>(addr >> self.block_shift)
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef Py_ssize_t idx = self._find(core, set_index, tag)
        cdef uint32_t mask
        cdef int64_t owner_version
        if idx >= 0 and self.state[idx] != ST_I:
            self._touch(idx)
            if self.count_local_reads and self.counter[idx] < self.ceiling:
                self.counter[idx] += 1
            if self.verify:
                self._check_load(core, idx, block)
            return NO_TXN
        if idx < 0:
            idx = self._fill_slot(core, set_index, tag)
        mask = self._snoop(T_READ, core, block, 0, &owner_version)
        self.tag[idx] = tag
        self.state[idx] = ST_S if mask else ST_E
        self.counter[idx] = 0
        if self.verify:
            self.version[idx] = <uint64_t>owner_version if owner_version >= 0 else self._get_memver(block)
        self.dirmap[block] = self._dir_get(block) | (<uint32_t>1 << core)
        self._touch(idx)
        if self.verify:
            self._check_load(core, idx, block)
        return T_READ

    cdef inline bint _decide(self, uint8_t st, int32_t counter, uint32_t remote_mask) nogil:
        if self.variant == 0:
            return False
        if self.variant == 1:
            return True
        if self.variant == 2:
            return counter >= self.param
        if self.variant == 3:
            return st == ST_O
        return __builtin_popcount(remote_mask) >= self.param

    cdef int _write(self, int core, uint64_t addr) except -9:
        cdef int64_t block = <int64_t>(addr >> self.block_shift)
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef Py_ssize_t idx = self._find(core, set_index, tag)
        cdef uint8_t st = self.state[idx] if idx >= 0 else ST_I
        cdef int txn = NO_TXN
        cdef uint32_t bit, remote_mask
        cdef int64_t owner
        cdef uint64_t v = 0
        cdef bint update
        if self.verify:
            v = self._get_latest(block) + 1
        if st == ST_M or st == ST_E:
            self.state[idx] = ST_M
        else:
            bit = <uint32_t>1 << core
            remote_mask = self._dir_get(block) & ~bit
            update = self._decide(st, self.counter[idx] if idx >= 0 else 0, remote_mask)
            if idx < 0:
                idx = self._fill_slot(core, set_index, tag)
            if st == ST_I:
                self.tag[idx] = tag
                self.counter[idx] = 0
            if update:
                self._snoop(T_UPD, core, block, v, &owner)
                self.state[idx] = ST_O if remote_mask else ST_M
                self.dirmap[block] = remote_mask | bit
                txn = T_UPD
            else:
                self._snoop(T_INV, core, block, v, &owner)
                self.state[idx] = ST_M
                self.dirmap[block] = bit
                txn = T_INV
        if self.counter[idx] > 0:
            self.counter[idx] -= 1
        if self.verify:
            self.latest[block] = v
            self.version[idx] = v
        self._touch(idx)
        return txn

    def read(self, int core, uint64_t addr):
        return self._read(core, addr)

    def write(self, int core, uint64_t addr):
        return self._write(core, addr)

    cdef int _access(self, int op, int core, uint64_t addr) except -9:
        cdef int txn
        if core < 0 or core >= self.num_cores:
            raise ValueError(f"core {core} out of range for {self.num_cores} cores")
        self.victim_block = -1
        if op:
            self.counts[core * 6 + C_STORES] += 1
            txn = self._write(core, addr)
        else:
            self.counts[core * 6 + C_LOADS] += 1
            txn = self._read(core, addr)
        if txn >= 0:
            self.counts[core * 6 + C_READS + txn] += 1
        self.steps += 1
        if self.verify:
            self._verify_step(<int64_t>(addr >> self.block_shift))
        return txn

    def access(self, int op, int core, uint64_t addr):
        return self._access(op, core, addr)

    def run_batch(self, const unsigned char[::1] ops, const unsigned short[::1] cores,
                  const unsigned long long[::1] addrs):
        cdef Py_ssize_t i, n = ops.shape[0]
        if cores.shape[0] != n or addrs.shape[0] != n:
            raise ValueError("ops, cores and addrs must have equal length")
        for i in range(n):
            self._access(ops[i], cores[i], addrs[i])

    # -- verification --------------------------------------------------

    cdef int _check_load(self, int core, Py_ssize_t idx, int64_t block) except -1:
        cdef uint64_t want = self._get_latest(block)
        if self.version[idx] != want:
            raise CoherenceViolation(Violation(
                "stale-read", block,
                ((core, _STATE_NAMES[self.state[idx]], self.version[idx]),),
                f"load observed version {self.version[idx]}, latest is {want}"), self.steps)
        return 0

    cdef int _verify_step(self, int64_t block) except -1:
        bad = self.check_block(block)
        if bad is None and self.victim_block >= 0:
            bad = self.check_block(self.victim_block)
        if bad is not None:
            raise CoherenceViolation(bad, self.steps)
        return 0

    cpdef check_block(self, int64_t block):
        """Local invariant check for one block; returns a Violation or None."""
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef int c, owners = 0, exclusive = 0, nvalid = 0, stale = 0
        cdef uint32_t mask = 0
        cdef Py_ssize_t idx
        cdef uint8_t st
        cdef uint64_t latest = self._get_latest(block)
        for c in range(self.num_cores):
            idx = self._find(c, set_index, tag)
            if idx >= 0 and self.state[idx] != ST_I:
                st = self.state[idx]
                nvalid += 1
                mask |= <uint32_t>1 << c
                if st == ST_M or st == ST_O:
                    owners += 1
                if st == ST_M or st == ST_E:
                    exclusive += 1
                if self.version[idx] != latest:
                    stale += 1
        if owners <= 1 and not (exclusive and nvalid > 1) and self._dir_get(block) == mask:
            if not self.verify:
                return None
            if not stale and (owners or self._get_memver(block) == latest):
                return None
        held = self._holders(block)
        if owners > 1:
            return Violation("single-owner", block, held, "more than one M/O holder")
        if exclusive and nvalid > 1:
            return Violation("exclusivity", block, held, "M/E copy coexists with another valid copy")
        if self._dir_get(block) != mask:
            return Violation("directory", block, held,
                             f"directory mask {self._dir_get(block):#x} != caches {mask:#x}")
        if stale:
            return Violation("stale-copy", block, held, f"valid copy behind latest version {latest}")
        return Violation("stale-memory", block, held, "no dirty owner but memory is stale")

    cdef tuple _holders(self, int64_t block):
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef Py_ssize_t idx
        out = []
        for c in range(self.num_cores):
            idx = self._find(c, set_index, tag)
            if idx >= 0 and self.state[idx] != ST_I:
                out.append((c, _STATE_NAMES[self.state[idx]], self.version[idx]))
        return tuple(out)

    # -- inspection ----------------------------------------------------

    def lines(self):
        cdef Py_ssize_t idx, n = <Py_ssize_t>self.num_cores * self.num_sets * self.ways
        cdef Py_ssize_t per_core = <Py_ssize_t>self.num_sets * self.ways
        out = []
        for idx in range(n):
            if self.tag[idx] >= 0:
                core, rest = divmod(idx, per_core)
                set_index, way = divmod(rest, self.ways)
                out.append((core, set_index, way, self.tag[idx], self.state[idx],
                            self.counter[idx], self.recency[idx], self.version[idx]))
        return out

    def directory(self):
        return {kv.first: kv.second for kv in self.dirmap}

    def get_counts(self):
        return [[self.counts[c * 6 + k] for k in range(6)] for c in range(self.num_cores)]

    def latest_version(self, int64_t block):
        return self._get_latest(block)

    def memory_version(self, int64_t block):
        return self._get_memver(block)

    def install(self, int core, uint64_t addr, int state, int counter=0, uint64_t version=0):
        cdef int64_t block = <int64_t>(addr >> self.block_shift)
        cdef int64_t set_index = block & self.set_mask
        cdef int64_t tag = block >> self.set_shift
        cdef Py_ssize_t idx = self._fill_slot(core, set_index, tag)
        self.tag[idx] = tag
        self.state[idx] = state
        self.counter[idx] = counter
        self.version[idx] = version
        self._touch(idx)
        if state != ST_I:
            self.dirmap[block] = self._dir_get(block) | (<uint32_t>1 << core)
        else:
            self._dir_remove(block, core)


cdef array.array _U8 = array.array("B")
cdef array.array _U16 = array.array("H")
cdef array.array _U64 = array.array("Q")


cdef inline int _hexval(unsigned char ch) nogil:
    if 48 <= ch <= 57:
        return ch - 48
    if 97 <= ch <= 102:
        return ch - 87
    if 65 <= ch <= 70:
        return ch - 55
    return -1


def scan_records(const unsigned char[::1] buf, Py_ssize_t pos, int num_cores):
    """Parse trace lines from ``buf[pos:]`` until the end or the first line needing
    the slow path (malformed, oddly blank, or core >= num_cores).

    Returns ``(ops, cores, addrs, pos, lines, stopped)``; when ``stopped`` is true
    the line starting at ``pos`` was not consumed.
    """
    cdef Py_ssize_t n = buf.shape[0]
    cdef Py_ssize_t cap = (n - pos) // 8 + 1
    cdef array.array ops = array.clone(_U8, cap, False)
    cdef array.array cores = array.clone(_U16, cap, False)
    cdef array.array addrs = array.clone(_U64, cap, False)
    cdef unsigned char *o = ops.data.as_uchars
    cdef unsigned short *c = cores.data.as_ushorts
    cdef unsigned long long *a = addrs.data.as_ulonglongs
    cdef Py_ssize_t k = 0, lines = 0, start, end, i
    cdef int core, h
    cdef unsigned long long v
    cdef bint ok, stopped = False
    while pos < n:
        start = pos
        end = pos
        while end < n and buf[end] != 10:
            end += 1
        ok = False
        if end == start or buf[start] == 35:  # blank or '#'
            ok = True
        elif end - start >= 7 and (buf[start] == 76 or buf[start] == 83) and buf[start + 1] == 32:
            i = start + 2
            core = -1
            if 48 <= buf[i] <= 57 and buf[i + 1] == 32:
                core = buf[i] - 48
                i += 2
            elif buf[i] == 49 and 48 <= buf[i + 1] <= 53 and i + 2 < end and buf[i + 2] == 32:
                core = 10 + buf[i + 1] - 48
                i += 3
            if 0 <= core < num_cores and i + 2 < end and buf[i] == 48 and buf[i + 1] == 120:
                i += 2
                v = 0
                ok = True
                while i < end:
                    h = _hexval(buf[i])
                    if h < 0 or v > 0x0FFFFFFFFFFFFFFF:
                        ok = False
                        break
                    v = (v << 4) | h
                    i += 1
                if ok:
                    o[k] = buf[start] == 83
                    c[k] = core
                    a[k] = v
                    k += 1
        if not ok:
            stopped = True
            break
        lines += 1
        pos = end + 1 if end < n else end
    array.resize(ops, k)
    array.resize(cores, k)
    array.resize(addrs, k)
    return ops, cores, addrs, pos, lines, stopped
