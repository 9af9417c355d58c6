import pytest
from hypothesis import given
from hypothesis import strategies as st

from snoopsim.core import CacheGeometry, CoherenceState, SchemeConfig, SchemeVariant, block_of

DEFAULT = CacheGeometry()


@pytest.mark.parametrize(
    "addr, expected",
    [
        (0x0, (0, 0, 0)),
        (0x1000, (0, 1, 64)),
        (0x107F, (1, 1, 65)),
    ],
)
def test_block_of_examples(addr, expected):
    assert tuple(block_of(addr, DEFAULT)) == expected


@given(st.integers(0, 2**64 - 1), st.sampled_from([1, 2, 64, 256]), st.sampled_from([8, 32, 64, 128]))
def test_block_round_trip(addr, sets, bsize):
    g = CacheGeometry(num_sets=sets, block_size_bytes=bsize)
    set_index, tag, block = block_of(addr, g)
    assert tag * sets + set_index == block
    assert block * bsize == addr - addr % bsize


@given(st.integers(0, 2**58 - 1), st.integers(0, 63), st.integers(0, 63))
def test_same_aligned_region_same_set_and_tag(block, off1, off2):
    base = block * 64
    assert block_of(base + off1, DEFAULT)[:2] == block_of(base + off2, DEFAULT)[:2]


@pytest.mark.parametrize("kw", [
    dict(num_sets=48), dict(num_sets=0), dict(block_size_bytes=48), dict(ways=0),
    dict(num_cores=0), dict(num_cores=17),
])
def test_geometry_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        CacheGeometry(**kw)


def test_geometry_accepts_single_core():
    assert CacheGeometry(num_cores=1).num_cores == 1


def test_state_predicates():
    S = CoherenceState
    assert {s for s in S if s.is_valid} == {S.M, S.O, S.E, S.S}
    assert {s for s in S if s.is_owner} == {S.M, S.O}
    assert {s for s in S if s.is_dirty} == {S.M, S.O}
    assert {s for s in S if s.is_exclusive} == {S.M, S.E}


def test_scheme_params_present_exactly_when_required():
    with pytest.raises(ValueError):
        SchemeConfig(SchemeVariant.THRESHOLD)
    with pytest.raises(ValueError):
        SchemeConfig(SchemeVariant.INVALIDATE_ONLY, threshold_T=1)
    with pytest.raises(ValueError):
        SchemeConfig(SchemeVariant.UPDATE_ONLY, min_sharers_K=2)
    with pytest.raises(ValueError):
        SchemeConfig.threshold(-1)
    assert SchemeConfig.num_sharers(4).param == 4
    assert str(SchemeConfig.threshold(3)) == "threshold:3"
    assert str(SchemeConfig.adapted_moesi()) == "adapted"
