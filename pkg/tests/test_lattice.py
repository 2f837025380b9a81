import numpy as np
import pytest

from qsearch.lattice import (
    EVEN,
    ODD,
    GeometryError,
    SizeError,
    all_coords,
    block_partition,
    coords_to_index,
    index_to_coords,
    linf_distance,
    links,
    make_lattice,
    neighbors,
)


def test_sizes():
    assert make_lattice(3, 4).N == 64
    assert make_lattice(2, 16).N == 256


@pytest.mark.parametrize("d,L", [(2, 3), (2, 0), (0, 4), (21, 2)])
def test_bad_geometry(d, L):
    with pytest.raises(GeometryError):
        make_lattice(d, L)


def test_size_cap():
    with pytest.raises(SizeError):
        make_lattice(3, 256)
    assert make_lattice(3, 256, max_n=None).N == 256**3


def test_index_roundtrip():
    lat = make_lattice(3, 4)
    assert index_to_coords(lat, 1) == (1, 0, 0)
    assert index_to_coords(lat, 4) == (0, 1, 0)
    assert coords_to_index(lat, (3, 2, 1)) == 3 + 2 * 4 + 16
    for i in range(lat.N):
        assert coords_to_index(lat, index_to_coords(lat, i)) == i
    with pytest.raises(IndexError):
        index_to_coords(lat, 64)


def test_array_layout_matches_index():
    lat = make_lattice(3, 4)
    arr = np.arange(lat.N).reshape(lat.shape)
    for i in range(lat.N):
        x = index_to_coords(lat, i)
        assert arr[tuple(reversed(x))] == i


def test_neighbors():
    lat = make_lattice(2, 4)
    assert sorted(neighbors(lat, 0)) == sorted([1, 3, 4, 12])
    assert len(neighbors(make_lattice(3, 2), 0)) == 6


def test_links_count_and_shape():
    lat = make_lattice(3, 4)
    lk = links(lat)
    assert lk.shape == (3 * 64, 3)
    assert len({(a, b) for a, b, _ in lk}) == 3 * 64


def test_linf_distance():
    lat = make_lattice(2, 8)
    assert linf_distance(lat, 0, coords_to_index(lat, (7, 3))) == 3
    assert linf_distance(lat, 0, coords_to_index(lat, (4, 4))) == 4


@pytest.mark.parametrize("d,L", [(1, 2), (1, 4), (1, 4096), (2, 2), (2, 4), (2, 6), (2, 64), (3, 2), (3, 4), (3, 16), (4, 8), (6, 4), (12, 2)])
def test_each_parity_tiles_lattice(d, L):
    lat = make_lattice(d, L)
    for parity in (ODD, EVEN):
        blocks = block_partition(lat, parity).blocks
        assert blocks.shape == (lat.N // 2**d, 2**d)
        assert sorted(blocks.ravel()) == list(range(lat.N))


def test_odd_block_anchor_and_corners():
    lat = make_lattice(2, 4)
    odd = block_partition(lat, ODD).blocks
    assert odd[0].tolist() == [0, 1, 4, 5]
    even = block_partition(lat, EVEN).blocks
    # anchor (1,1) covers (1,1),(2,1),(1,2),(2,2)
    assert even[0].tolist() == [5, 6, 9, 10]
    # the wrapped block at anchor (3,3)
    assert even[-1].tolist() == [15, 12, 3, 0]


@pytest.mark.parametrize("d,L", [(2, 4), (3, 4), (2, 8)])
def test_every_link_in_exactly_one_block_per_parity(d, L):
    lat = make_lattice(d, L)
    all_links = {(int(a), int(b), int(m)) for a, b, m in links(lat)}
    seen = []
    for parity in (ODD, EVEN):
        seen.extend((int(a), int(b), int(m)) for a, b, m in block_partition(lat, parity).intra_block_links())
    assert len(seen) == len(set(seen)) == len(all_links)
    assert set(seen) == all_links


def test_bad_parity():
    with pytest.raises(ValueError):
        block_partition(make_lattice(2, 4), "both")


def test_all_coords():
    lat = make_lattice(2, 4)
    c = all_coords(lat)
    assert c.shape == (16, 2)
    assert c[6].tolist() == [2, 1]


def test_nine_dim_L2():
    lat = make_lattice(9, 2)
    assert lat.N == 512
    assert all(len(neighbors(lat, i)) == 18 for i in (0, 100, 511))


def test_one_dim_blocks():
    lat = make_lattice(1, 4)
    assert block_partition(lat, ODD).blocks.tolist() == [[0, 1], [2, 3]]
    assert block_partition(lat, EVEN).blocks.tolist() == [[1, 2], [3, 0]]


def test_L2_single_blocks():
    lat = make_lattice(2, 2)
    assert block_partition(lat, ODD).blocks.tolist() == [[0, 1, 2, 3]]
    assert block_partition(lat, EVEN).blocks.tolist() == [[3, 2, 1, 0]]


@pytest.mark.parametrize("d,L", [(2, 4), (3, 6), (4, 4)])
def test_anchor_parity(d, L):
    lat = make_lattice(d, L)
    for parity, want in ((ODD, 0), (EVEN, 1)):
        anchors = block_partition(lat, parity).blocks[:, 0]
        for a in anchors:
            assert all(c % 2 == want for c in index_to_coords(lat, int(a)))


def test_link_count_two_dim():
    lat = make_lattice(2, 4)
    counts = [len(block_partition(lat, p).intra_block_links()) for p in (ODD, EVEN)]
    assert counts == [16, 16]


def test_coords_example_and_full_roundtrip():
    assert index_to_coords(make_lattice(2, 4), 7) == (3, 1)
    lat = make_lattice(2, 64)
    c = all_coords(lat)
    assert all(coords_to_index(lat, c[i]) == i for i in range(lat.N))
