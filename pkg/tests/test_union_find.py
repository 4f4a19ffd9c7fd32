from topo_lidar.core.union_find import UnionFind


def test_younger_component_dies():
    uf = UnionFind([0.0, 3.0, 1.0])
    assert uf.union(0, 1) == 3.0
    assert uf.union(1, 2) == 1.0
    assert uf.n_components == 1
    assert uf.root_births() == [0.0]


def test_union_of_joined_vertices_returns_none():
    uf = UnionFind([0.0, 0.0])
    assert uf.union(0, 1) == 0.0
    assert uf.union(1, 0) is None
    assert uf.n_components == 1


def test_equal_births_keep_the_smaller_index():
    uf = UnionFind([2.0, 2.0, 2.0, 2.0])
    uf.union(2, 3)
    uf.union(0, 1)
    uf.union(3, 1)
    root = uf.find(3)
    assert uf.elder[root] == 0


def test_survivor_key_follows_the_new_root():
    # the big component is younger, so the small component's birth must survive
    uf = UnionFind([5.0, 5.0, 5.0, 0.0])
    uf.union(0, 1)
    uf.union(1, 2)
    assert uf.union(2, 3) == 5.0
    assert uf.root_births() == [0.0]
    assert len(uf.roots()) == 1
