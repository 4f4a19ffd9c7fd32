"""Disjoint-set forest used by every 0-dim persistence computation."""

from typing import Iterable, List, Optional


class UnionFind:
    """
    List-backed union-find with path halving.

    Each root carries the birth value of its component and the index of the
    component's oldest vertex, so a merge can apply the elder rule: of the two
    components, the one with the larger (birth, oldest index) key dies.
    """

    def __init__(self, births: Iterable[float]):
        self.birth: List[float] = [float(b) for b in births]
        n = len(self.birth)
        self.parent: List[int] = list(range(n))
        self.size: List[int] = [1] * n
        self.elder: List[int] = list(range(n))
        self.n_components = n

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> Optional[float]:
        """
        Merges the components of `a` and `b`.
        Returns the birth of the component that dies in the merge,
        or None when both already share a component.
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return None

        key_a = (self.birth[ra], self.elder[ra])
        key_b = (self.birth[rb], self.elder[rb])
        dying, surviving = (rb, ra) if key_a < key_b else (ra, rb)
        dying_birth = self.birth[dying]
        birth, elder = self.birth[surviving], self.elder[surviving]

        # union by size; the new root inherits the survivor's key
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.birth[ra] = birth
        self.elder[ra] = elder
        self.n_components -= 1
        return dying_birth

    def roots(self) -> List[int]:
        return [i for i in range(len(self.parent)) if self.find(i) == i]

    def root_births(self) -> List[float]:
        return [self.birth[r] for r in self.roots()]
