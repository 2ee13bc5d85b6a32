"""Parameter bundles for the dynamic stochastic block models."""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from geodesic_dcd.errors import ConfigError


class Variant(str, Enum):
    SIMPLE = "SIMPLE"
    SSBM = "SSBM"
    MMSBM = "MMSBM"
    DSBM = "DSBM"
    SCBM = "SCBM"
    HSBM = "HSBM"
    MVSBM = "MVSBM"
    MERGE = "MERGE"


@dataclass(frozen=True)
class TreeNode:
    """Weighted rooted tree for the hierarchical model; leaves are communities."""

    weight: float
    children: Tuple["TreeNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> List["TreeNode"]:
        if self.is_leaf:
            return [self]
        return [leaf for child in self.children for leaf in child.leaves()]

    def to_dict(self) -> Dict[str, Any]:
        if self.is_leaf:
            return {"weight": self.weight}
        return {"weight": self.weight, "children": [c.to_dict() for c in self.children]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], where: str = "tree") -> "TreeNode":
        if not isinstance(data, dict) or "weight" not in data:
            raise ConfigError("tree node needs a weight", field=where)
        children = data.get("children", [])
        if not isinstance(children, list):
            raise ConfigError("children must be a list", field=f"{where}.children")
        return cls(weight=float(data["weight"]),
                   children=tuple(cls.from_dict(c, f"{where}.children[{i}]")
                                  for i, c in enumerate(children)))


def default_tree() -> TreeNode:
    """Depth-2 binary tree with weights in 0.4 +/- 0.05 (four leaf communities)."""
    leaf = TreeNode(0.45)
    branch = TreeNode(0.4, (leaf, leaf))
    return TreeNode(0.35, (branch, branch))


@dataclass(frozen=True, eq=False)
class SbmConfig:
    """Dynamic SBM parameters.

    Variant-specific fields are ignored by the other variants. Matrices are
    nested lists in config files and numpy arrays here.
    """

    variant: Variant = Variant.SIMPLE
    d: int = 120
    T: int = 20
    k: int = 2
    p_in: float = 0.3
    p_out: float = 0.2
    p_switch: float = 1e-2
    seed: int = 0
    # SSBM
    eta_in: float = 0.0
    eta_out: float = 0.0
    # DSBM orientation matrix
    F: Optional[np.ndarray] = None
    # MMSBM k×k edge probabilities, SCBM k_y×k_z
    B: Optional[np.ndarray] = None
    # MMSBM initial memberships
    Phi: Optional[np.ndarray] = None
    # SCBM
    p_switch_send: Optional[float] = None
    p_switch_receive: Optional[float] = None
    bipartite_split: Optional[Tuple[int, int]] = None
    # HSBM
    tree: Optional[TreeNode] = None
    # MVSBM
    S: int = 3
    # MERGE: (source, target) pairs merged over [merge_start, merge_end] as fractions of T
    merges: Tuple[Tuple[int, int], ...] = ((0, 1), (2, 3))
    merge_start: float = 1.0 / 3.0
    merge_end: float = 2.0 / 3.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}", field="variant")
        for name in ("F", "B", "Phi"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.array(value, dtype=np.float64))
        if isinstance(self.tree, dict):
            object.__setattr__(self, "tree", TreeNode.from_dict(self.tree))
        if self.bipartite_split is not None:
            object.__setattr__(self, "bipartite_split", tuple(int(n) for n in self.bipartite_split))
        object.__setattr__(self, "merges", tuple(tuple(int(v) for v in m) for m in self.merges))
        self.validate()

    # ---- validation ---------------------------------------------------------

    def _probability(self, name: str, value: Optional[float]) -> None:
        if value is None:
            return
        if not 0.0 <= float(value) <= 1.0:
            raise ConfigError(f"probability {value} outside [0, 1]", field=name)

    def _matrix_probabilities(self, name: str, matrix: np.ndarray) -> None:
        if np.any(matrix < 0) or np.any(matrix > 1):
            raise ConfigError("entries must lie in [0, 1]", field=name)

    def validate(self) -> None:
        if self.d < 1:
            raise ConfigError("must be positive", field="d")
        if self.T < 1:
            raise ConfigError("must be positive", field="T")
        if self.k < 1:
            raise ConfigError("must be positive", field="k")
        for name in ("p_in", "p_out", "p_switch", "eta_in", "eta_out",
                     "p_switch_send", "p_switch_receive", "merge_start", "merge_end"):
            self._probability(name, getattr(self, name))

        variant = self.variant
        if variant is not Variant.SCBM and variant is not Variant.HSBM and self.k > self.d:
            raise ConfigError(f"k={self.k} exceeds d={self.d}", field="k")

        if variant is Variant.SSBM:
            for name in ("eta_in", "eta_out"):
                if getattr(self, name) >= 0.5:
                    raise ConfigError("must be below 1/2", field=name)

        if variant is Variant.DSBM and self.F is not None:
            F = self.F
            if F.shape != (self.k, self.k):
                raise ConfigError(f"must be {self.k}x{self.k}", field="F")
            self._matrix_probabilities("F", F)
            if not np.allclose(F + F.T, 1.0, atol=1e-12):
                raise ConfigError("F[l, j] + F[j, l] must equal 1", field="F")

        if variant is Variant.MMSBM:
            if self.B is not None:
                if self.B.shape != (self.k, self.k):
                    raise ConfigError(f"must be {self.k}x{self.k}", field="B")
                self._matrix_probabilities("B", self.B)
            if self.Phi is not None:
                Phi = self.Phi
                if Phi.shape != (self.d, self.k):
                    raise ConfigError(f"must be {self.d}x{self.k}", field="Phi")
                if np.any(Phi < 0) or not np.allclose(Phi.sum(axis=1), 1.0, atol=1e-9):
                    raise ConfigError("rows must be nonnegative and sum to 1", field="Phi")

        if variant is Variant.SCBM:
            B = self.B
            if B is not None:
                if B.ndim != 2:
                    raise ConfigError("must be a k_y x k_z matrix", field="B")
                self._matrix_probabilities("B", B)
            k_y, k_z = self.coblock_shape
            if self.bipartite_split is not None:
                n1, n2 = self.bipartite_split
                if n1 + n2 != self.d or n1 < k_y or n2 < k_z:
                    raise ConfigError(f"{(n1, n2)} does not fit d={self.d} and B {k_y}x{k_z}",
                                      field="bipartite_split")
            elif self.d < max(k_y, k_z):
                raise ConfigError(f"d={self.d} smaller than the number of communities", field="d")

        if variant is Variant.HSBM:
            self._validate_tree(self.hierarchy, "tree")
            if len(self.hierarchy.leaves()) > self.d:
                raise ConfigError("more leaves than nodes", field="tree")

        if variant is Variant.MVSBM and self.S < 1:
            raise ConfigError("must be at least 1", field="S")

        if variant is Variant.MERGE:
            if self.merge_start > self.merge_end:
                raise ConfigError("merge_start must not exceed merge_end", field="merge_start")
            used = set()
            for source, target in self.merges:
                for c in (source, target):
                    if not 0 <= c < self.k or c in used:
                        raise ConfigError(f"invalid or repeated community {c}", field="merges")
                    used.add(c)

    def _validate_tree(self, node: TreeNode, where: str) -> None:
        if not 0.0 <= node.weight <= 1.0:
            raise ConfigError(f"weight {node.weight} outside [0, 1]", field=where)
        if len(node.children) == 1:
            raise ConfigError("internal nodes need at least two children", field=where)
        for i, child in enumerate(node.children):
            self._validate_tree(child, f"{where}.children[{i}]")

    # ---- derived parameters -------------------------------------------------

    @property
    def coblock_shape(self) -> Tuple[int, int]:
        if self.B is not None and self.B.ndim == 2:
            return self.B.shape
        return (self.k, self.k)

    @property
    def hierarchy(self) -> TreeNode:
        return self.tree if self.tree is not None else default_tree()

    def orientation(self) -> np.ndarray:
        return self.F if self.F is not None else np.full((self.k, self.k), 0.5)

    def block_matrix(self) -> np.ndarray:
        """B if given, else p_in on the diagonal and p_out elsewhere."""
        if self.B is not None:
            return self.B
        if self.variant is Variant.SCBM:
            k_y, k_z = self.coblock_shape
            return np.where(np.eye(k_y, k_z, dtype=bool), 0.5, 0.3)
        return np.where(np.eye(self.k, dtype=bool), self.p_in, self.p_out)

    def memberships(self) -> np.ndarray:
        """Φ if given, else pure blocks with d//6 evenly mixed nodes after community 0."""
        if self.Phi is not None:
            return self.Phi
        n_mixed = self.d // 6
        sizes = equal_sizes(self.d - n_mixed, self.k)
        rows = [np.eye(self.k)[0]] * int(sizes[0])
        rows += [np.full(self.k, 1.0 / self.k)] * n_mixed
        for c in range(1, self.k):
            rows += [np.eye(self.k)[c]] * int(sizes[c])
        return np.array(rows)

    def switch_rates(self) -> Tuple[float, float]:
        send = self.p_switch if self.p_switch_send is None else self.p_switch_send
        receive = self.p_switch if self.p_switch_receive is None else self.p_switch_receive
        return send, receive

    # ---- (de)serialization --------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            elif isinstance(value, TreeNode):
                value = value.to_dict()
            elif isinstance(value, Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = [list(v) if isinstance(v, tuple) else v for v in value]
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SbmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", field="sbm")
        kwargs = dict(data)
        if "tree" in kwargs and kwargs["tree"] is not None:
            kwargs["tree"] = TreeNode.from_dict(kwargs["tree"])
        if "merges" in kwargs:
            kwargs["merges"] = tuple(tuple(m) for m in kwargs["merges"])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), field="sbm")

    def with_seed(self, seed: int) -> "SbmConfig":
        data = self.to_dict()
        data["seed"] = int(seed)
        return SbmConfig.from_dict(data)


def equal_sizes(n: int, k: int) -> np.ndarray:
    """Sizes of k near-equal groups; the first n % k groups get one extra node."""
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    return sizes


def equal_split(n: int, k: int) -> np.ndarray:
    """Contiguous labels for n nodes in k near-equal communities."""
    return np.repeat(np.arange(k), equal_sizes(n, k))
