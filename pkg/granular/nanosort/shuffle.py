from typing import List, Sequence, TypeVar, Union
import numpy as np
from granular.core.exceptions import ConfigurationError
T = TypeVar('T')


def initial_shuffle(items: Sequence[T], num_nodes: int, rng: Union[np.random.Generator, int, None]) -> List[List[T]]:
    if num_nodes < 1:
        raise ConfigurationError(f"Need at least one node, got {num_nodes}")
    if len(items) % num_nodes:
        raise ConfigurationError(f"{len(items)} keys cannot be split evenly over {num_nodes} nodes")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    order = gen.permutation(len(items))
    per_node = len(items) // num_nodes
    return [
        [items[i] for i in order[node * per_node:(node + 1) * per_node]]
        for node in range(num_nodes)
    ]


def node_partition(group: range, b: int) -> List[range]:
    if len(group) % b:
        raise RuntimeError(f"Group of {len(group)} nodes cannot be split into {b} equal sets")
    size = len(group) // b
    return [range(group.start + i * size, group.start + (i + 1) * size) for i in range(b)]
