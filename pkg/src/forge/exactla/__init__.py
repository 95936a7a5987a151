from forge.exactla.core import (
    DEFAULT_P,
    Matrix,
    PrimeField,
    Subspace,
    default_prime,
    direct_double,
    make_rng,
    mat_rank,
    random_generic_subspace,
    sample_until,
    subspace_intersect,
    subspace_sum,
    sum_all,
)
from forge.exactla.lemmas import (
    Permutation,
    block_pair_matrix,
    block_rank_pair,
    block_rank_triple,
    block_triple_matrix,
    derangement_rank,
)

__all__ = [
    "DEFAULT_P",
    "Matrix",
    "Permutation",
    "PrimeField",
    "Subspace",
    "block_pair_matrix",
    "block_rank_pair",
    "block_rank_triple",
    "block_triple_matrix",
    "default_prime",
    "derangement_rank",
    "direct_double",
    "make_rng",
    "mat_rank",
    "random_generic_subspace",
    "sample_until",
    "subspace_intersect",
    "subspace_sum",
    "sum_all",
]
