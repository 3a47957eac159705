"""Map-task assignment strategies: batch (coded), naive block, conventional."""

from itertools import combinations

from .errors import NaiveShapeError, ShapeError
from .model import Assignment, JobSpec


def server_subsets(k, size):
    """All ``size``-subsets of servers 1..k in lexicographic order."""
    return list(combinations(range(1, k + 1), size))


def assign_batch(spec: JobSpec) -> Assignment:
    """Split the subfiles into C(K, pK) batches of g and give batch i to the
    i-th pK-subset of servers.

    Batches take subfiles in index order and subsets are enumerated
    lexicographically, which for N=12, K=4, pK=2 yields
    M_1 = {1..6}, M_2 = {1,2,7,8,9,10}, M_3 = {3,4,7,8,11,12},
    M_4 = {5,6,9,10,11,12}.
    """
    g = spec.g
    by_subfile = []
    for subset in server_subsets(spec.k, spec.pk):
        by_subfile.extend([subset] * g)
    if len(by_subfile) != spec.n:
        raise ShapeError(f"N = {spec.n} is not g * C(K, pK); validate the spec first")
    return Assignment.from_by_subfile(by_subfile, spec.k)


def assign_naive(spec: JobSpec) -> Assignment:
    """Servers in K/pK consecutive groups of pK; group j maps the j-th block
    of pN consecutive subfiles."""
    if spec.k % spec.pk:
        raise NaiveShapeError(f"pK = {spec.pk} does not divide K = {spec.k}")
    groups = spec.k // spec.pk
    if spec.n % groups:
        raise NaiveShapeError(f"N = {spec.n} does not split into {groups} blocks")
    block = spec.n // groups
    by_server = []
    for k in range(spec.k):
        j = k // spec.pk
        by_server.append(range(j * block + 1, (j + 1) * block + 1))
    return Assignment.from_by_server(by_server, spec.n)


def assign_conventional(spec: JobSpec) -> Assignment:
    """Each subfile goes to exactly one server, in contiguous blocks of N/K."""
    if spec.pk != 1 or spec.rk != 1:
        raise ShapeError("conventional assignment needs pK = rK = 1")
    if spec.n % spec.k:
        raise ShapeError(f"K = {spec.k} does not divide N = {spec.n}")
    block = spec.n // spec.k
    return Assignment.from_by_server(
        [range(k * block + 1, (k + 1) * block + 1) for k in range(spec.k)], spec.n
    )


STRATEGIES = {
    "batch": assign_batch,
    "naive": assign_naive,
    "conventional": assign_conventional,
}


def assign(spec: JobSpec, strategy: str = "batch") -> Assignment:
    try:
        fn = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {sorted(STRATEGIES)}")
    return fn(spec)
