"""Block-to-processor scheduling.

Blocks are classified by dimension into small, medium, and large. Small
blocks go to single processors by the longest-processing-time greedy rule
(no communication), medium blocks get contiguous processor subgroups placed
greedily, and large blocks span all processors. A cyclic single-processor
distribution serves as the baseline, and an exhaustive search provides the
optimum for small instances.

Cost model: a block of work w on g processors costs each participant
w/g + alpha * (g - 1) * comm_weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

BRUTE_FORCE_CAP = 10_000_000


@dataclass(frozen=True)
class BlockLoad:
    id: int
    dim: int
    work: float
    comm_weight: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"block {self.id}: dim must be >= 1")
        if self.work <= 0:
            raise ConfigError(f"block {self.id}: work must be positive")
        if self.comm_weight < 0:
            raise ConfigError(f"block {self.id}: comm_weight must be nonnegative")


@dataclass(frozen=True)
class SizeClassThresholds:
    small_max_dim: int = 512
    medium_max_dim: int = 4096

    def __post_init__(self):
        if not 0 < self.small_max_dim < self.medium_max_dim:
            raise ConfigError("need 0 < small_max_dim < medium_max_dim")

    def size_class(self, dim: int) -> str:
        if dim <= self.small_max_dim:
            return "small"
        if dim <= self.medium_max_dim:
            return "medium"
        return "large"


@dataclass(frozen=True)
class CostModelParams:
    alpha: float = 0.05

    def block_cost(self, load: BlockLoad, g: int) -> float:
        """Per-participant cost of running a block on g processors."""
        if g < 1:
            raise ConfigError("processor group must be nonempty")
        if g == 1:
            return load.work
        return load.work / g + self.alpha * (g - 1) * load.comm_weight


@dataclass
class Assignment:
    n_procs: int
    policy: str
    procs_by_block: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_procs < 1:
            raise ConfigError("n_procs must be >= 1")
        for bid, procs in self.procs_by_block.items():
            if any(p < 0 or p >= self.n_procs for p in procs):
                raise ConfigError(f"block {bid}: processor id out of range")


@dataclass(frozen=True)
class ScheduleMetrics:
    makespan: float
    per_proc_load: tuple[float, ...]
    imbalance: float


def classify(blocks, thresholds: SizeClassThresholds):
    """Partition blocks into (small, medium, large) by dimension."""
    small = [b for b in blocks if thresholds.size_class(b.dim) == "small"]
    medium = [b for b in blocks if thresholds.size_class(b.dim) == "medium"]
    large = [b for b in blocks if thresholds.size_class(b.dim) == "large"]
    return small, medium, large


def _subgroup_size(load: BlockLoad, thresholds: SizeClassThresholds, n_procs: int) -> int:
    g = int(round(load.dim / thresholds.small_max_dim))
    return max(2, min(g, n_procs)) if n_procs >= 2 else 1


def greedy_assign(
    blocks,
    n_procs: int,
    thresholds: SizeClassThresholds | None = None,
    cost: CostModelParams | None = None,
) -> Assignment:
    """Greedy load-balanced assignment.

    Large blocks first (all processors), then medium blocks on contiguous
    subgroups placed where the current peak load is lowest, then small
    blocks by the longest-processing-time rule. Ties break to the lowest
    processor index, then the lowest block id.
    """
    if n_procs < 1:
        raise ConfigError("n_procs must be >= 1")
    thresholds = thresholds or SizeClassThresholds()
    cost = cost or CostModelParams()
    small, medium, large = classify(blocks, thresholds)
    loads = np.zeros(n_procs)
    procs_by_block: dict[int, tuple[int, ...]] = {}

    for b in sorted(large, key=lambda b: (-b.work, b.id)):
        procs_by_block[b.id] = tuple(range(n_procs))
        loads += cost.block_cost(b, n_procs)

    for b in sorted(medium, key=lambda b: (-b.work, b.id)):
        g = _subgroup_size(b, thresholds, n_procs)
        window_peaks = [loads[s:s + g].max() for s in range(n_procs - g + 1)]
        start = int(np.argmin(window_peaks))  # argmin takes the lowest index on ties
        procs_by_block[b.id] = tuple(range(start, start + g))
        loads[start:start + g] += cost.block_cost(b, g)

    for b in sorted(small, key=lambda b: (-b.work, b.id)):
        p = int(np.argmin(loads))
        procs_by_block[b.id] = (p,)
        loads[p] += b.work

    return Assignment(n_procs=n_procs, policy="greedy", procs_by_block=procs_by_block)


def cyclic_assign(blocks, n_procs: int) -> Assignment:
    """Block k (input order) to processor k mod n_procs, singleton sets."""
    if n_procs < 1:
        raise ConfigError("n_procs must be >= 1")
    procs_by_block = {b.id: (k % n_procs,) for k, b in enumerate(blocks)}
    return Assignment(n_procs=n_procs, policy="cyclic", procs_by_block=procs_by_block)


def evaluate(assignment: Assignment, blocks, cost: CostModelParams | None = None) -> ScheduleMetrics:
    """Makespan and per-processor loads of an assignment under the cost model."""
    cost = cost or CostModelParams()
    loads = np.zeros(assignment.n_procs)
    for b in blocks:
        procs = assignment.procs_by_block.get(b.id)
        if not procs:
            raise ConfigError(f"assignment does not cover block {b.id}")
        t = cost.block_cost(b, len(procs))
        for p in procs:
            loads[p] += t
    makespan = float(loads.max())
    mean = float(loads.mean())
    return ScheduleMetrics(
        makespan=makespan,
        per_proc_load=tuple(float(x) for x in loads),
        imbalance=makespan / mean if mean > 0 else float("inf"),
    )


def brute_force_assign(blocks, n_procs: int, cost: CostModelParams | None = None) -> Assignment:
    """Exhaustive minimum-makespan singleton assignment (oracle).

    Every block runs on exactly one processor. Among all optimal
    assignments, returns the lexicographically smallest block-to-processor
    vector (in input block order).
    """
    if n_procs < 1:
        raise ConfigError("n_procs must be >= 1")
    blocks = list(blocks)
    count = len(blocks)
    if n_procs**count > BRUTE_FORCE_CAP:
        raise ConfigError(
            f"search space {n_procs}^{count} exceeds cap {BRUTE_FORCE_CAP}"
        )
    works = [b.work for b in blocks]

    # phase 1: optimum value by depth-first search with pruning
    best = float("inf")

    def dfs(i, loads, peak):
        nonlocal best
        if peak >= best:
            return
        if i == count:
            best = peak
            return
        for p in range(n_procs):
            prior = loads[p]
            loads[p] = prior + works[i]  # exact restore below keeps paths bitwise stable
            dfs(i + 1, loads, max(peak, loads[p]))
            loads[p] = prior

    dfs(0, [0.0] * n_procs, 0.0)

    # phase 2: first assignment in lexicographic order achieving the optimum
    def dfs_lex(i, loads, peak, choice):
        if peak > best:
            return None
        if i == count:
            return list(choice)
        for p in range(n_procs):
            prior = loads[p]
            loads[p] = prior + works[i]
            choice.append(p)
            found = dfs_lex(i + 1, loads, max(peak, loads[p]), choice)
            choice.pop()
            loads[p] = prior
            if found is not None:
                return found
        return None

    chosen = dfs_lex(0, [0.0] * n_procs, 0.0, [])
    procs_by_block = {b.id: (p,) for b, p in zip(blocks, chosen)}
    return Assignment(n_procs=n_procs, policy="optimal", procs_by_block=procs_by_block)


# ---------------------------------------------------------------------------
# synthetic load profiles

WORK_PER_DIM3 = 1e-9
COMM_PER_DIM2 = 1e-9


def _load_from_dim(bid: int, dim: int) -> BlockLoad:
    return BlockLoad(
        id=bid, dim=dim,
        work=WORK_PER_DIM3 * float(dim) ** 3,
        comm_weight=COMM_PER_DIM2 * float(dim) ** 2,
    )


def synth_loads(profile: str, seed: int = 0, n_blocks: int = 200) -> list[BlockLoad]:
    """Deterministic synthetic block-load profiles.

    ``c12_nmax6_like``: heavy-tailed dims spanning 1 to beyond 36,000, with
    the extremes always present. ``uniform(dim,work,count)``: identical
    blocks with the given dimension and work.
    """
    profile = profile.strip()
    if profile == "c12_nmax6_like":
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xC12])
        dims = [1, int(36_000 + rng.integers(0, 6_000))]
        log_hi = np.log(40_000.0)
        raw = np.exp(rng.uniform(0.0, log_hi, size=max(n_blocks - 2, 0)))
        dims.extend(int(max(1, round(d))) for d in raw)
        return [_load_from_dim(i, d) for i, d in enumerate(dims)]
    if profile.startswith("uniform(") and profile.endswith(")"):
        parts = profile[len("uniform("):-1].split(",")
        if len(parts) != 3:
            raise ConfigError("uniform profile needs (dim, work, count)")
        dim, work, count = int(parts[0]), float(parts[1]), int(parts[2])
        return [
            BlockLoad(id=i, dim=dim, work=work, comm_weight=COMM_PER_DIM2 * dim**2)
            for i in range(count)
        ]
    raise ConfigError(f"unknown load profile {profile!r}")


def loads_for_blocks(dims, labels=None) -> list[BlockLoad]:
    """Block loads for real operator blocks under the dim^3 work model."""
    return [_load_from_dim(i, int(d)) for i, d in enumerate(dims)]
