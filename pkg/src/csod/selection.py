"""Rotating classwise greedy selection with a balance weight lambda.

Starting from per-class prototype pools, classes are visited in a fixed
order and each turn picks the pool candidate maximizing

    score = lambda_c * (sum of cosines to the class's unselected pool)
          -            (sum of cosines to the class's selected pool)

The representativeness sum includes the candidate's own self term: that adds
the constant lambda_c to every candidate of the class and never moves an
argmax, but keeps the incremental bookkeeping uniform. Picking an image
retires every one of its prototypes across all classes; cached sums are
updated incrementally in float64, members processed in ascending id order.
Ties break toward the lowest image id.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .model import Dataset, SelectionResult
from .prototypes import IMAGEWISE, OBJECTWISE, Prototype, PrototypeIndex


class SelectionError(RuntimeError):
    """A selection run cannot proceed (e.g. retry budget exhausted)."""


# Balance-weight anchors by target subset size; geometric interpolation
# in between, clamped at the ends.
DEFAULT_LAMBDA_TABLE: tuple[tuple[int, float], ...] = (
    (100, 0.025),
    (200, 0.04375),
    (500, 0.0625),
    (1000, 0.125),
)


def default_lambda(target_count: int) -> float:
    """Default balance weight for a target subset size."""
    table = DEFAULT_LAMBDA_TABLE
    for n0, l0 in table:
        if target_count == n0:
            return l0
    if target_count < table[0][0]:
        return table[0][1]
    if target_count > table[-1][0]:
        return table[-1][1]
    for (n0, l0), (n1, l1) in zip(table, table[1:]):
        if n0 < target_count < n1:
            t = (math.log(target_count) - math.log(n0)) / (math.log(n1) - math.log(n0))
            return math.exp(math.log(l0) + t * (math.log(l1) - math.log(l0)))
    raise AssertionError("unreachable")


def _check_lambda(value: float, where: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{where} must be finite and >= 0, got {value}")
    return value


@dataclass(frozen=True)
class SelectionConfig:
    """Parameters of one greedy run. `seed` only drives pre-sampling."""

    target_count: int
    lam: float | None = None
    lam_per_class: Mapping[int, float] | None = None
    class_order: tuple[int, ...] | None = None
    presample_per_class: int | None = None
    excluded_image_ids: frozenset[int] = frozenset()
    seed: int = 0
    candidate_mode: str = IMAGEWISE

    def __post_init__(self) -> None:
        if self.target_count < 1:
            raise ValueError("target_count must be positive")
        if self.lam is not None:
            _check_lambda(self.lam, "lambda")
        if self.lam_per_class is not None:
            for c, v in self.lam_per_class.items():
                _check_lambda(v, f"lambda for class {c}")
        if self.presample_per_class is not None and self.presample_per_class < 1:
            raise ValueError("presample_per_class must be positive")
        if self.candidate_mode not in (IMAGEWISE, OBJECTWISE):
            raise ValueError(f"unknown candidate mode {self.candidate_mode!r}")

    def base_lambda(self) -> float:
        return self.lam if self.lam is not None else default_lambda(self.target_count)

    def lambda_for(self, class_id: int) -> float:
        if self.lam_per_class is not None and class_id in self.lam_per_class:
            return float(self.lam_per_class[class_id])
        return self.base_lambda()

    def echo(self) -> dict:
        return {
            "target_count": self.target_count,
            "lambda": self.base_lambda(),
            "lambda_per_class": (
                {str(c): float(v) for c, v in sorted(self.lam_per_class.items())}
                if self.lam_per_class
                else None
            ),
            "class_order": list(self.class_order) if self.class_order else None,
            "presample_per_class": self.presample_per_class,
            "excluded_image_ids": sorted(self.excluded_image_ids),
            "seed": self.seed,
            "candidate_mode": self.candidate_mode,
        }


class _ClassPool:
    __slots__ = (
        "protos", "units", "alive", "rep", "div", "alive_count",
        "selected", "selected_units",
    )

    def __init__(self, protos: list[Prototype]):
        self.protos = protos
        n = len(protos)
        if n:
            vectors = np.stack([p.vector for p in protos]).astype(np.float64)
            norms = np.linalg.norm(vectors, axis=1)
            if bool(np.any(norms == 0.0)):
                raise ValueError("zero-norm prototype vector; cosine undefined")
            self.units = vectors / norms[:, None]
            self.rep = self.units @ self.units.sum(axis=0)
        else:
            self.units = np.zeros((0, 0), dtype=np.float64)
            self.rep = np.zeros(0, dtype=np.float64)
        self.div = np.zeros(n, dtype=np.float64)
        self.alive = np.ones(n, dtype=bool)
        self.alive_count = n
        self.selected: list[Prototype] = []
        self.selected_units: list[np.ndarray] = []

    def exact_score(self, idx: int, lam: float) -> float:
        """From-scratch score with the self cosine taken as exactly 1.0.

        Mathematically tied candidates produce bitwise-equal values here,
        which makes the lowest-image-id tie-break well defined.
        """
        u = self.units[idx]
        rep = 1.0
        for j in np.flatnonzero(self.alive):
            if j != idx:
                rep += float(u @ self.units[j])
        div = 0.0
        for q in self.selected_units:
            div += float(u @ q)
        return lam * rep - div


class SelectionState:
    """Per-class pools and incrementally maintained similarity sums."""

    def __init__(self, dataset: Dataset, prototypes: PrototypeIndex, config: SelectionConfig):
        if prototypes.mode != config.candidate_mode:
            raise ValueError(
                f"prototype index built {prototypes.mode!r}, config expects "
                f"{config.candidate_mode!r}"
            )
        self.dataset = dataset
        self.config = config
        excluded = {i for i in config.excluded_image_ids if 0 <= i < dataset.num_images}
        available = dataset.num_images - len(excluded)
        if config.target_count > available:
            raise ValueError(
                f"target_count {config.target_count} exceeds the {available} "
                "non-excluded images"
            )
        if config.presample_per_class is not None:
            allowed = presample(
                dataset, config.presample_per_class, config.seed, excluded=excluded
            )
        else:
            allowed = frozenset(range(dataset.num_images)) - excluded

        self._pools: dict[int, _ClassPool] = {}
        self._locate: dict[tuple[int, int, int], int] = {}
        for c in range(dataset.num_classes):
            cand = [p for p in prototypes.by_class.get(c, []) if p.image_id in allowed]
            self._pools[c] = _ClassPool(cand)
            for idx, p in enumerate(cand):
                self._locate[p.key] = idx
        self._image_protos = {
            i: [p for p in prototypes.per_image[i]] for i in sorted(allowed)
        }
        self.selected_ids: list[int] = []
        self._selected_set: set[int] = set()

    def pool(self, class_id: int) -> list[Prototype]:
        p = self._pools[class_id]
        return [proto for proto, alive in zip(p.protos, p.alive) if alive]

    def selected_pool(self, class_id: int) -> list[Prototype]:
        return list(self._pools[class_id].selected)

    def pool_size(self, class_id: int) -> int:
        return self._pools[class_id].alive_count

    def any_candidates(self) -> bool:
        return any(p.alive_count for p in self._pools.values())

    def _index_of(self, proto: Prototype) -> tuple[_ClassPool, int]:
        idx = self._locate.get(proto.key)
        if idx is None:
            raise ValueError(f"prototype {proto.key} is not a candidate in this run")
        pool = self._pools[proto.class_id]
        if not pool.alive[idx]:
            raise ValueError(f"prototype {proto.key} already left its pool")
        return pool, idx

    def rep_sum(self, proto: Prototype) -> float:
        pool, idx = self._index_of(proto)
        return float(pool.rep[idx])

    def div_sum(self, proto: Prototype) -> float:
        pool, idx = self._index_of(proto)
        return float(pool.div[idx])

    def score(self, proto: Prototype, lam: float) -> float:
        """Balance-weighted score of a pool candidate."""
        pool, idx = self._index_of(proto)
        return float(lam * pool.rep[idx] - pool.div[idx])

    def pick_for_class(self, class_id: int, lam: float) -> Prototype | None:
        """Argmax pick for one class turn; None when the pool is empty.

        Candidates whose cached score lands within a 1e-9 relative band of
        the maximum are rescored from scratch, so mathematically tied scores
        resolve to the lowest image id rather than to accumulated float
        noise, and the pick order matches a full recomputation exactly.
        """
        pool = self._pools[class_id]
        if pool.alive_count == 0:
            return None
        scores = np.where(pool.alive, lam * pool.rep - pool.div, -np.inf)
        best = float(scores.max())
        near = np.flatnonzero(scores >= best - 1e-9 * max(1.0, abs(best)))
        if near.size == 1:
            idx = int(near[0])
        else:
            idx, idx_score = -1, -np.inf
            for j in near:
                s = pool.exact_score(int(j), lam)
                if s > idx_score:
                    idx, idx_score = int(j), s
        proto = pool.protos[idx]
        self._retire_image(proto.image_id)
        return proto

    def _retire_image(self, image_id: int) -> None:
        # Move every prototype of the image from P to Q, class-ascending then
        # row-ascending, keeping cached sums exact.
        for proto in self._image_protos[image_id]:
            pool = self._pools[proto.class_id]
            idx = self._locate[proto.key]
            sims = pool.units @ pool.units[idx]
            pool.rep -= sims
            pool.div += sims
            pool.alive[idx] = False
            pool.alive_count -= 1
            pool.selected.append(proto)
            pool.selected_units.append(pool.units[idx])
        self.selected_ids.append(image_id)
        self._selected_set.add(image_id)


def presample(
    dataset: Dataset,
    per_class_cap: int,
    seed: int,
    excluded: Iterable[int] = (),
) -> frozenset[int]:
    """Cap per-class candidate images by uniform sampling without replacement.

    Classes are visited in ascending order; each samples up to the cap from
    its images not already taken by an earlier class. Deterministic in seed.
    """
    if per_class_cap < 1:
        raise ValueError("per_class_cap must be positive")
    excluded = set(excluded)
    rng = np.random.default_rng(seed)
    taken: set[int] = set()
    for c in range(dataset.num_classes):
        avail = [
            i for i in dataset.images_with_class(c) if i not in taken and i not in excluded
        ]
        k = min(per_class_cap, len(avail))
        if k == 0:
            continue
        chosen = rng.choice(len(avail), size=k, replace=False)
        taken.update(avail[j] for j in chosen)
    return frozenset(taken)


def select(
    dataset: Dataset,
    prototypes: PrototypeIndex,
    config: SelectionConfig,
    *,
    on_pick: Callable[[SelectionState, int, Prototype], None] | None = None,
    step_sink: Callable[[dict], None] | None = None,
) -> SelectionResult:
    """Run the rotating greedy until the target count or pool exhaustion.

    Classes with an empty pool are skipped. When all pools drain before the
    target is reached the result is returned partial, flagged in its stats.
    """
    state = SelectionState(dataset, prototypes, config)
    order = config.class_order or tuple(range(dataset.num_classes))
    if sorted(order) != list(range(dataset.num_classes)):
        raise ValueError("class_order must be a permutation of 0..C-1")

    counts = {c: 0 for c in range(dataset.num_classes)}
    step = 0
    n = config.target_count
    while len(state.selected_ids) < n and state.any_candidates():
        progressed = False
        for c in order:
            if len(state.selected_ids) == n:
                break
            t0 = time.perf_counter_ns()
            proto = state.pick_for_class(c, config.lambda_for(c))
            if proto is None:
                continue
            progressed = True
            counts[c] += 1
            step += 1
            if step_sink is not None:
                step_sink(
                    {
                        "step": step,
                        "class_id": c,
                        "picked_image_id": proto.image_id,
                        "pool_sizes": [state.pool_size(k) for k in range(dataset.num_classes)],
                        "micros": (time.perf_counter_ns() - t0) // 1000,
                    }
                )
            if on_pick is not None:
                on_pick(state, c, proto)
        if not progressed:
            break

    picked = list(state.selected_ids)
    method = "csod" if config.candidate_mode == IMAGEWISE else "csod-objectwise"
    stats = {
        "picks": len(picked),
        "partial": len(picked) < n,
        "per_class_pick_counts": {str(c): counts[c] for c in sorted(counts)},
    }
    return SelectionResult(method, picked, {"method": method, **config.echo()}, stats)


def sweep_lambda(
    dataset: Dataset,
    prototypes: PrototypeIndex,
    config: SelectionConfig,
    lambda_list: Sequence[float],
) -> list[SelectionResult]:
    """One select() per lambda over a shared prototype index."""
    if not lambda_list:
        raise ValueError("lambda_list must not be empty")
    return [
        select(dataset, prototypes, replace(config, lam=_check_lambda(lam, "lambda")))
        for lam in lambda_list
    ]
