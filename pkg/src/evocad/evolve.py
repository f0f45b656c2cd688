"""Population lifecycle for evolutionary CAD generation.

One run is: seeded initialization from few-shot examples, then a fixed
number of generations, each consisting of a two-step evaluation (render
and describe every compiled individual, then rank the descriptions three
times and average), exponential rank selection, crossover, an optional
mutation per child, and elitist replacement.  The best individuals carry
their code into the next generation unmodified; their rank is recomputed
each generation because ranking is relative to the cohort.

Determinism: one master seed feeds independent named RNG streams
(few-shot, selection, mutation-gate), so with a deterministic backend
two runs with the same inputs produce byte-identical traces.

Compile failures are never fatal: each freshly generated program gets
exactly one repair round through the generator, and individuals that
still fail carry a penalty rank of population size + 1.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .bridge import CsgEngine
from .errors import BackendError, EmptyResponse
from .geometry import TriMesh
from .lm import (
    Backend,
    FewShotStore,
    MockBackend,
    ModelRoleConfig,
    WireBackend,
    average_rankings,
    build_crossover_prompt,
    build_describe_prompt,
    build_init_prompt,
    build_mutation_prompt,
    build_selfdebug_prompt,
    default_role_configs,
    extract_code,
    rank_once,
)
from .render import Image, render_multiview

_DISTINCT_PARENT_TRIES = 100


@dataclass(frozen=True)
class EvoConfig:
    """Run parameters.  The defaults are the standard operating point."""

    population: int = 6
    generations: int = 4
    few_shots: int = 5
    mutation_prob: float = 0.5
    selection_lambda: float = 0.5
    elites: int = 1
    seed: int = 0
    render_size: int = 256

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not 0 <= self.elites < self.population:
            raise ValueError("elites must be fewer than the population")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation probability must be within [0, 1]")
        if self.selection_lambda <= 0:
            raise ValueError("selection lambda must be positive")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.few_shots < 0:
            raise ValueError("few_shots must be non-negative")
        if self.render_size < 64:
            raise ValueError("render size below 64 loses too much detail")


@dataclass(frozen=True)
class BackendSuite:
    """Backend bindings plus call configs for the three roles."""

    generator: Backend
    describer: Backend
    ranker: Backend
    configs: dict[str, ModelRoleConfig]

    @classmethod
    def mock(cls, seed: int = 0) -> "BackendSuite":
        backend = MockBackend(seed)
        return cls(backend, backend, backend, default_role_configs())

    @classmethod
    def wire(cls, base_url: str, model_names: dict[str, str] | None = None) -> "BackendSuite":
        backend = WireBackend(base_url)
        names = model_names or {}
        configs = {
            role: ModelRoleConfig(role, names.get(role, cfg.model_name),
                                  temperature=cfg.temperature)
            for role, cfg in default_role_configs().items()
        }
        return cls(backend, backend, backend, configs)


@dataclass
class Individual:
    """One population member and everything learned about it."""

    ident: int
    code: str
    ok: bool
    error: str = ""
    self_debugged: bool = False
    backend_failed: bool = False
    mesh: TriMesh | None = None
    image: Image | None = None
    description: str = ""
    avg_rank: float | None = None
    parents: tuple[int, ...] = ()
    operator: str = "root"

    def snapshot(self) -> dict:
        digest = ""
        if self.image is not None:
            digest = hashlib.sha256(self.image.rgb).hexdigest()[:16]
        return {
            "id": self.ident,
            "code": self.code,
            "ok": self.ok,
            "error": self.error,
            "self_debugged": self.self_debugged,
            "description": self.description,
            "avg_rank": self.avg_rank,
            "parents": list(self.parents),
            "operator": self.operator,
            "image_digest": digest,
        }


@dataclass
class GenerationTrace:
    """Everything needed to audit or replay one evaluated generation."""

    generation: int
    individuals: list[dict]
    rankings: list[list[int]]
    degraded: list[bool]
    retries: list[int]
    avg_ranks: dict[int, float]
    parent_pairs: list[tuple[int, int]]
    mutation_gates: list[bool]
    elite: int
    rng_digests: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "individuals": self.individuals,
            "rankings": [list(r) for r in self.rankings],
            "degraded": list(self.degraded),
            "retries": list(self.retries),
            "avg_ranks": {str(k): v for k, v in self.avg_ranks.items()},
            "parent_pairs": [list(p) for p in self.parent_pairs],
            "mutation_gates": list(self.mutation_gates),
            "elite": self.elite,
            "rng_digests": dict(self.rng_digests),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationTrace":
        return cls(
            generation=data["generation"],
            individuals=data["individuals"],
            rankings=[list(r) for r in data["rankings"]],
            degraded=list(data["degraded"]),
            retries=list(data["retries"]),
            avg_ranks={int(k): v for k, v in data["avg_ranks"].items()},
            parent_pairs=[tuple(p) for p in data["parent_pairs"]],
            mutation_gates=list(data["mutation_gates"]),
            elite=data["elite"],
            rng_digests=dict(data["rng_digests"]),
        )


@dataclass
class RunResult:
    elite: Individual
    traces: list[GenerationTrace]
    population: list[Individual]
    call_counts: Counter = field(default_factory=Counter)

    @property
    def generator_calls(self) -> int:
        return sum(
            self.call_counts[k]
            for k in ("init", "crossover", "mutation", "selfdebug")
        )


def write_traces(path, traces: list[GenerationTrace]):
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_dict(), sort_keys=True) + "\n")


def read_traces(path) -> list[GenerationTrace]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(GenerationTrace.from_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# seeded streams


def named_stream(seed: int, name: str) -> np.random.Generator:
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence((seed, tag)))


def _rng_digest(rng: np.random.Generator) -> str:
    state = json.dumps(rng.bit_generator.state, sort_keys=True, default=int)
    return hashlib.sha256(state.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# selection


def selection_probabilities(avg_ranks: dict[int, float], lam: float) -> dict[int, float]:
    """Exponential rank weighting: p(r) = exp(-lam r) / sum exp(-lam r')."""
    if not avg_ranks:
        raise ValueError("no ranks to select from")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    ids = sorted(avg_ranks)
    ranks = np.array([avg_ranks[i] for i in ids], dtype=np.float64)
    weights = np.exp(-lam * (ranks - ranks.min()))
    probs = weights / weights.sum()
    return {i: float(p) for i, p in zip(ids, probs)}


def select_parent_pairs(probabilities: dict[int, float], count: int,
                        rng: np.random.Generator) -> list[tuple[int, int]]:
    """Weighted pairs with distinct members.

    The second slot resamples until it differs from the first, bounded;
    if the bound is hit, the most probable other id steps in.
    """
    if len(probabilities) < 2:
        raise ValueError("pair selection needs at least two candidates")
    ids = sorted(probabilities)
    p = np.array([probabilities[i] for i in ids], dtype=np.float64)
    p = p / p.sum()
    pairs = []
    for _ in range(count):
        first = ids[int(rng.choice(len(ids), p=p))]
        second = first
        for _ in range(_DISTINCT_PARENT_TRIES):
            second = ids[int(rng.choice(len(ids), p=p))]
            if second != first:
                break
        if second == first:
            others = sorted((i for i in ids if i != first),
                            key=lambda i: (-probabilities[i], i))
            second = others[0]
        pairs.append((first, second))
    return pairs


# ---------------------------------------------------------------------------
# building individuals


def _materialize(ident: int, code: str, prompt: str, suite: BackendSuite,
                 engine, calls: Counter, parents=(), operator="root") -> Individual:
    """Compile code; on failure, one repair round through the generator."""
    result = engine.render(code)
    if result.ok:
        return Individual(ident, code, True, mesh=result.mesh,
                          parents=tuple(parents), operator=operator)
    messages = build_selfdebug_prompt(code, result.error, prompt)
    calls["selfdebug"] += 1
    try:
        fixed = extract_code(suite.generator.complete(messages, suite.configs["generator"]))
    except (BackendError, EmptyResponse) as exc:
        return Individual(ident, code, False,
                          error=f"{result.error}; repair failed: {exc}",
                          self_debugged=True, parents=tuple(parents), operator=operator)
    second = engine.render(fixed)
    if second.ok:
        return Individual(ident, fixed, True, self_debugged=True, mesh=second.mesh,
                          parents=tuple(parents), operator=operator)
    return Individual(ident, fixed, False, error=second.error, self_debugged=True,
                      parents=tuple(parents), operator=operator)


def initialize(prompt: str, cfg: EvoConfig, suite: BackendSuite,
               corpus: FewShotStore, engine, fs_rng: np.random.Generator,
               calls: Counter) -> list[Individual]:
    """Population of M, each from an independent few-shot subset."""
    population = []
    for ident in range(cfg.population):
        shots = corpus.sample(cfg.few_shots, fs_rng)
        messages = build_init_prompt(prompt, shots)
        calls["init"] += 1
        try:
            code = extract_code(suite.generator.complete(messages, suite.configs["generator"]))
        except (BackendError, EmptyResponse) as exc:
            population.append(Individual(ident, "", False, error=str(exc),
                                         backend_failed=True))
            continue
        population.append(_materialize(ident, code, prompt, suite, engine, calls))
    if all(ind.backend_failed for ind in population):
        raise BackendError("the generator backend failed for every initial individual")
    return population


# ---------------------------------------------------------------------------
# evaluation


def evaluate(population: list[Individual], prompt: str, cfg: EvoConfig,
             suite: BackendSuite, calls: Counter):
    """Render, describe and rank; returns (rankings, degraded, retries)."""
    compiled = [ind for ind in population if ind.ok]
    for ind in compiled:
        if ind.image is None:
            ind.image = render_multiview(ind.mesh, cfg.render_size).with_provenance(ind.code)
        if not ind.description:
            calls["describe"] += 1
            ind.description = suite.describer.complete(
                build_describe_prompt(ind.image), suite.configs["describer"]
            )
    rankings = []
    if len(compiled) >= 2:
        descriptions = [(ind.ident, ind.description) for ind in compiled]
        for _ in range(3):
            calls["rank"] += 1
            rankings.append(
                rank_once(prompt, descriptions, suite.ranker, suite.configs["ranker"])
            )
        averaged = average_rankings(rankings)
        for ind in compiled:
            ind.avg_rank = averaged[ind.ident]
    elif compiled:
        compiled[0].avg_rank = 1.0
    penalty = float(cfg.population + 1)
    for ind in population:
        if not ind.ok:
            ind.avg_rank = penalty
    return (
        [list(r.order) for r in rankings],
        [r.degraded for r in rankings],
        [r.retries for r in rankings],
    )


# ---------------------------------------------------------------------------
# variation


def breed(pairs: list[tuple[int, int]], gates: list[bool],
          by_id: dict[int, Individual], prompt: str, cfg: EvoConfig,
          suite: BackendSuite, engine, calls: Counter, next_id: int) -> list[Individual]:
    """One crossover child per pair, each gated through mutation."""
    offspring = []
    gen_cfg = suite.configs["generator"]
    for (first, second), mutate in zip(pairs, gates):
        pa, pb = by_id[first], by_id[second]
        ident = next_id
        next_id += 1
        operator = "crossover"
        messages = build_crossover_prompt(
            ((pa.code, pa.description), (pb.code, pb.description)), prompt
        )
        calls["crossover"] += 1
        try:
            code = extract_code(suite.generator.complete(messages, gen_cfg))
        except (BackendError, EmptyResponse) as exc:
            offspring.append(Individual(ident, "", False, error=str(exc),
                                        backend_failed=True,
                                        parents=(first, second), operator=operator))
            continue
        if mutate:
            operator = "crossover+mutation"
            calls["mutation"] += 1
            try:
                code = extract_code(
                    suite.generator.complete(build_mutation_prompt(code, prompt), gen_cfg)
                )
            except (BackendError, EmptyResponse) as exc:
                offspring.append(Individual(ident, code, False, error=str(exc),
                                            backend_failed=True,
                                            parents=(first, second), operator=operator))
                continue
        offspring.append(
            _materialize(ident, code, prompt, suite, engine, calls,
                         parents=(first, second), operator=operator)
        )
    return offspring


def update(population: list[Individual], offspring: list[Individual],
           elites: int) -> list[Individual]:
    """Elitist replacement: best survivors keep their code verbatim."""
    survivors = sorted(population, key=lambda ind: (ind.avg_rank, ind.ident))[:elites]
    return survivors + offspring


# ---------------------------------------------------------------------------
# the loop


def _selection_pool(population: list[Individual]) -> list[Individual]:
    compiled = [ind for ind in population if ind.ok]
    return compiled if len(compiled) >= 2 else list(population)


def run(prompt: str, cfg: EvoConfig, suite: BackendSuite,
        corpus: FewShotStore | None = None, engine=None) -> RunResult:
    """Full evolutionary run; returns the final elite and every trace."""
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")
    corpus = corpus if corpus is not None else FewShotStore.bundled()
    engine = engine if engine is not None else CsgEngine()
    fs_rng = named_stream(cfg.seed, "few-shot")
    sel_rng = named_stream(cfg.seed, "selection")
    gate_rng = named_stream(cfg.seed, "mutation-gate")
    calls = Counter()

    population = initialize(prompt, cfg, suite, corpus, engine, fs_rng, calls)
    next_id = cfg.population
    traces = []
    for generation in range(cfg.generations + 1):
        rankings, degraded, retries = evaluate(population, prompt, cfg, suite, calls)
        elite = min(population, key=lambda ind: (ind.avg_rank, ind.ident))
        pairs = []
        gates = []
        if generation < cfg.generations:
            pool = _selection_pool(population)
            probabilities = selection_probabilities(
                {ind.ident: ind.avg_rank for ind in pool}, cfg.selection_lambda
            )
            pairs = select_parent_pairs(
                probabilities, cfg.population - cfg.elites, sel_rng
            )
            gates = [bool(gate_rng.random() < cfg.mutation_prob) for _ in pairs]
        traces.append(GenerationTrace(
            generation=generation,
            individuals=[ind.snapshot() for ind in population],
            rankings=rankings,
            degraded=degraded,
            retries=retries,
            avg_ranks={ind.ident: ind.avg_rank for ind in population},
            parent_pairs=pairs,
            mutation_gates=gates,
            elite=elite.ident,
            rng_digests={
                "few-shot": _rng_digest(fs_rng),
                "selection": _rng_digest(sel_rng),
                "mutation-gate": _rng_digest(gate_rng),
            },
        ))
        if generation == cfg.generations:
            break
        by_id = {ind.ident: ind for ind in population}
        offspring = breed(pairs, gates, by_id, prompt, cfg, suite, engine,
                          calls, next_id)
        next_id += len(offspring)
        population = update(population, offspring, cfg.elites)
    elite = min(population, key=lambda ind: (ind.avg_rank, ind.ident))
    return RunResult(elite=elite, traces=traces, population=population,
                     call_counts=calls)
