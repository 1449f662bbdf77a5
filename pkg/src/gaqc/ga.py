"""Genetic outer loop over circuit structures.

Each generation: evaluate every individual by running a short per-target
parameter optimization and aggregating the per-target scores into a scalar
fitness, keep the two best structures unchanged, refill the remaining slots
with one-point crossover children of fitness-proportionally drawn parents,
and mutate the children. The best structure then gets a longer final
parameter polish. All randomness flows through seed-derived streams keyed by
(seed, role, generation, index), so results are reproducible regardless of
worker count or evaluation order.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cost, genome as genome_mod, opt, sim

# stream roles
_INIT, _EVAL, _BREED, _TEST = 1, 2, 3, 4

OBJECTIVE_KINDS = ("kernel", "kernel_weighted", "vqe")


def _stream(*key: int) -> np.random.Generator:
    if any(int(k) < 0 for k in key):
        raise ValueError("stream keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


@dataclass(frozen=True)
class GAConfig:
    pop_size: int
    generations: int
    n_iter: int
    threshold: float | None
    target_depth: int
    seed: int
    mutation_rate: float = 0.01
    elite_count: int = 2
    workers: int = 1
    final_factor: int = 10

    def __post_init__(self) -> None:
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("population size must be an even number >= 2")
        if not 0 <= self.elite_count < self.pop_size:
            raise ValueError("elite count must fit inside the population")
        if self.generations < 1 or self.n_iter < 0 or self.target_depth < 0:
            raise ValueError("generations, n_iter and target_depth must be sane")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Workload:
    """Pickle-friendly evaluation payload shared by all individuals."""

    kind: str
    num_qubits: int
    reference: np.ndarray
    echoes: np.ndarray | None = None          # (n_targets, dim)
    adjoint: np.ndarray | None = None         # (n_targets,) bool
    train_indices: tuple[int, ...] = ()
    betas: np.ndarray | None = None
    weights: tuple[float, ...] = cost.DEFAULT_WEIGHTS
    edges: tuple[float, ...] = cost.DEFAULT_EDGES
    hamiltonians: tuple[sim.PauliSum, ...] | None = None

    @property
    def n_targets(self) -> int:
        if self.kind == "vqe":
            return len(self.hamiltonians)
        return self.echoes.shape[0]


@dataclass
class Individual:
    genome: genome_mod.CircuitGenome
    table: cost.ParameterTable | None = None
    fitness: float | None = None
    per_target: np.ndarray | None = None


@dataclass
class Population:
    individuals: list[Individual]
    generation: int
    best: Individual | None = None


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float


@dataclass(frozen=True)
class GAResult:
    best_genome: genome_mod.CircuitGenome
    best_table: cost.ParameterTable
    best_fitness: float
    per_target: np.ndarray
    history: tuple[GenerationRecord, ...]
    passed: bool
    generations_run: int


def build_workload(targets: cost.TargetSet | None, objective_kind: str = "kernel",
                   reference: sim.Statevector | None = None,
                   betas=None, weights=cost.DEFAULT_WEIGHTS, edges=cost.DEFAULT_EDGES,
                   hamiltonians: tuple[sim.PauliSum, ...] | None = None) -> Workload:
    if objective_kind not in OBJECTIVE_KINDS:
        raise ValueError(f"unknown objective kind {objective_kind!r}")
    if objective_kind == "vqe":
        if not hamiltonians:
            raise ValueError("vqe objective needs at least one Hamiltonian")
        n = hamiltonians[0].num_qubits
        if any(h.num_qubits != n for h in hamiltonians):
            raise ValueError("all Hamiltonians must share a register size")
        ref = reference.amplitudes if reference is not None else sim.Statevector.zero(n).amplitudes
        return Workload("vqe", n, ref, train_indices=tuple(range(len(hamiltonians))),
                        hamiltonians=tuple(hamiltonians))
    if targets is None:
        raise ValueError("compilation objectives need a target set")
    n = targets.num_qubits
    ref = reference if reference is not None else sim.Statevector.zero(n)
    if ref.num_qubits != n:
        raise ValueError("reference register size mismatch")
    echoes = np.empty((len(targets.targets), 1 << n), dtype=np.complex128)
    adjoint = np.empty(len(targets.targets), dtype=bool)
    for i, t in enumerate(targets.targets):
        echoes[i], adjoint[i] = cost.target_echo_state(t, ref)
    bet = None
    if objective_kind == "kernel_weighted":
        if betas is None:
            raise ValueError("weighted objective needs per-target beta values")
        bet = np.asarray(betas, dtype=np.float64)
        if bet.shape != (len(targets.targets),):
            raise ValueError("one beta per target required")
    return Workload(objective_kind, n, ref.amplitudes, echoes, adjoint,
                    tuple(targets.train_indices), bet, tuple(weights), tuple(edges))


def _kernel_objective(circuit: genome_mod.CircuitGenome, workload: Workload,
                      target_idx: int) -> opt.Objective:
    echo_conj = workload.echoes[target_idx].conj()
    adjoint = bool(workload.adjoint[target_idx])
    ref = workload.reference
    m = circuit.param_count

    def single(theta: np.ndarray) -> float:
        out = genome_mod.run_batch(circuit, theta.reshape(1, -1), ref, adjoint)
        return 1.0 - float(np.abs(out[0] @ echo_conj) ** 2)

    def batch(thetas: np.ndarray) -> np.ndarray:
        out = genome_mod.run_batch(circuit, thetas, ref, adjoint)
        return 1.0 - np.abs(out @ echo_conj) ** 2

    return opt.Objective(single, m, (True,) * m, batch)


def _vqe_objective_fn(circuit: genome_mod.CircuitGenome, hamiltonian: sim.PauliSum):
    def fn(theta: np.ndarray) -> float:
        return cost.vqe_energy(circuit, theta, hamiltonian)
    return fn


def _optimize_targets(circuit: genome_mod.CircuitGenome, workload: Workload,
                      n_iter: int, threshold: float | None,
                      inits: list[np.ndarray],
                      warm: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Optimize every target's parameters; returns (per-target score, table).

    Scores are kernels for compilation workloads and energies for vqe. When
    warm is set the inits are trusted starting points rather than random
    draws (the behaviour is identical; the flag is documentation)."""
    del warm
    m = circuit.param_count
    n = workload.n_targets
    scores = np.full(n, np.nan)
    table = np.zeros((n, m))
    for j in workload.train_indices:
        if workload.kind == "vqe":
            budget = max(n_iter, 1)
            params, value = opt.nelder_mead(_vqe_objective_fn(circuit, workload.hamiltonians[j]),
                                            inits[j], max_evals=budget)
            scores[j], table[j] = value, params
            continue
        obj = _kernel_objective(circuit, workload, j)
        params, trace = opt.vqa_optimize(obj, inits[j], n_iter, threshold)
        scores[j], table[j] = 1.0 - min(trace), params
    return scores, table


def _aggregate(scores: np.ndarray, workload: Workload) -> float:
    idx = list(workload.train_indices)
    if workload.kind == "kernel":
        return float(np.mean(scores[idx]))
    if workload.kind == "kernel_weighted":
        return cost.weighted_sum_fidelity(scores[idx], workload.betas[idx],
                                          workload.weights, workload.edges)
    return -float(np.sum(scores[idx]))  # vqe: higher fitness = lower total energy


def _objective_met(fitness: float, workload: Workload, threshold: float | None) -> bool:
    if threshold is None:
        return False
    if workload.kind == "vqe":
        return -fitness <= threshold
    return 1.0 - fitness <= threshold


def _fresh_inits(circuit: genome_mod.CircuitGenome, workload: Workload,
                 seed_key: tuple[int, ...]) -> list[np.ndarray]:
    inits = []
    for j in range(workload.n_targets):
        rng = _stream(*seed_key, j)
        inits.append(rng.uniform(0.0, 2.0 * np.pi, circuit.param_count))
    return inits


def _evaluate_task(payload) -> tuple[int, float, np.ndarray, np.ndarray]:
    idx, circuit, workload, n_iter, threshold, seed_key = payload
    inits = _fresh_inits(circuit, workload, seed_key)
    scores, table = _optimize_targets(circuit, workload, n_iter, threshold, inits)
    return idx, _aggregate(scores, workload), scores, table


def evaluate_fitness(circuit: genome_mod.CircuitGenome, targets: cost.TargetSet,
                     cfg: GAConfig, rng: np.random.Generator,
                     objective_kind: str = "kernel",
                     reference: sim.Statevector | None = None,
                     betas=None) -> tuple[float, cost.ParameterTable]:
    """Short per-target optimization from rng-drawn angles; mean-kernel fitness."""
    workload = build_workload(targets, objective_kind, reference, betas)
    inits = [rng.uniform(0.0, 2.0 * np.pi, circuit.param_count)
             for _ in range(workload.n_targets)]
    scores, table = _optimize_targets(circuit, workload, cfg.n_iter, cfg.threshold, inits)
    return _aggregate(scores, workload), cost.ParameterTable(table)


# ---------------------------------------------------------------------------
# variation operators

def select_elite(population: list[Individual], k: int) -> list[int]:
    """Indices of the k fittest individuals; ties break toward lower index."""
    order = sorted(range(len(population)),
                   key=lambda i: (-population[i].fitness, i))
    return order[:k]


def crossover(a: genome_mod.CircuitGenome, b: genome_mod.CircuitGenome
              ) -> tuple[genome_mod.CircuitGenome, genome_mod.CircuitGenome]:
    """One-point crossover at each parent's midpoint; slots renumbered."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("parents act on different registers")
    ca, cb = len(a.genes) // 2, len(b.genes) // 2
    child1 = genome_mod.CircuitGenome.from_genes(a.num_qubits, a.genes[:ca] + b.genes[cb:])
    child2 = genome_mod.CircuitGenome.from_genes(a.num_qubits, b.genes[:cb] + a.genes[ca:])
    return child1, child2


def mutate(circuit: genome_mod.CircuitGenome, rate: float, rng: np.random.Generator,
           pool: tuple[str, ...] = genome_mod.POOL) -> genome_mod.CircuitGenome:
    """Independently replace each gene (probability rate) with a different-
    kind pool gate on freshly drawn operands."""
    n = circuit.num_qubits
    if n == 1:
        pool = tuple(k for k in pool if sim.gate_arity(k) == 1)
    out = []
    for g in circuit.genes:
        if rng.random() >= rate:
            out.append(g)
            continue
        choices = tuple(k for k in pool if k != g.kind)
        if not choices:
            out.append(g)
            continue
        kind = choices[int(rng.integers(len(choices)))]
        if sim.gate_arity(kind) == 1:
            ops = (int(rng.integers(n)),)
        else:
            x = int(rng.integers(n))
            y = int(rng.integers(n - 1))
            ops = (x, y + 1 if y >= x else y)
        out.append(genome_mod.Gene(kind, ops, None))
    return genome_mod.CircuitGenome.from_genes(n, out)


def _breed(population: list[Individual], cfg: GAConfig, generation: int,
           num_qubits: int) -> list[Individual]:
    rng = _stream(cfg.seed, _BREED, generation)
    elite_idx = select_elite(population, cfg.elite_count)
    next_pop = [population[i] for i in elite_idx]  # carried with fitness/params
    fits = np.array([ind.fitness for ind in population], dtype=np.float64)
    if np.min(fits) < 0.0:
        fits = fits - np.min(fits)
    total = float(np.sum(fits))
    probs = fits / total if total > 0.0 else np.full(len(fits), 1.0 / len(fits))
    # each pair anchors one elite against a fitness-proportional mate, so
    # children always recombine the current best material with the rest of
    # the population
    k = 0
    while len(next_pop) < cfg.pop_size:
        pa = population[elite_idx[k % len(elite_idx)]].genome
        pb = population[int(rng.choice(len(population), p=probs))].genome
        k += 1
        for child in crossover(pa, pb):
            if len(next_pop) >= cfg.pop_size:
                break
            next_pop.append(Individual(mutate(child, cfg.mutation_rate, rng)))
    return next_pop


# ---------------------------------------------------------------------------
# checkpoints

_CKPT_FORMAT = "gaqc-checkpoint-v1"


def _hex_list(arr) -> list[str]:
    return [float(x).hex() for x in np.asarray(arr, dtype=np.float64).ravel()]


def _individual_to_json(ind: Individual) -> dict:
    out = {"genome": genome_mod.to_text(ind.genome), "fitness": None,
           "params": None, "per_target": None}
    if ind.fitness is not None:
        out["fitness"] = float(ind.fitness).hex()
        out["params"] = [_hex_list(row) for row in ind.table.values]
        out["per_target"] = _hex_list(ind.per_target)
    return out


def _individual_from_json(obj: dict) -> Individual:
    circuit = genome_mod.from_text(obj["genome"])
    if obj["fitness"] is None:
        return Individual(circuit)
    table = cost.ParameterTable(np.array(
        [[float.fromhex(x) for x in row] for row in obj["params"]],
        dtype=np.float64).reshape(len(obj["params"]), circuit.param_count))
    per_target = np.array([float.fromhex(x) for x in obj["per_target"]])
    return Individual(circuit, table, float.fromhex(obj["fitness"]), per_target)


def write_checkpoint(path: str, pop: Population, history: list[GenerationRecord],
                     seed: int) -> None:
    payload = {
        "format": _CKPT_FORMAT,
        "seed": seed,
        "generation": pop.generation,
        "history": [[r.generation, float(r.best_fitness).hex(), float(r.mean_fitness).hex()]
                    for r in history],
        "population": [_individual_to_json(i) for i in pop.individuals],
        "best": _individual_to_json(pop.best) if pop.best is not None else None,
    }
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path: str) -> tuple[Population, list[GenerationRecord], int]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != _CKPT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format in {path}")
    pop = Population(
        [_individual_from_json(o) for o in payload["population"]],
        int(payload["generation"]),
        _individual_from_json(payload["best"]) if payload["best"] else None,
    )
    history = [GenerationRecord(int(g), float.fromhex(b), float.fromhex(m))
               for g, b, m in payload["history"]]
    return pop, history, int(payload["seed"])


# ---------------------------------------------------------------------------
# search driver

def _evaluate_pending(pop: Population, workload: Workload, cfg: GAConfig) -> None:
    payloads = []
    for i, ind in enumerate(pop.individuals):
        if ind.fitness is None:
            payloads.append((i, ind.genome, workload, cfg.n_iter, cfg.threshold,
                             (cfg.seed, _EVAL, pop.generation, i)))
    if not payloads:
        return
    if cfg.workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_evaluate_task, payloads))
    else:
        results = [_evaluate_task(p) for p in payloads]
    for idx, fitness, scores, table in results:
        ind = pop.individuals[idx]
        ind.fitness = fitness
        ind.per_target = scores
        ind.table = cost.ParameterTable(table)


def _final_polish(best: Individual, workload: Workload, cfg: GAConfig) -> Individual:
    inits = [best.table.values[j] for j in range(workload.n_targets)]
    scores, table = _optimize_targets(best.genome, workload,
                                      cfg.n_iter * cfg.final_factor, cfg.threshold,
                                      inits, warm=True)
    fitness = _aggregate(scores, workload)
    assert fitness >= best.fitness - 1e-12, "final polish must not lose fitness"
    return Individual(best.genome, cost.ParameterTable(table), max(fitness, best.fitness), scores)


def ga_vqa_search(targets: cost.TargetSet | None, cfg: GAConfig,
                  objective_kind: str = "kernel", *,
                  reference: sim.Statevector | None = None,
                  betas=None, weights=cost.DEFAULT_WEIGHTS, edges=cost.DEFAULT_EDGES,
                  hamiltonians: tuple[sim.PauliSum, ...] | None = None,
                  checkpoint_path: str | None = None,
                  resume_from: str | None = None,
                  log=None) -> GAResult:
    """Evolve circuit structures against the workload; returns the polished best.

    The per-generation best fitness is non-decreasing by construction (elites
    carry their evaluated fitness forward) and is asserted to be so.
    """
    if objective_kind != "vqe" and cfg.threshold is not None and not 0.0 < cfg.threshold < 1.0:
        raise ValueError("compilation threshold must lie in (0, 1)")
    workload = build_workload(targets, objective_kind, reference, betas, weights,
                              edges, hamiltonians)

    history: list[GenerationRecord] = []
    if resume_from is not None:
        pop, history, ckpt_seed = read_checkpoint(resume_from)
        if ckpt_seed != cfg.seed:
            raise ValueError(f"checkpoint seed {ckpt_seed} differs from config seed {cfg.seed}")
        if len(pop.individuals) != cfg.pop_size:
            raise ValueError("checkpoint population size differs from config")
        start_gen = pop.generation + 1
        if start_gen < cfg.generations:
            pop.individuals = _breed(pop.individuals, cfg, pop.generation, workload.num_qubits)
            pop.generation = start_gen
    else:
        genomes = [genome_mod.random_genome(workload.num_qubits, cfg.target_depth,
                                            _stream(cfg.seed, _INIT, i))
                   for i in range(cfg.pop_size)]
        pop = Population([Individual(g) for g in genomes], 0)
        start_gen = 0

    passed = False
    gens_run = pop.generation
    for gen in range(start_gen, cfg.generations):
        pop.generation = gen
        _evaluate_pending(pop, workload, cfg)
        fits = [ind.fitness for ind in pop.individuals]
        gen_best = pop.individuals[select_elite(pop.individuals, 1)[0]]
        if pop.best is None or gen_best.fitness > pop.best.fitness:
            pop.best = Individual(gen_best.genome, gen_best.table,
                                  gen_best.fitness, gen_best.per_target)
        record = GenerationRecord(gen, pop.best.fitness, float(np.mean(fits)))
        if history:
            # elitism makes the running best monotone; a regression is a bug
            assert record.best_fitness >= history[-1].best_fitness, \
                "best fitness regressed across generations"
        history.append(record)
        gens_run = gen + 1
        if log is not None:
            log(f"generation {gen}: best={record.best_fitness:.6f} mean={record.mean_fitness:.6f}")
        if checkpoint_path is not None:
            write_checkpoint(checkpoint_path, pop, history, cfg.seed)
        if _objective_met(pop.best.fitness, workload, cfg.threshold):
            passed = True
            break
        if gen + 1 < cfg.generations:
            pop.individuals = _breed(pop.individuals, cfg, gen, workload.num_qubits)

    polished = _final_polish(pop.best, workload, cfg)
    passed = passed or _objective_met(polished.fitness, workload, cfg.threshold)
    if log is not None:
        log(f"final polish: fitness={polished.fitness:.6f} passed={passed}")
    return GAResult(polished.genome, polished.table, polished.fitness,
                    polished.per_target, tuple(history), passed, gens_run)


def compile_test_targets(circuit: genome_mod.CircuitGenome, targets: cost.TargetSet,
                         cfg: GAConfig, reference: sim.Statevector | None = None,
                         n_iter: int | None = None) -> tuple[float, np.ndarray, cost.ParameterTable]:
    """Compile the held-out targets on a frozen structure from fresh angles.

    Returns (expected risk, per-target kernels, parameter table); rows for
    non-test targets are zero."""
    if not targets.test_indices:
        raise ValueError("target set has no test split")
    workload = build_workload(targets, "kernel", reference)
    table = np.zeros((len(targets.targets), circuit.param_count))
    kernels = np.full(len(targets.targets), np.nan)
    steps = cfg.n_iter if n_iter is None else n_iter
    for j in targets.test_indices:
        rng = _stream(cfg.seed, _TEST, j)
        init = rng.uniform(0.0, 2.0 * np.pi, circuit.param_count)
        obj = _kernel_objective(circuit, workload, j)
        params, trace = opt.vqa_optimize(obj, init, steps, cfg.threshold)
        kernels[j], table[j] = 1.0 - min(trace), params
    full = cost.ParameterTable(table)
    risk = cost.expected_risk(targets, circuit, full, reference)
    return risk, kernels, full


def test_risk(circuit: genome_mod.CircuitGenome, targets: cost.TargetSet,
              cfg: GAConfig, reference: sim.Statevector | None = None) -> float:
    """Expected risk over the test split after compiling it on the frozen
    structure with the standard per-target budget."""
    risk, _, _ = compile_test_targets(circuit, targets, cfg, reference)
    return risk
