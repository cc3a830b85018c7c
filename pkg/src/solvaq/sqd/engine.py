"""The sampled-subspace diagonalization loop with reaction-field coupling.

Per recovery iteration: repair every shot's particle numbers against the
current occupation estimate (S-CORE), draw K batches, build each batch's
spin-closed subspace, solve each batch (Davidson, with the continuum-solvent
operator converged self-consistently per batch when a PCM context is
present), then refresh the occupation estimate from the converged batch
wavefunctions. The final answer is the lowest batch energy of the last
iteration.

Batches are independent work units; with ``workers > 1`` they run in forked
processes. All randomness flows through per-purpose child generators derived
from (master seed, stream, iteration[, batch]), so results are bit-identical
for any worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from ..active_space import ActiveHamiltonian, MOSpace, transform_integrals
from ..constants import HARTREE_TO_KCAL
from ..errors import ConfigError, ConvergenceError, RecoveryBootstrapError
from ..pcm import PCMContext, SolventOperator
from ..rng import STREAM_BATCH, STREAM_RECOVERY, child_rng
from ..sampling import Configuration, SampleSet
from .davidson import davidson_ground_state
from .hamiltonian import ExcitationTables, ProjectedHamiltonian, occupation_numbers
from .strings import SubspaceBasis, build_subspace

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Config and result containers
# ---------------------------------------------------------------------------

@dataclass
class SQDConfig:
    k_batches: int = 10
    batch_size: int = 100
    recovery_iterations: int = 3
    davidson_tol: float = 1e-8
    scrf_tol: float = 1e-8
    scrf_max_iterations: int = 30
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.k_batches < 1:
            raise ConfigError(f"need at least one batch, got {self.k_batches}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be positive, got {self.batch_size}")
        if self.recovery_iterations < 1:
            raise ConfigError(
                f"need at least one recovery iteration, got {self.recovery_iterations}"
            )
        if self.workers < 1:
            raise ConfigError(f"worker count must be positive, got {self.workers}")


@dataclass
class OccupationDistribution:
    """Per-orbital mean occupations, one vector per spin (index = orbital)."""

    n_up: np.ndarray
    n_down: np.ndarray


@dataclass
class BatchResult:
    batch_index: int
    energy: float                  # total energy (free energy G when solvated)
    g_solv_kcal: float             # (1/2) sum q_i phi_i in kcal/mol
    ci: np.ndarray | None
    d: int
    n_strings: int
    scrf_iterations: int
    converged: bool
    occ_up: np.ndarray | None = None
    occ_down: np.ndarray | None = None
    g_history: list = field(default_factory=list)
    error: str | None = None


@dataclass
class SQDResult:
    iterations: list                  # list per recovery iteration of [BatchResult]
    final_energy: float
    final_g_solv_kcal: float
    final_batch_index: int
    final_d: int
    hilbert_dimension: int
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def hilbert_dimension(n_orb: int, n_alpha: int, n_beta: int) -> int:
    """Exact C(n_orb, N_alpha) * C(n_orb, N_beta)."""
    if not (0 <= n_alpha <= n_orb and 0 <= n_beta <= n_orb):
        raise ConfigError(
            f"cannot place ({n_alpha}, {n_beta}) electrons in {n_orb} orbitals"
        )
    return math.comb(n_orb, n_alpha) * math.comb(n_orb, n_beta)


def _bit_matrix(words: np.ndarray, n_orb: int) -> np.ndarray:
    return ((words[:, None] >> np.arange(n_orb)[None, :]) & 1).astype(float)


def init_occupations(
    samples: SampleSet, n_alpha: int, n_beta: int
) -> OccupationDistribution:
    """Count-weighted mean bit occupations over the symmetry-correct shots."""
    alpha, beta, counts = samples.to_arrays()
    n_orb = samples.n_orb
    bits_a = _bit_matrix(alpha, n_orb)
    bits_b = _bit_matrix(beta, n_orb)
    mask = (bits_a.sum(axis=1) == n_alpha) & (bits_b.sum(axis=1) == n_beta)
    weight = counts * mask
    total = weight.sum()
    if total == 0:
        raise RecoveryBootstrapError(
            "no shot has the target particle numbers "
            f"(N_alpha={n_alpha}, N_beta={n_beta}); increase the shot count "
            "or reduce the noise level"
        )
    n_up = (weight @ bits_a) / total
    n_down = (weight @ bits_b) / total
    return OccupationDistribution(n_up=n_up, n_down=n_down)


def _repair_word(word: int, n_orb: int, target: int, probs: np.ndarray, rng) -> tuple[int, bool]:
    """Flip bits (probability proportional to |x_p - n_p| over direction-
    eligible bits) until the Hamming weight equals ``target``. Returns the
    repaired word and whether the zero-weight uniform fallback was used."""
    weight = word.bit_count()
    used_fallback = False
    while weight != target:
        if weight > target:
            eligible = [p for p in range(n_orb) if (word >> p) & 1]
            pulls = np.abs(1.0 - probs[eligible])
        else:
            eligible = [p for p in range(n_orb) if not (word >> p) & 1]
            pulls = np.abs(probs[eligible])
        total = pulls.sum()
        if total <= 0.0:
            pulls = np.ones(len(eligible))
            total = float(len(eligible))
            used_fallback = True
        cdf = np.cumsum(pulls) / total
        pick = eligible[int(np.searchsorted(cdf, rng.random(), side="right"))]
        word ^= 1 << pick
        weight += 1 if weight < target else -1
    return word, used_fallback


def recover(
    samples: SampleSet,
    occ: OccupationDistribution,
    n_alpha: int,
    n_beta: int,
    seed: int,
    iteration: int = 0,
) -> SampleSet:
    """S-CORE: every shot leaves with exact (N_alpha, N_beta); shots already
    correct pass through unchanged. Deterministic for a given (seed,
    iteration): shots are processed in canonical sorted order, alpha sector
    before beta."""
    rng = child_rng(seed, STREAM_RECOVERY, iteration)
    alpha, beta = samples.expand()
    out = SampleSet(n_orb=samples.n_orb)
    fallback_hits = 0
    for a, b in zip(alpha, beta):
        a2, f1 = _repair_word(int(a), samples.n_orb, n_alpha, occ.n_up, rng)
        b2, f2 = _repair_word(int(b), samples.n_orb, n_beta, occ.n_down, rng)
        fallback_hits += f1 + f2
        out.add(Configuration(a2, b2))
    if fallback_hits:
        log.warning(
            "recovery fell back to uniform bit selection for %d shots "
            "(degenerate occupation estimate)",
            fallback_hits,
        )
    return out


def draw_batches(
    recovered: SampleSet,
    k: int,
    batch_size: int,
    seed: int,
    iteration: int = 0,
) -> list[SampleSet]:
    """K independent uniform draws from the recovered multiset, each without
    replacement (with replacement when batch_size exceeds the multiset)."""
    alpha, beta = recovered.expand()
    total = len(alpha)
    if total == 0:
        raise ConfigError("cannot draw batches from an empty sample set")
    batches = []
    for b in range(k):
        rng = child_rng(seed, STREAM_BATCH, iteration, b)
        replace = batch_size > total
        idx = rng.choice(total, size=batch_size, replace=replace)
        batches.append(
            SampleSet.from_arrays(recovered.n_orb, alpha[idx], beta[idx])
        )
    return batches


def update_occupations(results: list[BatchResult]) -> OccupationDistribution:
    """Mean over converged batches of the per-batch <n_p_sigma>."""
    usable = [r for r in results if r.converged and r.occ_up is not None]
    if not usable:
        raise ConvergenceError("no converged batch to update occupations from")
    n_up = np.mean([r.occ_up for r in usable], axis=0)
    n_down = np.mean([r.occ_down for r in usable], axis=0)
    return OccupationDistribution(n_up=n_up, n_down=n_down)


# ---------------------------------------------------------------------------
# Active-space problem context
# ---------------------------------------------------------------------------

class ActiveSpaceProblem:
    """Bundles everything a subspace solve needs: the active-space reduction
    of the molecular Hamiltonian, and (optionally) the continuum-solvent
    context plus the converged mean-field density that seeds the reaction
    field."""

    def __init__(
        self,
        mo_space: MOSpace,
        hcore: np.ndarray,
        eri_ao: np.ndarray,
        e_nuc: float,
        pcm: PCMContext | None = None,
        scf_density: np.ndarray | None = None,
    ):
        if pcm is not None and scf_density is None:
            raise ConfigError(
                "a solvated problem needs the converged mean-field density"
            )
        self.mo_space = mo_space
        self.hcore = hcore
        self.eri_ao = eri_ao
        self.e_nuc = e_nuc
        self.pcm = pcm
        self.scf_density = scf_density
        self.base = transform_integrals(mo_space, hcore, eri_ao, e_nuc)
        self._c_act = mo_space.c_active
        self._d_frozen = mo_space.frozen_density

    @property
    def n_orbitals(self) -> int:
        return self.base.n_orbitals

    @property
    def n_electrons(self) -> int:
        return self.base.n_electrons

    @property
    def n_alpha(self) -> int:
        if self.base.n_electrons % 2 != 0:
            raise ConfigError(
                f"closed-shell engine needs an even active electron count, "
                f"got {self.base.n_electrons}"
            )
        return self.base.n_electrons // 2

    def with_solvent(self, op: SolventOperator | None) -> ActiveHamiltonian:
        """Fold a one-body reaction-field operator into the active
        Hamiltonian (equivalent to re-running the full transformation)."""
        if op is None:
            return self.base
        c = self._c_act
        return ActiveHamiltonian(
            h_eff=self.base.h_eff + c.T @ op.matrix @ c,
            eri=self.base.eri,
            e_frozen=self.base.e_frozen
            + float(np.sum(self._d_frozen * op.matrix))
            + op.energy,
            n_orbitals=self.base.n_orbitals,
            n_electrons=self.base.n_electrons,
        )

    def total_density(self, gamma_active: np.ndarray) -> np.ndarray:
        """AO-basis total density: frozen core + back-transformed active RDM."""
        c = self._c_act
        return self._d_frozen + c @ gamma_active @ c.T

    def initial_operator(self) -> SolventOperator:
        """Reaction-field operator of the converged mean-field density."""
        return self.pcm.solve(self.scf_density).operator


# ---------------------------------------------------------------------------
# Per-batch solve
# ---------------------------------------------------------------------------

def scrf_subspace_solve(
    problem: ActiveSpaceProblem,
    basis: SubspaceBasis,
    config: SQDConfig,
    tables: ExcitationTables | None = None,
    guess: np.ndarray | None = None,
    batch_index: int = 0,
) -> BatchResult:
    """Solve one subspace. Gas phase: a single Davidson run. Solvated: the
    reaction field is relaxed against the subspace density in a macro-
    iteration (surface charges -> folded one-body operator -> Davidson with
    warm start -> new density), converged on the free energy

        G = <psi|H_0|psi> + (1/2) <psi|V_int|psi>
          = E_davidson - (1/2) E_int,

    which removes the interaction energy the fully-coupled eigenvalue counts
    twice. G_solv = (1/2) sum_i q_i phi_i at the converged density."""
    tables = tables if tables is not None else ExcitationTables(basis)

    if problem.pcm is None:
        ham = ProjectedHamiltonian(problem.base, basis, tables)
        res = davidson_ground_state(ham, guess=guess, tol=config.davidson_tol)
        occ_up, occ_down = occupation_numbers(res.vector, ham)
        return BatchResult(
            batch_index=batch_index,
            energy=res.energy,
            g_solv_kcal=0.0,
            ci=res.vector,
            d=basis.d,
            n_strings=basis.n_strings,
            scrf_iterations=0,
            converged=res.converged,
            occ_up=occ_up,
            occ_down=occ_down,
        )

    op = problem.initial_operator()
    psi = guess
    g_prev = None
    g_history: list[float] = []
    for macro in range(1, config.scrf_max_iterations + 1):
        ham = ProjectedHamiltonian(problem.with_solvent(op), basis, tables)
        res = davidson_ground_state(ham, guess=psi, tol=config.davidson_tol)
        psi = res.vector
        gamma = ham.one_rdm(psi)
        d_tot = problem.total_density(gamma)
        e_int = float(np.sum(d_tot * op.matrix)) + op.energy
        g_free = res.energy - 0.5 * e_int
        g_history.append(g_free)
        solution = problem.pcm.solve(d_tot)
        if g_prev is not None and abs(g_free - g_prev) < config.scrf_tol:
            occ_up, occ_down = occupation_numbers(psi, ham)
            return BatchResult(
                batch_index=batch_index,
                energy=g_free,
                g_solv_kcal=solution.g_pol * HARTREE_TO_KCAL,
                ci=psi,
                d=basis.d,
                n_strings=basis.n_strings,
                scrf_iterations=macro,
                converged=True,
                occ_up=occ_up,
                occ_down=occ_down,
                g_history=g_history,
            )
        g_prev = g_free
        op = solution.operator

    log.warning(
        "reaction-field macro-iteration did not converge in %d steps "
        "(last |dG| = %.3e)",
        config.scrf_max_iterations,
        abs(g_history[-1] - g_history[-2]) if len(g_history) > 1 else float("nan"),
    )
    occ_up, occ_down = occupation_numbers(psi, ham)
    return BatchResult(
        batch_index=batch_index,
        energy=g_history[-1],
        g_solv_kcal=solution.g_pol * HARTREE_TO_KCAL,
        ci=psi,
        d=basis.d,
        n_strings=basis.n_strings,
        scrf_iterations=config.scrf_max_iterations,
        converged=False,
        occ_up=occ_up,
        occ_down=occ_down,
        g_history=g_history,
        error="reaction-field macro-iteration limit reached",
    )


def _solve_batch_job(args) -> BatchResult:
    problem, batch, n_alpha, n_beta, config, batch_index = args
    try:
        basis = build_subspace(batch, n_alpha, n_beta)
        return scrf_subspace_solve(problem, basis, config, batch_index=batch_index)
    except (ConvergenceError, ConfigError) as exc:
        log.warning("batch %d failed: %s", batch_index, exc)
        return BatchResult(
            batch_index=batch_index,
            energy=float("nan"),
            g_solv_kcal=float("nan"),
            ci=None,
            d=0,
            n_strings=0,
            scrf_iterations=0,
            converged=False,
            error=str(exc),
        )


# ---------------------------------------------------------------------------
# Full loop
# ---------------------------------------------------------------------------

def run_sqd(
    problem: ActiveSpaceProblem,
    samples: SampleSet,
    config: SQDConfig,
) -> SQDResult:
    """Recovery iterations of: S-CORE repair, K batch draws, per-batch
    subspace solves, occupation refresh. The result is the lowest-energy
    batch of the last iteration (ties broken by batch index)."""
    if samples.total == 0:
        raise ConfigError("the sample set is empty")
    if samples.n_orb != problem.n_orbitals:
        raise ConfigError(
            f"sample set is over {samples.n_orb} orbitals but the active "
            f"space has {problem.n_orbitals}"
        )
    n_alpha = problem.n_alpha
    n_beta = n_alpha
    d_as = hilbert_dimension(problem.n_orbitals, n_alpha, n_beta)

    occ = init_occupations(samples, n_alpha, n_beta)
    iterations: list[list[BatchResult]] = []
    for it in range(config.recovery_iterations):
        recovered = recover(samples, occ, n_alpha, n_beta, config.master_seed, it)
        batches = draw_batches(
            recovered, config.k_batches, config.batch_size, config.master_seed, it
        )
        jobs = [
            (problem, batch, n_alpha, n_beta, config, b)
            for b, batch in enumerate(batches)
        ]
        if config.workers > 1 and config.k_batches > 1:
            with ProcessPoolExecutor(
                max_workers=min(config.workers, config.k_batches),
                mp_context=get_context("fork"),
            ) as pool:
                results = list(pool.map(_solve_batch_job, jobs))
        else:
            results = [_solve_batch_job(job) for job in jobs]
        iterations.append(results)
        if not any(r.converged for r in results):
            raise ConvergenceError(
                f"every batch failed in recovery iteration {it}: "
                + "; ".join(str(r.error) for r in results)
            )
        occ = update_occupations(results)

    last = iterations[-1]
    best = min(
        (r for r in last if r.converged),
        key=lambda r: (r.energy, r.batch_index),
    )
    return SQDResult(
        iterations=iterations,
        final_energy=best.energy,
        final_g_solv_kcal=best.g_solv_kcal,
        final_batch_index=best.batch_index,
        final_d=best.d,
        hilbert_dimension=d_as,
        metadata={
            "master_seed": config.master_seed,
            "k_batches": config.k_batches,
            "batch_size": config.batch_size,
            "recovery_iterations": config.recovery_iterations,
            "workers": config.workers,
            "n_orbitals": problem.n_orbitals,
            "n_alpha": n_alpha,
            "n_beta": n_beta,
            "solvated": problem.pcm is not None,
            "total_shots": samples.total,
        },
    )
