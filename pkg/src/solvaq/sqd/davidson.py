"""Block-1 Davidson eigensolver for the lowest state of a projected
Hamiltonian: diagonal preconditioner, subspace capped at 20 vectors with
thick restart from the current Ritz vector, stagnation detection over a
50-expansion window, optional warm start."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError
from .hamiltonian import ProjectedHamiltonian

MAX_SUBSPACE = 20
STAGNATION_WINDOW = 50
MAX_EXPANSIONS = 2000


@dataclass
class DavidsonResult:
    energy: float                 # lowest eigenvalue + frozen-core constant
    vector: np.ndarray            # normalized CI coefficients, flat
    converged: bool
    n_expansions: int
    residual_norm: float
    history: list = field(default_factory=list)   # (theta, |r|) per expansion


def _orthonormalize(t: np.ndarray, vecs: list[np.ndarray]) -> np.ndarray | None:
    """Twice-through modified Gram-Schmidt; None if t lies in span(vecs)."""
    scale = np.linalg.norm(t)
    if scale == 0.0:
        return None
    t = t / scale
    for _ in range(2):
        for v in vecs:
            t = t - (v @ t) * v
    norm = np.linalg.norm(t)
    if norm < 1e-8:
        return None
    return t / norm


def davidson_ground_state(
    ham: ProjectedHamiltonian,
    guess: np.ndarray | None = None,
    tol: float = 1e-8,
    max_subspace: int = MAX_SUBSPACE,
    max_expansions: int = MAX_EXPANSIONS,
) -> DavidsonResult:
    d = ham.d
    diag = ham.diagonal()
    e0 = ham.e_frozen

    if d == 1:
        vec = np.ones(1)
        return DavidsonResult(
            energy=float(diag[0]) + e0,
            vector=vec,
            converged=True,
            n_expansions=0,
            residual_norm=0.0,
        )

    if guess is not None and np.linalg.norm(guess) > 1e-8:
        start = np.asarray(guess, float).ravel() / np.linalg.norm(guess)
    else:
        start = np.zeros(d)
        start[int(np.argmin(diag))] = 1.0

    vecs: list[np.ndarray] = []
    sigmas: list[np.ndarray] = []
    history: list[tuple[float, float]] = []
    t = start
    best_residual = np.inf
    since_improvement = 0
    diag_order = np.argsort(diag, kind="stable")
    next_seed = 0

    for expansion in range(1, max_expansions + 1):
        new = _orthonormalize(t, vecs)
        while new is None:
            # direction collapsed onto the span; seed from the next lowest
            # diagonal basis vector instead
            if next_seed >= d:
                raise ConvergenceError(
                    "Davidson ran out of independent directions "
                    f"(d={d}, residual={best_residual:.3e})"
                )
            seed = np.zeros(d)
            seed[diag_order[next_seed]] = 1.0
            next_seed += 1
            new = _orthonormalize(seed, vecs)
        vecs.append(new)
        sigmas.append(ham.matvec(new))

        m = len(vecs)
        rayleigh = np.empty((m, m))
        for i in range(m):
            for j in range(i + 1):
                rayleigh[i, j] = rayleigh[j, i] = vecs[i] @ sigmas[j]
        theta_all, s_all = np.linalg.eigh(rayleigh)
        theta, s = theta_all[0], s_all[:, 0]

        x = s @ np.array(vecs)
        hx = s @ np.array(sigmas)
        residual = hx - theta * x
        rnorm = float(np.linalg.norm(residual))
        history.append((float(theta), rnorm))

        if rnorm <= tol:
            return DavidsonResult(
                energy=float(theta) + e0,
                vector=x / np.linalg.norm(x),
                converged=True,
                n_expansions=expansion,
                residual_norm=rnorm,
                history=history,
            )

        if rnorm < best_residual - 1e-15:
            best_residual = rnorm
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= STAGNATION_WINDOW:
                raise ConvergenceError(
                    f"Davidson stagnated: residual {rnorm:.3e} has not "
                    f"decreased for {STAGNATION_WINDOW} expansions "
                    f"(best {best_residual:.3e}, theta {theta:.10f}, "
                    f"subspace {m}, d {d})"
                )

        if m >= min(max_subspace, d):
            vecs = [x / np.linalg.norm(x)]
            sigmas = [hx / np.linalg.norm(x)]

        denom = diag - theta
        denom = np.where(np.abs(denom) < 1e-10, np.copysign(1e-10, denom), denom)
        t = residual / denom

    raise ConvergenceError(
        f"Davidson did not converge in {max_expansions} expansions "
        f"(residual {best_residual:.3e}, d {d})"
    )
