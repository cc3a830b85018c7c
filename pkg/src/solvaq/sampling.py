"""Measurement-outcome production: exact sampling from a CI vector, an i.i.d.
bit-flip noise channel, and a text-file interface for externally supplied
samples.

Bitstring text convention: alpha block then beta block, each written
most-significant-orbital-first (orbital 0 is the rightmost character of its
block), blocks space-separated, then the count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError
from .rng import STREAM_NOISE, STREAM_SAMPLER, child_rng


@dataclass(frozen=True, order=True)
class Configuration:
    """One electronic configuration: occupation words for each spin sector
    (bit p set = orbital p occupied; bits beyond n_orb are zero)."""

    alpha: int
    beta: int

    def weights(self) -> tuple[int, int]:
        return int(self.alpha).bit_count(), int(self.beta).bit_count()


@dataclass
class SampleSet:
    """Multiset of configurations with shot counts."""

    n_orb: int
    entries: dict[Configuration, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    @property
    def n_unique(self) -> int:
        return len(self.entries)

    def add(self, config: Configuration, count: int = 1) -> None:
        self.entries[config] = self.entries.get(config, 0) + count

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Canonically ordered (alpha words, beta words, counts)."""
        items = sorted(self.entries.items())
        alpha = np.array([c.alpha for c, _ in items], dtype=np.int64)
        beta = np.array([c.beta for c, _ in items], dtype=np.int64)
        counts = np.array([n for _, n in items], dtype=np.int64)
        return alpha, beta, counts

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-shot (alpha, beta) word arrays in canonical order."""
        alpha, beta, counts = self.to_arrays()
        return np.repeat(alpha, counts), np.repeat(beta, counts)

    @staticmethod
    def from_arrays(n_orb: int, alpha: np.ndarray, beta: np.ndarray,
                    counts: np.ndarray | None = None) -> "SampleSet":
        out = SampleSet(n_orb=n_orb)
        if counts is None:
            counts = np.ones(len(alpha), dtype=np.int64)
        for a, b, c in zip(alpha, beta, counts):
            out.add(Configuration(int(a), int(b)), int(c))
        return out


@dataclass
class NoiseModel:
    """Independent bit-flip channel: every one of the 2*n_orb bits of every
    shot flips with probability p."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ConfigError(f"bit-flip probability must lie in [0, 1), got {self.p}")


def sample_exact(ci: np.ndarray, basis, n_shots: int, seed: int) -> SampleSet:
    """Draw ``n_shots`` i.i.d. configurations from p(x) = |c_x|^2 by
    inverse-CDF over the determinant list of ``basis``.

    ``basis`` must expose ``n_orb`` and ``determinant_words()`` returning the
    (alpha, beta) word arrays in CI-vector order.
    """
    ci = np.asarray(ci, float).ravel()
    norm = float(ci @ ci)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"CI vector not normalized: |c|^2 = {norm!r}")
    alpha_words, beta_words = basis.determinant_words()
    if len(ci) != len(alpha_words):
        raise ValueError("CI vector length does not match the determinant list")
    if n_shots < 1:
        raise ConfigError(f"shot count must be positive, got {n_shots}")
    rng = child_rng(seed, STREAM_SAMPLER)
    cdf = np.cumsum(ci * ci)
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(n_shots), side="right")
    idx, counts = np.unique(draws, return_counts=True)
    out = SampleSet(n_orb=basis.n_orb)
    for i, c in zip(idx, counts):
        out.add(Configuration(int(alpha_words[i]), int(beta_words[i])), int(c))
    return out


def apply_noise(samples: SampleSet, noise: NoiseModel) -> SampleSet:
    """Flip each of the 2*n_orb bits of every shot independently with
    probability ``noise.p``; deterministic given ``noise.seed``."""
    if noise.p == 0.0:
        return SampleSet(n_orb=samples.n_orb, entries=dict(samples.entries))
    n_orb = samples.n_orb
    alpha, beta = samples.expand()
    n_shots = len(alpha)
    if n_shots == 0:
        return SampleSet(n_orb=n_orb)
    rng = child_rng(noise.seed, STREAM_NOISE)
    flips = rng.random((n_shots, 2 * n_orb)) < noise.p
    powers = 1 << np.arange(n_orb, dtype=np.int64)
    alpha = alpha ^ (flips[:, :n_orb] @ powers)
    beta = beta ^ (flips[:, n_orb:] @ powers)
    return SampleSet.from_arrays(n_orb, alpha, beta)


def _format_word(word: int, n_orb: int) -> str:
    return format(word, f"0{n_orb}b")


def write_samples(samples: SampleSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n_orb={samples.n_orb}\n")
        for (config, count) in sorted(samples.entries.items()):
            fh.write(
                f"{_format_word(config.alpha, samples.n_orb)} "
                f"{_format_word(config.beta, samples.n_orb)} {count}\n"
            )


def _parse_word(token: str, n_orb: int, lineno: int) -> int:
    if len(token) != n_orb:
        raise ParseError(
            f"bitstring {token!r} has length {len(token)}, expected {n_orb}",
            line=lineno,
        )
    if set(token) - {"0", "1"}:
        raise ParseError(f"bitstring {token!r} has non-binary characters", line=lineno)
    return int(token, 2)


def read_samples(path) -> SampleSet:
    """Read a samples file: header line ``n_orb=N``, then one
    ``ALPHA_BITS BETA_BITS COUNT`` record per line. ``#`` starts a comment."""
    out: SampleSet | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if out is None:
                if not line.startswith("n_orb="):
                    raise ParseError(
                        f"expected header 'n_orb=N', got {line!r}", line=lineno
                    )
                try:
                    n_orb = int(line[len("n_orb="):])
                except ValueError:
                    raise ParseError(f"bad header {line!r}", line=lineno) from None
                if n_orb < 1:
                    raise ParseError(f"n_orb must be positive, got {n_orb}", line=lineno)
                out = SampleSet(n_orb=n_orb)
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(
                    f"expected 'ALPHA BETA COUNT', got {line!r}", line=lineno
                )
            a = _parse_word(parts[0], out.n_orb, lineno)
            b = _parse_word(parts[1], out.n_orb, lineno)
            try:
                count = int(parts[2])
            except ValueError:
                raise ParseError(f"bad count {parts[2]!r}", line=lineno) from None
            if count < 1:
                raise ParseError(f"count must be >= 1, got {count}", line=lineno)
            out.add(Configuration(a, b), count)
    return out if out is not None else SampleSet(n_orb=0)
