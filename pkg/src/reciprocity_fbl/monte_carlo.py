"""Monte Carlo oracle for the expected rates.

Samples are generated in fixed-size chunks. Chunk ``k`` of a run seeded with
``seed`` draws from its own PCG64 stream keyed by ``SeedSequence(seed,
spawn_key=(k,))``, and the per-chunk moments are pooled in chunk order, so an
estimate is bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Tuple

import numpy as np

from .channel_model import (
    SystemConfig,
    check_training_length,
    downlink_training_stats,
    uplink_effective_snr,
)
from .errors import DomainError
from .finite_blocklength import rate_samples

CHUNK_SIZE = 1 << 16
MIN_SAMPLES = 100
# complex entries per sub-batch of the pilot pipeline, bounds memory for long pilots
_PIPELINE_BATCH_ENTRIES = 1 << 21


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class FadingBlock:
    h_u: np.ndarray
    e: np.ndarray
    h_d: np.ndarray
    noise_seed_state: Any

    @property
    def gain_u(self) -> float:
        return float(np.vdot(self.h_u, self.h_u).real)


def stream_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric CN(0, variance) entries."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_block(cfg: SystemConfig, rng: np.random.Generator) -> FadingBlock:
    """One fading block with h_d = sqrt(phi) h_u^T + sqrt(1-phi) e^T."""
    h_u = complex_normal(rng, cfg.n_b)
    e = complex_normal(rng, cfg.n_b)
    h_d = math.sqrt(cfg.phi) * h_u + math.sqrt(1.0 - cfg.phi) * e
    return FadingBlock(h_u=h_u, e=e, h_d=h_d, noise_seed_state=rng.bit_generator.state)


def _gains(rng: np.random.Generator, n_b: int, m: int) -> np.ndarray:
    h = complex_normal(rng, (m, n_b))
    return np.einsum("ij,ij->i", h.real, h.real) + np.einsum("ij,ij->i", h.imag, h.imag)


def sample_gains(n_b: int, n_samples: int, seed: int) -> np.ndarray:
    """Normalised channel gains ||h||^2 drawn with the estimator chunking."""
    sizes = _chunk_sizes(n_samples)
    return np.concatenate([_gains(stream_rng(seed, k), n_b, m) for k, m in enumerate(sizes)])


def _chunk_sizes(n: int):
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _pool(moments) -> Tuple[int, float, float]:
    # Chan et al. pairwise update, applied in chunk order
    n, mean, m2 = 0, 0.0, 0.0
    for nk, mk, m2k in moments:
        delta = mk - mean
        total = n + nk
        mean += delta * nk / total
        m2 += m2k + delta * delta * n * nk / total
        n = total
    return n, mean, m2


def _estimate(
    per_chunk: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    workers: int,
) -> McEstimate:
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    sizes = _chunk_sizes(int(n_samples))

    def run(k: int):
        values = per_chunk(stream_rng(seed, k), sizes[k])
        mk = float(values.mean())
        return values.size, mk, float(np.sum((values - mk) ** 2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            moments = list(pool.map(run, range(len(sizes))))
    else:
        moments = [run(k) for k in range(len(sizes))]
    n, mean, m2 = _pool(moments)
    std_error = math.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean=mean, std_error=std_error, n_samples=n, seed=seed)


def _clamped_rates(snr: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    return np.maximum(rate_samples(snr, cfg.T, cfg.epsilon), 0.0)


def estimate_expected_capacity(gamma_eff: float, n_b: int, n_samples: int, seed: int,
                               workers: int = 1) -> McEstimate:
    """Sample mean of log2(1 + gamma_eff ||h||^2)."""
    return _estimate(lambda rng, m: np.log2(1.0 + gamma_eff * _gains(rng, n_b, m)),
                     n_samples, seed, workers)


def estimate_rate_uplink(cfg: SystemConfig, n_samples: int, seed: int, workers: int = 1) -> McEstimate:
    """Average clamped rate at SINR gamma_u_eff ||h_u||^2.

    The reciprocity interference enters through its mean power (worst-case
    Gaussian noise), so only h_u needs to be drawn.
    """
    gamma = uplink_effective_snr(cfg).value
    return _estimate(lambda rng, m: _clamped_rates(gamma * _gains(rng, cfg.n_b, m), cfg),
                     n_samples, seed, workers)


def estimate_rate_downlink_statistical(cfg: SystemConfig, n_samples: int, seed: int,
                                       workers: int = 1) -> McEstimate:
    """Draws the MMSE estimate directly as CN(0, var_estimate I)."""
    t_tr = check_training_length(cfg)
    stats = downlink_training_stats(cfg)
    prefactor = 1.0 - t_tr / cfg.T
    noise = cfg.rho_b * stats.var_error + 1.0

    def chunk(rng, m):
        h = complex_normal(rng, (m, cfg.n_b), stats.var_estimate)
        gain = np.einsum("ij,ij->i", h.real, h.real) + np.einsum("ij,ij->i", h.imag, h.imag)
        return prefactor * _clamped_rates(cfg.rho_b * gain / noise, cfg)

    return _estimate(chunk, n_samples, seed, workers)


def pilot_matrix(n_b: int, t_tr: int) -> np.ndarray:
    """First n_b rows of the unitary t_tr-point DFT matrix; S S^H = I."""
    if t_tr < n_b:
        raise DomainError("pilot length must be at least n_b")
    k = np.arange(n_b)[:, None]
    n = np.arange(t_tr)[None, :]
    return np.exp(-2j * np.pi * k * n / t_tr) / math.sqrt(t_tr)


def simulate_downlink_training(cfg: SystemConfig, m: int, rng: np.random.Generator):
    """Pilot transmission and LMMSE estimation for ``m`` blocks.

    Returns ``(h_d, h_hat)``, both of shape ``(m, n_b)``.
    """
    t_tr = check_training_length(cfg)
    lam = downlink_training_stats(cfg).lam
    s = pilot_matrix(cfg.n_b, t_tr)
    s_h = s.conj().T
    batch = max(1, _PIPELINE_BATCH_ENTRIES // t_tr)
    h_parts, est_parts = [], []
    for start in range(0, m, batch):
        b = min(batch, m - start)
        h_d = complex_normal(rng, (b, cfg.n_b))
        noise = complex_normal(rng, (b, t_tr))
        y = math.sqrt(lam) * h_d @ s + noise
        h_parts.append(h_d)
        est_parts.append(math.sqrt(lam) / (lam + 1.0) * y @ s_h)
    return np.concatenate(h_parts), np.concatenate(est_parts)


def estimate_rate_downlink_pipeline(cfg: SystemConfig, n_samples: int, seed: int,
                                    workers: int = 1) -> McEstimate:
    """Full pilot/estimate pipeline, then the worst-case-Gaussian SINR."""
    t_tr = check_training_length(cfg)
    stats = downlink_training_stats(cfg)
    prefactor = 1.0 - t_tr / cfg.T
    noise = cfg.rho_b * stats.var_error + 1.0

    def chunk(rng, m):
        _, h_hat = simulate_downlink_training(cfg, m, rng)
        gain = np.sum(np.abs(h_hat) ** 2, axis=1)
        return prefactor * _clamped_rates(cfg.rho_b * gain / noise, cfg)

    return _estimate(chunk, n_samples, seed, workers)

