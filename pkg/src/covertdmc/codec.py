"""Desk-scale Monte Carlo realization of the random-coding schemes.

Seven schemes are runnable: a one-shot superposition code for two-sided
non-causal state knowledge, block-Markov chains that refresh a shared key
from the state (two-sided causal and strictly causal), a block-Markov chain
with a likelihood encoder and state descriptions for transmitter-only state
knowledge, and three single-codebook baselines without key generation.

Codebooks are never stored: every codeword symbol is a keyed-hash function
of (codebook key, index, position) pushed through the inverse CDF of the
generating law, which preserves the i.i.d. random-coding statistics while
bounding memory.  Binning functions are keyed hashes of whole sequences.
All randomness derives deterministically from the master seed, so a report
is a pure function of its configuration.

Covertness is measured two ways per block: the exact divergence of the
uniform-index codebook mixture from the innocent product law (available
while the enumeration stays desk-sized), and plug-in estimates from the
observed warden sequences.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import xlogy

from . import info
from .channel import (
    DirectConditional,
    GelfandPinsker,
    InputStrategy,
    ShannonStrategy,
    StateDmc,
    StateIndependent,
    StrategyError,
    SynthesizedState,
    induced_joint,
    warden_output,
)
from .prob import JointTable, Kernel, Pmf

SCHEMES = (
    "superposition-nc-tr",
    "block-markov-c-tr",
    "block-markov-sc-tr",
    "block-markov-nc-t",
    "simple-gp-nc-t",
    "simple-c-t",
    "simple-sc-t",
)

_LAG2_SCHEMES = ("block-markov-nc-t",)
_DECODE_CAP = 1 << 20
_LIKELIHOOD_CAP = 1 << 20
_EXACT_INDEX_CAP = 1 << 16
_EXACT_CELL_CAP = 1 << 22


class DeskScaleError(ValueError):
    """A configuration walks past the enforced desk-scale caps."""


class SchemeError(ValueError):
    """Unknown scheme tag or an incompatible strategy for it."""


@dataclass(frozen=True)
class SimConfig:
    """Block-Markov simulation parameters.

    Rates are in bits per symbol; index spaces are sized ``2**ceil(r*rate)``
    and every reported rate is the realized ``ceil(r*rate)/r``.  ``rate`` is
    the message rate, ``rate_k`` the key-index rate consumed by the codebook,
    ``rate_key`` the key-extraction range, ``rate_t``/``rate_recon`` the
    reconciliation index and its binning range, and ``rate_lik``/``rate_desc``
    the likelihood-encoder and description-codebook rates.
    """

    scheme: str
    blocks: int
    block_len: int
    rate: float
    rate_k: float = 0.0
    rate_t: float = 0.0
    rate_key: float | None = None
    rate_recon: float | None = None
    rate_lik: float = 0.0
    rate_desc: float = 0.0
    eps: float = 0.05
    eps1: float = 0.075
    eps2: float = 0.1
    trials: int = 100
    seed: int = 0
    exact_kl_max_r: int = 12

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise SchemeError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.blocks < 1 or self.block_len < 1 or self.trials < 1:
            raise DeskScaleError("blocks, block_len, and trials must be positive")
        if not (self.eps2 > self.eps1 > self.eps > 0.0):
            raise DeskScaleError("typicality ladder must satisfy eps2 > eps1 > eps > 0")
        for name in ("rate", "rate_k", "rate_t", "rate_lik", "rate_desc"):
            if getattr(self, name) < 0.0:
                raise DeskScaleError(f"{name} must be nonnegative")
        if self.rate_key is not None and self.rate_k > self.rate_key + 1e-12:
            raise DeskScaleError("rate_k must not exceed the key range rate_key")
        if self.rate_recon is not None and self.rate_t > self.rate_recon + 1e-12:
            raise DeskScaleError("rate_t must not exceed the bin range rate_recon")
        if self.scheme in _LAG2_SCHEMES and self.blocks < 3:
            raise DeskScaleError("key chaining at lag two needs at least 3 blocks")

    def bits(self, rate: float) -> int:
        return int(math.ceil(self.block_len * rate - 1e-12))

    def size(self, rate: float) -> int:
        return 1 << self.bits(rate)

    def realized(self, rate: float) -> float:
        return self.bits(rate) / self.block_len


# ---------------------------------------------------------------------------
# Keyed-hash primitives.
# ---------------------------------------------------------------------------


def derive_key(seed: int, *tags: str | int) -> bytes:
    h = hashlib.blake2b(digest_size=32)
    h.update(struct.pack("<q", seed))
    for t in tags:
        h.update(str(t).encode() + b"\x00")
    return h.digest()


def _prf_u64(key: bytes, *parts: int) -> int:
    h = hashlib.blake2b(digest_size=8, key=key)
    h.update(struct.pack(f"<{len(parts)}q", *parts))
    return int.from_bytes(h.digest(), "little")


def _prf_unit(key: bytes, *parts: int) -> float:
    return _prf_u64(key, *parts) / 2.0**64


@dataclass(frozen=True)
class Codebook:
    """Lazily generated i.i.d. codebook over a flat index space."""

    key: bytes
    index_sizes: tuple[int, ...]
    gen: Pmf
    length: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index_sizes", tuple(int(s) for s in self.index_sizes))
        cdf = np.cumsum(self.gen.probs)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @property
    def n_indices(self) -> int:
        return int(np.prod(self.index_sizes))

    def _flat(self, index: tuple[int, ...]) -> int:
        if len(index) != len(self.index_sizes):
            raise DeskScaleError("index arity mismatch")
        flat = 0
        for i, size in zip(index, self.index_sizes):
            if not 0 <= i < size:
                raise DeskScaleError(f"index {index} out of range {self.index_sizes}")
            flat = flat * size + i
        return flat

    def symbol_id(self, index: tuple[int, ...], position: int) -> int:
        if not 0 <= position < self.length:
            raise DeskScaleError("position out of range")
        u = _prf_unit(self.key, self._flat(index), position)
        return int(np.searchsorted(self._cdf, u, side="right"))

    def codeword_ids(self, index: tuple[int, ...]) -> np.ndarray:
        flat = self._flat(index)
        cached = self._cache.get(flat)
        if cached is None:
            cached = np.array(
                [
                    np.searchsorted(self._cdf, _prf_unit(self.key, flat, i), side="right")
                    for i in range(self.length)
                ],
                dtype=np.intp,
            )
            self._cache[flat] = cached
        return cached

    def materialize(self) -> np.ndarray:
        """Dense (n_indices, length) table of symbol ids."""
        n = self.n_indices
        if n * self.length > _DECODE_CAP * 32:
            raise DeskScaleError("codebook too large to materialize")
        out = self._cache.get("__all__")
        if out is None:
            out = np.empty((n, self.length), dtype=np.intp)
            for flat in range(n):
                for i in range(self.length):
                    out[flat, i] = np.searchsorted(
                        self._cdf, _prf_unit(self.key, flat, i), side="right"
                    )
            out.setflags(write=False)
            self._cache["__all__"] = out
        return out


def codeword(cb: Codebook, index: tuple[int, ...], position: int) -> str:
    """Symbol at (index, position); deterministic in (key, index, position)."""
    return cb.gen.labels[cb.symbol_id(index, position)]


@dataclass(frozen=True)
class ConditionalCodebook:
    """State-indexed codebook: one i.i.d. draw per (state sequence, index)."""

    key: bytes
    n_messages: int
    kernel: Kernel  # state symbol -> input law
    length: int

    def __post_init__(self) -> None:
        cdfs = np.cumsum(self.kernel.as_matrix(), axis=1)
        cdfs[:, -1] = 1.0
        object.__setattr__(self, "_cdfs", cdfs)

    def codeword_ids(self, state_ids: np.ndarray, m: int) -> np.ndarray:
        if not 0 <= m < self.n_messages:
            raise DeskScaleError("message index out of range")
        s_flat = 0
        n_states = len(self.kernel.input_labels)
        for s in state_ids:
            s_flat = s_flat * n_states + int(s)
        out = np.empty(self.length, dtype=np.intp)
        for i, s in enumerate(state_ids):
            u = _prf_unit(self.key, s_flat, m, i)
            out[i] = np.searchsorted(self._cdfs[int(s)], u, side="right")
        return out


@dataclass(frozen=True)
class BinningFn:
    """Uniform random binning of length-``r`` sequences, keyed-hash backed."""

    key: bytes
    alphabet: tuple[str, ...]
    length: int
    range_size: int

    def __post_init__(self) -> None:
        if self.range_size < 1:
            raise DeskScaleError("binning range must be at least 1")

    def bin_of_ids(self, ids: Sequence[int] | np.ndarray) -> int:
        if len(ids) != self.length:
            raise DeskScaleError(
                f"sequence length {len(ids)} does not match bin domain {self.length}"
            )
        h = hashlib.blake2b(digest_size=8, key=self.key)
        h.update(np.asarray(ids, dtype=np.int64).tobytes())
        value = int.from_bytes(h.digest(), "little")
        return value % self.range_size + 1

    def bin_of_symbols(self, seq: Sequence[str]) -> int:
        ids = [self.alphabet.index(s) for s in seq]
        return self.bin_of_ids(ids)


def bin_key(phi: BinningFn, seq: Sequence[str]) -> int:
    """Key index in ``[1, range_size]`` for a symbol sequence."""
    return phi.bin_of_symbols(seq)


def bin_reconcile(varphi: BinningFn, seq: Sequence[str]) -> int:
    """Reconciliation bin index; same construction, independent key."""
    return varphi.bin_of_symbols(seq)


# ---------------------------------------------------------------------------
# Likelihood encoder and typicality decoder.
# ---------------------------------------------------------------------------


def likelihood_select(rng: np.random.Generator, log_weights: np.ndarray):
    """Sample an index proportionally to exp(log_weights); None if all -inf."""
    flat = log_weights.reshape(-1)
    finite = np.isfinite(flat)
    if not np.any(finite):
        return None
    shifted = flat - flat[finite].max()
    weights = np.where(finite, np.exp(shifted), 0.0)
    weights /= weights.sum()
    choice = int(rng.choice(len(flat), p=weights))
    return np.unravel_index(choice, log_weights.shape)


def likelihood_encode(
    rng: np.random.Generator,
    log_state_given_letters: np.ndarray,
    u_words: np.ndarray,
    v_words: np.ndarray,
    s_ids: np.ndarray,
):
    """Joint index selection from the exact normalized state likelihood.

    ``log_state_given_letters[u, v, s]`` is the per-position log-mass of the
    state given the two codeword letters; candidates are all pairs of rows of
    ``u_words`` (the message-bin slice) and ``v_words``.  Returns the sampled
    pair or None when no candidate gives the state sequence positive mass.
    """
    n_u, n_v = len(u_words), len(v_words)
    if n_u * n_v > _LIKELIHOOD_CAP:
        raise DeskScaleError("likelihood candidate space exceeds the desk cap")
    logw = np.zeros((n_u, n_v))
    for a in range(n_v):
        per_pos = log_state_given_letters[u_words[:, :], v_words[a][None, :], s_ids[None, :]]
        logw[:, a] = per_pos.sum(axis=1)
    return likelihood_select(rng, logw)


def typicality_decode(
    cfg: SimConfig,
    candidate_words: np.ndarray,
    ref: JointTable,
    codeword_axis: str,
    fixed: dict[str, np.ndarray],
    eps: float | None = None,
):
    """Index of the unique strongly typical candidate, else None.

    ``candidate_words`` is an (n, r) array of symbol ids for the codeword
    axis; ``fixed`` maps the other axis names to observed id sequences.  The
    unique-candidate rule is strict: zero or several typical candidates both
    decode to failure, never to a guess.
    """
    eps = cfg.eps2 if eps is None else eps
    if eps <= 0.0:
        return None
    hits = _typical_indices(cfg, candidate_words, ref, codeword_axis, fixed, eps)
    return hits[0] if len(hits) == 1 else None


# ---------------------------------------------------------------------------
# Exact and estimated block-level covertness.
# ---------------------------------------------------------------------------


def exact_block_distribution(
    letter_rows: np.ndarray, codeword_ids: np.ndarray
) -> np.ndarray:
    """Uniform-ensemble warden law: average of per-codeword product kernels.

    ``letter_rows[letter, z]`` is the single-letter warden conditional and
    ``codeword_ids`` an (N, r) table; the result is the flat distribution
    over warden sequences in row-major order.
    """
    n, r = codeword_ids.shape
    nz = letter_rows.shape[1]
    if n > _EXACT_INDEX_CAP:
        raise DeskScaleError("exact enumeration index count exceeds the desk cap")
    if nz**r > _EXACT_CELL_CAP:
        raise DeskScaleError("exact enumeration cell count exceeds the desk cap")
    words, counts = np.unique(codeword_ids, axis=0, return_counts=True)
    out = np.zeros(nz**r)
    for word, count in zip(words, counts):
        vec = np.ones(1)
        for letter in word:
            vec = np.multiply.outer(vec, letter_rows[letter]).reshape(-1)
        out += count * vec
    return out / n


def divergence_to_product(p_flat: np.ndarray, q: np.ndarray, r: int) -> float:
    """``D(P || q^r)`` in bits for a flat law over length-``r`` sequences."""
    nz = len(q)
    logq = np.where(q > 0, np.log2(np.maximum(q, 1e-300)), -np.inf)
    log_prod = np.zeros(nz**r)
    for axis in range(r):
        reps_outer = nz**axis
        reps_inner = nz ** (r - axis - 1)
        log_prod += np.tile(np.repeat(logq, reps_inner), reps_outer)
    if np.any((p_flat > 0) & np.isneginf(log_prod)):
        return math.inf
    h = float(-xlogy(p_flat, p_flat).sum() / math.log(2.0))
    cross = float(-(p_flat * np.where(p_flat > 0, log_prod, 0.0)).sum())
    return max(0.0, cross - h)


def block_table(p_flat: np.ndarray, z_alphabet: tuple[str, ...], r: int) -> JointTable:
    axes = tuple((f"Z{i + 1}", z_alphabet) for i in range(r))
    return JointTable(axes, p_flat.reshape((len(z_alphabet),) * r))


def plugin_estimates(samples: list[tuple[int, ...]], q: np.ndarray, r: int) -> dict:
    """No-smoothing plug-in divergence and total variation from samples.

    An observed sequence outside the product support flags the divergence as
    infinite rather than a number.  The report carries a first-order bias
    estimate and a delta-method standard error so callers can compare against
    the exact path.
    """
    n = len(samples)
    freq: dict[tuple[int, ...], int] = {}
    for s in samples:
        freq[s] = freq.get(s, 0) + 1
    logq = np.where(q > 0, np.log2(np.maximum(q, 1e-300)), -np.inf)
    kl_terms = []
    weights = []
    tv_acc = 0.0
    q_seen = 0.0
    infinite = False
    for seq, count in freq.items():
        p_hat = count / n
        logq_seq = float(sum(logq[i] for i in seq))
        q_seq = 2.0**logq_seq if math.isfinite(logq_seq) else 0.0
        if q_seq == 0.0:
            infinite = True
        else:
            kl_terms.append(math.log2(p_hat) - logq_seq)
            weights.append(p_hat)
        tv_acc += abs(p_hat - q_seq)
        q_seen += q_seq
    tv = 0.5 * (tv_acc + (1.0 - q_seen))
    if infinite:
        return {"kl_bits": math.inf, "tv": tv, "n": n,
                "bias_bits": 0.0, "se_bits": math.nan, "support": len(freq)}
    kl_terms_arr = np.asarray(kl_terms)
    w = np.asarray(weights)
    value = float((w * kl_terms_arr).sum())
    mean = value
    var = float((w * (kl_terms_arr - mean) ** 2).sum())
    se = math.sqrt(max(var, 0.0) / n)
    bias = (len(freq) - 1) / (2.0 * n * math.log(2.0))
    return {"kl_bits": value, "tv": tv, "n": n, "bias_bits": bias,
            "se_bits": se, "support": len(freq)}


# ---------------------------------------------------------------------------
# Reports.
# ---------------------------------------------------------------------------


@dataclass
class SimReport:
    """Measured reliability and covertness of one simulation run."""

    scheme: str
    config: dict
    realized_rates: dict
    p_e_block: float
    p_e_block_ci: float
    p_e_trial: float
    p_e_trial_ci: float
    key_failure_rate: float
    encode_failure_rate: float
    error_breakdown: dict
    per_block: list[dict]
    genie_key_bits: int
    trace: list[dict]
    exact_tables: list[JointTable] | None = None

    def to_dict(self) -> dict:
        def fix(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            if isinstance(v, float) and math.isnan(v):
                return "nan"
            return v

        def walk(obj):
            if isinstance(obj, dict):
                return {k: walk(v) for k, v in sorted(obj.items())}
            if isinstance(obj, list):
                return [walk(v) for v in obj]
            return fix(obj)

        return walk(
            {
                "scheme": self.scheme,
                "config": self.config,
                "realized_rates": self.realized_rates,
                "p_e_block": self.p_e_block,
                "p_e_block_ci": self.p_e_block_ci,
                "p_e_trial": self.p_e_trial,
                "p_e_trial_ci": self.p_e_trial_ci,
                "key_failure_rate": self.key_failure_rate,
                "encode_failure_rate": self.encode_failure_rate,
                "error_breakdown": self.error_breakdown,
                "per_block": self.per_block,
                "genie_key_bits": self.genie_key_bits,
            }
        )


def _ci(p: float, n: int) -> float:
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / max(n, 1))


def key_rate_budget(dmc: StateDmc, strat: InputStrategy) -> float:
    """Extractable key budget in bits per symbol for a strategy.

    The state itself funds the key for the schemes that bin it directly, so
    the budget is the warden's residual uncertainty about the state;
    strategies that carry a separate description letter fund the key from
    that letter instead.
    """
    j = induced_joint(dmc, strat)
    target = {"V"} if "V" in j.names else {"S"}
    return info.conditional_entropy(j, target, {"Z"})


# ---------------------------------------------------------------------------
# Scheme runners.
# ---------------------------------------------------------------------------


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1000, trial)))
    )


def _sample_ids(rng: np.random.Generator, cdf: np.ndarray, size: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.intp)


class _ChannelSampler:
    """Samples (y, z) id sequences given (x, s) id sequences."""

    def __init__(self, dmc: StateDmc) -> None:
        w = dmc.w_array()
        nx, ns, ny, nz = w.shape
        flat = w.reshape(nx, ns, ny * nz)
        cdfs = np.cumsum(flat, axis=2)
        cdfs[:, :, -1] = 1.0
        self._cdfs = cdfs
        self._ny, self._nz = ny, nz

    def sample(self, rng, x_ids, s_ids):
        u = rng.random(len(x_ids))
        yz = np.empty(len(x_ids), dtype=np.intp)
        for i, (x, s) in enumerate(zip(x_ids, s_ids)):
            yz[i] = np.searchsorted(self._cdfs[x, s], u[i], side="right")
        return yz // self._nz, yz % self._nz


def _state_cdf(dmc: StateDmc) -> np.ndarray:
    cdf = np.cumsum(dmc.q_s.probs)
    cdf[-1] = 1.0
    return cdf


def _block_covertness_entry(
    cfg: SimConfig,
    dmc: StateDmc,
    strat: InputStrategy,
    letter_rows: np.ndarray,
    codeword_ids: np.ndarray,
    z_samples: list[tuple[int, ...]],
) -> tuple[dict, JointTable | None]:
    """Exact and plug-in covertness figures for one block's codebook."""
    r = cfg.block_len
    q0 = dmc.q0.probs
    qz = warden_output(dmc, strat).probs
    entry: dict = {}
    table = None
    nz = len(q0)
    exact_ok = (
        r <= cfg.exact_kl_max_r
        and len(codeword_ids) <= _EXACT_INDEX_CAP
        and nz**r <= _EXACT_CELL_CAP
    )
    if exact_ok:
        p_flat = exact_block_distribution(letter_rows, codeword_ids)
        kl = divergence_to_product(p_flat, q0, r)
        entry["kl_exact_bits"] = kl
        entry["kl_exact_bits_per_symbol"] = kl / r if math.isfinite(kl) else math.inf
        entry["resolvability_kl_bits"] = divergence_to_product(p_flat, qz, r)
        logq = np.where(q0 > 0, np.log2(np.maximum(q0, 1e-300)), -np.inf)
        prod = np.zeros(nz**r)
        for axis in range(r):
            prod += np.tile(
                np.repeat(logq, nz ** (r - axis - 1)), nz**axis
            )
        q_prod = np.where(np.isneginf(prod), 0.0, 2.0**prod)
        entry["tv_exact"] = float(np.abs(p_flat - q_prod).sum() / 2.0)
        table = block_table(p_flat, dmc.z_alphabet, r)
    else:
        entry["kl_exact_bits"] = None
        entry["kl_exact_bits_per_symbol"] = None
        entry["resolvability_kl_bits"] = None
        entry["tv_exact"] = None
    entry["plugin"] = plugin_estimates(z_samples, q0, r)
    return entry, table


def _typical_indices(
    cfg: SimConfig,
    candidate_words: np.ndarray,
    ref: JointTable,
    codeword_axis: str,
    fixed: dict[str, np.ndarray],
    eps: float,
) -> list[int]:
    n, r = candidate_words.shape
    if n > _DECODE_CAP:
        raise DeskScaleError("decoder candidate space exceeds the desk cap")
    if eps <= 0.0:
        return []
    names = ref.names
    shape = ref.values.shape
    strides = np.ones(len(names), dtype=np.intp)
    for i in range(len(names) - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    fixed_flat = np.zeros(r, dtype=np.intp)
    for i, name in enumerate(names):
        if name == codeword_axis:
            continue
        fixed_flat += np.asarray(fixed[name], dtype=np.intp) * strides[i]
    axis_pos = names.index(codeword_axis)
    ref_flat = ref.values.reshape(-1)
    lo = ref_flat * (1.0 - eps) - 1e-15
    hi = ref_flat * (1.0 + eps) + 1e-15
    hits = []
    n_cells = ref_flat.size
    for idx in range(n):
        cells = fixed_flat + candidate_words[idx] * strides[axis_pos]
        counts = np.bincount(cells, minlength=n_cells) / r
        if np.all((counts >= lo) & (counts <= hi)):
            hits.append(idx)
    return hits


def _is_typical(word_ids, ref, axis, fixed, eps, cfg) -> bool:
    return bool(
        _typical_indices(cfg, word_ids[None, :], ref, axis, fixed, eps)
    )


@dataclass
class _Tally:
    """Mutable counters shared by every scheme runner."""

    trials: int
    blocks: int
    block_errors: int = 0
    trial_errors: int = 0
    key_failures: int = 0
    key_checks: int = 0
    encode_failures: int = 0
    e1: int = 0
    e2: int = 0
    e3: int = 0
    trace: list = field(default_factory=list)

    def record(self, trial, block, ok, key_ok, e1, e2, e3):
        self.block_errors += int(not ok)
        self.e1 += int(e1)
        self.e2 += int(e2)
        self.e3 += int(e3)
        if key_ok is not None:
            self.key_checks += 1
            self.key_failures += int(not key_ok)
        self.trace.append(
            {"trial": trial, "block": block, "decoded_ok": bool(ok),
             "key_ok": (True if key_ok is None else bool(key_ok))}
        )

    def report(self, cfg: SimConfig, realized, per_block, genie_bits) -> SimReport:
        n = self.trials * self.blocks
        p_block = self.block_errors / n
        p_trial = self.trial_errors / self.trials
        kl_by_block = {e["block"]: e.get("kl_exact_bits") for e in per_block}
        tv_by_block = {e["block"]: e["plugin"]["tv"] for e in per_block}
        for row in self.trace:
            row["kl_exact"] = kl_by_block.get(row["block"])
            row["tv_plugin"] = tv_by_block.get(row["block"])
        return SimReport(
            scheme=cfg.scheme,
            config={
                "scheme": cfg.scheme, "blocks": cfg.blocks,
                "block_len": cfg.block_len, "rate": cfg.rate,
                "rate_k": cfg.rate_k, "rate_t": cfg.rate_t,
                "rate_key": cfg.rate_key, "rate_recon": cfg.rate_recon,
                "rate_lik": cfg.rate_lik, "rate_desc": cfg.rate_desc,
                "eps": cfg.eps, "eps1": cfg.eps1, "eps2": cfg.eps2,
                "trials": cfg.trials, "seed": cfg.seed,
                "exact_kl_max_r": cfg.exact_kl_max_r,
            },
            realized_rates=realized,
            p_e_block=p_block,
            p_e_block_ci=_ci(p_block, n),
            p_e_trial=p_trial,
            p_e_trial_ci=_ci(p_trial, self.trials),
            key_failure_rate=(
                self.key_failures / self.key_checks if self.key_checks else 0.0
            ),
            encode_failure_rate=self.encode_failures / n,
            error_breakdown={
                "encoder_pair_atypical": self.e1 / n,
                "truth_atypical": self.e2 / n,
                "competing_candidate": self.e3 / n,
            },
            per_block=per_block,
            genie_key_bits=genie_bits,
            trace=self.trace,
        )


def run_block_markov(cfg: SimConfig, dmc: StateDmc, strat: InputStrategy) -> SimReport:
    """Simulate a scheme end to end and measure reliability and covertness.

    Deterministic in (cfg, seed): codebooks and binning functions derive from
    the seed per block, trials derive independent sub-seeds, and aggregation
    is order-independent.  The returned report keeps the exact multi-letter
    warden tables (when computed) on ``exact_tables`` for diagnostics.
    """
    if cfg.scheme in ("block-markov-sc-tr", "block-markov-c-tr"):
        return _run_two_sided_chain(cfg, dmc, strat)
    if cfg.scheme == "superposition-nc-tr":
        return _run_superposition(cfg, dmc, strat)
    if cfg.scheme in ("simple-c-t", "simple-sc-t"):
        return _run_simple(cfg, dmc, strat)
    if cfg.scheme == "simple-gp-nc-t":
        return _run_simple_gp(cfg, dmc, strat)
    return _run_chained_descriptions(cfg, dmc, strat)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemeError(msg)


def _run_two_sided_chain(cfg, dmc, strat) -> SimReport:
    """Key-refreshing chain with the state known at both terminals.

    Codewords carry (message, key) indices; each block's state sequence is
    hashed into the next block's key by both terminals, so key agreement is
    structural and the first block consumes one genie key.
    """
    r, B = cfg.block_len, cfg.blocks
    shannon = cfg.scheme == "block-markov-c-tr"
    if shannon:
        _require(isinstance(strat, ShannonStrategy),
                 "block-markov-c-tr needs a ShannonStrategy")
        gen = strat.p_u
        xmap_idx = strat.x_map.index_table(dmc.x_alphabet)
        axis = "U"
    else:
        _require(isinstance(strat, StateIndependent),
                 "block-markov-sc-tr needs a StateIndependent strategy")
        gen = strat.p_x
        axis = "X"

    M, K = cfg.size(cfg.rate), cfg.size(cfg.rate_k)
    rate_key = cfg.rate_key if cfg.rate_key is not None else cfg.rate_k
    KR = cfg.size(rate_key)
    _require(KR >= K, "key range must cover the codebook key index")
    if M > _DECODE_CAP or M * K * r > 32 * _DECODE_CAP:
        raise DeskScaleError("codebook exceeds the desk caps")

    books = [
        Codebook(derive_key(cfg.seed, "codebook", j), (M, K), gen, r)
        for j in range(B)
    ]
    tables = [b.materialize().reshape(M, K, r) for b in books]
    bins = [
        BinningFn(derive_key(cfg.seed, "phi", j), dmc.s_alphabet, r, KR)
        for j in range(B)
    ]

    joint = induced_joint(dmc, strat)
    ref_dec = joint.marginalize({axis, "S", "Y"})
    ref_enc = joint.marginalize({axis, "S"})

    q = dmc.q_s.probs
    wz = dmc.w_z_array()
    if shannon:
        nu, ns = xmap_idx.shape
        letter_rows = np.stack(
            [q @ np.stack([wz[xmap_idx[u, s], s] for s in range(ns)]) for u in range(nu)]
        )
    else:
        letter_rows = np.stack([q @ wz[x] for x in range(len(dmc.x_alphabet))])

    sampler = _ChannelSampler(dmc)
    s_cdf = _state_cdf(dmc)
    tally = _Tally(cfg.trials, B)
    z_samples: list[list[tuple[int, ...]]] = [[] for _ in range(B)]

    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, t)
        k_idx = int(rng.integers(K))
        trial_failed = False
        for j in range(B):
            s_ids = _sample_ids(rng, s_cdf, r)
            m = int(rng.integers(M))
            letter_ids = tables[j][m, k_idx]
            x_ids = xmap_idx[letter_ids, s_ids] if shannon else letter_ids
            y_ids, z_ids = sampler.sample(rng, x_ids, s_ids)
            z_samples[j].append(tuple(int(z) for z in z_ids))

            cands = tables[j][:, k_idx]
            fixed = {"S": s_ids, "Y": y_ids}
            hits = _typical_indices(cfg, cands, ref_dec, axis, fixed, cfg.eps2)
            ok = hits == [m]
            e1 = not _is_typical(letter_ids, ref_enc, axis, {"S": s_ids}, cfg.eps1, cfg)
            e2 = m not in hits
            e3 = any(h != m for h in hits)
            k_next = bins[j].bin_of_ids(s_ids)
            tally.record(t, j, ok, True, e1, e2, e3)
            trial_failed = trial_failed or not ok
            k_idx = (k_next - 1) % K
        tally.trial_errors += int(trial_failed)

    per_block = []
    exact_tables = []
    for j in range(B):
        entry, table = _block_covertness_entry(
            cfg, dmc, strat, letter_rows, tables[j].reshape(M * K, r), z_samples[j]
        )
        entry["block"] = j
        per_block.append(entry)
        if table is not None:
            exact_tables.append(table)
    realized = {
        "rate": cfg.realized(cfg.rate),
        "rate_k": cfg.realized(cfg.rate_k),
        "rate_key": cfg.realized(rate_key),
    }
    report = tally.report(cfg, realized, per_block, cfg.bits(cfg.rate_k))
    report.exact_tables = exact_tables or None
    return report


def _run_superposition(cfg, dmc, strat) -> SimReport:
    """One-shot state-indexed codebooks; both terminals know the state."""
    _require(isinstance(strat, DirectConditional),
             "superposition-nc-tr needs a DirectConditional strategy")
    r, B = cfg.block_len, cfg.blocks
    M = cfg.size(cfg.rate)
    if M > _DECODE_CAP:
        raise DeskScaleError("message space exceeds the decoder cap")
    books = [
        ConditionalCodebook(
            derive_key(cfg.seed, "codebook", j), M, strat.p_x_given_s, r
        )
        for j in range(B)
    ]
    joint = induced_joint(dmc, strat)
    ref_dec = joint.marginalize({"S", "X", "Y"})
    ref_enc = joint.marginalize({"S", "X"})
    sampler = _ChannelSampler(dmc)
    s_cdf = _state_cdf(dmc)
    tally = _Tally(cfg.trials, B)
    z_samples: list[list[tuple[int, ...]]] = [[] for _ in range(B)]

    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, t)
        trial_failed = False
        for j in range(B):
            s_ids = _sample_ids(rng, s_cdf, r)
            m = int(rng.integers(M))
            cands = np.stack([books[j].codeword_ids(s_ids, mm) for mm in range(M)])
            x_ids = cands[m]
            y_ids, z_ids = sampler.sample(rng, x_ids, s_ids)
            z_samples[j].append(tuple(int(z) for z in z_ids))
            fixed = {"S": s_ids, "Y": y_ids}
            hits = _typical_indices(cfg, cands, ref_dec, "X", fixed, cfg.eps2)
            ok = hits == [m]
            e1 = not _is_typical(x_ids, ref_enc, "X", {"S": s_ids}, cfg.eps1, cfg)
            tally.record(t, j, ok, None, e1, m not in hits, any(h != m for h in hits))
            trial_failed = trial_failed or not ok
        tally.trial_errors += int(trial_failed)

    per_block = []
    exact_tables = []
    for j in range(B):
        entry, table = _superposition_covertness(cfg, dmc, strat, books[j], z_samples[j])
        entry["block"] = j
        per_block.append(entry)
        if table is not None:
            exact_tables.append(table)
    realized = {"rate": cfg.realized(cfg.rate)}
    report = tally.report(cfg, realized, per_block, 0)
    report.exact_tables = exact_tables or None
    return report


def _superposition_covertness(cfg, dmc, strat, book, z_samples):
    r = cfg.block_len
    q0 = dmc.q0.probs
    ns = len(dmc.s_alphabet)
    nz = len(dmc.z_alphabet)
    M = book.n_messages
    entry: dict = {}
    table = None
    exact_ok = (
        r <= cfg.exact_kl_max_r
        and (ns**r) * M <= _EXACT_INDEX_CAP
        and nz**r <= _EXACT_CELL_CAP
    )
    if exact_ok:
        q = dmc.q_s.probs
        wz = dmc.w_z_array()
        p_flat = np.zeros(nz**r)
        s_ids = np.zeros(r, dtype=np.intp)
        for s_flat in range(ns**r):
            tmp = s_flat
            for i in range(r - 1, -1, -1):
                s_ids[i] = tmp % ns
                tmp //= ns
            weight = float(np.prod(q[s_ids]))
            if weight <= 0.0:
                continue
            for m in range(M):
                x_ids = book.codeword_ids(s_ids, m)
                vec = np.ones(1)
                for x, s in zip(x_ids, s_ids):
                    vec = np.multiply.outer(vec, wz[x, s]).reshape(-1)
                p_flat += (weight / M) * vec
        kl = divergence_to_product(p_flat, q0, r)
        entry["kl_exact_bits"] = kl
        entry["kl_exact_bits_per_symbol"] = kl / r if math.isfinite(kl) else math.inf
        qz = warden_output(dmc, strat).probs
        entry["resolvability_kl_bits"] = divergence_to_product(p_flat, qz, r)
        entry["tv_exact"] = None
        table = block_table(p_flat, dmc.z_alphabet, r)
    else:
        entry["kl_exact_bits"] = None
        entry["kl_exact_bits_per_symbol"] = None
        entry["resolvability_kl_bits"] = None
        entry["tv_exact"] = None
    entry["plugin"] = plugin_estimates(z_samples, q0, r)
    return entry, table


def _run_simple(cfg, dmc, strat) -> SimReport:
    """Single-codebook baselines; the receiver decodes from Y alone."""
    r, B = cfg.block_len, cfg.blocks
    shannon = cfg.scheme == "simple-c-t"
    if shannon:
        _require(isinstance(strat, ShannonStrategy), "simple-c-t needs a ShannonStrategy")
        gen = strat.p_u
        xmap_idx = strat.x_map.index_table(dmc.x_alphabet)
        axis = "U"
    else:
        _require(isinstance(strat, StateIndependent),
                 "simple-sc-t needs a StateIndependent strategy")
        gen = strat.p_x
        axis = "X"
    M = cfg.size(cfg.rate)
    if M > _DECODE_CAP:
        raise DeskScaleError("message space exceeds the decoder cap")
    books = [
        Codebook(derive_key(cfg.seed, "codebook", j), (M,), gen, r) for j in range(B)
    ]
    tables = [b.materialize() for b in books]
    joint = induced_joint(dmc, strat)
    ref_dec = joint.marginalize({axis, "Y"})
    ref_enc = joint.marginalize({axis, "S"})
    sampler = _ChannelSampler(dmc)
    s_cdf = _state_cdf(dmc)
    q = dmc.q_s.probs
    wz = dmc.w_z_array()
    if shannon:
        nu, ns = xmap_idx.shape
        letter_rows = np.stack(
            [q @ np.stack([wz[xmap_idx[u, s], s] for s in range(ns)]) for u in range(nu)]
        )
    else:
        letter_rows = np.stack([q @ wz[x] for x in range(len(dmc.x_alphabet))])

    tally = _Tally(cfg.trials, B)
    z_samples: list[list[tuple[int, ...]]] = [[] for _ in range(B)]
    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, t)
        trial_failed = False
        for j in range(B):
            s_ids = _sample_ids(rng, s_cdf, r)
            m = int(rng.integers(M))
            letter_ids = tables[j][m]
            x_ids = xmap_idx[letter_ids, s_ids] if shannon else letter_ids
            y_ids, z_ids = sampler.sample(rng, x_ids, s_ids)
            z_samples[j].append(tuple(int(z) for z in z_ids))
            hits = _typical_indices(cfg, tables[j], ref_dec, axis, {"Y": y_ids}, cfg.eps2)
            ok = hits == [m]
            e1 = not _is_typical(letter_ids, ref_enc, axis, {"S": s_ids}, cfg.eps1, cfg)
            tally.record(t, j, ok, None, e1, m not in hits, any(h != m for h in hits))
            trial_failed = trial_failed or not ok
        tally.trial_errors += int(trial_failed)

    per_block = []
    exact_tables = []
    for j in range(B):
        entry, table = _block_covertness_entry(
            cfg, dmc, strat, letter_rows, tables[j], z_samples[j]
        )
        entry["block"] = j
        per_block.append(entry)
        if table is not None:
            exact_tables.append(table)
    realized = {"rate": cfg.realized(cfg.rate)}
    report = tally.report(cfg, realized, per_block, 0)
    report.exact_tables = exact_tables or None
    return report


def _log_state_given_u(dmc: StateDmc, strat: GelfandPinsker) -> np.ndarray:
    """log P(s | u) from the design joint, -inf outside the support."""
    q = dmc.q_s.probs
    k = strat.p_u_given_s.as_matrix()  # (s, u)
    p_su = q[:, None] * k
    p_u = p_su.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(p_u[None, :] > 0, p_su / p_u[None, :], 0.0)
        logs = np.where(cond > 0, np.log(cond), -np.inf)
    return logs.T  # (u, s)


def _run_simple_gp(cfg, dmc, strat) -> SimReport:
    """One-shot likelihood-encoded codebook against non-causal state."""
    _require(isinstance(strat, GelfandPinsker),
             "simple-gp-nc-t needs a GelfandPinsker strategy")
    r, B = cfg.block_len, cfg.blocks
    M, L = cfg.size(cfg.rate), cfg.size(cfg.rate_lik)
    if M * L > _DECODE_CAP:
        raise DeskScaleError("candidate space exceeds the decoder cap")
    if L > _LIKELIHOOD_CAP:
        raise DeskScaleError("likelihood candidate space exceeds the desk cap")
    q = dmc.q_s.probs
    p_u = Pmf(strat.p_u_given_s.output_labels, q @ strat.p_u_given_s.as_matrix())
    xmap_idx = strat.x_map.index_table(dmc.x_alphabet)
    log_su = _log_state_given_u(dmc, strat)  # (u, s)
    books = [
        Codebook(derive_key(cfg.seed, "codebook", j), (M, L), p_u, r)
        for j in range(B)
    ]
    tables = [b.materialize().reshape(M, L, r) for b in books]
    joint = induced_joint(dmc, strat)
    ref_dec = joint.marginalize({"U", "Y"})
    ref_enc = joint.marginalize({"U", "S"})
    sampler = _ChannelSampler(dmc)
    s_cdf = _state_cdf(dmc)
    wz = dmc.w_z_array()
    ns = len(dmc.s_alphabet)
    with np.errstate(over="ignore"):
        p_s_given_u = np.exp(np.where(np.isfinite(log_su), log_su, -np.inf))
    nu = len(p_u)
    letter_rows = np.stack(
        [
            sum(p_s_given_u[u, s] * wz[xmap_idx[u, s], s] for s in range(ns))
            for u in range(nu)
        ]
    )

    tally = _Tally(cfg.trials, B)
    z_samples: list[list[tuple[int, ...]]] = [[] for _ in range(B)]
    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, t)
        trial_failed = False
        for j in range(B):
            s_ids = _sample_ids(rng, s_cdf, r)
            m = int(rng.integers(M))
            logw = log_su[tables[j][m][:, :], s_ids[None, :]].sum(axis=1)
            pick = likelihood_select(rng, logw)
            if pick is None:
                tally.encode_failures += 1
                ell = 0
            else:
                ell = int(pick[0])
            u_ids = tables[j][m, ell]
            x_ids = xmap_idx[u_ids, s_ids]
            y_ids, z_ids = sampler.sample(rng, x_ids, s_ids)
            z_samples[j].append(tuple(int(z) for z in z_ids))
            cands = tables[j].reshape(M * L, r)
            hits = _typical_indices(cfg, cands, ref_dec, "U", {"Y": y_ids}, cfg.eps2)
            m_hits = sorted({h // L for h in hits})
            ok = m_hits == [m] and pick is not None
            e1 = not _is_typical(u_ids, ref_enc, "U", {"S": s_ids}, cfg.eps1, cfg)
            tally.record(t, j, ok, None, e1, m not in m_hits,
                         any(h != m for h in m_hits))
            trial_failed = trial_failed or not ok
        tally.trial_errors += int(trial_failed)

    per_block = []
    exact_tables = []
    for j in range(B):
        entry, table = _block_covertness_entry(
            cfg, dmc, strat, letter_rows, tables[j].reshape(M * L, r), z_samples[j]
        )
        entry["block"] = j
        per_block.append(entry)
        if table is not None:
            exact_tables.append(table)
    realized = {"rate": cfg.realized(cfg.rate), "rate_lik": cfg.realized(cfg.rate_lik)}
    report = tally.report(cfg, realized, per_block, 0)
    report.exact_tables = exact_tables or None
    return report


def _run_chained_descriptions(cfg, dmc, strat) -> SimReport:
    """Block-Markov chain with likelihood encoding and state descriptions.

    Keys bind at lag two: the description chosen in block j seeds the key for
    block j+2, and its reconciliation index rides in block j+1, so the first
    two blocks consume genie keys.  The receiver sees Y alone: it decodes the
    (message, reconciliation, likelihood) triple, then resolves the previous
    block's description inside the reconciliation bin to extract the next
    key.  Extracted keys and bin indices are consumed modulo the codebook
    coordinate sizes.
    """
    _require(isinstance(strat, SynthesizedState),
             "block-markov-nc-t needs a SynthesizedState strategy")
    r, B = cfg.block_len, cfg.blocks
    M, T = cfg.size(cfg.rate), cfg.size(cfg.rate_t)
    K, L, A = cfg.size(cfg.rate_k), cfg.size(cfg.rate_lik), cfg.size(cfg.rate_desc)
    rate_key = cfg.rate_key if cfg.rate_key is not None else cfg.rate_k
    rate_recon = cfg.rate_recon if cfg.rate_recon is not None else cfg.rate_t
    KR, TR = cfg.size(rate_key), cfg.size(rate_recon)
    _require(KR >= K, "key range must cover the codebook key index")
    _require(TR >= T, "bin range must cover the reconciliation index")
    if M * T * L > _DECODE_CAP or L * A > _LIKELIHOOD_CAP:
        raise DeskScaleError("candidate space exceeds the desk caps")
    if M * T * K * L * r > 32 * _DECODE_CAP:
        raise DeskScaleError("codebook exceeds the desk caps")

    p_u, p_v = strat.p_u, strat.p_v
    nu, nv = len(p_u), len(p_v)
    ns = len(dmc.s_alphabet)
    xmap_idx = strat.x_map.index_table(dmc.x_alphabet)
    p_suv = strat.p_s_given_uv.as_matrix().reshape(nu, nv, ns)
    with np.errstate(divide="ignore"):
        log_suv = np.where(p_suv > 0, np.log(p_suv), -np.inf)

    u_books = [
        Codebook(derive_key(cfg.seed, "codebook-u", j), (M, T, K, L), p_u, r)
        for j in range(B)
    ]
    v_books = [
        Codebook(derive_key(cfg.seed, "codebook-v", j), (A,), p_v, r)
        for j in range(B)
    ]
    u_tables = [b.materialize().reshape(M, T, K, L, r) for b in u_books]
    v_tables = [b.materialize() for b in v_books]
    phis = [
        BinningFn(derive_key(cfg.seed, "phi", j), p_v.labels, r, KR) for j in range(B)
    ]
    varphis = [
        BinningFn(derive_key(cfg.seed, "varphi", j), p_v.labels, r, TR)
        for j in range(B)
    ]
    # Per description index: its reconciliation slot and extracted key,
    # already reduced to the codebook coordinate sizes.
    v_slots = [
        np.array([(varphis[j].bin_of_ids(v_tables[j][a]) - 1) % T for a in range(A)])
        for j in range(B)
    ]
    v_keys = [
        np.array([(phis[j].bin_of_ids(v_tables[j][a]) - 1) % K for a in range(A)])
        for j in range(B)
    ]

    joint = induced_joint(dmc, strat)
    ref_dec = joint.marginalize({"U", "Y"})
    ref_enc = joint.marginalize({"U", "S"})
    ref_rec = joint.marginalize({"V", "U", "Y"})
    sampler = _ChannelSampler(dmc)
    s_cdf = _state_cdf(dmc)

    wz = dmc.w_z_array()
    pair_rows = np.stack(
        [
            sum(p_suv[u, v, s] * wz[xmap_idx[u, s], s] for s in range(ns))
            for u in range(nu)
            for v in range(nv)
        ]
    )

    tally = _Tally(cfg.trials, B)
    z_samples: list[list[tuple[int, ...]]] = [[] for _ in range(B)]
    for t in range(cfg.trials):
        rng = _trial_rng(cfg.seed, t)
        genie = [int(rng.integers(K)), int(rng.integers(K))]
        enc_keys = list(genie)  # enc_keys[j]: key the encoder uses in block j
        dec_keys = list(genie)  # dec_keys[j]: receiver's belief for block j
        t_enc = int(rng.integers(T))  # reconciliation slot carried into block 0
        prev_state: dict | None = None
        trial_failed = False
        for j in range(B):
            s_ids = _sample_ids(rng, s_cdf, r)
            m = int(rng.integers(M))
            k_enc = enc_keys[j]
            u_slice = u_tables[j][m, t_enc, k_enc]  # (L, r)
            pick = likelihood_encode(rng, log_suv, u_slice, v_tables[j], s_ids)
            if pick is None:
                tally.encode_failures += 1
                ell, a = 0, 0
            else:
                ell, a = int(pick[0]), int(pick[1])
            u_ids = u_tables[j][m, t_enc, k_enc, ell]
            x_ids = xmap_idx[u_ids, s_ids]
            y_ids, z_ids = sampler.sample(rng, x_ids, s_ids)
            z_samples[j].append(tuple(int(z) for z in z_ids))
            enc_keys.append(int(v_keys[j][a]))  # becomes enc_keys[j + 2]
            t_next = int(v_slots[j][a])

            # Receiver side.
            k_dec = dec_keys[j]
            cands = u_tables[j][:, :, k_dec, :, :].reshape(M * T * L, r)
            hits = _typical_indices(cfg, cands, ref_dec, "U", {"Y": y_ids}, cfg.eps2)
            decoded = None
            if len(hits) == 1:
                mm, rem = divmod(hits[0], T * L)
                tt, llz = divmod(rem, L)
                decoded = (int(mm), int(tt), int(llz))
            ok = decoded is not None and decoded[0] == m and pick is not None
            truth_visible = k_dec == k_enc
            truth_flat = (m * T + t_enc) * L + ell
            e2 = not (truth_visible and truth_flat in hits)
            e3 = any(h // (T * L) != m for h in hits)
            e1 = not _is_typical(u_ids, ref_enc, "U", {"S": s_ids}, cfg.eps1, cfg)

            # Resolve the previous block's description from this block's
            # reconciliation slot; its key unlocks block j + 1.
            key_ok = None
            if j >= 1:
                k_hat = 0
                key_ok = False
                if decoded is not None and prev_state is not None:
                    in_bin = np.flatnonzero(v_slots[j - 1] == decoded[1])
                    rec_hits = [
                        int(a2)
                        for a2 in in_bin
                        if _is_typical(
                            v_tables[j - 1][a2], ref_rec, "V",
                            {"U": prev_state["u_hat"], "Y": prev_state["y_ids"]},
                            cfg.eps, cfg,
                        )
                    ]
                    if len(rec_hits) == 1:
                        k_hat = int(v_keys[j - 1][rec_hits[0]])
                        key_ok = k_hat == enc_keys[j + 1]
                dec_keys.append(k_hat)  # becomes dec_keys[j + 1]
            tally.record(t, j, ok, key_ok, e1, e2, e3)
            trial_failed = trial_failed or not ok
            prev_state = (
                {"u_hat": cands[hits[0]], "y_ids": y_ids} if len(hits) == 1 else None
            )
            t_enc = t_next
        tally.trial_errors += int(trial_failed)

    per_block = []
    exact_tables = []
    for j in range(B):
        pair_ids = _pair_codeword_ids(u_tables[j], v_tables[j], nu, nv)
        if pair_ids is None:
            entry = {
                "kl_exact_bits": None, "kl_exact_bits_per_symbol": None,
                "resolvability_kl_bits": None, "tv_exact": None,
                "plugin": plugin_estimates(z_samples[j], dmc.q0.probs, r),
            }
            table = None
        else:
            entry, table = _block_covertness_entry(
                cfg, dmc, strat, pair_rows, pair_ids, z_samples[j]
            )
        entry["block"] = j
        per_block.append(entry)
        if table is not None:
            exact_tables.append(table)
    realized = {
        "rate": cfg.realized(cfg.rate),
        "rate_t": cfg.realized(cfg.rate_t),
        "rate_k": cfg.realized(cfg.rate_k),
        "rate_lik": cfg.realized(cfg.rate_lik),
        "rate_desc": cfg.realized(cfg.rate_desc),
    }
    report = tally.report(cfg, realized, per_block, 2 * cfg.bits(cfg.rate_k))
    report.exact_tables = exact_tables or None
    return report


def _pair_codeword_ids(u_table: np.ndarray, v_table: np.ndarray, nu: int, nv: int):
    """Joint (u, v)-letter ids per (u-index, description) pair, or None
    when the enumeration would exceed the exact-path cap."""
    m, t, k, l, r = u_table.shape
    u_flat = u_table.reshape(m * t * k * l, r)
    a = v_table.shape[0]
    if u_flat.shape[0] * a > _EXACT_INDEX_CAP:
        return None
    out = np.empty((u_flat.shape[0] * a, r), dtype=np.intp)
    row = 0
    for i in range(u_flat.shape[0]):
        for j in range(a):
            out[row] = u_flat[i] * nv + v_table[j]
            row += 1
    return out
