"""Covert-communication rates and coding simulations for state-dependent DMCs.

The package computes covert capacities and bounds for finite state-dependent
channels under the distribution-matching covertness constraint, verifies the
closed-form worked channels, and runs desk-scale Monte Carlo simulations of
the random-coding schemes (keyed-hash codebooks, random-binning key
extraction, likelihood encoding, block-Markov chaining).
"""

from .capacity import (
    CovertRateResult,
    Scenario,
    SolveOptions,
    brute_force_oracle,
    evaluate,
    lemma3_diagnostics,
    simple_causal_grid,
    solve,
)
from .channel import (
    DirectConditional,
    GelfandPinsker,
    InputStrategy,
    MarkovInput,
    MarkovPair,
    ShannonStrategy,
    StateCorrelatedPair,
    StateDmc,
    StateIndependent,
    SynthesizedState,
    SynthesizedStateInput,
    XMap,
    always_innocent,
    induced_joint,
    innocent_distribution,
    load_model,
    save_model,
    warden_output,
)
from .codec import (
    BinningFn,
    Codebook,
    SimConfig,
    SimReport,
    bin_key,
    bin_reconcile,
    key_rate_budget,
    run_block_markov,
    typicality_decode,
)
from .prob import JointTable, Kernel, Pmf, compose

__version__ = "0.1.0"

__all__ = [
    "BinningFn",
    "Codebook",
    "CovertRateResult",
    "DirectConditional",
    "GelfandPinsker",
    "InputStrategy",
    "JointTable",
    "Kernel",
    "MarkovInput",
    "MarkovPair",
    "Pmf",
    "Scenario",
    "ShannonStrategy",
    "SimConfig",
    "SimReport",
    "SolveOptions",
    "StateCorrelatedPair",
    "StateDmc",
    "StateIndependent",
    "SynthesizedState",
    "SynthesizedStateInput",
    "XMap",
    "always_innocent",
    "bin_key",
    "bin_reconcile",
    "brute_force_oracle",
    "compose",
    "evaluate",
    "induced_joint",
    "innocent_distribution",
    "key_rate_budget",
    "lemma3_diagnostics",
    "load_model",
    "run_block_markov",
    "save_model",
    "simple_causal_grid",
    "solve",
    "warden_output",
]
