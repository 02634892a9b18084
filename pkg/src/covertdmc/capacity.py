"""Covert-rate evaluators, solvers, and the independent grid oracle.

Twelve scenario tags cover the exact capacities with state knowledge at both
terminals (``nc-tr``, ``c-tr``, ``sc-tr``) and the inner/outer bounds with
state knowledge at the transmitter alone.  ``evaluate`` scores one strategy
exactly; ``solve`` searches for the best feasible strategy; and
``brute_force_oracle`` certifies the three two-sided scenarios by exhaustive
gridding of the covertness-feasible slice, staying independent of the solver
path.

Feasibility semantics: the covertness equality is enforced as a total
variation bound (default 1e-6), and strict inequalities require a slack of
at least ``STRICT_MARGIN``.  A boundary slack inside ``[-STRICT_MARGIN,
STRICT_MARGIN)`` is reported as a warning instead of a hard failure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import xlogy

from . import info
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
    StrategyError,
    SynthesizedState,
    SynthesizedStateInput,
    XMap,
    always_innocent,
    induced_joint,
)
from .prob import JointTable, Kernel, Pmf

STRICT_MARGIN = 1e-9
DEFAULT_COVERT_TOL = 1e-6
_LOG2E = math.log2(math.e)


class ScenarioError(ValueError):
    """Unknown scenario tag or a strategy of the wrong shape for it."""


class DiagnosticsError(ValueError):
    """A diagnostic inequality that should always hold was violated."""


# ---------------------------------------------------------------------------
# Scenario registry.
# ---------------------------------------------------------------------------

TR_SCENARIOS = ("nc-tr", "c-tr", "sc-tr")
ALL_SCENARIOS = (
    "nc-tr",
    "c-tr",
    "sc-tr",
    "nc-t-inner-wz",
    "nc-t-inner-simple",
    "nc-t-outer",
    "c-t-inner-wz",
    "c-t-inner-simple",
    "c-t-outer",
    "sc-t-inner-wz",
    "sc-t-inner-simple",
    "sc-t-outer",
)

# (u_card, v_card) as functions of |X|; None when the scenario has no such
# auxiliary letter.  These are the sufficiency caps the solver uses as search
# defaults; they are user-overridable.
_CARD_DEFAULTS: dict[str, tuple[Callable | None, Callable | None]] = {
    "nc-tr": (None, None),
    "c-tr": (lambda nx: nx + 1, None),
    "sc-tr": (None, None),
    "nc-t-inner-wz": (lambda nx: nx + 5, lambda nx: nx + 3),
    "nc-t-inner-simple": (lambda nx: nx + 2, None),
    "nc-t-outer": (lambda nx: nx + 3, lambda nx: nx + 3),
    "c-t-inner-wz": (lambda nx: nx + 2, lambda nx: nx + 3),
    "c-t-inner-simple": (lambda nx: nx + 1, None),
    "c-t-outer": (lambda nx: nx, lambda nx: nx),
    "sc-t-inner-wz": (None, lambda nx: nx + 3),
    "sc-t-inner-simple": (None, None),
    "sc-t-outer": (None, lambda nx: nx),
}

_STRICT = {
    "nc-tr": True,
    "c-tr": True,
    "sc-tr": True,
    "nc-t-inner-wz": True,
    "nc-t-inner-simple": True,
    "nc-t-outer": False,
    "c-t-inner-wz": True,
    "c-t-inner-simple": True,
    "c-t-outer": False,
    "sc-t-inner-wz": True,
    "sc-t-inner-simple": True,
    "sc-t-outer": False,
}


@dataclass(frozen=True)
class Scenario:
    """A scenario tag plus the auxiliary-alphabet search caps."""

    tag: str
    u_card: int | None = None
    v_card: int | None = None

    def __post_init__(self) -> None:
        if self.tag not in ALL_SCENARIOS:
            raise ScenarioError(f"unknown scenario tag {self.tag!r}")
        for card in (self.u_card, self.v_card):
            if card is not None and card < 1:
                raise ScenarioError("auxiliary cardinalities must be >= 1")

    @staticmethod
    def for_channel(
        tag: str,
        dmc: StateDmc,
        u_card: int | None = None,
        v_card: int | None = None,
    ) -> "Scenario":
        if tag not in _CARD_DEFAULTS:
            raise ScenarioError(f"unknown scenario tag {tag!r}")
        nx = len(dmc.x_alphabet)
        u_fn, v_fn = _CARD_DEFAULTS[tag]
        return Scenario(
            tag,
            u_card if u_card is not None else (u_fn(nx) if u_fn else None),
            v_card if v_card is not None else (v_fn(nx) if v_fn else None),
        )


@dataclass(frozen=True)
class CovertRateResult:
    """A rate in bits plus the strategy that achieves it and its slacks."""

    scenario: str
    objective_bits: float
    feasible: bool
    strategy: InputStrategy | None
    slack: dict[str, float]
    diagnostics: dict
    boundary_warning: bool = False
    empty_feasible: bool = False

    def __post_init__(self) -> None:
        cap = self.diagnostics.get("rate_cap_bits")
        if cap is not None and self.rate_bits > cap + 1e-9:
            raise ScenarioError(
                f"rate {self.rate_bits} exceeds the sanity cap {cap}"
            )

    @property
    def rate_bits(self) -> float:
        return max(0.0, self.objective_bits)

    def to_dict(self) -> dict:
        from .channel import strategy_to_dict

        return {
            "scenario": self.scenario,
            "rate_bits": self.rate_bits,
            "objective_bits": self.objective_bits,
            "feasible": self.feasible,
            "boundary_warning": self.boundary_warning,
            "empty_feasible": self.empty_feasible,
            "slack": dict(sorted(self.slack.items())),
            "strategy": None if self.strategy is None else strategy_to_dict(self.strategy),
            "diagnostics": dict(sorted(self.diagnostics.items())),
        }


# ---------------------------------------------------------------------------
# Exact evaluation of one strategy.
# ---------------------------------------------------------------------------

_EXPECTED_TYPE: dict[str, tuple] = {
    "nc-tr": (DirectConditional,),
    "c-tr": (ShannonStrategy,),
    "sc-tr": (StateIndependent,),
    "nc-t-inner-wz": (SynthesizedState,),
    "nc-t-inner-simple": (GelfandPinsker,),
    "nc-t-outer": (StateCorrelatedPair,),
    "c-t-inner-wz": (SynthesizedState,),
    "c-t-inner-simple": (ShannonStrategy,),
    "c-t-outer": (MarkovPair,),
    "sc-t-inner-wz": (SynthesizedStateInput,),
    "sc-t-inner-simple": (StateIndependent,),
    "sc-t-outer": (MarkovInput,),
}


def _objective_and_key(tag: str, j: JointTable) -> tuple[float, float]:
    mi = lambda a, b: info.mutual_information(j, a, b)
    cmi = lambda a, b, c: info.conditional_mutual_information(j, a, b, c)
    if tag == "nc-tr" or tag == "sc-tr":
        obj = cmi({"X"}, {"Y"}, {"S"})
        key = info.conditional_entropy(j, {"S"}, {"Z"}) - (
            cmi({"X"}, {"Z"}, {"S"}) - obj
        )
    elif tag == "c-tr":
        obj = cmi({"U"}, {"Y"}, {"S"})
        key = info.conditional_entropy(j, {"S"}, {"Z"}) - (
            cmi({"U"}, {"Z"}, {"S"}) - obj
        )
    elif tag == "nc-t-inner-wz":
        i_uy = mi({"U"}, {"Y"})
        i_vy_u = cmi({"V"}, {"Y"}, {"U"})
        obj = i_uy - max(mi({"U"}, {"S"}), mi({"U", "V"}, {"S"}) - i_vy_u)
        key = i_vy_u - max(mi({"V"}, {"Z"}), mi({"U", "V"}, {"Z"}) - i_uy)
    elif tag == "nc-t-inner-simple":
        obj = mi({"U"}, {"Y"}) - mi({"U"}, {"S"})
        key = mi({"U"}, {"Y"}) - mi({"U"}, {"Z"})
    elif tag == "nc-t-outer":
        obj = min(
            mi({"U"}, {"Y"}) - mi({"U"}, {"S"}),
            mi({"U", "V"}, {"Y"}) - cmi({"U"}, {"S"}, {"V"}),
        )
        key = obj - (mi({"V"}, {"Z"}) - mi({"V"}, {"S"}))
    elif tag == "c-t-inner-wz":
        i_uy = mi({"U"}, {"Y"})
        i_vy_u = cmi({"V"}, {"Y"}, {"U"})
        obj = i_uy + min(0.0, i_vy_u - mi({"V"}, {"S"}))
        key = i_vy_u - max(mi({"V"}, {"Z"}), mi({"U", "V"}, {"Z"}) - i_uy)
    elif tag == "c-t-inner-simple":
        obj = mi({"U"}, {"Y"})
        key = obj - mi({"U"}, {"Z"})
    elif tag == "c-t-outer":
        obj = mi({"U"}, {"Y"})
        key = obj - mi({"V"}, {"Z"})
    elif tag == "sc-t-inner-wz":
        i_xy = mi({"X"}, {"Y"})
        i_vy_x = cmi({"V"}, {"Y"}, {"X"})
        obj = i_xy + min(0.0, i_vy_x - mi({"V"}, {"S"}))
        key = i_vy_x - max(mi({"V"}, {"Z"}), mi({"X", "V"}, {"Z"}) - i_xy)
    elif tag == "sc-t-inner-simple":
        obj = mi({"X"}, {"Y"})
        key = obj - mi({"X"}, {"Z"})
    elif tag == "sc-t-outer":
        obj = mi({"X"}, {"Y"})
        key = obj - mi({"V"}, {"Z"})
    else:  # pragma: no cover - registry guards this
        raise ScenarioError(f"unknown scenario tag {tag!r}")
    return obj, key


def _rate_cap(scenario: Scenario, dmc: StateDmc) -> float:
    cap = math.log2(len(dmc.x_alphabet))
    for card in (scenario.u_card, scenario.v_card):
        if card:
            cap += math.log2(max(card, 1))
    return cap


def evaluate(
    scenario: str | Scenario,
    dmc: StateDmc,
    strat: InputStrategy,
    covert_tol: float = DEFAULT_COVERT_TOL,
) -> CovertRateResult:
    """Exact objective and constraint slacks of one strategy.

    The result's ``slack`` map holds ``covertness_tv`` (distance of the
    induced warden law from the innocent law), ``key_condition`` (the
    scenario's feasibility margin, strict unless the scenario is an outer
    bound), and ``decodability_margin`` (the rate headroom, i.e. the
    objective itself).
    """
    sc = scenario if isinstance(scenario, Scenario) else Scenario.for_channel(scenario, dmc)
    if not isinstance(strat, _EXPECTED_TYPE[sc.tag]):
        expected = "/".join(t.__name__ for t in _EXPECTED_TYPE[sc.tag])
        raise ScenarioError(
            f"scenario {sc.tag!r} needs a {expected} strategy, got "
            f"{type(strat).__name__}"
        )
    if sc.tag == "c-t-inner-wz" and not strat.state_rule_ignores_u():
        raise ScenarioError(
            "causal scenarios require a state rule that does not read U"
        )
    j = induced_joint(dmc, strat)
    tv = info.total_variation(j.marginalize({"Z"}).to_pmf(), dmc.q0)
    obj, key = _objective_and_key(sc.tag, j)
    strict = _STRICT[sc.tag]
    margin = STRICT_MARGIN if strict else -STRICT_MARGIN
    feasible = tv <= covert_tol and key >= margin
    boundary = strict and abs(key) < STRICT_MARGIN
    return CovertRateResult(
        scenario=sc.tag,
        objective_bits=obj,
        feasible=feasible,
        strategy=strat,
        slack={
            "covertness_tv": tv,
            "key_condition": key,
            "decodability_margin": obj,
        },
        diagnostics={
            "covert_tol": covert_tol,
            "strict": strict,
            "rate_cap_bits": _rate_cap(sc, dmc),
        },
        boundary_warning=boundary,
    )


# ---------------------------------------------------------------------------
# Solver.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolveOptions:
    """Knobs shared by every scenario's search."""

    u_card: int | None = None
    v_card: int | None = None
    starts: int = 32
    seed: int = 0
    covert_tol: float = DEFAULT_COVERT_TOL
    grid_step: float | None = None
    map_cap: int = 1024
    gp_map_cap: int = 256
    wz_map_cap: int = 32
    wz_starts: int = 8
    maxiter: int = 200


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _entropy_bits(arr: np.ndarray) -> float:
    return float(-xlogy(arr, arr).sum() / math.log(2.0))


def _mi_from_rows(p: np.ndarray, rows: np.ndarray, row_ents: np.ndarray) -> float:
    out = p @ rows
    return _entropy_bits(out) - float(p @ row_ents)


def _row_entropies(rows: np.ndarray) -> np.ndarray:
    return -xlogy(rows, rows).sum(axis=1) / math.log(2.0)


def _mi_grad(p: np.ndarray, rows: np.ndarray) -> np.ndarray:
    out = np.maximum(p @ rows, 1e-300)
    return (rows * (np.log(rows / out, where=rows > 0, out=np.zeros_like(rows)))).sum(
        axis=1
    ) / math.log(2.0) - _LOG2E


def _slsqp_max(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray] | None,
    x0: np.ndarray,
    eq_mats: list[tuple[np.ndarray, np.ndarray]],
    maxiter: int,
) -> np.ndarray | None:
    cons = [
        {"type": "eq", "fun": (lambda x, A=A, b=b: A @ x - b), "jac": (lambda x, A=A: A)}
        for A, b in eq_mats
    ]
    res = minimize(
        lambda x: -objective(x),
        x0,
        jac=(None if gradient is None else (lambda x: -gradient(x))),
        bounds=[(0.0, 1.0)] * len(x0),
        constraints=cons,
        method="SLSQP",
        options={"maxiter": maxiter, "ftol": 1e-12},
    )
    return res.x if res.x is not None else None


def _clean_simplex(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    total = x.sum()
    return x / total if total > 0 else np.full_like(x, 1.0 / len(x))


def _candidate_key(strat: InputStrategy) -> tuple:
    from .channel import strategy_to_dict

    def flatten(obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                yield from flatten(obj[k])
        elif isinstance(obj, (list, tuple)):
            for v in obj:
                yield from flatten(v)
        else:
            yield obj

    return tuple(flatten(strategy_to_dict(strat)))


class _Best:
    """Keeps the best feasible candidate with a deterministic tie-break."""

    def __init__(self) -> None:
        self.result: CovertRateResult | None = None
        self._key: tuple | None = None

    def offer(self, result: CovertRateResult) -> None:
        if not result.feasible:
            return
        key = None
        if self.result is None or result.objective_bits > self.result.objective_bits + 1e-12:
            self.result = result
            self._key = None
        elif abs(result.objective_bits - self.result.objective_bits) <= 1e-12:
            if self._key is None:
                self._key = _candidate_key(self.result.strategy)
            key = _candidate_key(result.strategy)
            if key < self._key:
                self.result = result
                self._key = key


def _covertness_rows(w_z_rows: np.ndarray, q0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear covertness system ``A p = b`` over mixture weights (drop one z)."""
    A = w_z_rows.T[:-1]
    b = q0[:-1]
    return A, b


def _lp_feasible(A_eqs: list[tuple[np.ndarray, np.ndarray]], dim: int) -> bool:
    A = np.vstack([a for a, _ in A_eqs])
    b = np.concatenate([bb for _, bb in A_eqs])
    res = linprog(
        np.zeros(dim), A_eq=A, b_eq=b, bounds=[(0.0, 1.0)] * dim, method="highs"
    )
    return bool(res.status == 0)


def _enumerate_row_multisets(
    n_rows: int, count: int, cap: int, rng: np.random.Generator
) -> list[tuple[int, ...]]:
    """Multisets of per-letter rows; relabeling-invariant map enumeration."""
    total = math.comb(n_rows + count - 1, count)
    if total <= cap:
        return list(itertools.combinations_with_replacement(range(n_rows), count))
    picked: set[tuple[int, ...]] = set()
    while len(picked) < cap:
        picked.add(tuple(sorted(rng.integers(0, n_rows, size=count).tolist())))
    return sorted(picked)


def _all_rows(nx: int, ns: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(nx), repeat=ns))


def _xmap_from_rows(
    rows: Sequence[tuple[int, ...]], u_labels, dmc: StateDmc
) -> XMap:
    table = tuple(tuple(dmc.x_alphabet[i] for i in row) for row in rows)
    return XMap(tuple(u_labels), dmc.s_alphabet, table)


def _u_labels(count: int) -> tuple[str, ...]:
    return tuple(f"u{i}" for i in range(count))


def _v_labels(count: int) -> tuple[str, ...]:
    return tuple(f"v{i}" for i in range(count))


def solve(
    scenario: str | Scenario,
    dmc: StateDmc,
    opts: SolveOptions | None = None,
) -> CovertRateResult:
    """Best feasible rate found for a scenario on a channel.

    Deterministic given ``opts.seed``.  The result's diagnostics carry the
    search breadth; global optimality is only claimed in exhaustive-grid
    mode (``opts.grid_step`` on the two-sided scenarios), everywhere else the
    result is flagged best-found.
    """
    opts = opts or SolveOptions()
    sc = (
        scenario
        if isinstance(scenario, Scenario)
        else Scenario.for_channel(scenario, dmc, opts.u_card, opts.v_card)
    )
    if opts.u_card is not None or opts.v_card is not None:
        sc = Scenario.for_channel(sc.tag, dmc, opts.u_card or sc.u_card, opts.v_card or sc.v_card)
    if opts.grid_step is not None:
        if sc.tag not in TR_SCENARIOS:
            raise ScenarioError("exhaustive-grid mode covers nc-tr, c-tr, sc-tr only")
        return brute_force_oracle(sc.tag, dmc, opts.grid_step, covert_tol=opts.covert_tol)

    if sc.tag == "nc-tr":
        return _solve_direct_conditional(dmc, sc, opts)
    if sc.tag in ("c-tr", "c-t-inner-simple", "c-t-outer"):
        return _solve_shannon_family(dmc, sc, opts)
    if sc.tag in ("sc-tr", "sc-t-inner-simple", "sc-t-outer"):
        return _solve_state_independent_family(dmc, sc, opts)
    if sc.tag in ("nc-t-inner-simple", "nc-t-outer"):
        return _solve_gp_conditional_family(dmc, sc, opts)
    return _solve_wz_family(dmc, sc, opts)


def _empty_result(sc: Scenario, dmc: StateDmc, diagnostics: dict) -> CovertRateResult:
    diagnostics = dict(diagnostics)
    diagnostics.setdefault("rate_cap_bits", _rate_cap(sc, dmc))
    return CovertRateResult(
        scenario=sc.tag,
        objective_bits=0.0,
        feasible=False,
        strategy=None,
        slack={"covertness_tv": math.inf, "key_condition": -math.inf,
               "decodability_margin": 0.0},
        diagnostics=diagnostics,
        empty_feasible=True,
    )


def _finish(
    sc: Scenario,
    dmc: StateDmc,
    best: _Best,
    diagnostics: dict,
) -> CovertRateResult:
    if best.result is None:
        return _empty_result(sc, dmc, diagnostics)
    diag = dict(best.result.diagnostics)
    diag.update(diagnostics)
    diag["rate_cap_bits"] = _rate_cap(sc, dmc)
    return replace(best.result, diagnostics=diag)


# -- nc-tr ------------------------------------------------------------------


def _solve_direct_conditional(
    dmc: StateDmc, sc: Scenario, opts: SolveOptions
) -> CovertRateResult:
    ns, nx = len(dmc.s_alphabet), len(dmc.x_alphabet)
    ny = len(dmc.y_alphabet)
    q = dmc.q_s.probs
    wy = dmc.w_y_array()  # (x, s, y)
    wz = dmc.w_z_array()
    dim = ns * nx

    row_sum = np.zeros((ns, dim))
    for s in range(ns):
        row_sum[s, s * nx : (s + 1) * nx] = 1.0
    cov = np.zeros((len(dmc.z_alphabet) - 1, dim))
    for s in range(ns):
        for x in range(nx):
            cov[:, s * nx + x] = q[s] * wz[x, s, :-1]
    eqs = [(row_sum, np.ones(ns)), (cov, dmc.q0.probs[:-1])]

    wy_sx = np.transpose(wy, (1, 0, 2))  # (s, x, y)
    h_rows = -xlogy(wy_sx, wy_sx).sum(axis=2) / math.log(2.0)  # (s, x)

    def objective(v: np.ndarray) -> float:
        k = v.reshape(ns, nx)
        py = np.einsum("sx,sxy->sy", k, wy_sx)
        hy = -xlogy(py, py).sum(axis=1) / math.log(2.0)
        return float(q @ (hy - (k * h_rows).sum(axis=1)))

    def gradient(v: np.ndarray) -> np.ndarray:
        k = v.reshape(ns, nx)
        py = np.maximum(np.einsum("sx,sxy->sy", k, wy_sx), 1e-300)
        log_ratio = np.where(
            wy_sx > 0, np.log(np.maximum(wy_sx, 1e-300)) - np.log(py)[:, None, :], 0.0
        )
        d = (wy_sx * log_ratio).sum(axis=2) / math.log(2.0)
        return (q[:, None] * (d - _LOG2E)).reshape(-1)

    rng = _rng(opts.seed, 0)
    starts = [np.tile(Pmf.point_mass(dmc.x0, dmc.x_alphabet).probs, ns)]
    starts.append(np.full(dim, 1.0 / nx))
    for _ in range(max(opts.starts - 2, 0)):
        starts.append(rng.dirichlet(np.ones(nx), size=ns).reshape(-1))

    best = _Best()
    evaluations = 0
    for x0 in starts:
        xs = _slsqp_max(objective, gradient, np.asarray(x0, dtype=float), eqs, opts.maxiter)
        if xs is None:
            continue
        k = np.stack([_clean_simplex(r) for r in xs.reshape(ns, nx)])
        strat = DirectConditional(
            Kernel.from_matrix(dmc.s_alphabet, dmc.x_alphabet, k)
        )
        res = evaluate(sc, dmc, strat, opts.covert_tol)
        evaluations += 1
        best.offer(res)
    return _finish(
        sc, dmc, best,
        {"starts": len(starts), "evaluations": evaluations, "best_found": True,
         "certified": False, "seed": opts.seed},
    )


# -- Shannon-strategy scenarios ----------------------------------------------


def _mixture_rows_for_map(
    dmc: StateDmc, rows: Sequence[tuple[int, ...]], conditional_on_state: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Per-letter output rows (for the objective) and warden rows (for covertness).

    With ``conditional_on_state`` the objective channel is ``u -> (s, y)``,
    matching rates conditioned on a receiver that knows the state; otherwise
    it is the state-averaged channel ``u -> y``.
    """
    q = dmc.q_s.probs
    wy = dmc.w_y_array()
    wz = dmc.w_z_array()
    ns, ny = len(dmc.s_alphabet), len(dmc.y_alphabet)
    obj_rows = []
    z_rows = []
    for row in rows:
        wy_u = np.stack([wy[row[s], s] for s in range(ns)])  # (s, y)
        wz_u = np.stack([wz[row[s], s] for s in range(ns)])
        if conditional_on_state:
            obj_rows.append((q[:, None] * wy_u).reshape(-1))  # joint (s, y)
        else:
            obj_rows.append(q @ wy_u)
        z_rows.append(q @ wz_u)
    return np.stack(obj_rows), np.stack(z_rows)


def _solve_shannon_family(
    dmc: StateDmc, sc: Scenario, opts: SolveOptions
) -> CovertRateResult:
    # The chained outer bound's auxiliary V never helps the maximum (a
    # constant V makes its constraint vacuous), so its search coincides with
    # the simple inner search minus the strict filter; matching breadth keeps
    # inner <= outer structурally.
    if sc.tag == "c-t-outer":
        u_card = opts.u_card or (len(dmc.x_alphabet) + 1)
    else:
        u_card = sc.u_card or (len(dmc.x_alphabet) + 1)
    conditional = sc.tag == "c-tr"
    rng = _rng(opts.seed, 1)
    all_rows = _all_rows(len(dmc.x_alphabet), len(dmc.s_alphabet))
    maps = _enumerate_row_multisets(len(all_rows), u_card, opts.map_cap, rng)
    u_labels = _u_labels(u_card)
    q0 = dmc.q0.probs

    best = _Best()
    evaluations = 0
    starts_per_map = max(2, opts.starts // 8)
    for map_idx in maps:
        rows = [all_rows[i] for i in map_idx]
        obj_rows, z_rows = _mixture_rows_for_map(dmc, rows, conditional)
        A_cov, b_cov = _covertness_rows(z_rows, q0)
        eqs = [(np.ones((1, u_card)), np.ones(1)), (A_cov, b_cov)]
        if not _lp_feasible(eqs, u_card):
            continue
        h_rows = _row_entropies(obj_rows)
        objective = lambda p, R=obj_rows, h=h_rows: _mi_from_rows(p, R, h)
        gradient = lambda p, R=obj_rows: _mi_grad(p, R)
        start_list = [np.full(u_card, 1.0 / u_card)]
        for _ in range(starts_per_map - 1):
            start_list.append(rng.dirichlet(np.ones(u_card)))
        for x0 in start_list:
            xs = _slsqp_max(objective, gradient, x0, eqs, opts.maxiter)
            if xs is None:
                continue
            p_u = _clean_simplex(xs)
            res = _score_shannon(sc, dmc, p_u, rows, u_labels, opts)
            evaluations += 1
            best.offer(res)
        if _STRICT[sc.tag] and best.result is None:
            # Concave maximum may violate the strict side constraint; retry
            # with a penalized objective that pulls back inside.
            for x0 in start_list:
                xs = _penalized_shannon(dmc, sc, rows, obj_rows, z_rows, eqs, x0, opts)
                if xs is None:
                    continue
                res = _score_shannon(sc, dmc, _clean_simplex(xs), rows, u_labels, opts)
                evaluations += 1
                best.offer(res)
    return _finish(
        sc, dmc, best,
        {"maps_considered": len(maps), "u_card": u_card,
         "evaluations": evaluations, "best_found": True, "certified": False,
         "seed": opts.seed},
    )


def _penalized_shannon(dmc, sc, rows, obj_rows, z_rows, eqs, x0, opts):
    h_obj = _row_entropies(obj_rows)
    wy = dmc.w_y_array()
    q = dmc.q_s.probs
    ns = len(dmc.s_alphabet)
    y_rows = np.stack([q @ np.stack([wy[r[s], s] for s in range(ns)]) for r in rows])
    h_y = _row_entropies(y_rows)
    h_z = _row_entropies(z_rows)

    def penalized(p: np.ndarray) -> float:
        base = _mi_from_rows(p, obj_rows, h_obj)
        margin = _mi_from_rows(p, y_rows, h_y) - _mi_from_rows(p, z_rows, h_z)
        return base + 10.0 * min(0.0, margin - 1e-6)

    return _slsqp_max(penalized, None, x0, eqs, opts.maxiter)


def _score_shannon(sc, dmc, p_u, rows, u_labels, opts) -> CovertRateResult:
    x_map = _xmap_from_rows(rows, u_labels, dmc)
    p = Pmf(u_labels, p_u)
    if sc.tag == "c-t-outer":
        strat = MarkovPair(
            Pmf(("v0",), np.ones(1)), Kernel(("v0",), (p,)), x_map
        )
    else:
        strat = ShannonStrategy(p, x_map)
    return evaluate(sc, dmc, strat, opts.covert_tol)


# -- State-independent scenarios ----------------------------------------------


def _solve_state_independent_family(
    dmc: StateDmc, sc: Scenario, opts: SolveOptions
) -> CovertRateResult:
    nx = len(dmc.x_alphabet)
    q = dmc.q_s.probs
    wy = dmc.w_y_array()
    wz = dmc.w_z_array()
    conditional = sc.tag == "sc-tr"
    if conditional:
        obj_rows = np.stack([(q[:, None] * wy[x]).reshape(-1) for x in range(nx)])
    else:
        obj_rows = np.stack([q @ wy[x] for x in range(nx)])
    z_rows = np.stack([q @ wz[x] for x in range(nx)])
    A_cov, b_cov = _covertness_rows(z_rows, dmc.q0.probs)
    eqs = [(np.ones((1, nx)), np.ones(1)), (A_cov, b_cov)]
    h_rows = _row_entropies(obj_rows)

    rng = _rng(opts.seed, 2)
    starts = [np.full(nx, 1.0 / nx), Pmf.point_mass(dmc.x0, dmc.x_alphabet).probs]
    for _ in range(max(opts.starts - 2, 0)):
        starts.append(rng.dirichlet(np.ones(nx)))

    best = _Best()
    evaluations = 0
    for x0 in starts:
        xs = _slsqp_max(
            lambda p: _mi_from_rows(p, obj_rows, h_rows),
            lambda p: _mi_grad(p, obj_rows),
            np.asarray(x0, dtype=float),
            eqs,
            opts.maxiter,
        )
        if xs is None:
            continue
        p_x = Pmf(dmc.x_alphabet, _clean_simplex(xs))
        if sc.tag == "sc-t-outer":
            strat = MarkovInput(Pmf(("v0",), np.ones(1)), Kernel(("v0",), (p_x,)))
        else:
            strat = StateIndependent(p_x)
        res = evaluate(sc, dmc, strat, opts.covert_tol)
        evaluations += 1
        best.offer(res)
    if _STRICT[sc.tag] and best.result is None:
        h_y_rows = _row_entropies(np.stack([q @ wy[x] for x in range(nx)]))
        y_rows = np.stack([q @ wy[x] for x in range(nx)])
        h_z = _row_entropies(z_rows)

        def penalized(p: np.ndarray) -> float:
            base = _mi_from_rows(p, obj_rows, h_rows)
            margin = _mi_from_rows(p, y_rows, h_y_rows) - _mi_from_rows(p, z_rows, h_z)
            return base + 10.0 * min(0.0, margin - 1e-6)

        for x0 in starts:
            xs = _slsqp_max(penalized, None, np.asarray(x0, dtype=float), eqs, opts.maxiter)
            if xs is None:
                continue
            p_x = Pmf(dmc.x_alphabet, _clean_simplex(xs))
            res = evaluate(sc, dmc, StateIndependent(p_x), opts.covert_tol)
            evaluations += 1
            best.offer(res)
    return _finish(
        sc, dmc, best,
        {"starts": len(starts), "evaluations": evaluations, "best_found": True,
         "certified": False, "seed": opts.seed},
    )


# -- State-correlated auxiliary scenarios -------------------------------------


def _solve_gp_conditional_family(
    dmc: StateDmc, sc: Scenario, opts: SolveOptions
) -> CovertRateResult:
    # The outer bound's pair objective is maximized by a constant V, which
    # collapses it onto the simple inner objective without the strict filter;
    # the search space is shared so that inner <= outer holds by construction.
    inner_card = Scenario.for_channel("nc-t-inner-simple", dmc).u_card
    u_card = opts.u_card or (sc.u_card if sc.tag == "nc-t-inner-simple" else inner_card)
    ns, nx = len(dmc.s_alphabet), len(dmc.x_alphabet)
    nz = len(dmc.z_alphabet)
    q = dmc.q_s.probs
    wy, wz = dmc.w_y_array(), dmc.w_z_array()
    rng = _rng(opts.seed, 3)
    all_rows = _all_rows(nx, ns)
    maps = _enumerate_row_multisets(len(all_rows), u_card, opts.gp_map_cap, rng)
    u_labels = _u_labels(u_card)
    dim = ns * u_card

    best = _Best()
    strict_inner = sc.tag == "nc-t-inner-simple"
    evaluations = 0
    for map_idx in maps:
        rows = [all_rows[i] for i in map_idx]
        wy_us = np.stack([[wy[rows[u][s], s] for s in range(ns)] for u in range(u_card)])
        wz_us = np.stack([[wz[rows[u][s], s] for s in range(ns)] for u in range(u_card)])

        row_sum = np.zeros((ns, dim))
        for s in range(ns):
            row_sum[s, s * u_card : (s + 1) * u_card] = 1.0
        cov = np.zeros((nz - 1, dim))
        for s in range(ns):
            for u in range(u_card):
                cov[:, s * u_card + u] = q[s] * wz_us[u, s, :-1]
        eqs = [(row_sum, np.ones(ns)), (cov, dmc.q0.probs[:-1])]
        if not _lp_feasible(eqs, dim):
            continue

        objective, gradient, margin_pair = _gp_conditional_functions(
            q, wy_us, wz_us, ns, u_card
        )
        start_list = [np.full(dim, 1.0 / u_card)]
        start_list.append(rng.dirichlet(np.ones(u_card), size=ns).reshape(-1))
        attempts = [(objective, gradient)]
        if strict_inner:
            margin, margin_grad = margin_pair

            def penalized(v, objective=objective, margin=margin):
                return objective(v) + 10.0 * min(0.0, margin(v) - 1e-6)

            def penalized_grad(v, gradient=gradient, margin=margin, mg=margin_grad):
                g = gradient(v)
                if margin(v) < 1e-6:
                    g = g + 10.0 * mg(v)
                return g

            attempts.append((penalized, penalized_grad))
        for fn, grad in attempts:
            for x0 in start_list:
                xs = _slsqp_max(fn, grad, x0, eqs, min(opts.maxiter, 80))
                if xs is None:
                    continue
                k = np.stack([_clean_simplex(r) for r in xs.reshape(ns, u_card)])
                res = _score_gp_conditional(sc, dmc, k, rows, u_labels, opts)
                evaluations += 1
                best.offer(res)
            if best.result is not None:
                break
    return _finish(
        sc, dmc, best,
        {"maps_considered": len(maps), "u_card": u_card,
         "evaluations": evaluations, "best_found": True, "certified": False,
         "seed": opts.seed},
    )


def _gp_conditional_functions(q, wy_us, wz_us, ns, u_card):
    """Objective I(U;Y) - I(U;S), its gradient, and the strict margin pair.

    All quantities are smooth functions of the flattened conditional
    ``k[s, u]``; logs are floored to keep gradients finite on the boundary.
    """

    def _parts(v):
        k = v.reshape(ns, u_card)
        p_su = q[:, None] * k
        p_uy = np.einsum("su,usy->uy", p_su, wy_us)
        p_uz = np.einsum("su,usz->uz", p_su, wz_us)
        return p_su, p_uy, p_uz

    def objective(v):
        p_su, p_uy, _ = _parts(v)
        return (
            _entropy_bits(p_uy.sum(axis=0))
            - _entropy_bits(p_uy)
            + _entropy_bits(p_su)
            - _entropy_bits(q)
        )

    def _log2(a):
        return np.log(np.maximum(a, 1e-300)) / math.log(2.0)

    def gradient(v):
        p_su, p_uy, _ = _parts(v)
        p_y = p_uy.sum(axis=0)
        ratio = np.einsum("usy,uy->us", wy_us, _log2(p_uy)) - np.einsum(
            "usy,y->us", wy_us, _log2(p_y)
        )
        g = q[None, :] * (ratio - _log2(p_su.T) - _LOG2E)
        return g.T.reshape(-1)

    def margin(v):
        _, p_uy, p_uz = _parts(v)
        return (
            _entropy_bits(p_uy.sum(axis=0))
            - _entropy_bits(p_uy)
            - _entropy_bits(p_uz.sum(axis=0))
            + _entropy_bits(p_uz)
        )

    def margin_grad(v):
        _, p_uy, p_uz = _parts(v)
        ry = np.einsum("usy,uy->us", wy_us, _log2(p_uy)) - np.einsum(
            "usy,y->us", wy_us, _log2(p_uy.sum(axis=0))
        )
        rz = np.einsum("usz,uz->us", wz_us, _log2(p_uz)) - np.einsum(
            "usz,z->us", wz_us, _log2(p_uz.sum(axis=0))
        )
        return (q[None, :] * (ry - rz)).T.reshape(-1)

    return objective, gradient, (margin, margin_grad)


def _score_gp_conditional(sc, dmc, kernel_rows, rows, u_labels, opts) -> CovertRateResult:
    x_map = _xmap_from_rows(rows, u_labels, dmc)
    if sc.tag == "nc-t-outer":
        pair_labels = tuple((u, "v0") for u in u_labels)
        pair_kernel = Kernel(
            dmc.s_alphabet,
            tuple(Pmf(pair_labels, r) for r in kernel_rows),
        )
        strat = StateCorrelatedPair(pair_kernel, x_map)
    else:
        strat = GelfandPinsker(
            Kernel.from_matrix(dmc.s_alphabet, u_labels, kernel_rows), x_map
        )
    return evaluate(sc, dmc, strat, opts.covert_tol)


# -- Synthesized-state (two-auxiliary) inner bounds ---------------------------


def _solve_wz_family(dmc: StateDmc, sc: Scenario, opts: SolveOptions) -> CovertRateResult:
    """Search for the inner bounds that pair a message letter with a state
    description used for key extraction.

    The search exploits two structural facts.  With the state synthesized
    from the description alone (``P(s | u, v) = P(s | v)``), the message
    letter is independent of the state, so the covertness equality is linear
    in the message distribution for a fixed input rule; and any deterministic
    description ``V = f(S)`` satisfies the synthesis constraint exactly.  The
    solver therefore pairs covert message candidates per input rule with
    every partition of the state alphabet.  For the non-causal variant this
    covers a subclass of the full constraint set (state rules reading the
    message letter are not searched), so the result is strictly best-found.
    """
    nx, ns = len(dmc.x_alphabet), len(dmc.s_alphabet)
    has_u = sc.tag in ("nc-t-inner-wz", "c-t-inner-wz")
    u_card = opts.u_card or min(sc.u_card or (nx + 2), nx + 2)
    rng = _rng(opts.seed, 4)
    u_labels = _u_labels(u_card)
    q0 = dmc.q0.probs
    partitions = _state_partitions(dmc)

    if has_u:
        all_rows = _all_rows(nx, ns)
        maps = _enumerate_row_multisets(len(all_rows), u_card, opts.gp_map_cap, rng)
    else:
        maps = [None]

    best = _Best()
    evaluations = 0
    for map_idx in maps:
        if has_u:
            rows = [all_rows[i] for i in map_idx]
            obj_rows, z_rows = _mixture_rows_for_map(dmc, rows, False)
            dim = u_card
        else:
            rows = None
            wy, wz = dmc.w_y_array(), dmc.w_z_array()
            q = dmc.q_s.probs
            obj_rows = np.stack([q @ wy[x] for x in range(nx)])
            z_rows = np.stack([q @ wz[x] for x in range(nx)])
            dim = nx
        A_cov, b_cov = _covertness_rows(z_rows, q0)
        eqs = [(np.ones((1, dim)), np.ones(1)), (A_cov, b_cov)]
        if not _lp_feasible(eqs, dim):
            continue
        candidates = _covert_message_candidates(obj_rows, eqs, rng, opts)
        for p in candidates:
            for p_v, p_s_given_v in partitions:
                try:
                    if sc.tag == "sc-t-inner-wz":
                        strat: InputStrategy = SynthesizedStateInput(
                            Pmf(dmc.x_alphabet, p), p_v, p_s_given_v
                        )
                    else:
                        x_map = _xmap_from_rows(rows, u_labels, dmc)
                        strat = SynthesizedState.with_state_from_v(
                            Pmf(u_labels, p), p_v, p_s_given_v, x_map
                        )
                    res = evaluate(sc, dmc, strat, opts.covert_tol)
                except StrategyError:
                    continue
                evaluations += 1
                best.offer(res)
    return _finish(
        sc, dmc, best,
        {"maps_considered": len(maps), "u_card": u_card if has_u else None,
         "descriptions": len(partitions), "evaluations": evaluations,
         "best_found": True, "certified": False, "seed": opts.seed},
    )


def _state_partitions(dmc: StateDmc) -> list[tuple[Pmf, Kernel]]:
    """Deterministic descriptions V = f(S): all partitions of the state support."""
    symbols = [s for s in dmc.s_alphabet if dmc.q_s.prob(s) > 0.0]
    q = {s: dmc.q_s.prob(s) for s in dmc.s_alphabet}
    out: list[tuple[Pmf, Kernel]] = []
    for groups in _set_partitions(symbols):
        v_labels = tuple(f"v{i}" for i in range(len(groups)))
        masses = np.array([sum(q[s] for s in g) for g in groups])
        p_v = Pmf(v_labels, masses)
        rows = []
        for g, mass in zip(groups, masses):
            rows.append(
                Pmf(
                    dmc.s_alphabet,
                    np.array([q[s] / mass if s in g else 0.0 for s in dmc.s_alphabet]),
                )
            )
        out.append((p_v, Kernel(v_labels, tuple(rows))))
    return out


def _set_partitions(items: list) -> list[list[list]]:
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [[first] + part[i]] + part[i + 1 :])
        out.append([[first]] + part)
    return out


def _covert_message_candidates(
    obj_rows: np.ndarray,
    eqs: list[tuple[np.ndarray, np.ndarray]],
    rng: np.random.Generator,
    opts: SolveOptions,
) -> list[np.ndarray]:
    """Diverse points of the covert polytope: the throughput maximizer plus
    seeded vertices from random linear objectives."""
    dim = obj_rows.shape[0]
    h = _row_entropies(obj_rows)
    out = []
    xs = _slsqp_max(
        lambda p: _mi_from_rows(p, obj_rows, h),
        lambda p: _mi_grad(p, obj_rows),
        np.full(dim, 1.0 / dim),
        eqs,
        opts.maxiter,
    )
    if xs is not None:
        out.append(_clean_simplex(xs))
    A = np.vstack([a for a, _ in eqs])
    b = np.concatenate([bb for _, bb in eqs])
    for _ in range(max(2, opts.wz_starts // 2)):
        c = rng.normal(size=dim)
        res = linprog(c, A_eq=A, b_eq=b, bounds=[(0.0, 1.0)] * dim, method="highs")
        if res.status == 0:
            out.append(_clean_simplex(res.x))
    uniq: list[np.ndarray] = []
    for p in out:
        if not any(np.allclose(p, u, atol=1e-9) for u in uniq):
            uniq.append(p)
    return uniq


# ---------------------------------------------------------------------------
# Independent grid oracle.
# ---------------------------------------------------------------------------

_ORACLE_MAX_FREE = 6
_ORACLE_CHUNK = 200_000


def brute_force_oracle(
    scenario: str,
    dmc: StateDmc,
    grid_step: float,
    covert_tol: float = DEFAULT_COVERT_TOL,
    u_card: int | None = None,
) -> CovertRateResult:
    """Exhaustive grid over the covertness-feasible slice of a scenario.

    The covertness equalities are affine in the free strategy weights, so the
    oracle grids all but ``|Z| - 1`` coordinates and solves the rest exactly,
    which is the only way a lattice can cover the measure-zero feasible set.
    Strict feasibility is filtered exactly at every surviving point.  Refuses
    problems with more than six free parameters.
    """
    if scenario not in TR_SCENARIOS:
        raise ScenarioError("the oracle covers nc-tr, c-tr, sc-tr only")
    if not 0 < grid_step <= 0.5:
        raise ScenarioError("grid step must lie in (0, 0.5]")
    if scenario == "nc-tr":
        return _oracle_direct(dmc, grid_step, covert_tol)
    if scenario == "sc-tr":
        return _oracle_mixture(dmc, grid_step, covert_tol, None, "sc-tr")
    u_card = u_card or (len(dmc.x_alphabet) + 1)
    return _oracle_mixture(dmc, grid_step, covert_tol, u_card, "c-tr")


def _grid_axis(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def _oracle_direct(dmc: StateDmc, step: float, covert_tol: float) -> CovertRateResult:
    ns, nx = len(dmc.s_alphabet), len(dmc.x_alphabet)
    free = ns * (nx - 1)
    if free > _ORACLE_MAX_FREE:
        raise ScenarioError(
            f"{free} free parameters exceed the oracle cap of {_ORACLE_MAX_FREE}"
        )
    q = dmc.q_s.probs
    wz = dmc.w_z_array()
    # Affine covertness system over the free coordinates (last input symbol
    # of each row is eliminated by the row-sum constraint).
    nz = len(dmc.z_alphabet)
    A = np.zeros((nz - 1, free))
    base = np.zeros(nz - 1)
    for s in range(ns):
        base += q[s] * wz[nx - 1, s, :-1]
        for x in range(nx - 1):
            A[:, s * (nx - 1) + x] = q[s] * (wz[x, s, :-1] - wz[nx - 1, s, :-1])
    b = dmc.q0.probs[:-1] - base

    pivots, frees = _pick_pivots(A)
    k = len(pivots)
    axis = _grid_axis(step)
    grids = np.meshgrid(*([axis] * (free - k)), indexing="ij") if free > k else []
    t = (
        np.stack([g.reshape(-1) for g in grids], axis=1)
        if grids
        else np.zeros((1, 0))
    )

    best_val = -math.inf
    best_vec: np.ndarray | None = None
    n_points = 0
    n_feasible = 0
    for chunk in np.array_split(t, max(1, len(t) // _ORACLE_CHUNK + 1)):
        v = _complete_affine(A, b, pivots, frees, chunk)
        if v is None:
            continue
        mask = np.all((v >= -1e-12) & (v <= 1.0 + 1e-12), axis=1)
        kernels = _direct_kernels_from_free(v[mask], ns, nx)
        if kernels.size == 0:
            n_points += len(chunk)
            continue
        obj, key = _direct_objective_and_key(dmc, kernels)
        tv = _direct_tv(dmc, kernels)
        ok = (tv <= covert_tol) & (key >= STRICT_MARGIN)
        n_points += len(chunk)
        n_feasible += int(ok.sum())
        if np.any(ok):
            vals = np.where(ok, obj, -np.inf)
            i = int(np.argmax(vals))
            if vals[i] > best_val + 1e-15:
                best_val = float(vals[i])
                best_vec = kernels[i]
    diag = {
        "grid_step": step,
        "points_evaluated": n_points,
        "feasible_points": n_feasible,
        "best_found": True,
        "certified": True,
    }
    sc = Scenario.for_channel("nc-tr", dmc)
    if best_vec is None:
        return _empty_result(sc, dmc, diag)
    strat = DirectConditional(
        Kernel.from_matrix(dmc.s_alphabet, dmc.x_alphabet, best_vec)
    )
    res = evaluate(sc, dmc, strat, covert_tol)
    merged = dict(res.diagnostics)
    merged.update(diag)
    return replace(res, diagnostics=merged)


def _pick_pivots(A: np.ndarray) -> tuple[list[int], list[int]]:
    """Greedy column choice so the eliminated block is well conditioned."""
    m, n = A.shape
    pivots: list[int] = []
    work = A.copy()
    for _ in range(m):
        norms = np.linalg.norm(work, axis=0)
        norms[pivots] = -1.0
        j = int(np.argmax(norms))
        if norms[j] < 1e-12:
            break
        pivots.append(j)
        col = work[:, j : j + 1]
        work = work - col @ (col.T @ work) / float(col.T @ col)
    frees = [j for j in range(n) if j not in pivots]
    return pivots, frees


def _complete_affine(A, b, pivots, frees, t):
    if not pivots:
        # No equality binds the free coordinates; covertness must hold
        # identically, which the tv filter checks afterwards.
        v = np.zeros((len(t), A.shape[1]))
        v[:, frees] = t
        return v
    Ap = A[:, pivots]
    An = A[:, frees] if frees else np.zeros((A.shape[0], 0))
    try:
        rhs = b[None, :] - (t @ An.T if frees else 0.0)
        sol = np.linalg.lstsq(Ap, np.atleast_2d(rhs).T, rcond=None)[0].T
    except np.linalg.LinAlgError:
        return None
    if not np.allclose(Ap @ sol.T, np.atleast_2d(b[None, :] - (t @ An.T if frees else 0.0)).T, atol=1e-9):
        return None
    v = np.zeros((len(t), A.shape[1]))
    if frees:
        v[:, frees] = t
    v[:, pivots] = sol
    return v


def _direct_kernels_from_free(v: np.ndarray, ns: int, nx: int) -> np.ndarray:
    n = len(v)
    kernels = np.zeros((n, ns, nx))
    kernels[:, :, : nx - 1] = v.reshape(n, ns, nx - 1)
    kernels[:, :, nx - 1] = 1.0 - kernels[:, :, : nx - 1].sum(axis=2)
    good = np.all(kernels >= -1e-12, axis=(1, 2))
    return np.clip(kernels[good], 0.0, 1.0)


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    return -xlogy(p, p).sum(axis=-1) / math.log(2.0)


def _direct_objective_and_key(dmc: StateDmc, kernels: np.ndarray):
    q = dmc.q_s.probs
    wy = np.transpose(dmc.w_y_array(), (1, 0, 2))  # (s, x, y)
    wz = np.transpose(dmc.w_z_array(), (1, 0, 2))
    py_s = np.einsum("nsx,sxy->nsy", kernels, wy)
    pz_s = np.einsum("nsx,sxz->nsz", kernels, wz)
    h_wy = _entropy_rows(wy)  # (s, x)
    h_wz = _entropy_rows(wz)
    i_xy_s = _entropy_rows(py_s) - np.einsum("nsx,sx->ns", kernels, h_wy)
    i_xz_s = _entropy_rows(pz_s) - np.einsum("nsx,sx->ns", kernels, h_wz)
    obj = i_xy_s @ q
    i_xz = i_xz_s @ q
    p_sz = q[None, :, None] * pz_s
    pz = p_sz.sum(axis=1)
    h_s_given_z = _entropy_rows(p_sz.reshape(len(kernels), -1)) - _entropy_rows(pz)
    key = h_s_given_z - (i_xz - obj)
    return obj, key


def _direct_tv(dmc: StateDmc, kernels: np.ndarray) -> np.ndarray:
    q = dmc.q_s.probs
    wz = np.transpose(dmc.w_z_array(), (1, 0, 2))
    pz = np.einsum("nsx,sxz,s->nz", kernels, wz, q)
    return np.abs(pz - dmc.q0.probs[None, :]).sum(axis=1) / 2.0


def _oracle_mixture(
    dmc: StateDmc,
    step: float,
    covert_tol: float,
    u_card: int | None,
    tag: str,
) -> CovertRateResult:
    """Shared oracle for mixtures over per-letter rows (sc-tr and c-tr)."""
    ns, nx = len(dmc.s_alphabet), len(dmc.x_alphabet)
    q = dmc.q_s.probs
    wy, wz = dmc.w_y_array(), dmc.w_z_array()
    sc = Scenario.for_channel(tag, dmc, u_card=u_card)

    if tag == "sc-tr":
        if nx - 1 > _ORACLE_MAX_FREE:
            raise ScenarioError("too many free parameters for the oracle")
        map_sets: list[list[tuple[int, ...]] | None] = [None]
        n_letters = nx
    else:
        if (u_card or 0) - 1 > _ORACLE_MAX_FREE:
            raise ScenarioError("too many free parameters for the oracle")
        all_rows = _all_rows(nx, ns)
        combos = list(itertools.combinations_with_replacement(range(len(all_rows)), u_card))
        map_sets = [[all_rows[i] for i in c] for c in combos]
        n_letters = u_card

    axis = _grid_axis(step)
    best_val = -math.inf
    best: tuple | None = None
    n_points = 0
    n_feasible = 0
    for rows in map_sets:
        if rows is None:
            letter_rows = [(x,) * ns for x in range(nx)]
        else:
            letter_rows = rows
        ys = np.stack(
            [
                (q[:, None] * np.stack([wy[r[s], s] for s in range(ns)])).reshape(-1)
                for r in letter_rows
            ]
        )  # joint (s, y) rows per letter
        zs = np.stack(
            [q @ np.stack([wz[r[s], s] for s in range(ns)]) for r in letter_rows]
        )
        sz = np.stack(
            [
                (q[:, None] * np.stack([wz[r[s], s] for s in range(ns)])).reshape(-1)
                for r in letter_rows
            ]
        )
        y_only = np.stack(
            [q @ np.stack([wy[r[s], s] for s in range(ns)]) for r in letter_rows]
        )
        constraints = np.vstack([np.ones((1, n_letters)), zs.T[:-1]])
        rhs = np.concatenate([[1.0], dmc.q0.probs[:-1]])
        pivots, frees = _pick_pivots(constraints)
        grids = (
            np.meshgrid(*([axis] * (n_letters - len(pivots))), indexing="ij")
            if n_letters > len(pivots)
            else []
        )
        t = (
            np.stack([g.reshape(-1) for g in grids], axis=1)
            if grids
            else np.zeros((1, 0))
        )
        p = _complete_affine(constraints, rhs, pivots, frees, t)
        if p is None:
            continue
        mask = np.all((p >= -1e-12) & (p <= 1.0 + 1e-12), axis=1)
        p = np.clip(p[mask], 0.0, 1.0)
        n_points += len(t)
        if len(p) == 0:
            continue
        sums = p.sum(axis=1)
        p = p[np.abs(sums - 1.0) <= 1e-9]
        if len(p) == 0:
            continue
        pz = p @ zs
        tv = np.abs(pz - dmc.q0.probs[None, :]).sum(axis=1) / 2.0
        if tag == "sc-tr":
            obj = _entropy_rows(p @ ys) - p @ _entropy_rows(ys)
            i_xz_s = _mixture_cond_terms(p, letter_rows, dmc)
            p_sz = p @ sz
            h_s_given_z = _entropy_rows(p_sz) - _entropy_rows(pz)
            key = h_s_given_z - (i_xz_s - obj)
        else:
            obj = _entropy_rows(p @ ys) - p @ _entropy_rows(ys)
            i_uz_s = _mixture_cond_terms(p, letter_rows, dmc)
            p_sz = p @ sz
            h_s_given_z = _entropy_rows(p_sz) - _entropy_rows(pz)
            key = h_s_given_z - (i_uz_s - obj)
        ok = (tv <= covert_tol) & (key >= STRICT_MARGIN)
        n_feasible += int(ok.sum())
        if np.any(ok):
            vals = np.where(ok, obj, -np.inf)
            i = int(np.argmax(vals))
            if vals[i] > best_val + 1e-15:
                best_val = float(vals[i])
                best = (letter_rows, p[i])
    diag = {
        "grid_step": step,
        "points_evaluated": n_points,
        "feasible_points": n_feasible,
        "maps_considered": len(map_sets),
        "best_found": True,
        "certified": True,
    }
    if best is None:
        return _empty_result(sc, dmc, diag)
    letter_rows, p_best = best
    if tag == "sc-tr":
        strat: InputStrategy = StateIndependent(Pmf(dmc.x_alphabet, p_best))
    else:
        labels = _u_labels(len(letter_rows))
        strat = ShannonStrategy(
            Pmf(labels, p_best), _xmap_from_rows(letter_rows, labels, dmc)
        )
    res = evaluate(sc, dmc, strat, covert_tol)
    merged = dict(res.diagnostics)
    merged.update(diag)
    return replace(res, diagnostics=merged)


def _mixture_cond_terms(p: np.ndarray, letter_rows, dmc: StateDmc) -> np.ndarray:
    """Vectorized state-conditioned letter-to-warden information terms."""
    q = dmc.q_s.probs
    wz = dmc.w_z_array()
    ns = len(dmc.s_alphabet)
    rows_z = np.stack(
        [np.stack([wz[r[s], s] for s in range(ns)]) for r in letter_rows]
    )  # (letter, s, z)
    pz_s = np.einsum("nu,usz->nsz", p, rows_z)
    h_rows = _entropy_rows(rows_z)  # (letter, s)
    return (_entropy_rows(pz_s) - np.einsum("nu,us->ns", p, h_rows)) @ q


# ---------------------------------------------------------------------------
# Structured grid evaluation for the simple causal scheme.
# ---------------------------------------------------------------------------


def simple_causal_grid(
    dmc: StateDmc,
    u_card: int,
    step: float,
    state_groups: Sequence[Sequence[str]] | None = None,
    covert_tol: float = DEFAULT_COVERT_TOL,
) -> dict:
    """Best strictly-feasible simple-causal rate over a simplex lattice.

    Enumerates every deterministic input rule (optionally constrained to be
    constant on the given state groups) against every lattice point of the
    auxiliary distribution, filters covertness and the strict decode-vs-warden
    margin exactly, and reports the best surviving rate.  Used to certify
    channels where the simple scheme carries nothing.
    """
    ns, nx = len(dmc.s_alphabet), len(dmc.x_alphabet)
    q = dmc.q_s.probs
    wy, wz = dmc.w_y_array(), dmc.w_z_array()
    if state_groups is None:
        groups = [[s] for s in dmc.s_alphabet]
    else:
        groups = [list(g) for g in state_groups]
        flat = [s for g in groups for s in g]
        if sorted(flat) != sorted(dmc.s_alphabet):
            raise ScenarioError("state groups must partition the state alphabet")
    group_of = {}
    for gi, g in enumerate(groups):
        for s in g:
            group_of[dmc.s_alphabet.index(s)] = gi
    group_rows = list(itertools.product(range(nx), repeat=len(groups)))
    maps = list(itertools.combinations_with_replacement(range(len(group_rows)), u_card))

    lattice = _simplex_lattice(u_card, step)
    best_rate = 0.0
    best_point = None
    n_covert = 0
    n_feasible = 0
    for combo in maps:
        rows = [
            tuple(group_rows[i][group_of[s]] for s in range(ns)) for i in combo
        ]
        ys = np.stack([q @ np.stack([wy[r[s], s] for s in range(ns)]) for r in rows])
        zs = np.stack([q @ np.stack([wz[r[s], s] for s in range(ns)]) for r in rows])
        pz = lattice @ zs
        tv = np.abs(pz - dmc.q0.probs[None, :]).sum(axis=1) / 2.0
        covert = tv <= covert_tol
        if not np.any(covert):
            continue
        p = lattice[covert]
        n_covert += len(p)
        i_uy = _entropy_rows(p @ ys) - p @ _entropy_rows(ys)
        i_uz = _entropy_rows(p @ zs) - p @ _entropy_rows(zs)
        ok = (i_uy - i_uz) >= STRICT_MARGIN
        n_feasible += int(ok.sum())
        if np.any(ok):
            vals = np.where(ok, i_uy, -np.inf)
            i = int(np.argmax(vals))
            if vals[i] > best_rate:
                best_rate = float(vals[i])
                best_point = (rows, p[i].tolist())
    return {
        "best_rate_bits": best_rate,
        "best_point": best_point,
        "maps_considered": len(maps),
        "covert_points": n_covert,
        "feasible_points": n_feasible,
        "grid_step": step,
        "u_card": u_card,
    }


def _simplex_lattice(dim: int, step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    points = []
    for combo in itertools.combinations_with_replacement(range(dim), n):
        counts = np.bincount(np.asarray(combo, dtype=np.intp), minlength=dim)
        points.append(counts / n)
    return np.asarray(points)


# ---------------------------------------------------------------------------
# Per-letter divergence diagnostics for multi-letter warden laws.
# ---------------------------------------------------------------------------

_LEMMA_CELL_CAP = 1 << 22


def lemma3_diagnostics(
    pz_blocks: Iterable[JointTable],
    q0: Pmf,
    tol: float = 1e-9,
) -> list[dict]:
    """Check the per-letter dependency sum against the block divergence.

    For each exact multi-letter warden law ``P`` over axes ``Z1..Zn`` the sum
    of the sequential dependencies ``sum_i I(Z_i; Z^{i-1})`` can never exceed
    ``D(P || q0^n)``; this holds with equality minus the per-letter marginal
    divergences, and the report carries both sides plus that identity
    residual.  Raises :class:`DiagnosticsError` if the inequality fails.
    """
    reports = []
    for idx, table in enumerate(pz_blocks):
        if table.values.size > _LEMMA_CELL_CAP:
            raise DiagnosticsError("block law too large for exact enumeration")
        n = len(table.axes)
        names = table.names
        marg_h = [info.table_entropy(table, {nm}) for nm in names]
        lhs = sum(marg_h) - info.table_entropy(table)
        rhs = _divergence_to_product(table, q0)
        marg_div = [
            info.kl_divergence(table.marginalize({nm}).to_pmf(), _relabel(q0, table.labels(nm)))
            for nm in names
        ]
        residual = lhs - (rhs - sum(marg_div))
        if not lhs <= rhs + tol:
            raise DiagnosticsError(
                f"block {idx}: dependency sum {lhs} exceeds divergence {rhs}"
            )
        reports.append(
            {
                "block": idx,
                "n": n,
                "dependency_sum_bits": max(0.0, lhs),
                "divergence_bits": rhs,
                "identity_residual_bits": residual if math.isfinite(rhs) else math.nan,
                "holds": True,
            }
        )
    return reports


def _relabel(q0: Pmf, labels: tuple) -> Pmf:
    if q0.labels == labels:
        return q0
    return Pmf(labels, q0.probs)


def _divergence_to_product(table: JointTable, q0: Pmf) -> float:
    n = len(table.axes)
    for _, labels in table.axes:
        if len(labels) != len(q0.labels):
            raise DiagnosticsError("block axes must share the innocent alphabet")
    logq = np.log(np.maximum(q0.probs, 1e-300)) / math.log(2.0)
    if not q0.full_support():
        logq = np.where(q0.probs > 0, logq, -math.inf)
    log_prod = np.zeros(table.values.shape)
    for axis in range(n):
        shape = [1] * n
        shape[axis] = len(q0.probs)
        log_prod = log_prod + logq.reshape(shape)
    p = table.values
    if np.any((p > 0) & np.isneginf(log_prod)):
        return math.inf
    h = info.table_entropy(table)
    cross = float(-(p * np.where(p > 0, log_prod, 0.0)).sum())
    return max(0.0, cross - h)
