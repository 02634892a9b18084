"""State-dependent DMC model, input strategies, and the model file format.

A :class:`StateDmc` is the channel ``W(y, z | x, s)`` together with the state
law, the innocent input symbol, and the derived innocent output law seen by
the warden.  Input strategies describe how the transmitter uses its state
knowledge; each one induces an exact single-letter joint distribution over a
subset of the variables ``U, V, S, X, Y, Z``, which is what every rate
evaluator consumes.

Model files are JSON objects with keys ``x, s, y, z`` (symbol arrays), ``x0``
(string), ``q_s`` (array of reals), and ``w`` (nested array indexed
``[x][s][y][z]``).  All masses are validated to 1e-9 on load, and loading is
a bit-exact round trip of the numeric payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .prob import JointTable, Kernel, Pmf, ProbabilityError, Symbol, split_product_labels

MASS_TOL = 1e-9


class ModelError(ValueError):
    """Raised for malformed or invariant-violating channel models."""


class StrategyError(ValueError):
    """Raised when a strategy is malformed or incompatible with a channel."""


@dataclass(frozen=True)
class StateDmc:
    """Finite state-dependent channel with two outputs and an innocent input.

    ``w`` maps each pair ``(x, s)`` to a joint pmf over ``(y, z)``.  The
    innocent output law (the warden's distribution when ``x0`` is sent) must
    have full support unless ``allow_degenerate_innocent`` is set; the escape
    hatch exists because one of the bundled worked channels silences the
    warden entirely under the innocent symbol.
    """

    x_alphabet: tuple[str, ...]
    s_alphabet: tuple[str, ...]
    y_alphabet: tuple[str, ...]
    z_alphabet: tuple[str, ...]
    q_s: Pmf
    w: Kernel
    x0: str
    allow_degenerate_innocent: bool = False

    def __post_init__(self) -> None:
        for name in ("x_alphabet", "s_alphabet", "y_alphabet", "z_alphabet"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.x0 not in self.x_alphabet:
            raise ModelError(f"innocent symbol {self.x0!r} not in input alphabet")
        if self.q_s.labels != self.s_alphabet:
            raise ModelError("state law is not indexed by the state alphabet")
        expected_inputs = tuple(
            (x, s) for x in self.x_alphabet for s in self.s_alphabet
        )
        if self.w.input_labels != expected_inputs:
            raise ModelError("channel kernel must be indexed by (x, s) in x-major order")
        y_labels, z_labels = split_product_labels(self.w.output_labels)
        if y_labels != self.y_alphabet or z_labels != self.z_alphabet:
            raise ModelError("channel rows are not over the declared (y, z) product")
        q0 = self._innocent()
        if not self.allow_degenerate_innocent and not q0.full_support():
            raise ModelError("Q0 lacks full support")

    # Dense views used throughout the evaluators: shape (|X|, |S|, |Y|, |Z|).
    def w_array(self) -> np.ndarray:
        nx, ns = len(self.x_alphabet), len(self.s_alphabet)
        ny, nz = len(self.y_alphabet), len(self.z_alphabet)
        return self.w.as_matrix().reshape(nx, ns, ny, nz)

    def w_y_array(self) -> np.ndarray:
        return self.w_array().sum(axis=3)

    def w_z_array(self) -> np.ndarray:
        return self.w_array().sum(axis=2)

    def _innocent(self) -> Pmf:
        x0i = self.x_alphabet.index(self.x0)
        wz = self.w_z_array()[x0i]  # (|S|, |Z|)
        return Pmf(self.z_alphabet, self.q_s.probs @ wz)

    @property
    def q0(self) -> Pmf:
        return self._innocent()


def innocent_distribution(dmc: StateDmc) -> Pmf:
    """Warden's output law under the innocent input, full support enforced."""
    q0 = dmc.q0
    if not dmc.allow_degenerate_innocent and not q0.full_support():
        raise ModelError("Q0 lacks full support")
    return q0


@dataclass(frozen=True)
class XMap:
    """Deterministic input rule ``x = x(u, s)`` stored as a dense table."""

    u_labels: tuple[Symbol, ...]
    s_labels: tuple[str, ...]
    table: tuple[tuple[str, ...], ...]  # table[u][s] -> x symbol

    def __post_init__(self) -> None:
        object.__setattr__(self, "u_labels", tuple(self.u_labels))
        object.__setattr__(self, "s_labels", tuple(self.s_labels))
        object.__setattr__(self, "table", tuple(tuple(r) for r in self.table))
        if len(self.table) != len(self.u_labels) or any(
            len(r) != len(self.s_labels) for r in self.table
        ):
            raise StrategyError("map table shape does not match its alphabets")

    @staticmethod
    def from_callable(u_labels, s_labels, fn) -> "XMap":
        return XMap(
            tuple(u_labels),
            tuple(s_labels),
            tuple(tuple(fn(u, s) for s in s_labels) for u in u_labels),
        )

    def x(self, u: Symbol, s: str) -> str:
        return self.table[self.u_labels.index(u)][self.s_labels.index(s)]

    def index_table(self, x_alphabet: Sequence[str]) -> np.ndarray:
        return np.array(
            [[list(x_alphabet).index(x) for x in row] for row in self.table],
            dtype=np.intp,
        )


# ---------------------------------------------------------------------------
# Input strategies.  Each class builds its exact pre-channel joint; the
# channel outputs are appended by `induced_joint`.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirectConditional:
    """State-conditioned input ``P(x | s)``; both terminals see the state."""

    p_x_given_s: Kernel

    variant = "direct-conditional"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_x_given_s.input_labels != dmc.s_alphabet:
            raise StrategyError("input rule rows must be indexed by the state alphabet")
        if self.p_x_given_s.output_labels != dmc.x_alphabet:
            raise StrategyError("input rule outputs must match the input alphabet")
        values = dmc.q_s.probs[:, None] * self.p_x_given_s.as_matrix()
        return JointTable(
            (("S", dmc.s_alphabet), ("X", dmc.x_alphabet)), values
        )


@dataclass(frozen=True)
class StateIndependent:
    """Input drawn independently of the state."""

    p_x: Pmf

    variant = "state-independent"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_x.labels != dmc.x_alphabet:
            raise StrategyError("input law must be over the input alphabet")
        values = np.multiply.outer(dmc.q_s.probs, self.p_x.probs)
        return JointTable(
            (("S", dmc.s_alphabet), ("X", dmc.x_alphabet)), values
        )


@dataclass(frozen=True)
class ShannonStrategy:
    """Auxiliary letter ``U`` independent of the state plus a map ``x(u, s)``."""

    p_u: Pmf
    x_map: XMap

    variant = "shannon-strategy"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        _check_map(self.x_map, self.p_u.labels, dmc)
        values = _with_deterministic_x(
            np.multiply.outer(self.p_u.probs, dmc.q_s.probs), self.x_map, dmc
        )
        return JointTable(
            (("U", self.p_u.labels), ("S", dmc.s_alphabet), ("X", dmc.x_alphabet)),
            values,
        )


@dataclass(frozen=True)
class GelfandPinsker:
    """State-correlated auxiliary letter ``P(u | s)`` plus a map ``x(u, s)``."""

    p_u_given_s: Kernel
    x_map: XMap

    variant = "gelfand-pinsker"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_u_given_s.input_labels != dmc.s_alphabet:
            raise StrategyError("auxiliary rule must be indexed by the state alphabet")
        u_labels = self.p_u_given_s.output_labels
        _check_map(self.x_map, u_labels, dmc)
        p_su = dmc.q_s.probs[:, None] * self.p_u_given_s.as_matrix()  # (s, u)
        values = _with_deterministic_x(p_su.T, self.x_map, dmc)
        return JointTable(
            (("U", u_labels), ("S", dmc.s_alphabet), ("X", dmc.x_alphabet)), values
        )


@dataclass(frozen=True)
class SynthesizedState:
    """Independent pair ``(U, V)`` whose mixture regenerates the state law.

    The joint factorizes as ``P(u) P(v) P(s | u, v)`` and the mixture
    ``sum_{u,v} P(u) P(v) P(s | u, v)`` must reproduce the channel's state
    law within 1e-9.  ``U`` carries the message, ``V`` describes the state
    for key extraction.
    """

    p_u: Pmf
    p_v: Pmf
    p_s_given_uv: Kernel  # rows indexed by (u, v) pairs, u-major
    x_map: XMap

    variant = "gelfand-pinsker"

    @staticmethod
    def with_state_from_v(
        p_u: Pmf, p_v: Pmf, p_s_given_v: Kernel, x_map: XMap
    ) -> "SynthesizedState":
        """Degenerate-in-``u`` form used when only ``V`` shapes the state."""
        if p_s_given_v.input_labels != p_v.labels:
            raise StrategyError("state rule must be indexed by the V alphabet")
        inputs = tuple((u, v) for u in p_u.labels for v in p_v.labels)
        rows = tuple(p_s_given_v.row(v) for u in p_u.labels for v in p_v.labels)
        return SynthesizedState(p_u, p_v, Kernel(inputs, rows), x_map)

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        u_labels, v_labels = self.p_u.labels, self.p_v.labels
        expected = tuple((u, v) for u in u_labels for v in v_labels)
        if self.p_s_given_uv.input_labels != expected:
            raise StrategyError("state rule must be indexed by (u, v) in u-major order")
        if self.p_s_given_uv.output_labels != dmc.s_alphabet:
            raise StrategyError("state rule outputs must match the state alphabet")
        _check_map(self.x_map, u_labels, dmc)
        nu, nv, ns = len(u_labels), len(v_labels), len(dmc.s_alphabet)
        p_suv = self.p_s_given_uv.as_matrix().reshape(nu, nv, ns)
        p_uvs = self.p_u.probs[:, None, None] * self.p_v.probs[None, :, None] * p_suv
        mixture = Pmf(dmc.s_alphabet, p_uvs.sum(axis=(0, 1)))
        if not mixture.allclose(dmc.q_s, atol=MASS_TOL):
            raise StrategyError("(U, V) mixture does not regenerate the state law")
        values = _with_deterministic_x_uv(p_uvs, self.x_map, dmc)
        return JointTable(
            (
                ("U", u_labels),
                ("V", v_labels),
                ("S", dmc.s_alphabet),
                ("X", dmc.x_alphabet),
            ),
            values,
        )

    def state_rule_ignores_u(self, atol: float = 1e-12) -> bool:
        nu, nv = len(self.p_u.labels), len(self.p_v.labels)
        m = self.p_s_given_uv.as_matrix().reshape(nu, nv, -1)
        return bool(np.all(np.abs(m - m[0:1]) <= atol))


@dataclass(frozen=True)
class StateCorrelatedPair:
    """Jointly state-correlated pair ``P(u, v | s)`` plus a map ``x(u, s)``."""

    p_uv_given_s: Kernel  # rows indexed by s; outputs are (u, v) pairs, u-major
    x_map: XMap

    variant = "gelfand-pinsker"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_uv_given_s.input_labels != dmc.s_alphabet:
            raise StrategyError("pair rule must be indexed by the state alphabet")
        u_labels, v_labels = split_product_labels(self.p_uv_given_s.output_labels)
        _check_map(self.x_map, u_labels, dmc)
        nu, nv = len(u_labels), len(v_labels)
        p_uv_s = self.p_uv_given_s.as_matrix().reshape(len(dmc.s_alphabet), nu, nv)
        p_uvs = np.einsum("s,suv->uvs", dmc.q_s.probs, p_uv_s)
        values = _with_deterministic_x_uv(p_uvs, self.x_map, dmc)
        return JointTable(
            (
                ("U", u_labels),
                ("V", v_labels),
                ("S", dmc.s_alphabet),
                ("X", dmc.x_alphabet),
            ),
            values,
        )


@dataclass(frozen=True)
class MarkovPair:
    """Chain ``V -> U`` independent of the state, plus a map ``x(u, s)``."""

    p_v: Pmf
    p_u_given_v: Kernel
    x_map: XMap

    variant = "gelfand-pinsker"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_u_given_v.input_labels != self.p_v.labels:
            raise StrategyError("chain rule must be indexed by the V alphabet")
        u_labels = self.p_u_given_v.output_labels
        _check_map(self.x_map, u_labels, dmc)
        p_vu = self.p_v.probs[:, None] * self.p_u_given_v.as_matrix()
        p_uvs = np.einsum("vu,s->uvs", p_vu, dmc.q_s.probs)
        values = _with_deterministic_x_uv(p_uvs, self.x_map, dmc)
        return JointTable(
            (
                ("U", u_labels),
                ("V", self.p_v.labels),
                ("S", dmc.s_alphabet),
                ("X", dmc.x_alphabet),
            ),
            values,
        )


@dataclass(frozen=True)
class SynthesizedStateInput:
    """State-independent input plus a state description ``V`` for keys."""

    p_x: Pmf
    p_v: Pmf
    p_s_given_v: Kernel

    variant = "state-independent"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_x.labels != dmc.x_alphabet:
            raise StrategyError("input law must be over the input alphabet")
        if self.p_s_given_v.input_labels != self.p_v.labels:
            raise StrategyError("state rule must be indexed by the V alphabet")
        if self.p_s_given_v.output_labels != dmc.s_alphabet:
            raise StrategyError("state rule outputs must match the state alphabet")
        p_vs = self.p_v.probs[:, None] * self.p_s_given_v.as_matrix()
        mixture = Pmf(dmc.s_alphabet, p_vs.sum(axis=0))
        if not mixture.allclose(dmc.q_s, atol=MASS_TOL):
            raise StrategyError("V mixture does not regenerate the state law")
        values = np.einsum("vs,x->vsx", p_vs, self.p_x.probs)
        return JointTable(
            (("V", self.p_v.labels), ("S", dmc.s_alphabet), ("X", dmc.x_alphabet)),
            values,
        )


@dataclass(frozen=True)
class MarkovInput:
    """Chain ``V -> X`` independent of the state (no auxiliary message letter)."""

    p_v: Pmf
    p_x_given_v: Kernel

    variant = "state-independent"

    def pre_channel(self, dmc: StateDmc) -> JointTable:
        if self.p_x_given_v.input_labels != self.p_v.labels:
            raise StrategyError("chain rule must be indexed by the V alphabet")
        if self.p_x_given_v.output_labels != dmc.x_alphabet:
            raise StrategyError("chain rule outputs must match the input alphabet")
        p_vx = self.p_v.probs[:, None] * self.p_x_given_v.as_matrix()
        values = np.einsum("vx,s->vsx", p_vx, dmc.q_s.probs)
        return JointTable(
            (("V", self.p_v.labels), ("S", dmc.s_alphabet), ("X", dmc.x_alphabet)),
            values,
        )


InputStrategy = (
    DirectConditional
    | StateIndependent
    | ShannonStrategy
    | GelfandPinsker
    | SynthesizedState
    | StateCorrelatedPair
    | MarkovPair
    | SynthesizedStateInput
    | MarkovInput
)


def always_innocent(dmc: StateDmc) -> DirectConditional:
    """The no-communication strategy: send ``x0`` in every state."""
    row = Pmf.point_mass(dmc.x0, dmc.x_alphabet)
    return DirectConditional(Kernel(dmc.s_alphabet, tuple(row for _ in dmc.s_alphabet)))


def _check_map(x_map: XMap, u_labels: tuple[Symbol, ...], dmc: StateDmc) -> None:
    if x_map.u_labels != u_labels:
        raise StrategyError("map rows must be indexed by the auxiliary alphabet")
    if x_map.s_labels != dmc.s_alphabet:
        raise StrategyError("map columns must be indexed by the state alphabet")
    for row in x_map.table:
        for x in row:
            if x not in dmc.x_alphabet:
                raise StrategyError(f"map value {x!r} outside the input alphabet")


def _with_deterministic_x(p_us: np.ndarray, x_map: XMap, dmc: StateDmc) -> np.ndarray:
    """Append a deterministic X axis to a (U, S) mass array."""
    nu, ns = p_us.shape
    values = np.zeros((nu, ns, len(dmc.x_alphabet)))
    idx = x_map.index_table(dmc.x_alphabet)
    for ui in range(nu):
        for si in range(ns):
            values[ui, si, idx[ui, si]] = p_us[ui, si]
    return values


def _with_deterministic_x_uv(
    p_uvs: np.ndarray, x_map: XMap, dmc: StateDmc
) -> np.ndarray:
    nu, nv, ns = p_uvs.shape
    values = np.zeros((nu, nv, ns, len(dmc.x_alphabet)))
    idx = x_map.index_table(dmc.x_alphabet)
    for ui in range(nu):
        for si in range(ns):
            values[ui, :, si, idx[ui, si]] = p_uvs[ui, :, si]
    return values


def induced_joint(dmc: StateDmc, strat: InputStrategy) -> JointTable:
    """Exact joint law over the strategy's variables plus ``(Y, Z)``."""
    pre = strat.pre_channel(dmc)
    w = dmc.w_array()  # (x, s, y, z)
    s_pos = pre.names.index("S")
    x_pos = pre.names.index("X")
    pre_vals = np.moveaxis(pre.values, (s_pos, x_pos), (-2, -1))
    values = np.einsum("...sx,xsyz->...sxyz", pre_vals, w)
    lead_axes = tuple(a for a in pre.axes if a[0] not in ("S", "X"))
    axes = lead_axes + (
        ("S", dmc.s_alphabet),
        ("X", dmc.x_alphabet),
        ("Y", dmc.y_alphabet),
        ("Z", dmc.z_alphabet),
    )
    return JointTable(axes, values)


def warden_output(dmc: StateDmc, strat: InputStrategy) -> Pmf:
    """Exact single-letter Z-marginal induced by a strategy."""
    return induced_joint(dmc, strat).marginalize({"Z"}).to_pmf()


# ---------------------------------------------------------------------------
# Model file format.
# ---------------------------------------------------------------------------


def save_model(dmc: StateDmc, path: str | Path) -> None:
    doc = model_to_dict(dmc)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def model_to_dict(dmc: StateDmc) -> dict:
    nx, ns = len(dmc.x_alphabet), len(dmc.s_alphabet)
    ny, nz = len(dmc.y_alphabet), len(dmc.z_alphabet)
    w = dmc.w.as_matrix().reshape(nx, ns, ny, nz)
    return {
        "x": list(dmc.x_alphabet),
        "s": list(dmc.s_alphabet),
        "y": list(dmc.y_alphabet),
        "z": list(dmc.z_alphabet),
        "x0": dmc.x0,
        "q_s": dmc.q_s.probs.tolist(),
        "w": w.tolist(),
    }


def load_model(path: str | Path, allow_degenerate_innocent: bool = False) -> StateDmc:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed model file: {exc}") from exc
    return model_from_dict(doc, allow_degenerate_innocent)


def model_from_dict(doc: Mapping, allow_degenerate_innocent: bool = False) -> StateDmc:
    missing = [k for k in ("x", "s", "y", "z", "x0", "q_s", "w") if k not in doc]
    if missing:
        raise ModelError(f"model file missing keys {missing}")
    x = tuple(str(a) for a in doc["x"])
    s = tuple(str(a) for a in doc["s"])
    y = tuple(str(a) for a in doc["y"])
    z = tuple(str(a) for a in doc["z"])
    try:
        q_s = Pmf(s, np.asarray(doc["q_s"], dtype=np.float64))
    except ProbabilityError as exc:
        raise ModelError(f"invalid state law: {exc}") from exc
    w_arr = np.asarray(doc["w"], dtype=np.float64)
    if w_arr.shape != (len(x), len(s), len(y), len(z)):
        raise ModelError(
            f"channel array has shape {w_arr.shape}, expected "
            f"{(len(x), len(s), len(y), len(z))}"
        )
    yz_labels = tuple((yy, zz) for yy in y for zz in z)
    rows = []
    for xi, xv in enumerate(x):
        for si, sv in enumerate(s):
            flat = w_arr[xi, si].reshape(-1)
            try:
                rows.append(Pmf(yz_labels, flat))
            except ProbabilityError as exc:
                raise ModelError(
                    f"channel row for input {xv!r}, state {sv!r} is invalid: {exc}"
                ) from exc
    kernel = Kernel(tuple((xv, sv) for xv in x for sv in s), tuple(rows))
    return StateDmc(
        x, s, y, z, q_s, kernel, str(doc["x0"]),
        allow_degenerate_innocent=allow_degenerate_innocent,
    )


def strategy_to_dict(strat: InputStrategy) -> dict:
    """Serializable view of any strategy, used in result documents."""
    if isinstance(strat, DirectConditional):
        return {
            "type": "direct-conditional",
            "variant": strat.variant,
            "p_x_given_s": strat.p_x_given_s.as_matrix().tolist(),
        }
    if isinstance(strat, StateIndependent):
        return {
            "type": "state-independent",
            "variant": strat.variant,
            "p_x": strat.p_x.probs.tolist(),
        }
    if isinstance(strat, ShannonStrategy):
        return {
            "type": "shannon-strategy",
            "variant": strat.variant,
            "p_u": strat.p_u.probs.tolist(),
            "u": [str(u) for u in strat.p_u.labels],
            "x_map": [list(r) for r in strat.x_map.table],
        }
    if isinstance(strat, GelfandPinsker):
        return {
            "type": "gelfand-pinsker-conditional",
            "variant": strat.variant,
            "u": [str(u) for u in strat.p_u_given_s.output_labels],
            "p_u_given_s": strat.p_u_given_s.as_matrix().tolist(),
            "x_map": [list(r) for r in strat.x_map.table],
        }
    if isinstance(strat, SynthesizedState):
        return {
            "type": "synthesized-state",
            "variant": strat.variant,
            "u": [str(u) for u in strat.p_u.labels],
            "v": [str(v) for v in strat.p_v.labels],
            "p_u": strat.p_u.probs.tolist(),
            "p_v": strat.p_v.probs.tolist(),
            "p_s_given_uv": strat.p_s_given_uv.as_matrix().tolist(),
            "x_map": [list(r) for r in strat.x_map.table],
        }
    if isinstance(strat, StateCorrelatedPair):
        u_labels, v_labels = split_product_labels(strat.p_uv_given_s.output_labels)
        return {
            "type": "state-correlated-pair",
            "variant": strat.variant,
            "u": [str(u) for u in u_labels],
            "v": [str(v) for v in v_labels],
            "p_uv_given_s": strat.p_uv_given_s.as_matrix().tolist(),
            "x_map": [list(r) for r in strat.x_map.table],
        }
    if isinstance(strat, MarkovPair):
        return {
            "type": "markov-pair",
            "variant": strat.variant,
            "v": [str(v) for v in strat.p_v.labels],
            "u": [str(u) for u in strat.p_u_given_v.output_labels],
            "p_v": strat.p_v.probs.tolist(),
            "p_u_given_v": strat.p_u_given_v.as_matrix().tolist(),
            "x_map": [list(r) for r in strat.x_map.table],
        }
    if isinstance(strat, SynthesizedStateInput):
        return {
            "type": "synthesized-state-input",
            "variant": strat.variant,
            "v": [str(v) for v in strat.p_v.labels],
            "p_x": strat.p_x.probs.tolist(),
            "p_v": strat.p_v.probs.tolist(),
            "p_s_given_v": strat.p_s_given_v.as_matrix().tolist(),
        }
    if isinstance(strat, MarkovInput):
        return {
            "type": "markov-input",
            "variant": strat.variant,
            "v": [str(v) for v in strat.p_v.labels],
            "p_v": strat.p_v.probs.tolist(),
            "p_x_given_v": strat.p_x_given_v.as_matrix().tolist(),
        }
    raise StrategyError(f"cannot serialize strategy of type {type(strat).__name__}")


def strategy_from_dict(doc: Mapping, dmc: StateDmc) -> InputStrategy:
    """Rebuild a strategy from its serialized form against a channel."""
    kind = doc.get("type")
    if kind == "direct-conditional":
        return DirectConditional(
            Kernel.from_matrix(dmc.s_alphabet, dmc.x_alphabet, doc["p_x_given_s"])
        )
    if kind == "state-independent":
        return StateIndependent(Pmf(dmc.x_alphabet, np.asarray(doc["p_x"])))
    if kind == "shannon-strategy":
        u = tuple(doc["u"])
        return ShannonStrategy(
            Pmf(u, np.asarray(doc["p_u"])),
            XMap(u, dmc.s_alphabet, tuple(tuple(r) for r in doc["x_map"])),
        )
    if kind == "gelfand-pinsker-conditional":
        u = tuple(doc["u"])
        return GelfandPinsker(
            Kernel.from_matrix(dmc.s_alphabet, u, doc["p_u_given_s"]),
            XMap(u, dmc.s_alphabet, tuple(tuple(r) for r in doc["x_map"])),
        )
    if kind == "synthesized-state":
        u, v = tuple(doc["u"]), tuple(doc["v"])
        inputs = tuple((uu, vv) for uu in u for vv in v)
        return SynthesizedState(
            Pmf(u, np.asarray(doc["p_u"])),
            Pmf(v, np.asarray(doc["p_v"])),
            Kernel.from_matrix(inputs, dmc.s_alphabet, doc["p_s_given_uv"]),
            XMap(u, dmc.s_alphabet, tuple(tuple(r) for r in doc["x_map"])),
        )
    raise StrategyError(f"cannot rebuild strategy of type {kind!r}")
