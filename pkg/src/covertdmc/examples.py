"""Constructors and closed-form verifiers for the four worked channels.

Each builder returns the channel together with a :class:`ClosedForm` record:
the known capacity (or best known achievable rate), the witness strategy that
attains it, and a set of exact side checks.  ``verify`` scores everything
through the analytic evaluator, no solver involved.

Bernoulli orientation varies per channel and is documented on each builder;
the closed-form values are symmetric in the orientation, but the bundled
model files fix one so that downstream tools agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import capacity
from .channel import (
    DirectConditional,
    InputStrategy,
    ShannonStrategy,
    StateDmc,
    SynthesizedState,
    XMap,
    induced_joint,
    model_to_dict,
    save_model,
)
from .info import binary_entropy, mutual_information
from .prob import Kernel, Pmf

BITS = ("0", "1")


@dataclass(frozen=True)
class ClosedForm:
    """A worked channel with its known rate and the attaining strategy."""

    name: str
    params: dict
    scenario: str
    witness: InputStrategy
    expected_bits: float
    simple_scenario: str | None = None  # contrasting scheme expected to carry 0
    notes: str = ""


def _deterministic_channel(
    s_alphabet: tuple[str, ...],
    q_s: Pmf,
    law,
    allow_degenerate_innocent: bool = False,
) -> StateDmc:
    """Build a channel whose outputs are deterministic functions of (x, s)."""
    yz = tuple((y, z) for y in BITS for z in BITS)
    inputs = []
    rows = []
    for x in BITS:
        for s in s_alphabet:
            y, z = law(x, s)
            probs = [1.0 if (yy == y and zz == z) else 0.0 for yy, zz in yz]
            inputs.append((x, s))
            rows.append(Pmf(yz, np.array(probs)))
    return StateDmc(
        BITS, s_alphabet, BITS, BITS, q_s, Kernel(tuple(inputs), tuple(rows)), "0",
        allow_degenerate_innocent=allow_degenerate_innocent,
    )


def _xor(a: str, b: str) -> str:
    return str(int(a) ^ int(b))


def _pair_states() -> tuple[str, ...]:
    return ("00", "01", "10", "11")


def _pair_pmf(p1_one: float, p2_one: float) -> Pmf:
    """Independent pair state with P(first bit = 1), P(second bit = 1) given."""
    probs = []
    for s1 in BITS:
        for s2 in BITS:
            a = p1_one if s1 == "1" else 1.0 - p1_one
            b = p2_one if s2 == "1" else 1.0 - p2_one
            probs.append(a * b)
    return Pmf(_pair_states(), np.array(probs))


def binary_additive(zeta: float) -> tuple[StateDmc, ClosedForm]:
    """Both outputs equal the input xor the state; state is Bern(zeta).

    Orientation: ``P(S = "1") = zeta``, so the innocent output law puts mass
    ``zeta`` on symbol "1".  The witness is the tilted conditional input with
    joint cell ``P(X = x0, S = "1") = zeta**2``, and its rate equals the
    binary entropy of ``zeta`` exactly.
    """
    if not 0.0 < zeta < 0.5:
        raise ValueError(f"zeta must lie in (0, 0.5), got {zeta!r}")
    q_s = Pmf.bernoulli(zeta, BITS)
    dmc = _deterministic_channel(
        BITS, q_s, lambda x, s: (_xor(x, s), _xor(x, s))
    )
    witness = DirectConditional(
        Kernel.from_matrix(
            BITS, BITS, [[1.0 - zeta, zeta], [zeta, 1.0 - zeta]]
        )
    )
    cf = ClosedForm(
        name="binary-additive",
        params={"zeta": zeta},
        scenario="nc-tr",
        witness=witness,
        expected_bits=binary_entropy(zeta),
        notes="optimal joint has P(X=x0, S='1') = zeta^2",
    )
    return dmc, cf


def binary_multiplicative(p: np.ndarray | list) -> tuple[StateDmc, ClosedForm]:
    """Both outputs are the input gated by one state bit each.

    ``p[i][j]`` is the probability of the state pair ``(i, j)``; the receiver
    bit gates through the first component and the warden through the second.
    The innocent output law is degenerate (the warden sees a constant under
    ``x0``), so the channel is built with the degenerate-innocent escape
    hatch; covertness is then the exact-equality constraint.  The capacity
    equals the mass of the receive-open/warden-blocked state, attained by a
    fair coin on that state alone; the witness is one of many maximizers.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (2, 2):
        raise ValueError("state joint must be a 2x2 matrix")
    q_s = Pmf(_pair_states(), arr.reshape(-1))
    dmc = _deterministic_channel(
        _pair_states(),
        q_s,
        lambda x, s: (
            str(int(x) * int(s[0])),
            str(int(x) * int(s[1])),
        ),
        allow_degenerate_innocent=True,
    )
    rows = []
    for s in _pair_states():
        if s == "10":
            rows.append([0.5, 0.5])
        else:
            rows.append([1.0, 0.0])
    witness = DirectConditional(Kernel.from_matrix(_pair_states(), BITS, rows))
    cf = ClosedForm(
        name="binary-multiplicative",
        params={"p": arr.tolist()},
        scenario="nc-tr",
        witness=witness,
        expected_bits=float(arr[1, 0]),
        notes="maximizer is non-unique off the open slot",
    )
    return dmc, cf


def degraded_additive(alpha: float, beta: float) -> tuple[StateDmc, ClosedForm]:
    """Receiver sees input xor first state bit; warden sees that xor second.

    Orientation: ``P(S1 = "1") = alpha`` and ``P(S2 = "1") = beta``.  The
    witness rides an auxiliary coin of bias alpha through the state-cancelling
    rule, which meets the covertness equality exactly and achieves the binary
    entropy of alpha under the simple causal scheme.
    """
    _check_half_open(alpha, "alpha")
    _check_half_open(beta, "beta")
    q_s = _pair_pmf(alpha, beta)
    dmc = _deterministic_channel(
        _pair_states(),
        q_s,
        lambda x, s: (_xor(x, s[0]), _xor(_xor(x, s[0]), s[1])),
    )
    u_labels = ("u0", "u1")
    x_map = XMap.from_callable(u_labels, _pair_states(), lambda u, s: _xor(u[1], s[0]))
    witness = ShannonStrategy(Pmf.bernoulli(alpha, u_labels), x_map)
    cf = ClosedForm(
        name="degraded-additive",
        params={"alpha": alpha, "beta": beta},
        scenario="c-t-inner-simple",
        witness=witness,
        expected_bits=binary_entropy(alpha),
    )
    return dmc, cf


def reverse_degraded(alpha: float, beta: float) -> tuple[StateDmc, ClosedForm]:
    """Warden sees input xor first state bit; receiver sees that xor second.

    Orientation: ``P(S1 = "0") = alpha`` and ``P(S2 = "0") = beta`` so that
    the innocent law puts mass alpha on warden symbol "0".  The witness pairs
    a message coin of the same orientation with the description ``V = S2``;
    its rate is ``Hb(eta) - Hb(beta)`` with
    ``eta = alpha*beta + (1-alpha)*(1-beta)``, while the simple causal scheme
    over rules that read only the warden-side state bit carries nothing.
    """
    _check_half_open(alpha, "alpha")
    _check_half_open(beta, "beta")
    q_s = _pair_pmf(1.0 - alpha, 1.0 - beta)
    dmc = _deterministic_channel(
        _pair_states(),
        q_s,
        lambda x, s: (_xor(_xor(x, s[0]), s[1]), _xor(x, s[0])),
    )
    u_labels = ("u0", "u1")
    v_labels = BITS
    x_map = XMap.from_callable(u_labels, _pair_states(), lambda u, s: _xor(u[1], s[0]))
    p_u = Pmf.bernoulli(1.0 - alpha, u_labels)
    p_v = Pmf.bernoulli(1.0 - beta, v_labels)
    # State rule given the description: first bit independent, second pinned.
    rows = []
    for v in v_labels:
        probs = []
        for s in _pair_states():
            a = alpha if s[0] == "0" else 1.0 - alpha
            probs.append(a if s[1] == v else 0.0)
        rows.append(Pmf(_pair_states(), np.array(probs)))
    p_s_given_v = Kernel(v_labels, tuple(rows))
    witness = SynthesizedState.with_state_from_v(p_u, p_v, p_s_given_v, x_map)
    eta = alpha * beta + (1.0 - alpha) * (1.0 - beta)
    cf = ClosedForm(
        name="reverse-degraded",
        params={"alpha": alpha, "beta": beta},
        scenario="c-t-inner-wz",
        witness=witness,
        expected_bits=binary_entropy(eta) - binary_entropy(beta),
        simple_scenario="c-t-inner-simple",
    )
    return dmc, cf


def _check_half_open(value: float, name: str) -> None:
    if not 0.0 < value <= 0.5:
        raise ValueError(f"{name} must lie in (0, 0.5], got {value!r}")


BUILDERS = {
    "binary-additive": binary_additive,
    "binary-multiplicative": binary_multiplicative,
    "degraded-additive": degraded_additive,
    "reverse-degraded": reverse_degraded,
}

BUNDLED_PARAMS = {
    "binary-additive": {"zeta": 0.3},
    "binary-multiplicative": {"p": [[0.25, 0.25], [0.25, 0.25]]},
    "degraded-additive": {"alpha": 0.2, "beta": 0.1},
    "reverse-degraded": {"alpha": 0.3, "beta": 0.1},
}


def build(name: str, **params) -> tuple[StateDmc, ClosedForm]:
    if name not in BUILDERS:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(BUILDERS)}")
    return BUILDERS[name](**params)


def bundled_channels() -> dict[str, tuple[StateDmc, ClosedForm]]:
    """The four channels shipped as model files, at their default parameters."""
    return {name: build(name, **BUNDLED_PARAMS[name]) for name in BUILDERS}


def bundled_model_path(name: str) -> Path:
    return Path(str(resources.files("covertdmc").joinpath(f"models/{name}.json")))


def write_bundled_models(directory: str | Path) -> list[Path]:
    out = []
    for name, (dmc, _) in bundled_channels().items():
        path = Path(directory) / f"{name}.json"
        save_model(dmc, path)
        out.append(path)
    return out


def verify(dmc: StateDmc, cf: ClosedForm, tol: float = 1e-9) -> dict:
    """Analytic closed-form report: witness rate, slacks, and side checks."""
    result = capacity.evaluate(cf.scenario, dmc, cf.witness)
    checks = [
        {
            "check": "witness_rate",
            "value": result.rate_bits,
            "expected": cf.expected_bits,
            "pass": bool(abs(result.rate_bits - cf.expected_bits) <= tol),
        },
        {
            "check": "witness_feasible",
            "value": result.feasible,
            "expected": True,
            "pass": bool(result.feasible),
        },
        {
            "check": "covertness_tv",
            "value": result.slack["covertness_tv"],
            "expected": 0.0,
            "pass": bool(result.slack["covertness_tv"] <= 1e-12),
        },
    ]
    if cf.name == "reverse-degraded":
        joint = induced_joint(dmc, cf.witness)
        beta = cf.params["beta"]
        checks.append(
            {
                "check": "description_state_information",
                "value": mutual_information(joint, {"V"}, {"S"}),
                "expected": binary_entropy(beta),
                "pass": bool(
                    abs(mutual_information(joint, {"V"}, {"S"}) - binary_entropy(beta))
                    <= tol
                ),
            }
        )
        checks.append(
            {
                "check": "description_warden_information",
                "value": mutual_information(joint, {"V"}, {"Z"}),
                "expected": 0.0,
                "pass": bool(mutual_information(joint, {"V"}, {"Z"}) <= tol),
            }
        )
        simple = capacity.simple_causal_grid(
            dmc, u_card=3, step=0.02,
            state_groups=[["00", "01"], ["10", "11"]],
        )
        checks.append(
            {
                "check": "simple_scheme_rate",
                "value": simple["best_rate_bits"],
                "expected": 0.0,
                "pass": bool(simple["best_rate_bits"] <= tol),
            }
        )
    report = {
        "name": cf.name,
        "params": cf.params,
        "scenario": cf.scenario,
        "expected_bits": cf.expected_bits,
        "rate_bits": result.rate_bits,
        "slack": result.slack,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "notes": cf.notes,
    }
    return report


def reference_entropy_mix(zeta: float) -> float:
    """Cross-check value for the additive channel, computed the long way."""
    return (1 - zeta) * binary_entropy(zeta) + zeta * binary_entropy(1 - zeta)


assert math.isclose(reference_entropy_mix(0.3), binary_entropy(0.3))
