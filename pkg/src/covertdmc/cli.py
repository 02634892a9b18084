"""Command-line front end: capacity solves, worked examples, simulations, sweeps.

Every command writes JSON (and CSV where noted) whose ``result`` payload is a
pure function of the inputs and seed; the accompanying ``manifest`` records
the resolved options, seeds, tool version, input-model digest, and wall
clock.  Exit codes: 0 success, 1 validation failure, 2 empty feasible set,
64 usage.

CSV output uses '.' decimals, comma separators, a header row, and 12
significant digits.  ``COVERTDMC_THREADS`` caps the worker count used for
independent sweep points.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, capacity, codec, examples
from .channel import (
    ModelError,
    ShannonStrategy,
    StateIndependent,
    StrategyError,
    XMap,
    always_innocent,
    load_model,
    save_model,
    strategy_from_dict,
)
from .codec import DeskScaleError, SchemeError
from .prob import Pmf, ProbabilityError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64

_SCHEME_SCENARIO = {
    "superposition-nc-tr": "nc-tr",
    "block-markov-c-tr": "c-tr",
    "block-markov-sc-tr": "sc-tr",
    "block-markov-nc-t": "c-t-inner-wz",
    "simple-gp-nc-t": "nc-t-inner-simple",
    "simple-c-t": "c-t-inner-simple",
    "simple-sc-t": "sc-t-inner-simple",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _digest_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _digest_doc(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _manifest(command: str, options: dict, model_digest: str | None, t0: float) -> dict:
    return {
        "command": command,
        "options": dict(sorted(options.items())),
        "tool_version": __version__,
        "model_digest": model_digest,
        "wall_clock_s": time.time() - t0,
    }


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("COVERTDMC_THREADS", "1")))
    except ValueError:
        return 1


def _load(args) -> tuple:
    dmc = load_model(args.model, allow_degenerate_innocent=args.allow_degenerate_innocent)
    return dmc, _digest_file(args.model)


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------


def cmd_capacity(args) -> int:
    t0 = time.time()
    dmc, digest = _load(args)
    opts = capacity.SolveOptions(
        seed=args.seed,
        starts=args.starts,
        u_card=args.u_card,
        v_card=args.v_card,
    )
    result = capacity.solve(args.scenario, dmc, opts)
    payload = {"result": result.to_dict()}
    if args.oracle:
        oracle = capacity.brute_force_oracle(
            args.scenario, dmc, args.grid_step or 0.005
        )
        payload["oracle"] = oracle.to_dict()
        payload["oracle_agreement_bits"] = abs(oracle.rate_bits - result.rate_bits)
    payload["manifest"] = _manifest(
        "capacity",
        {
            "model": str(args.model), "scenario": args.scenario,
            "seed": args.seed, "starts": args.starts, "oracle": args.oracle,
            "grid_step": args.grid_step,
        },
        digest,
        t0,
    )
    _emit(payload, args.out)
    return EXIT_OK if not result.empty_feasible else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# example
# ---------------------------------------------------------------------------


def cmd_example(args) -> int:
    t0 = time.time()
    params = {}
    if args.name == "binary-additive":
        params["zeta"] = args.zeta if args.zeta is not None else 0.3
    elif args.name == "binary-multiplicative":
        params["p"] = json.loads(args.p) if args.p else [[0.25, 0.25], [0.25, 0.25]]
    else:
        params["alpha"] = args.alpha if args.alpha is not None else 0.3
        params["beta"] = args.beta if args.beta is not None else 0.1
    dmc, cf = examples.build(args.name, **params)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / f"{args.name}.json"
    save_model(dmc, model_path)
    report = examples.verify(dmc, cf)
    doc = {
        "result": report,
        "model_file": str(model_path),
        "manifest": _manifest(
            "example", {"name": args.name, **params}, _digest_file(model_path), t0
        ),
    }
    report_path = out_dir / f"{args.name}.report.json"
    _emit(doc, str(report_path))
    print(f"wrote {model_path} and {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _default_strategy(scheme: str, dmc, args):
    if args.innocent:
        if scheme in ("block-markov-sc-tr", "simple-sc-t"):
            return StateIndependent(Pmf.point_mass(dmc.x0, dmc.x_alphabet))
        if scheme in ("block-markov-c-tr", "simple-c-t"):
            u = ("u0",)
            return ShannonStrategy(
                Pmf(u, [1.0]),
                XMap(u, dmc.s_alphabet, ((dmc.x0,) * len(dmc.s_alphabet),)),
            )
        return always_innocent(dmc)
    if args.strategy:
        doc = json.loads(Path(args.strategy).read_text())
        return strategy_from_dict(doc, dmc)
    scenario = _SCHEME_SCENARIO[scheme]
    solved = capacity.solve(
        scenario, dmc, capacity.SolveOptions(seed=args.seed)
    )
    if solved.strategy is None:
        raise StrategyError(
            f"no feasible strategy found for {scenario}; pass --strategy or --innocent"
        )
    return solved.strategy


def _sim_config(args, r: int) -> codec.SimConfig:
    return codec.SimConfig(
        scheme=args.scheme,
        blocks=args.blocks,
        block_len=r,
        rate=args.rate,
        rate_k=args.rate_k,
        rate_t=args.rate_t,
        rate_key=args.rate_key,
        rate_recon=args.rate_recon,
        rate_lik=args.rate_lik,
        rate_desc=args.rate_desc,
        eps=args.eps,
        eps1=args.eps1,
        eps2=args.eps2,
        trials=args.trials,
        seed=args.seed,
    )


def _sweep_values(spec: str) -> tuple[str, list[int]]:
    name, _, values = spec.partition("=")
    if name.strip() != "r" or not values:
        raise ValueError("simulate --sweep expects the form r=6,8,10")
    return "r", [int(v) for v in values.split(",")]


def cmd_simulate(args) -> int:
    t0 = time.time()
    dmc, digest = _load(args)
    strat = _default_strategy(args.scheme, dmc, args)
    r_values = [args.blocklen]
    if args.sweep:
        _, r_values = _sweep_values(args.sweep)
    reports = []
    for r in r_values:
        cfg = _sim_config(args, r)
        reports.append((r, codec.run_block_markov(cfg, dmc, strat)))
    manifest = _manifest(
        "simulate",
        {
            "model": str(args.model), "scheme": args.scheme, "rate": args.rate,
            "rate_k": args.rate_k, "rate_t": args.rate_t,
            "rate_key": args.rate_key, "rate_recon": args.rate_recon,
            "rate_lik": args.rate_lik, "rate_desc": args.rate_desc,
            "blocks": args.blocks, "blocklen": args.blocklen,
            "sweep": args.sweep, "trials": args.trials, "seed": args.seed,
            "eps": args.eps, "eps1": args.eps1, "eps2": args.eps2,
            "innocent": args.innocent,
        },
        digest,
        t0,
    )
    if args.sweep:
        header = [
            "r", "p_e_block", "p_e_block_ci", "p_e_trial", "key_failure_rate",
            "kl_exact_mean_bits", "kl_exact_mean_bits_per_symbol",
            "plugin_tv_mean", "manifest_digest",
        ]
        rows = []
        for r, rep in reports:
            kls = [e["kl_exact_bits"] for e in rep.per_block]
            kps = [e["kl_exact_bits_per_symbol"] for e in rep.per_block]
            tvs = [e["plugin"]["tv"] for e in rep.per_block]
            rows.append(
                [
                    r, rep.p_e_block, rep.p_e_block_ci, rep.p_e_trial,
                    rep.key_failure_rate,
                    _mean_or_blank(kls), _mean_or_blank(kps), _mean_or_blank(tvs),
                    _digest_doc(rep.to_dict()),
                ]
            )
        out = Path(args.out or "simulate_sweep.csv")
        _write_csv(out, header, rows)
        Path(str(out) + ".manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        print(f"wrote {out}")
        return EXIT_OK
    rep = reports[0][1]
    doc = {"result": rep.to_dict(), "manifest": manifest}
    _emit(doc, args.out)
    if args.trace:
        header = ["block", "trial", "decoded_ok", "key_ok", "kl_exact", "tv_plugin"]
        rows = [
            [row["block"], row["trial"], int(row["decoded_ok"]), int(row["key_ok"]),
             "" if row["kl_exact"] is None else row["kl_exact"], row["tv_plugin"]]
            for row in rep.trace
        ]
        _write_csv(Path(args.trace), header, rows)
    return EXIT_OK


def _mean_or_blank(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else ""


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    t0 = time.time()
    try:
        spec = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"malformed sweep spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    command = spec.get("command")
    if command not in ("capacity", "example"):
        print("sweep spec 'command' must be 'capacity' or 'example'", file=sys.stderr)
        return EXIT_VALIDATION
    grid = spec.get("grid", {})
    names = sorted(grid)
    combos = list(itertools.product(*(grid[n] for n in names))) if names else []
    seen = set()
    points = []
    for combo in combos:
        if combo in seen:
            print(f"warning: duplicate grid point {combo} skipped", file=sys.stderr)
            continue
        seen.add(combo)
        points.append(dict(zip(names, combo)))

    def run_point(point: dict) -> list:
        options = dict(spec.get("options", {}))
        name = spec.get("example", {}).get("name")
        params = {k: v for k, v in {**spec.get("example", {}), **point}.items()
                  if k != "name"}
        dmc, cf = examples.build(name, **params)
        if command == "example":
            report = examples.verify(dmc, cf)
            row = [point[n] for n in names]
            row += [report["rate_bits"], report["expected_bits"], report["pass"]]
            row.append(_digest_doc(report))
            return row
        scenario = options.get("scenario", "nc-tr")
        result = capacity.solve(
            scenario, dmc,
            capacity.SolveOptions(seed=int(options.get("seed", 0))),
        )
        row = [point[n] for n in names]
        row += [result.rate_bits, result.feasible]
        row.append(_digest_doc(result.to_dict()))
        return row

    workers = _threads()
    if points and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_point, points))
    else:
        rows = [run_point(p) for p in points]
    if command == "example":
        header = names + ["rate_bits", "expected_bits", "pass", "manifest_digest"]
    else:
        header = names + ["rate_bits", "feasible", "manifest_digest"]
    out = Path(args.out or "sweep.csv")
    _write_csv(out, header, rows)
    manifest = _manifest("sweep", {"spec": str(args.spec), "points": len(rows)}, None, t0)
    Path(str(out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="covertdmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", help="solve a covert-rate scenario on a model")
    cap.add_argument("--model", required=True)
    cap.add_argument("--scenario", required=True, choices=capacity.ALL_SCENARIOS)
    cap.add_argument("--seed", type=int, default=0)
    cap.add_argument("--starts", type=int, default=32)
    cap.add_argument("--u-card", type=int, default=None)
    cap.add_argument("--v-card", type=int, default=None)
    cap.add_argument("--grid-step", type=float, default=None)
    cap.add_argument("--oracle", action="store_true",
                     help="cross-check against the exhaustive grid oracle")
    cap.add_argument("--allow-degenerate-innocent", action="store_true")
    cap.add_argument("--out", default=None)
    cap.set_defaults(fn=cmd_capacity)

    exa = sub.add_parser("example", help="emit a worked channel and verify it")
    exa.add_argument("name", choices=sorted(examples.BUILDERS))
    exa.add_argument("--zeta", type=float, default=None)
    exa.add_argument("--alpha", type=float, default=None)
    exa.add_argument("--beta", type=float, default=None)
    exa.add_argument("--p", default=None, help="JSON 2x2 state joint")
    exa.add_argument("--out", default=None, help="output directory")
    exa.set_defaults(fn=cmd_example)

    sim = sub.add_parser("simulate", help="run a coding-scheme simulation")
    sim.add_argument("--model", required=True)
    sim.add_argument("--scheme", required=True, choices=codec.SCHEMES)
    sim.add_argument("--rate", type=float, default=0.25)
    sim.add_argument("--rate-k", type=float, default=0.0, dest="rate_k")
    sim.add_argument("--rate-t", type=float, default=0.0, dest="rate_t")
    sim.add_argument("--rate-key", type=float, default=None, dest="rate_key")
    sim.add_argument("--rate-recon", type=float, default=None, dest="rate_recon")
    sim.add_argument("--rate-lik", type=float, default=0.0, dest="rate_lik")
    sim.add_argument("--rate-desc", type=float, default=0.0, dest="rate_desc")
    sim.add_argument("--blocks", type=int, default=5)
    sim.add_argument("--blocklen", type=int, default=8)
    sim.add_argument("--trials", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--eps", type=float, default=0.05)
    sim.add_argument("--eps1", type=float, default=0.075)
    sim.add_argument("--eps2", type=float, default=0.1)
    sim.add_argument("--innocent", action="store_true",
                     help="simulate the always-innocent strategy")
    sim.add_argument("--strategy", default=None,
                     help="JSON strategy file (as emitted in capacity results)")
    sim.add_argument("--sweep", default=None, help="e.g. r=6,8,10 (CSV output)")
    sim.add_argument("--trace", default=None, help="per-(trial, block) CSV path")
    sim.add_argument("--allow-degenerate-innocent", action="store_true")
    sim.add_argument("--out", default=None)
    sim.set_defaults(fn=cmd_simulate)

    swp = sub.add_parser("sweep", help="run a parameter grid from a spec file")
    swp.add_argument("spec")
    swp.add_argument("--out", default=None)
    swp.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, ProbabilityError, StrategyError, ValueError) as exc:
        if isinstance(exc, (DeskScaleError, SchemeError)):
            print(f"configuration rejected: {exc}", file=sys.stderr)
        else:
            print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
