"""Command-line front end.

Subcommands: ``state`` (heralded-state fixture + rank/fidelity report),
``dip`` (interference-dip curves as CSV/SVG), ``counts`` (Poisson count
simulation), ``witness`` (fidelity certification from a count table),
``qkd`` (layered key protocol), ``fmax`` (rank-class fidelity bound).

Exit codes: 0 success, 2 configuration or input error, 3 incomplete count
data, 4 witness not certified / protocol aborted. The default seed can be
set via the ``OAM332_SEED`` environment variable; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, default_config, load_config
from .errors import ConfigError, IncompleteDataError
from .hilbert import (
    MixedState,
    PureState,
    fidelity,
    reduce as reduce_state,
    state_from_text,
    state_to_text,
    target_state,
)
from .measurement import (
    DEFAULT_DURATION_S,
    ingest_counts,
    simulate_counts,
    witness_plan,
)
from .optics import (
    dip_curve,
    dip_fwhm,
    lambda_of_delay,
    visibility_effective,
    visibility_theory,
)
from .plotsvg import write_svg
from .qkd import run_protocol, security_check
from .witness import RankClass, certify, fexp_estimate, fmax_bound

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCOMPLETE = 3
EXIT_NOT_CERTIFIED = 4

_BOUND_DEFAULT = 2.0 / 3.0


def _env_seed() -> int:
    raw = os.environ.get("OAM332_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"OAM332_SEED must be an integer, got {raw!r}")


def _load(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _seed_of(args, cfg: ExperimentConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if "OAM332_SEED" in os.environ:
        return _env_seed()
    if cfg is not None:
        return cfg.seed
    return 0


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_target(path: str | None) -> PureState:
    if path is None:
        return target_state()
    state = state_from_text(Path(path).read_text(encoding="utf-8"))
    if not isinstance(state, PureState):
        raise ConfigError("target fixture must be a pure state", path)
    return state


# --- subcommands -----------------------------------------------------------


def cmd_state(args) -> int:
    cfg = _load(args)
    lam = args.lambda0 if args.lambda0 is not None else cfg.lambda0
    state, p_fourfold = cfg.heralded_state(lam)
    target = target_state()
    ranks = []
    for p in sorted(state.paths):
        evals = reduce_state(state, (p,)).eigenvalues()
        ranks.append(int(np.sum(evals > 1e-9 * evals[-1])))
    report = {
        "lambda0": lam,
        "rank_vector": ranks,
        "fidelity_to_target": fidelity(state, target),
        "fourfold_probability": p_fourfold,
        "ensemble_size": len(state.ensemble),
    }
    if args.out_state:
        Path(args.out_state).write_text(state_to_text(state), encoding="utf-8")
        report["state_file"] = args.out_state
    _emit_json(report, args.out)
    return EXIT_OK


def cmd_dip(args) -> int:
    cfg = _load(args)
    if args.points < 2:
        raise ConfigError("dip needs at least 2 grid points")
    if args.max_delay_m <= args.min_delay_m:
        raise ConfigError("empty delay range")
    v_prime = visibility_theory(cfg.spectral)
    v0 = args.visibility if args.visibility is not None else visibility_effective(
        v_prime, cfg.spectral.eta_oam, cfg.spectral.eta_sp
    )
    fwhm = args.fwhm_m if args.fwhm_m is not None else dip_fwhm(cfg.spectral)
    delays = np.linspace(args.min_delay_m, args.max_delay_m, args.points)
    theory = dip_curve(delays, v0, fwhm, args.base_rate_hz)

    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_m", "rate_hz"])
        for d, r in zip(delays, theory):
            writer.writerow([repr(float(d)), repr(float(r))])

    series = [("theory", theory.tolist())]
    sim_rates = None
    if args.simulate:
        from .measurement import MeasurementSetting, ProjectorSpec, expected_probability
        from .optics import parity_split_coincidence, four_photon_state, herald

        # Fig.-2-style projection sequence: the two sorter photons in the
        # minus superposition, photon A in minus, trigger heralded.
        setting = MeasurementSetting.of(
            {
                "A": ProjectorSpec("A", "minus", -1, 0).canonical(),
                "B": ProjectorSpec("B", "minus", 0, 1),
                "C": ProjectorSpec("C", "minus", 0, 1),
            }
        )
        four = four_photon_state(cfg.pair1, cfg.pair2)
        probs = []
        for d in delays:
            lam = lambda_of_delay(float(d), v0, fwhm)
            conditioned, p_coinc = parity_split_coincidence(four, cfg.splitter, lam)
            heralded, p_her = herald(conditioned, cfg.herald)
            probs.append(p_coinc * p_her * expected_probability(heralded, setting))
        plateau = args.base_rate_hz / probs[-1] if probs[-1] > 0 else 0.0
        sim_rates = [p * plateau for p in probs]
        sim_path = out.with_name(out.stem + "_sim" + out.suffix)
        with open(sim_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delay_m", "rate_hz"])
            for d, r in zip(delays, sim_rates):
                writer.writerow([repr(float(d)), repr(float(r))])
        series.append(("simulated", sim_rates))

    if args.svg:
        write_svg(
            args.svg,
            delays.tolist(),
            series,
            xlabel="delay (m)",
            ylabel="rate (Hz)",
            title="two-photon interference dip",
        )
    summary = {
        "visibility": v0,
        "fwhm_m": fwhm,
        "min_rate_hz": float(theory.min()),
        "rows": int(args.points),
        "csv": str(out),
    }
    _emit_json(summary, None)
    return EXIT_OK


def cmd_counts(args) -> int:
    cfg = _load(args)
    seed = _seed_of(args, cfg)
    lam = args.lambda0 if args.lambda0 is not None else cfg.lambda0
    state, _ = cfg.heralded_state(lam)
    plan = witness_plan(target_state(), herald=cfg.herald)
    table = simulate_counts(
        state, plan, pair_rate=args.rate_hz, duration=args.duration_s, seed=seed
    )
    table.write_csv(args.out)
    _emit_json(
        {"rows": len(table), "seed": seed, "csv": args.out, "lambda0": lam}, None
    )
    return EXIT_OK


def cmd_witness(args) -> int:
    bound = args.bound
    if args.fexp is not None:
        # certify a precomputed estimate directly
        result = certify((args.fexp, args.stderr), bound)
    else:
        if not args.counts:
            raise ConfigError("witness needs --counts or --fexp/--stderr")
        table = ingest_counts(args.counts)
        target = _load_target(args.target)
        seed = _seed_of(args)
        value, stderr = fexp_estimate(table, target, mc_runs=args.mc_runs, seed=seed)
        result = certify((value, stderr), bound)
    record = {
        "value": result.f_exp,
        "stderr": result.stderr,
        "bound": result.f_max,
        "significance": result.significance,
        "verdict": result.verdict,
    }
    _emit_json(record, args.out)
    return EXIT_OK if result.verdict == "certified" else EXIT_NOT_CERTIFIED


def cmd_qkd(args) -> int:
    cfg = _load(args)
    seed = _seed_of(args, cfg)
    if args.source:
        source = state_from_text(Path(args.source).read_text(encoding="utf-8"))
        if isinstance(source, PureState):
            source = MixedState.pure(source)
    else:
        lam = args.lambda0 if args.lambda0 is not None else cfg.lambda0
        source, _ = cfg.heralded_state(lam)
    if not 0.0 <= args.sacrifice < 1.0:
        raise ConfigError(f"sacrifice fraction {args.sacrifice} outside [0, 1)")
    keys, table = run_protocol(args.rounds, source, args.sacrifice, seed=seed)
    summary = {
        "rounds": args.rounds,
        "seed": seed,
        "layer1_length": len(keys.layer1),
        "layer2_length": len(keys.layer2),
        "qber1": keys.qber1,
        "qber2": keys.qber2,
        "layer2_fraction": keys.layer2_fraction,
    }
    exit_code = EXIT_OK
    if args.sacrifice > 0 and len(table) > 0:
        try:
            verdict, result = security_check(table, seed=seed)
            summary["security"] = {
                "verdict": verdict,
                "f_exp": result.f_exp,
                "stderr": result.stderr,
                "bound": result.f_max,
                "significance": result.significance,
            }
            if verdict == "abort":
                exit_code = EXIT_NOT_CERTIFIED
        except IncompleteDataError:
            summary["security"] = {"verdict": "insufficient_data"}
    else:
        summary["security"] = {"verdict": "not_checked"}
    if args.layer1_out:
        Path(args.layer1_out).write_text(
            "\n".join(keys.layer1) + ("\n" if keys.layer1 else ""), encoding="utf-8"
        )
    if args.layer2_out:
        Path(args.layer2_out).write_text(
            "\n".join(keys.layer2) + ("\n" if keys.layer2 else ""), encoding="utf-8"
        )
    _emit_json(summary, args.out)
    return exit_code


def cmd_fmax(args) -> int:
    target = _load_target(args.target)
    members = []
    for chunk in args.ranks.split(";"):
        parts = [p for p in chunk.strip().split(",") if p]
        if len(parts) != 3:
            raise ConfigError(f"rank vector needs three entries, got {chunk!r}")
        members.append(tuple(int(p) for p in parts))
    cls = RankClass(tuple(members))
    bound = fmax_bound(target, cls)
    _emit_json({"f_max": bound, "class": [list(m) for m in cls.members]}, args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oam332",
        description="simulate and certify a three-photon OAM state entangled "
        "in 3x3x2 dimensions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", help="experiment configuration (JSON)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides OAM332_SEED)")
        p.add_argument("--out", help="write the JSON record here instead of stdout")

    p_state = sub.add_parser("state", help="heralded state fixture plus rank/fidelity report")
    add_common(p_state)
    p_state.add_argument("--lambda0", type=float, default=None, help="override indistinguishability")
    p_state.add_argument("--out-state", help="write the state fixture here")
    p_state.set_defaults(func=cmd_state)

    p_dip = sub.add_parser("dip", help="interference-dip curve as CSV (+ optional SVG)")
    add_common(p_dip)
    p_dip.add_argument("--min-delay-m", type=float, default=-1.5e-3)
    p_dip.add_argument("--max-delay-m", type=float, default=1.5e-3)
    p_dip.add_argument("--points", type=int, default=201)
    p_dip.add_argument("--base-rate-hz", type=float, default=1.0)
    p_dip.add_argument("--visibility", type=float, default=None, help="override dip depth")
    p_dip.add_argument("--fwhm-m", type=float, default=None, help="override dip width")
    p_dip.add_argument("--simulate", action="store_true", help="also emit the projected-state curve")
    p_dip.add_argument("--svg", help="write an SVG plot here")
    p_dip.add_argument("--out", default="dip.csv", help="CSV output path")
    p_dip.set_defaults(func=cmd_dip, out="dip.csv")

    p_counts = sub.add_parser("counts", help="simulate a witness count table")
    add_common(p_counts)
    p_counts.add_argument("--rate-hz", type=float, default=1.0, help="heralded event rate")
    p_counts.add_argument("--duration-s", type=float, default=DEFAULT_DURATION_S)
    p_counts.add_argument("--lambda0", type=float, default=None)
    p_counts.add_argument("--out", default="counts.csv", help="CSV output path")
    p_counts.set_defaults(func=cmd_counts)

    p_wit = sub.add_parser("witness", help="estimate fidelity and certify against the bound")
    p_wit.add_argument("--counts", help="count-table CSV")
    p_wit.add_argument("--target", help="target-state fixture (default: built-in 3x3x2 target)")
    p_wit.add_argument("--bound", type=float, default=_BOUND_DEFAULT)
    p_wit.add_argument("--mc-runs", type=int, default=2000)
    p_wit.add_argument("--fexp", type=float, default=None, help="certify this value directly")
    p_wit.add_argument("--stderr", type=float, default=0.0)
    p_wit.add_argument("--seed", type=int, default=None)
    p_wit.add_argument("--out")
    p_wit.set_defaults(func=cmd_witness)

    p_qkd = sub.add_parser("qkd", help="run the layered key protocol")
    add_common(p_qkd)
    p_qkd.add_argument("--rounds", type=int, default=10_000)
    p_qkd.add_argument("--sacrifice", type=float, default=0.1)
    p_qkd.add_argument("--lambda0", type=float, default=None)
    p_qkd.add_argument("--source", help="source-state fixture (default: config chain)")
    p_qkd.add_argument("--layer1-out", help="write layer-1 key bits here, one per line")
    p_qkd.add_argument("--layer2-out", help="write layer-2 key bits here, one per line")
    p_qkd.set_defaults(func=cmd_qkd)

    p_fmax = sub.add_parser("fmax", help="rank-class fidelity bound for a target")
    p_fmax.add_argument("--target", help="target-state fixture")
    p_fmax.add_argument("--ranks", default="3,2,2;2,3,2", help="semicolon-separated rank vectors")
    p_fmax.add_argument("--out")
    p_fmax.set_defaults(func=cmd_fmax)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IncompleteDataError as exc:
        print(f"incomplete data: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
