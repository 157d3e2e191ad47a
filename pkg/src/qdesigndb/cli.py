"""Command-line interface: ingest, stats, query, interpolate, oracle, synth.

All commands are deterministic given (store, flags, seed); JSON output is
schema-stable and timing never goes to stdout. Exit codes: 0 success,
1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import interpolate as interp
from . import oracle, physics, query, store, synth

log = logging.getLogger("qdesigndb")

ENV_STORE = "QDESIGNDB_STORE"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _parse_kv(text: str, what: str) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text.strip():
        return out
    for item in text.split(","):
        if "=" not in item:
            raise CliError(f"malformed {what} entry {item!r} (expected key=value)",
                           EXIT_USAGE)
        key, _, value = item.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError as exc:
            raise CliError(f"non-numeric {what} value in {item!r}", EXIT_USAGE) from exc
    return out


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    cfg: dict[str, str] = {}
    try:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"malformed config line {line!r}", EXIT_USAGE)
            key, _, value = line.partition("=")
            cfg[key.strip()] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}", EXIT_USAGE) from exc
    return cfg


def _resolve_store_path(args, cfg: dict[str, str]) -> str:
    path = getattr(args, "store", None) or cfg.get("store") or os.environ.get(ENV_STORE)
    if not path:
        raise CliError(
            f"no store path (use --store, config 'store=', or ${ENV_STORE})",
            EXIT_USAGE)
    return path


def _apply_config_defaults(args, cfg: dict[str, str]) -> None:
    """Fill unset flags from the config file (flags always win)."""
    if getattr(args, "output", None) is None:
        args.output = cfg.get("output", "json")
        if args.output not in ("json", "table"):
            raise CliError(f"bad config output={args.output!r}", EXIT_USAGE)
    try:
        if getattr(args, "threads", None) is None:
            args.threads = int(cfg.get("threads", "1"))
        if getattr(args, "seed", None) is None:
            args.seed = int(cfg.get("seed", "0"))
    except ValueError as exc:
        raise CliError(f"non-integer config value: {exc}", EXIT_USAGE) from exc
    if getattr(args, "threads", 1) < 1:
        raise CliError("threads must be at least 1", EXIT_USAGE)


def _load(args, cfg) -> store.ComponentStore:
    try:
        return store.load_components(_resolve_store_path(args, cfg))
    except store.StoreError as exc:
        raise CliError(str(exc)) from exc


def _target_from_args(args) -> query.TargetSpec:
    targets = _parse_kv(args.target or "", "target")
    weights = _parse_kv(args.weights or "", "weights")
    derived = _parse_kv(args.derived or "", "derived")
    metric = {"l2": "weighted_relative_L2", "l1": "L1",
              "chebyshev": "Chebyshev"}.get(args.metric.lower(), args.metric)
    try:
        return query.TargetSpec.from_mapping(targets, weights, derived, metric)
    except ValueError as exc:
        raise CliError(f"bad target: {exc}", EXIT_USAGE) from exc


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    _print_table(payload)


def _print_table(payload: dict, indent: str = "") -> None:
    for key, value in payload.items():
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_table(value, indent + "  ")
        elif isinstance(value, list):
            print(f"{indent}{key}:")
            for item in value:
                if isinstance(item, dict):
                    _print_table(item, indent + "  ")
                    print(f"{indent}  -")
                else:
                    print(f"{indent}  {item}")
        else:
            print(f"{indent}{key}: {value}")


def _params_dict(p: physics.HamiltonianParams) -> dict:
    return {"f_q": p.f_q, "alpha": p.alpha, "f_r": p.f_r,
            "kappa": p.kappa, "g": p.g}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_ingest(args, cfg) -> int:
    st = _load(args, cfg)
    stats = store.store_stats(st)
    payload = {
        "stats": stats,
        "errors": [dataclasses.asdict(e) for e in st.load_errors],
    }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_stats(args, cfg) -> int:
    st = _load(args, cfg)
    _emit(store.store_stats(st), args.output)
    return EXIT_OK


def _cmd_query(args, cfg) -> int:
    st = _load(args, cfg)
    target = _target_from_args(args)
    try:
        result = query.top_k_search(
            st, target, k=args.k, E_J=args.ej, workers=args.threads,
            claw_tolerance=args.claw_tolerance)
    except ValueError as exc:
        raise CliError(f"query failed: {exc}") from exc
    log.info("scanned %d candidates in %.3f s",
             result.stats.candidates_scanned, result.stats.wall_time)
    payload = {
        "E_J": result.E_J,
        "ranked": [
            {"qubit_id": c.qubit_id, "resonator_id": c.resonator_id,
             "coupler_id": c.coupler_id, "cost": c.cost,
             "params": _params_dict(c.params)}
            for c in result.ranked
        ],
        "per_parameter": {
            name: [
                {"qubit_id": m.qubit_id, "resonator_id": m.resonator_id,
                 "coupler_id": m.coupler_id, "value": m.value,
                 "abs_error": m.abs_error}
                for m in matches
            ]
            for name, matches in sorted(result.per_parameter.items())
        },
        "closest_validated": (
            None if result.closest_validated is None else
            {"id": result.closest_validated[0],
             "cost": result.closest_validated[1],
             "measured": _params_dict(
                 st.validated[result.closest_validated[0]].hamiltonian_params())}
        ),
        # wall_time deliberately left out: stdout must be run-to-run identical
        "stats": {"candidates_scanned": result.stats.candidates_scanned,
                  "skipped": result.stats.skipped},
    }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_interpolate(args, cfg) -> int:
    st = _load(args, cfg)
    target = _target_from_args(args)
    try:
        design = interp.interpolate_design(st, target, args.resonator_type)
    except (interp.InterpolationError, ValueError) as exc:
        raise CliError(f"interpolation failed: {exc}") from exc
    payload = {
        "base_qubit_id": design.base_qubit_id,
        "base_resonator_id": design.base_resonator_id,
        "base_coupler_id": design.base_coupler_id,
        "geometry": {
            "cross_length": design.cross_length,
            "claw_length": design.claw_length,
            "cpw_length": design.cpw_length,
            "feedline_coupling_dim": design.feedline_coupling_dim,
        },
        "scale_factors": design.scale_factors,
        "estimated": _params_dict(design.estimated),
        "warnings": list(design.warnings),
        "recalc_applied": design.recalc_applied,
        "recalc_residual": design.recalc_residual,
        "E_J": design.E_J,
    }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_oracle(args, cfg) -> int:
    try:
        pert_l, pert_chi = physics.perturbative_shifts(
            args.g, args.fq, args.fr, args.alpha)
        spec = oracle.JCSpec(f_r=args.fr, f_q=args.fq, alpha=args.alpha, g=args.g)
        num_l, num_chi = oracle.numerical_shifts(spec)
    except (ValueError, RuntimeError) as exc:
        raise CliError(f"oracle failed: {exc}") from exc
    payload = {
        "inputs": {"f_q": args.fq, "f_r": args.fr,
                   "alpha": args.alpha, "g": args.g},
        "chi_L": {"perturbative": pert_l, "numerical": num_l,
                  "rel_delta": abs(pert_l - num_l) / abs(num_l) if num_l else 0.0},
        "chi": {"perturbative": pert_chi, "numerical": num_chi,
                "rel_delta": abs(pert_chi - num_chi) / abs(num_chi) if num_chi else 0.0},
    }
    if args.output == "table":
        print(f"{'':14s}{'perturbative':>16s}{'numerical':>16s}{'rel delta':>12s}")
        for name in ("chi_L", "chi"):
            row = payload[name]
            print(f"{name:14s}{row['perturbative']:16.9f}{row['numerical']:16.9f}"
                  f"{row['rel_delta']:12.2e}")
    else:
        _emit(payload, args.output)
    return EXIT_OK


def _cmd_synth(args, cfg) -> int:
    if args.preset == "production-counts":
        config = synth.SynthConfig.production_counts()
    elif args.preset:
        raise CliError(f"unknown preset {args.preset!r}", EXIT_USAGE)
    else:
        config = synth.SynthConfig(
            n_qubit_claws=args.qubits, n_quarter_wave=args.quarter,
            n_half_wave=args.half, n_couplers=args.couplers,
            n_validated=args.validated)
    out = args.out or _resolve_store_path(args, cfg)
    st = synth.synth_generate(config, args.seed, out)
    _emit(store.store_stats(st), args.output)
    return EXIT_OK


def _cmd_physics(args, cfg) -> int:
    exported = {
        "transmon_fq_alpha": physics.transmon_fq_alpha,
        "transmon_fq_alpha_approx": physics.transmon_fq_alpha_approx,
        "find_EJ_EC": physics.find_EJ_EC,
        "charging_energy": physics.charging_energy,
        "capacitance_of": physics.capacitance_of,
        "ej_from_ic": physics.ej_from_ic,
        "resonator_effective_capacitance": physics.resonator_effective_capacitance,
        "coupling_g_capacitive": physics.coupling_g_capacitive,
        "perturbative_shifts": physics.perturbative_shifts,
        "g_from_lamb": physics.g_from_lamb,
        "coupled_res_freq_and_kappa": physics.coupled_res_freq_and_kappa,
        "flux_tuned_fq": physics.flux_tuned_fq,
        "avoided_crossing_branches": physics.avoided_crossing_branches,
        "alpha_from_spectroscopy": physics.alpha_from_spectroscopy,
    }
    fn = exported.get(args.name)
    if fn is None:
        raise CliError(f"unknown physics operation {args.name!r} "
                       f"(known: {', '.join(sorted(exported))})", EXIT_USAGE)
    kwargs_raw = args.args or ""
    kwargs: dict[str, object] = {}
    for key, value in _parse_kv(kwargs_raw, "args").items():
        kwargs[key] = value
    if args.str_args:
        for item in args.str_args.split(","):
            key, _, value = item.partition("=")
            kwargs[key.strip()] = value.strip()
    try:
        result = fn(**kwargs)
    except TypeError as exc:
        raise CliError(f"bad arguments for {args.name}: {exc}", EXIT_USAGE) from exc
    except (ValueError, RuntimeError) as exc:
        raise CliError(f"{args.name} failed: {exc}") from exc
    if isinstance(result, tuple):
        payload = {"result": list(result)}
    else:
        payload = {"result": result}
    _emit(payload, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdesigndb",
        description="Map target circuit-QED Hamiltonian parameters to device "
                    "geometry records.")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--log-level", default=None,
                        help="logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_store=True):
        if with_store:
            p.add_argument("--store", help=f"store directory (or ${ENV_STORE})")
        p.add_argument("--output", choices=("json", "table"), default=None)

    p = sub.add_parser("ingest", help="load a store and report validation errors")
    common(p)

    p = sub.add_parser("stats", help="collection counts and composed totals")
    common(p)

    p = sub.add_parser("query", help="top-k nearest designs for a target")
    common(p)
    p.add_argument("--target", required=True,
                   help="key=value list, e.g. f_q=4.2,alpha=-0.2,f_r=6.5,"
                        "kappa=0.15,g=0.06 (GHz; kappa in MHz)")
    p.add_argument("--weights", default="", help="key=value weight overrides")
    p.add_argument("--derived", default="",
                   help="derived terms with weights, e.g. chi=1,Delta=0.5")
    p.add_argument("--metric", default="weighted_relative_L2",
                   help="l2 | l1 | chebyshev | custom:<expr>")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ej", type=float, default=None,
                   help="explicit E_J (GHz); default derives it from the target")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--claw-tolerance", type=float, default=0.0)

    p = sub.add_parser("interpolate", help="best-guess scaled design for a target")
    common(p)
    p.add_argument("--target", required=True,
                   help="must include all of f_q, alpha, f_r, kappa, g")
    p.add_argument("--weights", default="")
    p.add_argument("--derived", default="")
    p.add_argument("--metric", default="weighted_relative_L2")
    p.add_argument("--resonator-type", choices=("quarter", "half"),
                   required=True)

    p = sub.add_parser("oracle", help="perturbative vs numerically exact shifts")
    common(p, with_store=False)
    p.add_argument("--fq", type=float, required=True)
    p.add_argument("--fr", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--g", type=float, required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic store")
    common(p)
    p.add_argument("--out", help="output directory (defaults to --store)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--preset", default=None,
                   help="'production-counts' for the full-library component counts")
    p.add_argument("--qubits", type=int, default=160)
    p.add_argument("--quarter", type=int, default=60)
    p.add_argument("--half", type=int, default=40)
    p.add_argument("--couplers", type=int, default=0)
    p.add_argument("--validated", type=int, default=0)

    p = sub.add_parser("physics", help="evaluate one closed-form operation")
    common(p, with_store=False)
    p.add_argument("--name", required=True)
    p.add_argument("--args", default="", help="numeric key=value arguments")
    p.add_argument("--str-args", default="",
                   help="string key=value arguments (e.g. mode=quarter)")

    return parser


_COMMANDS = {
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "query": _cmd_query,
    "interpolate": _cmd_interpolate,
    "oracle": _cmd_oracle,
    "synth": _cmd_synth,
    "physics": _cmd_physics,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    cfg = {}
    try:
        cfg = _read_config(args.config)
        level = args.log_level or cfg.get("log_level") or "WARNING"
        logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING),
                            stream=sys.stderr)
        _apply_config_defaults(args, cfg)
        return _COMMANDS[args.command](args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
