"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 numerical
non-convergence, 4 the ``validate`` suite ran but at least one check failed.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .channel_model import SystemConfig, db_to_linear, linear_to_db
from .closed_form import optimize_training_length, rate_downlink, rate_uplink
from .errors import ConvergenceError, DomainError
from .experiments import (
    FIG1_COLUMNS,
    FIG2_COLUMNS,
    FIG2_CROSSING_COLUMNS,
    FIG3_COLUMNS,
    OUTPUTS,
    SWEEP_COLUMNS,
    VALIDATION_COLUMNS,
    SweepSpec,
    fig1_rows,
    fig2_rows,
    fig3_rows,
    fmt,
    run_sweep,
    run_validation,
    write_csv,
)
from .monte_carlo import estimate_rate_downlink_statistical, estimate_rate_uplink
from .threshold import phi_star_approx, phi_star_exact

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3, 4

DEFAULTS = {
    "n_b": 5,
    "rho_b": db_to_linear(10.0),
    "T": 200,
    "epsilon": 1e-9,
    "phi": 1.0,
    "t_tr": None,
    "seed": 1,
    "samples": 10**6,
}

_KEY_ALIASES = {"big_t": "T", "t": "T", "n-b": "n_b", "t-tr": "t_tr", "eps": "epsilon"}


class InputError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Config file: flat key=value, '#' comments, SNR keys accept a 'db' suffix


def _parse_snr(key: str, raw: str, force_db: bool) -> float:
    text = raw.strip().lower().replace(" ", "")
    is_db = force_db or text.endswith("db")
    if text.endswith("db"):
        text = text[:-2]
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{key}: cannot parse {raw!r} as a number") from None
    return db_to_linear(value) if is_db else value


def parse_config_text(text: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = _KEY_ALIASES.get(key.lower(), key if key == "T" else key.lower())
        try:
            if key in ("rho_b", "rho_b_db"):
                out["rho_b"] = _parse_snr(key, raw, force_db=key == "rho_b_db")
            elif key in ("n_b", "T", "t_tr", "seed", "samples"):
                out[key] = int(float(raw))
            elif key in ("epsilon", "phi"):
                out[key] = float(raw)
            else:
                raise InputError(f"config line {lineno}: unknown key {key!r}")
        except ValueError:
            raise InputError(f"config line {lineno}: bad value {raw!r} for {key}") from None
    return out


def resolve_settings(args: argparse.Namespace) -> Dict[str, object]:
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(parse_config_text(Path(args.config).read_text()))
    flags = {
        "n_b": args.n_b, "T": args.big_t, "epsilon": args.epsilon, "phi": args.phi,
        "t_tr": args.t_tr, "seed": args.seed, "samples": args.samples,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    if args.rho_b_db is not None:
        settings["rho_b"] = db_to_linear(args.rho_b_db)
    return settings


def make_config(settings: Dict[str, object]) -> SystemConfig:
    return SystemConfig(
        n_b=settings["n_b"], rho_b=settings["rho_b"], T=settings["T"],
        epsilon=settings["epsilon"], phi=settings["phi"], t_tr=settings["t_tr"],
    )


# ---------------------------------------------------------------------------
# Output helpers


def _emit(out: Optional[str], columns: Sequence[str], rows: List[dict]) -> None:
    if out:
        write_csv(out, columns, rows)
    else:
        buf = io.StringIO()
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(fmt(row.get(c)) for c in columns) + "\n")
        sys.stdout.write(buf.getvalue())


def _config_fields(cfg: SystemConfig) -> dict:
    return {
        "n_b": cfg.n_b,
        "rho_b_db": linear_to_db(cfg.rho_b) if cfg.rho_b > 0 else -math.inf,
        "T": cfg.T, "epsilon": cfg.epsilon,
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_rate_uplink(args, settings) -> int:
    cfg = make_config(settings)
    bound = rate_uplink(cfg)
    row = {**_config_fields(cfg), "phi": cfg.phi, "capacity_term": bound.capacity_term,
           "penalty_term": bound.penalty_term, "rate": bound.rate}
    columns = ["n_b", "rho_b_db", "T", "epsilon", "phi", "capacity_term", "penalty_term", "rate"]
    if args.mc:
        est = estimate_rate_uplink(cfg, settings["samples"], settings["seed"])
        row.update(mc_mean=est.mean, mc_stderr=est.std_error)
        columns += ["mc_mean", "mc_stderr"]
    _emit(args.out, columns, [row])
    return EXIT_OK


def cmd_rate_downlink(args, settings) -> int:
    cfg = make_config(settings)
    if cfg.t_tr is None:
        cfg = cfg.replace(t_tr=optimize_training_length(cfg).t_tr_star)
    bound = rate_downlink(cfg)
    row = {**_config_fields(cfg), "t_tr": cfg.t_tr, "capacity_term": bound.capacity_term,
           "penalty_term": bound.penalty_term, "rate": bound.rate}
    columns = ["n_b", "rho_b_db", "T", "epsilon", "t_tr", "capacity_term", "penalty_term", "rate"]
    if args.mc:
        est = estimate_rate_downlink_statistical(cfg, settings["samples"], settings["seed"])
        row.update(mc_mean=est.mean, mc_stderr=est.std_error)
        columns += ["mc_mean", "mc_stderr"]
    _emit(args.out, columns, [row])
    return EXIT_OK


def cmd_phi_star(args, settings) -> int:
    cfg = make_config(settings)
    approx = phi_star_approx(cfg, t_tr=cfg.t_tr)
    exact = phi_star_exact(cfg, tol=args.tol, t_tr=cfg.t_tr)
    rows = []
    for res in (approx, exact):
        rows.append({"method": res.method, "phi_star": res.phi_star, "t_tr_star": res.t_tr_star,
                     "kappa": res.kappa, "residual": res.residual, "outcome": res.outcome,
                     "uplink_never_wins_by_approx": res.uplink_never_wins_by_approx})
    _emit(args.out, ["method", "phi_star", "t_tr_star", "kappa", "residual", "outcome",
                     "uplink_never_wins_by_approx"], rows)
    return EXIT_OK


def _parse_values(args) -> tuple:
    if (args.values is None) == (args.range is None):
        raise InputError("values: give exactly one of --values or --range")
    try:
        if args.values is not None:
            return tuple(float(v) for v in args.values.split(",") if v.strip())
        start, stop, step = (float(p) for p in args.range.split(":"))
    except ValueError:
        raise InputError("values: expected numbers (--values a,b,c or --range start:stop:step)") from None
    if step <= 0:
        raise InputError("values: range step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 12) for k in range(max(n, 0)))


def cmd_sweep(args, settings) -> int:
    outputs = frozenset(o.strip() for o in (args.outputs or "").split(",") if o.strip())
    spec = SweepSpec(axis=args.axis, values=_parse_values(args), fixed=make_config(settings),
                     outputs=outputs)
    rows = run_sweep(spec, samples=settings["samples"], seed=settings["seed"])
    _emit(args.out, SWEEP_COLUMNS, rows)
    return EXIT_OK


def cmd_fig1(args, settings) -> int:
    rows = fig1_rows(samples=None if args.no_mc else settings["samples"], seed=settings["seed"])
    _emit(args.out, FIG1_COLUMNS, rows)
    return EXIT_OK


def _companion_path(out: str, suffix: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + suffix + (p.suffix or ".csv")))


def cmd_fig2(args, settings) -> int:
    rows, crossings = fig2_rows()
    _emit(args.out, FIG2_COLUMNS, rows)
    if args.out:
        write_csv(_companion_path(args.out, "_phi_star"), FIG2_CROSSING_COLUMNS, crossings)
    for c in crossings:
        sys.stderr.write(f"phi_star n_b={c['n_b']}: exact={fmt(c['phi_star_exact'])} "
                         f"approx={fmt(c['phi_star_approx'])} t_tr_star={c['t_tr_star']}\n")
    return EXIT_OK


def cmd_fig3(args, settings) -> int:
    _emit(args.out, FIG3_COLUMNS, fig3_rows())
    return EXIT_OK


def cmd_validate(args, settings) -> int:
    rows = run_validation(samples=settings["samples"], seed=settings["seed"], quick=args.quick)
    if args.out:
        write_csv(args.out, VALIDATION_COLUMNS, rows)
    width = max(len(r["config"]) for r in rows)
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status}  {r['check']:<22} {r['config']:<{width}}  z={r['z']:.3f}")
    failed = sum(not r["passed"] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


COMMANDS = {
    "rate-uplink": (cmd_rate_uplink, "closed-form uplink-training rate bound"),
    "rate-downlink": (cmd_rate_downlink, "closed-form downlink-training rate bound"),
    "phi-star": (cmd_phi_star, "minimum reciprocity coefficient (approximate and exact)"),
    "sweep": (cmd_sweep, "sweep one parameter and tabulate outputs"),
    "fig1": (cmd_fig1, "uplink rate vs SNR for several reciprocity levels"),
    "fig2": (cmd_fig2, "uplink vs downlink rate over the reciprocity coefficient"),
    "fig3": (cmd_fig3, "phi* vs blocklength for several SNRs"),
    "validate": (cmd_validate, "closed forms vs Monte Carlo on the acceptance grid"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-b", type=int, help="transmit antennas")
    common.add_argument("--rho-b-db", type=float, help="average SNR in dB")
    common.add_argument("--big-t", type=int, help="blocklength T in channel uses")
    common.add_argument("--epsilon", type=float, help="decoding error probability")
    common.add_argument("--phi", type=float, help="channel reciprocity coefficient")
    common.add_argument("--t-tr", type=int, help="downlink training length")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--samples", type=int, help="Monte Carlo samples")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--config", help="key=value config file; flags override it")

    parser = _Parser(prog="reciprocity-fbl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, parents=[common], help=help_)
               for name, (_, help_) in COMMANDS.items()}
    for name in ("rate-uplink", "rate-downlink"):
        parsers[name].add_argument("--mc", action="store_true", help="add Monte Carlo columns")
    parsers["phi-star"].add_argument("--tol", type=float, default=1e-9, help="residual tolerance")
    parsers["sweep"].add_argument("--axis", required=True, help="one of rho_b_db, phi, T, n_b, t_tr")
    parsers["sweep"].add_argument("--values", help="comma-separated axis points")
    parsers["sweep"].add_argument("--range", help="start:stop:step (inclusive)")
    parsers["sweep"].add_argument("--outputs", required=True, help=f"comma-separated subset of {', '.join(OUTPUTS)}")
    parsers["fig1"].add_argument("--no-mc", action="store_true", help="skip the Monte Carlo columns")
    parsers["validate"].add_argument("--quick", action="store_true", help="small grid for smoke runs")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        settings = resolve_settings(args)
        return handler(args, settings)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
