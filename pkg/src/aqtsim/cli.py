"""``aqt-sim`` command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 bad arguments, 3 planning or
model error, 4 I/O error. Errors are reported on a single stderr line of the
form ``aqt-sim: error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import (
    AQTError,
    ConfigError,
    ConsistencyError,
    DimensionError,
    DomainError,
    ModelError,
    NumericalError,
    PlanningError,
)
from .metrics import average_coherent_fidelity, capacity_lower_bound, capacity_threshold, dqt_fidelity
from .symplectic import ModePartition, SymplecticMatrix, matching_defect, partition_blocks
from .trajectory import TRAJECTORY_SCENARIOS, verify_random_symplectic, verify_trajectories
from .transducer import (
    BeamSplitter,
    Custom,
    ImperfectionParams,
    PhysicalCavity,
    TwoModeSqueezer,
    aqt_channel,
    dqt_channel,
    effective_scattering,
    plan_feedforward,
    resolve_scattering,
    to_db,
    transmittance,
)

EXIT_OK, EXIT_VERIFY, EXIT_ARGS, EXIT_PLAN, EXIT_IO = 0, 1, 2, 3, 4
CONVERTER_KEYS = ("bs", "tms", "cavity", "custom")
CSV_HEADER = ["nu_db", "mu_db", "T", "protocol", "fidelity", "capacity_lb", "threshold_mu_nu"]
Z_LIMIT = 4.0

DEFAULTS = {
    "protocol": "aqt",
    "mu_db": "0",
    "prior_photons": 10.0,
    "workers": 1,
    "seed": 0,
    "n_traj": 1_000_000,
    "xi": 1.0,
    "draws": 50,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def parse_range(text: str):
    """``a:b:n`` -> n evenly spaced values; a single number -> one value."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"invalid range {text!r}; expected a:b:n or a number") from None
    if n < 2:
        raise ConfigError(f"range {text!r} needs at least 2 points")
    return np.linspace(a, b, n)


def parse_list(text: str):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid number list {text!r}") from None
    if not vals:
        raise ConfigError("empty number list")
    return vals


def read_custom(path: str, squeeze=None, measure=None) -> Custom:
    """Plain-text converter: first line ``m n``, then one matrix row per line."""
    with open(path) as fh:
        lines = [ln.split("#")[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    try:
        m, n = (int(v) for v in lines[0].split())
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except (ValueError, IndexError):
        raise ConfigError(f"{path}: malformed converter file") from None
    A = np.array(rows)
    if A.shape != (2 * (m + n), 2 * (m + n)):
        raise DimensionError(f"{path}: expected a {2 * (m + n)}x{2 * (m + n)} matrix, got {A.shape}")
    return Custom(SymplecticMatrix(A), ModePartition(m, n, squeeze, measure))


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#")[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _phases(text):
    if text is None:
        return None
    if str(text).strip() == "auto":
        return "auto"
    return tuple(parse_list(text))


def build_converter(args):
    chosen = [k for k in CONVERTER_KEYS if getattr(args, k, None) is not None]
    if len(chosen) != 1:
        raise ConfigError("exactly one of --bs, --tms, --cavity, --custom is required")
    sq = _phases(args.squeeze_phase)
    ms = _phases(args.measure_phase)
    if sq == "auto":
        raise ConfigError("--squeeze-phase does not support 'auto'")
    kind = chosen[0]
    if kind == "custom":
        c = read_custom(args.custom, sq, None if ms == "auto" else ms)
        if ms == "auto":
            from .transducer import choose_measure_phases
            c = Custom(c.S, c.partition.with_phases(measure_phases=choose_measure_phases(c.S, c.partition)))
        return c
    if kind == "cavity":
        vals = parse_list(args.cavity)
        if len(vals) not in (4, 5):
            raise ConfigError("--cavity expects g,gp,k1,k2[,dw]")
        return PhysicalCavity(*vals, squeeze_phases=sq, measure_phases="auto" if ms is None else ms)
    value = float(getattr(args, kind))
    if ms == "auto":
        base = BeamSplitter(value, sq) if kind == "bs" else TwoModeSqueezer(value, sq)
        from .transducer import choose_measure_phases
        S, p = resolve_scattering(base)
        ms = choose_measure_phases(S, p)
    return BeamSplitter(value, sq, ms) if kind == "bs" else TwoModeSqueezer(value, sq, ms)


def _add_converter(p):
    g = p.add_argument_group("converter")
    g.add_argument("--bs", type=float, help="beam-splitter converter with transmittance T")
    g.add_argument("--tms", type=float, help="two-mode-squeezer converter with transmittance T'")
    g.add_argument("--cavity", help="physical cavity g,gp,k1,k2[,dw] in rad/s")
    g.add_argument("--custom", help="plain-text converter file")
    g.add_argument("--squeeze-phase", help="comma-separated ancilla squeeze angles (rad)")
    g.add_argument("--measure-phase", help="comma-separated idler measurement angles (rad) or 'auto'")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqt-sim", description="Direct and adaptive quantum transduction simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("matrix", help="print scattering matrix, blocks, feedforward and S̃ as JSON")
    _add_converter(p)

    def imperfections(p):
        p.add_argument("--protocol", choices=["dqt", "aqt"])
        p.add_argument("--mu-db", help="comma-separated homodyne imperfections mu in dB")
        p.add_argument("--eta", type=float, help="detector efficiency (alternative to --mu-db)")
        p.add_argument("--prior-photons", type=float, help="coherent-state prior for gain != 1 (default 10)")

    p = sub.add_parser("sweep", help="write fidelity/capacity CSV over a squeezing sweep")
    _add_converter(p)
    imperfections(p)
    p.add_argument("--nu-db", help="squeezing sweep a:b:n in dB")
    p.add_argument("--mu-nu", help="log-spaced sweep a:b:n of the product mu*nu (linear units)")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int, help="accepted for interface uniformity; sweeps are deterministic")
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("capacity", help="capacity lower bound and fidelity at one operating point")
    _add_converter(p)
    imperfections(p)
    p.add_argument("--nu-db", help="squeezing imperfection nu in dB")

    p = sub.add_parser("verify", help="check the analytic channel against trajectory sampling")
    p.add_argument("--scenario", choices=list(TRAJECTORY_SCENARIOS) + ["random-symplectic"])
    p.add_argument("--n-traj", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--xi", type=float, help="ancilla squeezing for teleport-n2")
    p.add_argument("--draws", type=int, help="number of random converters for random-symplectic")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    return parser


def _merge_config(parser, args):
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        cli_has_converter = any(getattr(args, k, None) is not None for k in CONVERTER_KEYS)
        for key, raw in cfg.items():
            if key not in actions or key in ("config", "help"):
                raise ConfigError(f"unknown config key {key!r}")
            if key in CONVERTER_KEYS and cli_has_converter:
                continue
            if getattr(args, key) is None:
                act = actions[key]
                try:
                    val = act.type(raw) if act.type else raw
                except ValueError:
                    raise ConfigError(f"invalid value {raw!r} for config key {key!r}") from None
                if act.choices is not None and val not in act.choices:
                    raise ConfigError(f"invalid value {raw!r} for config key {key!r}")
                setattr(args, key, val)
    for key, val in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    return args


def _mu_values(args):
    if args.eta is not None:
        if not 0 < args.eta <= 1:
            raise DomainError(f"--eta must lie in (0, 1], got {args.eta}")
        mu = (1 - args.eta) / args.eta
        return [float(to_db(mu)) if mu > 0 else -math.inf]
    return parse_list(args.mu_db)


def _threshold(c):
    if isinstance(c, (BeamSplitter, TwoModeSqueezer)):
        try:
            return capacity_threshold(c)
        except DomainError:
            return math.inf
    return None


def _evaluate(c, protocol, nu_db, mu_db, prior):
    if protocol == "dqt":
        ch = dqt_channel(c)
        fid = dqt_fidelity(c, prior)
    else:
        imp = ImperfectionParams.from_db(nu_db, mu_db)
        ch = aqt_channel(c, imp)
        fid = average_coherent_fidelity(ch, prior)
    cap = capacity_lower_bound(ch)
    return ch, fid, cap


def cmd_matrix(args, out) -> int:
    c = build_converter(args)
    S, p = resolve_scattering(c)
    blk = partition_blocks(S, p)
    report = {
        "n_modes": p.n_modes,
        "partition": {"m": p.m, "n": p.n, "squeeze_phases": list(p.squeeze_phases),
                      "measure_phases": list(p.measure_phases)},
        "S": S.entries.tolist(),
        "S_symplectic_residual": S.residual(),
        "blocks": {f"{r},{col}": blk[r, col].tolist() for (r, col) in blk.blocks},
        "transmittance": transmittance(S, p),
        "matching_defect": matching_defect(S, p),
    }
    plan = plan_feedforward(S, p)
    St = effective_scattering(S, p, plan)
    report["F_star"] = plan.F_star.tolist()
    report["S_tilde"] = St.entries.tolist()
    report["S_tilde_symplectic_residual"] = St.residual()
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _sweep_points(args):
    mus = _mu_values(args)
    if (args.nu_db is None) == (args.mu_nu is None):
        raise ConfigError("sweep needs exactly one of --nu-db or --mu-nu")
    points = []
    if args.nu_db is not None:
        nus = parse_range(args.nu_db)
        if nus.size < 2:
            raise ConfigError("--nu-db sweep needs a:b:n with n >= 2")
        for mu_db in mus:
            points += [(float(nu), float(mu_db)) for nu in nus]
    else:
        prod = parse_range(args.mu_nu)
        if np.any(prod <= 0) or prod.size < 2:
            raise ConfigError("--mu-nu needs positive a:b:n with n >= 2")
        prod = np.geomspace(prod[0], prod[-1], prod.size)
        for mu_db in mus:
            if not math.isfinite(mu_db):
                raise ConfigError("--mu-nu sweep needs mu > 0")
            points += [(float(to_db(v) - mu_db), float(mu_db)) for v in prod]
    return points


def cmd_sweep(args, out) -> int:
    c = build_converter(args)
    S, p = resolve_scattering(c)
    T = transmittance(S, p)
    thr = _threshold(c)
    points = _sweep_points(args)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")

    def row(pt):
        nu_db, mu_db = pt
        _, fid, cap = _evaluate(c, args.protocol, nu_db, mu_db, args.prior_photons)
        return [_fmt(nu_db), _fmt(mu_db), _fmt(T), args.protocol, _fmt(fid), _fmt(cap.lower_bound),
                "" if thr is None else _fmt(thr)]

    if args.workers == 1:
        rows = [row(pt) for pt in points]
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(row, points))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def cmd_capacity(args, out) -> int:
    c = build_converter(args)
    mus = _mu_values(args)
    if len(mus) != 1:
        raise ConfigError("capacity takes a single --mu-db value")
    nu_db = 0.0 if args.nu_db is None else float(parse_range(args.nu_db)[0])
    ch, fid, cap = _evaluate(c, args.protocol, nu_db, mus[0], args.prior_photons)
    thr = _threshold(c)
    report = {
        "protocol": args.protocol,
        "nu_db": nu_db,
        "mu_db": mus[0],
        "X": ch.X.tolist(),
        "V": ch.V.tolist(),
        "fidelity": fid,
        "capacity_lb": cap.lower_bound,
        "argmax_input_photons": cap.argmax_input_photons,
        "divergent": cap.divergent,
        "threshold_mu_nu": thr,
    }
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    if args.scenario is None:
        raise ConfigError("--scenario is required")
    if args.scenario == "random-symplectic":
        rep = verify_random_symplectic(args.draws, args.seed)
        res = rep["residuals"]
        out.write(f"scenario random-symplectic\ndraws {res.size}\nseed {args.seed}\n")
        out.write(f"max_residual {res.max():.6e}\n")
        ok = rep["all_symplectic"]
        out.write(f"result {'pass' if ok else 'fail'}\n")
        return EXIT_OK if ok else EXIT_VERIFY
    rep = verify_trajectories(args.scenario, args.n_traj, args.seed, args.workers, args.xi)
    emp = rep["empirical"]
    V, z = rep["analytic"], rep["z"]
    out.write(f"scenario {args.scenario}\nn_traj {emp.n_traj}\nseed {args.seed}\n")
    out.write("entry analytic empirical stderr z\n")
    for i in range(V.shape[0]):
        for j in range(V.shape[1]):
            out.write(f"V[{i},{j}] {V[i, j]:.6e} {emp.noise_cov[i, j]:.6e} {emp.stderr[i, j]:.6e} {z[i, j]:+.3f}\n")
    wi, wj = rep["worst"]
    ok = bool(np.all(np.abs(z) < Z_LIMIT))
    out.write(f"worst V[{wi},{wj}] z={z[wi, wj]:+.3f}\n")
    out.write(f"result {'pass' if ok else 'fail'}\n")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"matrix": cmd_matrix, "sweep": cmd_sweep, "capacity": cmd_capacity, "verify": cmd_verify}


def _fail(kind: str, exc: BaseException, code: int) -> int:
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"aqt-sim: error: {kind}: {msg}\n")
    return code


_NUMERIC = re.compile(r"^-[0-9.]")


def _join_negative_values(argv):
    """Attach values such as ``-20:0:21`` to their flag so argparse keeps them."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NUMERIC.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
        args = _merge_config(parser, args)
        return COMMANDS[args.command](args, out)
    except (ConfigError, DomainError, DimensionError) as exc:
        return _fail("arguments", exc, EXIT_ARGS)
    except (PlanningError, ModelError, ConsistencyError, NumericalError) as exc:
        return _fail("planning", exc, EXIT_PLAN)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    except AQTError as exc:
        return _fail("runtime", exc, EXIT_PLAN)


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
