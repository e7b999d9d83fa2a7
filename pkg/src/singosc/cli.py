"""Command-line interface.

Subcommands: ``spectrum``, ``rho``, ``transitions``, ``genfunc``, ``verify``.
Settings come from a TOML file (``--config``, default: the packaged
``default.toml``) and are overridden by flags.

Exit status: 0 success, 1 validation error, 2 numerical failure (including
failed verification checks), 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import algebra, classical, genfunc, transitions
from .errors import ConfigError, DomainError, NumericalError
from .report import Check
from .verify import VerifySettings, run_all

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

_PROFILE_KEYS = {
    "kind": "kind", "omega_minus": "omega_minus", "omega_plus": "omega_plus",
    "ramp_time": "T", "amplitude": "a", "width": "tau", "t_span": "t_span",
    "table": "table",
}
_SECTIONS = {
    "profile": set(_PROFILE_KEYS),
    "integrator": {"abs_tol", "rel_tol", "plateau_tol"},
    "spectrum": {"omega", "n_max"},
    "transitions": {"m_max", "n_max", "tail_eps", "both_methods"},
    "genfunc": {"u", "v", "moment_levels", "series_eps"},
    "verify": {f.name for f in fields(VerifySettings)} - {"override_tol"} | {"tol"},
}
_TOP_KEYS = {"g", "rho", "format", "out"}


@dataclass
class RunConfig:
    g: float = 0.0
    rho: float | None = None
    profile: dict[str, Any] | None = None
    fmt: str = "json"
    out: str | None = None
    integrator: dict[str, float] = field(
        default_factory=lambda: {"abs_tol": 1e-13, "rel_tol": 1e-11, "plateau_tol": 1e-8})
    omega: float = 1.0
    spectrum_n_max: int = 10
    m_max: int = 10
    n_max: int | None = None
    tail_eps: float = transitions.DEFAULT_TAIL_EPS
    both_methods: bool = False
    u: list[float] = field(default_factory=lambda: [0.0])
    v: list[float] = field(default_factory=lambda: [0.0])
    moment_levels: list[int] = field(default_factory=lambda: [0])
    series_eps: float = 1e-12
    verify: dict[str, Any] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)
    command: str | None = None

    def weight(self) -> algebra.RepresentationWeight:
        try:
            return algebra.weight_from_coupling(self.g)
        except DomainError as exc:
            raise ConfigError(f"field 'g': {exc}") from None

    def as_dict(self) -> dict[str, Any]:
        d = {"g": self.g, "rho": self.rho, "profile": self.profile, "format": self.fmt,
             "integrator": self.integrator,
             "spectrum": {"omega": self.omega, "n_max": self.spectrum_n_max},
             "transitions": {"m_max": self.m_max, "n_max": self.n_max,
                             "tail_eps": self.tail_eps, "both_methods": self.both_methods},
             "genfunc": {"u": self.u, "v": self.v, "moment_levels": self.moment_levels,
                         "series_eps": self.series_eps}}
        if self.command == "verify":
            d["verify"] = self.verify
        return d


def _default_config_text() -> str:
    return resources.files("singosc").joinpath("data/default.toml").read_text()


def _parse_toml(text: str, origin: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def _validate_keys(data: dict, origin: str) -> None:
    for key, val in data.items():
        if isinstance(val, dict):
            if key not in _SECTIONS:
                raise ConfigError(f"{origin}: unknown section [{key}]")
            for sub in val:
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"{origin}: unknown key '{sub}' in [{key}]")
        elif key not in _TOP_KEYS:
            raise ConfigError(f"{origin}: unknown top-level key '{key}'")


def _num(value, name, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _num_list(value, name, kind=float):
    if not isinstance(value, list):
        raise ConfigError(f"field '{name}': expected a list, got {value!r}")
    return [_num(x, f"{name}[{i}]", kind) for i, x in enumerate(value)]


def config_from_mapping(data: dict, origin: str = "<config>",
                        base_dir: Path | None = None) -> RunConfig:
    _validate_keys(data, origin)
    cfg = RunConfig(base_dir=base_dir or Path.cwd())
    if "g" in data:
        cfg.g = _num(data["g"], "g")
    if "rho" in data:
        cfg.rho = _num(data["rho"], "rho")
    if "format" in data:
        cfg.fmt = str(data["format"])
    if "out" in data:
        cfg.out = str(data["out"])
    if "profile" in data:
        cfg.profile = dict(data["profile"])
    cfg.integrator.update({k: _num(v, f"integrator.{k}")
                           for k, v in data.get("integrator", {}).items()})
    sp = data.get("spectrum", {})
    if "omega" in sp:
        cfg.omega = _num(sp["omega"], "spectrum.omega")
    if "n_max" in sp:
        cfg.spectrum_n_max = _num(sp["n_max"], "spectrum.n_max", int)
    tr = data.get("transitions", {})
    if "m_max" in tr:
        cfg.m_max = _num(tr["m_max"], "transitions.m_max", int)
    if "n_max" in tr:
        cfg.n_max = _num(tr["n_max"], "transitions.n_max", int)
    if "tail_eps" in tr:
        cfg.tail_eps = _num(tr["tail_eps"], "transitions.tail_eps")
    if "both_methods" in tr:
        cfg.both_methods = bool(tr["both_methods"])
    gf = data.get("genfunc", {})
    if "u" in gf:
        cfg.u = _num_list(gf["u"], "genfunc.u")
    if "v" in gf:
        cfg.v = _num_list(gf["v"], "genfunc.v")
    if "moment_levels" in gf:
        cfg.moment_levels = _num_list(gf["moment_levels"], "genfunc.moment_levels", int)
    if "series_eps" in gf:
        cfg.series_eps = _num(gf["series_eps"], "genfunc.series_eps")
    cfg.verify = dict(data.get("verify", {}))
    return cfg


def load_config(path: str | None) -> RunConfig:
    """Read the TOML config at ``path`` (packaged default when ``None``)."""
    if path is None:
        return config_from_mapping(_parse_toml(_default_config_text(), "default.toml"))
    p = Path(path)
    text = p.read_text()        # OSError propagates -> exit 3
    return config_from_mapping(_parse_toml(text, str(p)), str(p), p.parent)


def apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Overlay command-line flags on ``cfg`` and validate the result."""
    if args.rho is not None and args.profile is not None:
        raise ConfigError("flags --rho and --profile are mutually exclusive")
    cfg.command = args.command
    if args.g is not None:
        cfg.g = args.g
    if args.format is not None:
        cfg.fmt = args.format
    if args.out is not None:
        cfg.out = args.out
    if args.rho is not None:
        cfg.rho, cfg.profile = args.rho, None
    prof_flags = {"kind": args.profile, "omega_minus": args.omega_minus,
                  "omega_plus": args.omega_plus, "ramp_time": args.ramp_time,
                  "t_span": args.t_span, "table": args.table}
    prof_flags = {k: v for k, v in prof_flags.items() if v is not None}
    if prof_flags and args.rho is None:
        if args.profile is not None:
            cfg.rho = None
        cfg.profile = {**(cfg.profile or {}), **prof_flags}
    if args.m_max is not None:
        cfg.m_max = args.m_max
    if args.n_max is not None:
        if args.command == "spectrum":
            cfg.spectrum_n_max = args.n_max
        else:
            cfg.n_max = args.n_max
    if args.tail_eps is not None:
        cfg.tail_eps = args.tail_eps
    if args.omega is not None:
        cfg.omega = args.omega
    if getattr(args, "both", False):
        cfg.both_methods = True
    if args.u is not None:
        cfg.u = args.u
    if args.v is not None:
        cfg.v = args.v
    if args.tol is not None:
        cfg.verify["tol"] = args.tol
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"field 'format': expected 'csv' or 'json', got {cfg.fmt!r}")
    cfg.weight()
    if cfg.rho is not None and cfg.profile is not None:
        raise ConfigError("supply exactly one of 'rho' and [profile]")
    if cfg.rho is not None and not 0.0 <= cfg.rho < 1.0:
        raise ConfigError(f"field 'rho': must lie in [0, 1), got {cfg.rho!r}")
    if cfg.m_max < 0 or (cfg.n_max is not None and cfg.n_max < 0):
        raise ConfigError("fields 'm_max'/'n_max' must be non-negative")
    if not cfg.tail_eps > 0:
        raise ConfigError(f"field 'tail_eps': must be positive, got {cfg.tail_eps!r}")


def build_profile(cfg: RunConfig) -> classical.FrequencyProfile:
    if cfg.profile is None:
        raise ConfigError("no [profile] section and no rho override supplied")
    spec = dict(cfg.profile)
    kwargs: dict[str, Any] = {}
    for key, val in spec.items():
        if key not in _PROFILE_KEYS:
            raise ConfigError(f"unknown key '{key}' in [profile]")
        kwargs[_PROFILE_KEYS[key]] = val
    if "kind" not in kwargs:
        raise ConfigError("field 'profile.kind' is required")
    if "t_span" in kwargs:
        ts = _num_list(list(kwargs["t_span"]), "profile.t_span")
        if len(ts) != 2:
            raise ConfigError("field 'profile.t_span': expected two numbers")
        kwargs["t_span"] = tuple(ts)
    for key in ("omega_minus", "omega_plus", "T", "a", "tau"):
        if key in kwargs:
            kwargs[key] = _num(kwargs[key], f"profile.{key}")
    if kwargs["kind"] == "tabulated":
        if "table" not in kwargs:
            raise ConfigError("tabulated profile needs 'profile.table' (CSV path)")
        path = Path(kwargs["table"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        kwargs["table"] = classical.load_profile_table(path)
    elif "table" in kwargs:
        raise ConfigError("'profile.table' only applies to kind = 'tabulated'")
    try:
        return classical.FrequencyProfile(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"[profile]: {exc}") from None


def _solve(cfg: RunConfig, prof: classical.FrequencyProfile) -> classical.ReflectionResult:
    return classical.compute_rho(prof, abs_tol=cfg.integrator["abs_tol"],
                                 rel_tol=cfg.integrator["rel_tol"],
                                 plateau_tol=cfg.integrator["plateau_tol"])


def resolve_rho(cfg: RunConfig) -> tuple[float, dict]:
    """rho from the override, or from integrating the configured profile."""
    if cfg.rho is not None:
        return cfg.rho, {"rho_source": "override"}
    res = _solve(cfg, build_profile(cfg))
    return res.rho, {"rho_source": "profile", **res.to_dict()}


# -- output -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_json(cfg: RunConfig, results, diagnostics, checks: list[Check]) -> str:
    report = {
        "config": cfg.as_dict(),
        "results": results,
        "diagnostics": diagnostics,
        "checks": [c.to_dict() for c in checks],
    }
    return json.dumps(_clean(report), indent=2) + "\n"


def render_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _checks_csv(checks):
    return render_csv(["name", "residual", "tolerance", "pass"],
                      [(c.name, c.residual, c.tolerance, c.passed) for c in checks])


# -- subcommands --------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> tuple[str, int]:
    wt = cfg.weight()
    if not cfg.omega > 0:
        raise ConfigError(f"field 'spectrum.omega': must be positive, got {cfg.omega!r}")
    rows = [(n, transitions.energy_level(n, cfg.omega, wt))
            for n in range(cfg.spectrum_n_max + 1)]
    if cfg.fmt == "csv":
        return render_csv(["n", "E_n"], rows), EXIT_OK
    res = {"j": wt.j, "omega": cfg.omega, "levels": [{"n": n, "E_n": e} for n, e in rows]}
    return render_json(cfg, res, {"spacing": 2.0 * cfg.omega}, []), EXIT_OK


def cmd_rho(cfg: RunConfig) -> tuple[str, int]:
    prof = build_profile(cfg)
    res = _solve(cfg, prof)
    d = res.to_dict()
    if cfg.fmt == "csv":
        rows = []
        for k, v in d.items():
            if isinstance(v, list):
                rows += [(f"{k}[{i}]", x) for i, x in enumerate(v)]
            else:
                rows.append((k, v))
        return render_csv(["quantity", "value"], rows), EXIT_OK
    diag = {k: v for k, v in d.items() if k != "rho"}
    results = {"rho": res.rho, "sudden_rho": classical.sudden_rho(prof.omega_minus,
                                                                   prof.omega_plus)}
    return render_json(cfg, results, diag, []), EXIT_OK


def cmd_transitions(cfg: RunConfig) -> tuple[str, int]:
    wt = cfg.weight()
    rho, diag = resolve_rho(cfg)
    tab = transitions.build_table(wt, rho, cfg.m_max, cfg.n_max, tail_eps=cfg.tail_eps)
    checks = [Check("row_residual", float(tab.row_residuals.max()),
                    cfg.tail_eps if cfg.n_max is None else 1.0)]
    pairs = [(m, n) for m in range(tab.m_max + 1) for n in range(tab.n_max + 1)]
    both = {}
    if cfg.both_methods:
        for m, n in pairs:
            a = transitions.transition_probability(wt, rho, m, n, method="hypergeometric")
            b = transitions.transition_probability(wt, rho, m, n, method="jacobi")
            both[m, n] = (a, b, abs(a - b))
    if cfg.fmt == "csv":
        header = ["m", "n", "w", "row_residual"]
        if both:
            header += ["w_hypergeometric", "w_jacobi", "abs_diff"]
        rows = [(m, n, tab.w[m, n], tab.row_residuals[m], *both.get((m, n), ()))
                for m, n in pairs]
        return render_csv(header, rows), EXIT_OK
    results = {"j": wt.j, "rho": rho, "m_max": tab.m_max, "n_max": tab.n_max,
               "w": tab.w, "row_residuals": tab.row_residuals,
               "n_extent": tab.n_extent, "tail_estimates": tab.tails}
    if both:
        results["dual"] = [{"m": m, "n": n, "hypergeometric": a, "jacobi": b, "abs_diff": d}
                           for (m, n), (a, b, d) in both.items()]
    return render_json(cfg, results, diag, checks), EXIT_OK


def cmd_genfunc(cfg: RunConfig) -> tuple[str, int]:
    wt = cfg.weight()
    rho, diag = resolve_rho(cfg)
    values = {}
    for u in cfg.u:
        for v in cfg.v:
            try:
                values[u, v] = genfunc.generating_function(wt, rho, u, v)
            except DomainError as exc:
                raise ConfigError(f"genfunc grid point (u={u}, v={v}): {exc}") from None
    q = max([abs(x) for x in cfg.u + cfg.v] + [0.0])
    order = max(1, genfunc.series_order(q, q, cfg.series_eps))
    tab = transitions.build_table(wt, rho, order, order)
    grid = []
    for (u, v), g_val in values.items():
        s_val = float(genfunc.series_sum(wt, rho, u, v, table=tab))
        grid.append({"u": u, "v": v, "G": g_val, "series": s_val,
                     "residual": abs(g_val - s_val)})
    target = genfunc.adiabatic_ratio(rho)
    moments = [{"m": m, "moment_ratio": genfunc.moment_ratio(wt, rho, m),
                "adiabatic_ratio": target} for m in cfg.moment_levels]
    for rec in moments:
        rec["residual"] = abs(rec["moment_ratio"] - target)
    checks = [
        Check("genfunc_series", max([g["residual"] for g in grid] + [0.0]), 1e-9,
              {"order": order}),
        Check("adiabatic_moment", max([r["residual"] for r in moments] + [0.0]), 1e-8),
    ]
    if cfg.fmt == "csv":
        rows = [("G", g["u"], g["v"], "", g["G"], g["series"], g["residual"]) for g in grid]
        rows += [("moment_ratio", "", "", r["m"], r["moment_ratio"], r["adiabatic_ratio"],
                  r["residual"]) for r in moments]
        return render_csv(["quantity", "u", "v", "m", "value", "reference", "residual"],
                          rows), EXIT_OK
    results = {"j": wt.j, "rho": rho, "adiabatic_ratio": target, "grid": grid,
               "moments": moments}
    return render_json(cfg, results, {**diag, "series_order": order}, checks), EXIT_OK


def verify_settings(cfg: RunConfig) -> VerifySettings:
    s = VerifySettings()
    for key, val in cfg.verify.items():
        if key == "tol":
            s.override_tol = _num(val, "verify.tol")
            continue
        default = getattr(s, key)
        if isinstance(default, list):
            kind = int if key.endswith("levels") else float
            setattr(s, key, _num_list(val, f"verify.{key}", kind))
        elif isinstance(default, int) and not isinstance(default, bool):
            setattr(s, key, _num(val, f"verify.{key}", int))
        else:
            setattr(s, key, _num(val, f"verify.{key}"))
    return s


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    checks = run_all(verify_settings(cfg))
    ok = all(c.passed for c in checks)
    status = EXIT_OK if ok else EXIT_NUMERICAL
    if cfg.fmt == "csv":
        return _checks_csv(checks), status
    results = {"passed": sum(c.passed for c in checks), "total": len(checks), "all_pass": ok}
    return render_json(cfg, results, {}, checks), status


COMMANDS = {
    "spectrum": cmd_spectrum,
    "rho": cmd_rho,
    "transitions": cmd_transitions,
    "genfunc": cmd_genfunc,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--g", type=float, help="coupling g > -1")
    common.add_argument("--rho", type=float, help="reflection parameter override")
    common.add_argument("--profile", choices=classical.PROFILE_KINDS)
    common.add_argument("--omega-minus", type=float)
    common.add_argument("--omega-plus", type=float)
    common.add_argument("--ramp-time", type=float)
    common.add_argument("--t-span", type=float, nargs=2, metavar=("T0", "T1"))
    common.add_argument("--table", metavar="CSV", help="(t, omega) table for --profile tabulated")
    common.add_argument("--omega", type=float, help="frequency for spectrum")
    common.add_argument("--m-max", type=int)
    common.add_argument("--n-max", type=int)
    common.add_argument("--tail-eps", type=float)
    common.add_argument("--u", type=_float_list, help="comma-separated u grid")
    common.add_argument("--v", type=_float_list, help="comma-separated v grid")
    common.add_argument("--tol", type=float, help="override every verification tolerance")

    parser = _Parser(prog="singosc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="instantaneous levels E_n")
    sub.add_parser("rho", parents=[common], help="reflection parameter from a profile")
    tp = sub.add_parser("transitions", parents=[common], help="transition table w_mn")
    tp.add_argument("--both", action="store_true",
                    help="also emit hypergeometric and Jacobi values with their difference")
    sub.add_parser("genfunc", parents=[common], help="generating function and moments")
    sub.add_parser("verify", parents=[common], help="run the invariant suites")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = apply_flags(load_config(args.config), args)
        text, status = COMMANDS[args.command](cfg)
        if cfg.out:
            Path(cfg.out).write_text(text)
        else:
            sys.stdout.write(text)
        return status
    except DomainError as exc:
        print(f"singosc: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"singosc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"singosc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())
