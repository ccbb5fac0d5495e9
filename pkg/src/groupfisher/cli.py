"""Command-line entry point: ``groupfisher <command> [options]``.

Exit codes: 0 success, 1 a verification ran but failed, 2 domain or usage
error, 3 numerical failure (non-convergence, non-PD metric, overflow).
Errors are written to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    TABLE1_RATIOS,
    cri_report,
    paper_number,
    q_indices_from_r,
    ratio_label,
    table1,
    tsallis_or_boltzmann,
)
from .errors import (
    ConvergenceError,
    DomainError,
    GroupRangeError,
    NonFiniteSampleError,
    NotPositiveDefiniteError,
)
from .geometry import (
    fisher_metric_expectation,
    fisher_metric_group_hessian,
    geometry_report,
    group_field,
    group_metric,
    scalar_curvature,
    verify_theorem,
)
from .group_core import Boltzmann, divergence_DG, parse_class
from .numerics import CURVATURE_FD, FdSpec, QuadratureSpec
from .stat_models import Correlated2DParams, correlated2d, make_family

SCHEMA = 1

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        sys.exit(2)


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)


# ---------------------------------------------------------------------------
# configuration

CONFIG_KEYS = {
    "model",
    "class",
    "estimator",
    "quad.scheme",
    "quad.order",
    "quad.box_halfwidth",
    "quad.rel_tol",
    "quad.abs_tol",
    "quad.max_order",
    "fd.base_step",
    "fd.scheme",
    "fd.richardson",
    "output.format",
    "output.path",
}
CONFIG_PREFIXES = ("params.", "const.", "params2.")

DEFAULTS = {
    "model": "gauss1d",
    "class": "boltzmann",
}


def _flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in table.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, name + "."))
        else:
            out[name] = val
    return out


def load_config(path) -> dict:
    """Read a TOML config into flat dotted keys, rejecting unknown keys."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    flat = _flatten(data)
    for key in ("params", "const", "params2"):
        if isinstance(data.get(key), str):
            flat.pop(key)
            flat.update({f"{key}.{k}": v for k, v in parse_kv(data[key]).items()})
    unknown = sorted(k for k in flat if k not in CONFIG_KEYS and not k.startswith(CONFIG_PREFIXES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return flat


def parse_kv(text: str) -> dict:
    """``"mu=0,sigma=1"`` -> {"mu": 0.0, "sigma": 1.0}."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"value for {key.strip()!r} is not a number: {val!r}") from None
    return out


def resolve_settings(args) -> dict:
    """Defaults, overridden by the config file, overridden by CLI flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    cli = {
        "model": args.model,
        "class": getattr(args, "group_class", None),
        "estimator": getattr(args, "estimator", None),
        "quad.order": args.quad_order,
        "quad.scheme": args.quad_scheme,
        "fd.base_step": args.fd_step,
        "fd.scheme": args.fd_scheme,
        "fd.richardson": args.fd_richardson,
        "output.format": args.format,
        "output.path": args.output,
    }
    settings.update({k: v for k, v in cli.items() if v is not None})
    for key in ("params", "const", "params2"):
        text = getattr(args, key, None)
        if text is not None:
            settings = {k: v for k, v in settings.items() if not k.startswith(key + ".")}
            settings.update({f"{key}.{k}": v for k, v in parse_kv(text).items()})
    return settings


def _sub(settings: dict, prefix: str) -> dict:
    n = len(prefix) + 1
    return {k[n:]: float(v) for k, v in settings.items() if k.startswith(prefix + ".")}


def build_quad(settings: dict) -> QuadratureSpec:
    kw = {}
    for key, conv in (("scheme", str), ("order", int), ("box_halfwidth", float), ("rel_tol", float),
                      ("abs_tol", float), ("max_order", int)):
        if f"quad.{key}" in settings:
            kw[key] = conv(settings[f"quad.{key}"])
    try:
        return QuadratureSpec(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_fd(settings: dict, base: FdSpec) -> FdSpec:
    kw = {}
    if "fd.base_step" in settings:
        kw["base_step"] = float(settings["fd.base_step"])
    if "fd.scheme" in settings:
        kw["scheme"] = str(settings["fd.scheme"])
    if "fd.richardson" in settings:
        kw["richardson"] = _as_bool(settings["fd.richardson"])
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _as_bool(val) -> bool:
    if isinstance(val, bool):
        return val
    text = str(val).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {val!r}")


def build_family(settings: dict, which: str = "params"):
    return make_family(str(settings["model"]), _sub(settings, which), _sub(settings, "const"))


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render_json(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n"


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_table(header, rows) -> str:
    cells = [list(header)] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return repr(float(v))


def write_output(text: str, settings: dict) -> None:
    path = settings.get("output.path")
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _header(command: str, settings: dict, family=None, cls=None) -> dict:
    out = {"schema": SCHEMA, "command": command}
    if family is not None:
        out["model"] = family.describe()
    if cls is not None:
        out["class"] = cls.to_dict()
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_metric(args, settings) -> int:
    family = build_family(settings)
    cls = parse_class(str(settings["class"]))
    quad = build_quad(settings)
    fd = build_fd(settings, FdSpec())
    estimator = str(settings.get("estimator", "expectation"))
    out = _header("metric", settings, family, cls)
    if estimator in ("expectation", "both"):
        out["expectation"] = group_metric(cls, family, None, quad).to_dict()
    if estimator in ("hessian", "both"):
        out["hessian"] = fisher_metric_group_hessian(cls, family, None, fd, quad).to_dict()
    if estimator not in ("expectation", "hessian", "both"):
        raise ConfigError(f"unknown estimator {estimator!r}; expected expectation, hessian or both")
    if estimator == "both":
        a, b = np.array(out["expectation"]["g"]), np.array(out["hessian"]["g"])
        out["max_rel_difference"] = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    out["metric"] = out.get("expectation", out.get("hessian"))
    write_output(render_json(out), settings)
    return 0


def cmd_curvature(args, settings) -> int:
    family = build_family(settings)
    cls = parse_class(str(settings["class"]))
    quad = build_quad(settings)
    fd = build_fd(settings, CURVATURE_FD)
    estimator = str(settings.get("estimator", "expectation"))
    if estimator not in ("expectation", "hessian"):
        raise ConfigError(f"curvature supports estimator expectation or hessian, got {estimator!r}")
    report = geometry_report(cls, family, None, fd, quad, estimator)
    out = _header("curvature", settings, family, cls)
    out["report"] = report.to_dict()
    write_output(render_json(out), settings)
    return 0


def cmd_divergence(args, settings) -> int:
    family = build_family(settings)
    other = build_family(settings, "params2") if any(k.startswith("params2.") for k in settings) else family
    cls = parse_class(str(settings["class"]))
    quad = build_quad(settings)
    est = divergence_DG(cls, family, None, other, None, quad)
    out = _header("divergence", settings, family, cls)
    out["q_model"] = other.describe()
    out["divergence"] = est.value
    out["err_est"] = est.err_est
    write_output(render_json(out), settings)
    return 0


def cmd_verify_theorem(args, settings) -> int:
    family = build_family(settings)
    cls = parse_class(str(settings["class"]))
    quad = build_quad(settings)
    fd = build_fd(settings, CURVATURE_FD)
    estimator = str(settings.get("estimator", "hessian"))
    if estimator not in ("expectation", "hessian"):
        raise ConfigError(f"verify-theorem supports estimator expectation or hessian, got {estimator!r}")
    report = verify_theorem(cls, family, None, fd, quad, group_estimator=estimator)
    out = _header("verify-theorem", settings, family, cls)
    out["report"] = report.to_dict()
    write_output(render_json(out), settings)
    return 0 if report.passed else 1


def cmd_table1(args, settings) -> int:
    ratios = TABLE1_RATIOS if args.ratios is None else [float(v) for v in args.ratios.split(",") if v.strip()]
    rows = table1(ratios)
    fmt = settings.get("output.format", "table")
    header = ("t_ratio", "q_soft", "q_str")
    if args.paper_format:
        body = [(ratio_label(r.t_ratio), paper_number(r.q_soft), paper_number(r.q_str)) for r in rows]
    else:
        body = [(r.t_ratio, r.q_soft, r.q_str if not r.limit else "-inf") for r in rows]
    if fmt == "json":
        out = {"schema": SCHEMA, "command": "table1", "paper_format": bool(args.paper_format), "rows": []}
        for r, b in zip(rows, body):
            row = dict(zip(header, b)) if args.paper_format else r.to_dict()
            row["limit"] = r.limit
            out["rows"].append(row)
        text = render_json(out)
    elif fmt == "csv":
        text = render_csv(header, body)
    else:
        text = render_table(header, body)
        if any(r.limit for r in rows):
            text += "T/T0 = 0 is the limiting row (q_str -> -inf), not a computed value\n"
    write_output(text, settings)
    return 0


def cmd_cri(args, settings) -> int:
    family = build_family(settings)
    cls = parse_class(str(settings["class"]))
    report = cri_report(cls, family, None, build_quad(settings))
    out = _header("cri", settings, family, cls)
    out["report"] = report.to_dict()
    write_output(render_json(out), settings)
    return 0


def _grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num)).tolist()
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args, settings) -> int:
    rs = _grid(args.r)
    quad = build_quad(settings)
    fd = build_fd(settings, CURVATURE_FD)
    header = ["r", "q_soft", "q_str"]
    if args.curvature:
        header += ["R_B_corr", "R_qsoft_corr", "R_B_unc", "R_qstr_unc"]
    rows = []
    theta = np.array([0.0, args.sigma])
    unc = correlated2d(Correlated2DParams(0.0, args.sigma, 0.0, args.Sigma))
    R_unc = None
    for r in rs:
        idx = q_indices_from_r(r)
        row = [r, idx.q_soft, idx.q_str]
        if args.curvature:
            corr = correlated2d(Correlated2DParams(0.0, args.sigma, r, args.Sigma))
            if R_unc is None:
                R_unc = scalar_curvature(group_field(Boltzmann(), unc, quad=quad), theta, fd)
            row += [
                scalar_curvature(group_field(Boltzmann(), corr, quad=quad), theta, fd),
                scalar_curvature(group_field(tsallis_or_boltzmann(idx.q_soft), corr, quad=quad), theta, fd),
                R_unc,
                scalar_curvature(group_field(tsallis_or_boltzmann(idx.q_str), unc, quad=quad), theta, fd),
            ]
        rows.append(row)
    fmt = settings.get("output.format", "csv")
    if fmt == "json":
        text = render_json({"schema": SCHEMA, "command": "sweep", "rows": [dict(zip(header, r)) for r in rows]})
    elif fmt == "table":
        text = render_table(header, rows)
    else:
        text = render_csv(header, rows)
    write_output(text, settings)
    return 0


COMMANDS = {
    "metric": cmd_metric,
    "curvature": cmd_curvature,
    "divergence": cmd_divergence,
    "verify-theorem": cmd_verify_theorem,
    "table1": cmd_table1,
    "cri": cmd_cri,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (CLI flags take precedence)")
    common.add_argument("--model", choices=["gauss1d", "corr2d"])
    common.add_argument("--params", help="model parameters, e.g. mu=0,sigma=1")
    common.add_argument("--const", help="model constants, e.g. r=0.6,Sigma=1")
    common.add_argument("--quad-order", type=int)
    common.add_argument("--quad-scheme", choices=["gauss_hermite_tensor", "adaptive_box"])
    common.add_argument("--fd-step", type=float)
    common.add_argument("--fd-scheme", choices=["central_2nd_order", "central_4th_order"])
    common.add_argument("--fd-richardson", dest="fd_richardson", action="store_true", default=None)
    common.add_argument("--no-fd-richardson", dest="fd_richardson", action="store_false")
    common.add_argument("--format", choices=["json", "csv", "table"])
    common.add_argument("--output", help="write to this file instead of stdout")

    parser = _Parser(prog="groupfisher", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, cls_flag=True, estimator=None):
        p = sub.add_parser(name, parents=[common], help=help_)
        if cls_flag:
            p.add_argument("--class", dest="group_class", help="boltzmann | tsallis:q=.. | kaniadakis:q=.. | abr:a=..,b=..")
        if estimator:
            p.add_argument("--estimator", choices=estimator)
        return p

    add("metric", "Fisher metric group at a parameter point", estimator=["expectation", "hessian", "both"])
    add("curvature", "Christoffel symbols, Ricci tensor and scalar curvature", estimator=["expectation", "hessian"])
    p = add("divergence", "relative entropy group between two members of a model")
    p.add_argument("--params2", help="parameters of the second density (default: same as --params)")
    add("verify-theorem", "check g_G = phi g_B, Gamma_G = Gamma_B, R_G = R_B/phi", estimator=["expectation", "hessian"])
    p = add("table1", "softening/strengthening indices against T/T0", cls_flag=False)
    p.add_argument("--ratios", help="comma-separated T/T0 values (default: the published set)")
    p.add_argument("--paper-format", action="store_true", help="render values as in the published table")
    add("cri", "generalized Cramer-Rao bound and Fisher-Rao complexity")
    p = add("sweep", "q_soft, q_str (and curvatures) over a grid of r", cls_flag=False)
    p.add_argument("--r", default="0:0.95:20", help="start:stop:num or comma-separated list")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--Sigma", type=float, default=1.0)
    p.add_argument("--curvature", action="store_true", help="add numerically computed curvature columns")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](args, settings)
    except (ConvergenceError, NotPositiveDefiniteError, NonFiniteSampleError, GroupRangeError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 3
    except (DomainError, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
