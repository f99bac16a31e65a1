"""``bundlecurv`` command line.

Exit status: 0 on success, 1 on domain errors, 2 on parameter errors. Errors go
to stderr as a single line ``bundlecurv: <code>: <message>``. Floats are
written with 17 significant digits; outputs carry no timestamps, so identical
configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bundle, classify, oracle, profile, surface
from .errors import BundleCurvError, ParameterError

# subcommand -> allowed parameter keys
SCHEMA = {
    "profile": {"alpha", "a", "r_max", "step", "tolerance"},
    "flatness": {"profile", "c", "samples", "window"},
    "example": {"alpha", "a", "c", "r_max", "step"},
    "cotton": {"metric", "alpha", "a", "c", "r_max", "step", "degree", "fd_step", "grid"},
    "classify": {"genus", "degree"},
    "nonexistence": {"box", "grid", "seed"},
    "holonomy": {"genus", "coeffs"},
}
CSV_OK = {"profile", "example", "cotton"}


def fmt(x) -> str:
    return format(float(x), ".17g")


def _to_json(obj) -> str:
    """JSON with every float written at 17 significant digits (non-finite -> null)."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(obj)


def _to_csv(columns: dict, header: str) -> str:
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lines = [f"# {header}", ",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.subcommand not in SCHEMA:
            raise ParameterError(f"unknown subcommand {self.subcommand!r}")
        unknown = set(self.params) - SCHEMA[self.subcommand]
        if unknown:
            raise ParameterError(f"unknown parameters for {self.subcommand}: {sorted(unknown)}")
        for k, v in self.params.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ParameterError(f"parameter {k} must be finite")
        if self.format not in ("csv", "json"):
            raise ParameterError(f"unknown format {self.format!r}")
        if self.format == "csv" and self.subcommand not in CSV_OK:
            raise ParameterError(f"{self.subcommand} has no csv output")

    def echo(self) -> str:
        return " ".join([self.subcommand] + [f"{k}={self.params[k]}" for k in sorted(self.params)])


def _ode(p, r_max_default=4.0, step_default=1e-3):
    return profile.OdeParams(
        alpha=float(p["alpha"]), A=float(p["a"]),
        r_max=float(p.get("r_max", r_max_default)), step=float(p.get("step", step_default)),
    )


def read_profile_csv(path) -> profile.Profile:
    """Rebuild a profile from ``bundlecurv profile`` CSV output (the header echoes the parameters)."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# profile"):
        raise ParameterError(f"{path}: missing profile metadata header")
    meta = dict(kv.split("=", 1) for kv in text[0][2:].split()[1:])
    params = profile.OdeParams(float(meta["alpha"]), float(meta["a"]), float(meta["r_max"]), float(meta["step"]))
    data = np.loadtxt(text[2:], delimiter=",", ndmin=2)
    return profile.Profile(params, data[:, 0], data[:, 1], data[:, 2], params.conserved_constant,
                           float(meta.get("tolerance", profile.DEFAULT_TOLERANCE)))


def _cmd_profile(cfg: RunConfig):
    p = cfg.params
    tol = float(p.get("tolerance", profile.DEFAULT_TOLERANCE))
    prof = profile.integrate(_ode(p), tolerance=tol)
    cols = {"r": prof.r, "H": prof.H, "Hp": prof.Hp,
            "conservation_residual": np.abs(profile.conservation_terms(prof))}
    return cols


def _cmd_flatness(cfg: RunConfig):
    p = cfg.params
    prof = read_profile_csv(p["profile"])
    window = p.get("window")
    m = surface.RotMetric.from_profile(prof, float(p["c"]), window)
    H = surface.ProfileFunction(prof)
    n = int(p.get("samples", 512))
    rep = surface.flatness_residual(m, H, n)
    dn = surface.dnabla_s_frame_residual(m, H, n)
    return {
        "alpha": rep.alpha_estimate,
        "hess_residual": rep.hess_residual,
        "constraint_residual": rep.constraint_residual,
        "trace_residual": rep.trace_residual,
        "dnabla_s": list(dn.components),
        "window": list(rep.window),
    }


def _example_metric(p):
    prof = profile.integrate(_ode(p, r_max_default=6.0))
    return bundle.build_example(prof, float(p["c"]))


def _cmd_example(cfg: RunConfig):
    m = _example_metric(cfg.params)
    lo, hi = m.window
    r = m.profile.r[(m.profile.r >= lo) & (m.profile.r <= hi)]
    _, gpp, gpt, _ = m.components(r)
    return {"r": r, "g_phiphi": gpp, "g_phit": gpt, "H": m.H(r), "l": m.base.warp(r)}


def _cmd_cotton(cfg: RunConfig):
    p = cfg.params
    kind = p.get("metric", "example")
    fd = float(p.get("fd_step", 5e-3))
    if kind == "flat":
        chart = oracle.euclidean(fd)
    elif kind in ("example", "perturbed"):
        ex = _example_metric({"alpha": 0.0, "a": 1.0, "c": 1.0, **p})
        pert = (lambda r: 0.1 * r**3) if kind == "perturbed" else None
        chart = ex.chart(fd, perturbation=pert)
    elif kind == "lens":
        lm = bundle.lens_metric(int(p.get("degree", 2)))
        chart = lm.chart(fd)
    else:
        raise ParameterError(f"unknown metric {kind!r}")
    rep = oracle.cotton_residual(chart, int(p.get("grid", 32)))
    return {
        "metric": chart.name,
        "fd_step": rep.fd_step,
        "sup_norm": rep.sup_norm,
        "samples": [{"point": list(pt), "max_component": v} for pt, v in rep.samples],
    }


def _cmd_classify(cfg: RunConfig):
    return classify.catalog(int(cfg.params["genus"]), int(cfg.params["degree"])).as_dict()


def _cmd_nonexistence(cfg: RunConfig):
    box = cfg.params["box"]
    if isinstance(box, str):
        path = Path(box)
        try:
            box = json.loads(path.read_text() if path.exists() else box)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"--box is not valid JSON: {exc}") from None
    cert = classify.nonexistence_certificate(box, int(cfg.params.get("grid", 50)), int(cfg.params.get("seed", 0)))
    return cert.as_dict()


def _cmd_holonomy(cfg: RunConfig):
    coeffs = cfg.params["coeffs"]
    if isinstance(coeffs, str):
        try:
            coeffs = [float(x) for x in coeffs.split(",") if x.strip()]
        except ValueError:
            raise ParameterError("--coeffs must be comma-separated numbers") from None
    ch = classify.flat_holonomy(int(cfg.params["genus"]), coeffs)
    red = classify.lattice_reduce(ch)
    return {
        "genus": ch.genus,
        "coefficients": list(ch.coefficients),
        "reduced": list(red.coefficients),
        "values": [[v.real, v.imag] for v in ch.values],
    }


COMMANDS = {
    "profile": _cmd_profile,
    "flatness": _cmd_flatness,
    "example": _cmd_example,
    "cotton": _cmd_cotton,
    "classify": _cmd_classify,
    "nonexistence": _cmd_nonexistence,
    "holonomy": _cmd_holonomy,
}


def render(cfg: RunConfig, result) -> str:
    if cfg.format == "csv":
        if cfg.subcommand == "cotton":
            pts = np.array([s["point"] for s in result["samples"]])
            vals = [s["max_component"] for s in result["samples"]]
            result = {"x0": pts[:, 0], "x1": pts[:, 1], "x2": pts[:, 2], "max_component": vals}
        return _to_csv(result, cfg.echo())
    if isinstance(result, dict) and not (cfg.subcommand == "example"):
        result = {"config": cfg.echo(), **result}
    elif cfg.subcommand == "example":
        result = {k: list(v) for k, v in result.items()}
    return _to_json(result) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    try:
        result = COMMANDS[cfg.subcommand](cfg)
        text = render(cfg, result)
    except ParameterError as exc:
        print(f"bundlecurv: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except BundleCurvError as exc:
        print(f"bundlecurv: {exc.code}: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        Path(cfg.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
    return 0


def _window(text):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must be LO,HI") from None
    return (lo, hi)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    ap = argparse.ArgumentParser(prog="bundlecurv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("profile", parents=[common], help="integrate the curvature ODE")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--r-max", type=float, default=4.0)
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--tolerance", type=float, default=profile.DEFAULT_TOLERANCE)

    s = sub.add_parser("flatness", parents=[common], help="flatness residuals of l = cH'")
    s.add_argument("--profile", required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--samples", type=int, default=512)
    s.add_argument("--window", type=_window, default=None)

    s = sub.add_parser("example", parents=[common], help="dump the example chart metric")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--r-max", type=float, default=6.0)
    s.add_argument("--step", type=float, default=1e-3)

    s = sub.add_parser("cotton", parents=[common], help="finite-difference Cotton residual")
    s.add_argument("--metric", choices=("example", "lens", "flat", "perturbed"), default="example")
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--r-max", type=float, default=6.0)
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--degree", type=int, default=2)
    s.add_argument("--fd-step", type=float, default=5e-3)
    s.add_argument("--grid", type=int, default=32)

    s = sub.add_parser("classify", parents=[common], help="catalog entry for (genus, degree)")
    s.add_argument("--genus", type=int, required=True)
    s.add_argument("--degree", type=int, required=True)

    s = sub.add_parser("nonexistence", parents=[common], help="non-existence certificate")
    s.add_argument("--box", required=True, help="JSON object or path to a JSON file")
    s.add_argument("--grid", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("holonomy", parents=[common], help="flat-connection holonomy character")
    s.add_argument("--genus", type=int, required=True)
    s.add_argument("--coeffs", required=True, help="comma-separated periods in radians")
    return ap


_CLI_ONLY = {"subcommand", "out", "format"}
_DEFAULT_PARAMS = {  # flags that only matter for some --metric choices
    "cotton": {
        "example": {"alpha", "a", "c", "r_max", "step"},
        "perturbed": {"alpha", "a", "c", "r_max", "step"},
        "lens": {"degree"},
        "flat": set(),
    }
}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _CLI_ONLY and v is not None}
    if ns.subcommand == "cotton":
        keep = _DEFAULT_PARAMS["cotton"][params["metric"]] | {"metric", "fd_step", "grid"}
        params = {k: v for k, v in params.items() if k in keep}
    fmt_ = ns.format or ("csv" if ns.subcommand == "profile" else "json")
    return RunConfig(ns.subcommand, params, ns.out, fmt_)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ParameterError as exc:
        print(f"bundlecurv: {exc.code}: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
