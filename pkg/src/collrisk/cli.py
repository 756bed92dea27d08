"""``collrisk`` command-line front end.

Settings come from three layers: built-in defaults, an optional flat
``key=value`` file given with ``--config``, and command-line flags, later
layers winning. Every run writes ``manifest.txt`` (into ``--out-dir``, or
next to ``--out``); its non-comment lines form a config file that reproduces
the run.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .convolve import BACKEND, DEFAULT_TRUNC_EPS, convolve_n
from .errors import CollRiskError
from .estimate import normal_approx_premium, plugin_premium, with_interval
from .experiments import (
    FIG1_PAIRS,
    FIG1_SIZES,
    FIG2_SIZES,
    ExperimentConfig,
    Table,
    run_coverage,
    run_errors,
    run_fig1,
    run_fig2,
    run_mz_check,
    run_rates,
)
from .io import read_claims, read_config, read_distortion, read_pmf, write_csv, write_pmf
from .lattice import ClaimSample, MixtureSpec, from_pmf
from .risk import parse_measure

PROG = "collrisk"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in str(text).replace(" ", "").split(";"):
        if item:
            a, _, b = item.partition(":")
            out.append((float(a), float(b)))
    if not out:
        raise ValueError("pairs must list at least one a:b item")
    return tuple(out)


def _fmt_pairs(pairs) -> str:
    return ";".join(f"{a!r}:{b!r}" for a, b in pairs)


# key -> (parser, default); keys double as config-file keys
SETTINGS: dict[str, tuple[Callable[[str], object], object]] = {
    "p": (float, 0.1),
    "a": (float, 3.0),
    "b": (float, 20.0),
    "h": (float, 10.0),
    "pairs": (_pairs, None),
    "measure": (str, "var:0.99"),
    "n_grid": (_int_list, FIG2_SIZES),
    "sizes": (_int_list, FIG1_SIZES),
    "paths": (int, 100),
    "paths_reference": (int, 100_000),
    "ratio_c": (float, 1.0),
    "seed": (int, 20240101),
    "ci": (float, 0.95),
    "tail_eps": (float, 1e-12),
    "trunc_eps": (float, DEFAULT_TRUNC_EPS),
    "reference": (str, "exact"),
    "jobs": (int, 1),
    "r": (float, 0.4),
    "lambda": (float, 3.0),
    "refine": (int, 8),
    "n": (int, None),
    "method": (str, "plugin"),
    "pmf": (str, None),
    "claims": (str, None),
    "out": (str, None),
    "out_dir": (str, "."),
}

# keys echoed into the manifest, per command
_STUDY_KEYS = ("p", "a", "b", "h", "measure", "n_grid", "paths", "paths_reference", "ratio_c", "seed", "ci",
               "tail_eps", "trunc_eps", "reference", "jobs")
ECHO_KEYS = {
    "convolve": ("pmf", "n", "trunc_eps"),
    "premium": ("claims", "n", "h", "measure", "method", "ci", "trunc_eps"),
    "simulate fig1": ("p", "h", "pairs", "sizes", "tail_eps", "trunc_eps", "jobs"),
    "simulate fig2": _STUDY_KEYS + ("pairs",),
    "study rates": ("p", "a", "b", "h", "lambda", "n_grid", "tail_eps", "trunc_eps", "refine"),
    "study coverage": _STUDY_KEYS,
    "study mz": _STUDY_KEYS + ("r",),
    "study errors": _STUDY_KEYS,
}


class Settings(dict):
    """Resolved settings plus the set of keys the user supplied explicitly."""

    def __init__(self, values: dict, explicit: set[str]):
        super().__init__(values)
        self.explicit = explicit


def _echo(key: str, value) -> str:
    if value is None:
        return ""
    if key == "pairs":
        return _fmt_pairs(value)
    if key in ("n_grid", "sizes"):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve_settings(args: argparse.Namespace) -> Settings:
    values = {k: default for k, (_, default) in SETTINGS.items()}
    explicit: set[str] = set()
    layers: list[dict] = []
    if args.config:
        layers.append(read_config(args.config))
    layers.append({k: getattr(args, k.replace("lambda", "lam")) for k in SETTINGS
                   if getattr(args, k.replace("lambda", "lam"), None) is not None})
    for layer in layers:
        for key, raw in layer.items():
            if key not in SETTINGS:
                raise ValueError(f"unknown setting {key!r}")
            parse = SETTINGS[key][0]
            try:
                values[key] = parse(raw) if isinstance(raw, str) else raw
            except ValueError:
                raise ValueError(f"bad value for {key}: {raw!r}") from None
            explicit.add(key)
    return Settings(values, explicit)


def _measure(s: Settings):
    return parse_measure(s["measure"], load_table=read_distortion)


def _config(s: Settings, pairs_default=None) -> ExperimentConfig:
    pairs = None
    if s["pairs"] is not None:
        pairs = s["pairs"]
    elif pairs_default is not None and not ({"a", "b"} & s.explicit):
        pairs = pairs_default
    s["pairs"] = pairs if pairs is not None else ((s["a"], s["b"]),)
    return ExperimentConfig(
        mixture=MixtureSpec(s["p"], s["a"], s["b"], s["h"]),
        measure=_measure(s),
        n_grid=s["n_grid"],
        mc_paths=s["paths"],
        mc_paths_reference=s["paths_reference"],
        ratio_c=s["ratio_c"],
        seed=s["seed"],
        ci_level=s["ci"],
        tail_eps=s["tail_eps"],
        trunc_eps=s["trunc_eps"],
        reference=_reference(s),
        jobs=s["jobs"],
        r=s["r"],
        lam=s["lambda"],
        refine=s["refine"],
        pairs=s["pairs"],
    )


def _reference(s: Settings) -> str:
    ref = s["reference"]
    if ref == "mc":
        return f"mc:{s['paths_reference']}"
    if ref.startswith("mc:"):
        runs = int(ref.split(":", 1)[1])
        if runs < 1:
            raise ValueError("mc reference needs a positive run count")
    return ref


def _require(s: Settings, *keys: str) -> None:
    missing = [k for k in keys if s[k] is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


class Run:
    """Collects output files and writes the manifest."""

    def __init__(self, command: str, settings: Settings):
        self.command = command
        self.settings = settings
        self.files: list[tuple[Path, int]] = []
        self.start = time.perf_counter()

    def table(self, out_dir: Path, table: Table) -> None:
        path = out_dir / f"{table.name}.csv"
        self.files.append((path, write_csv(path, table.columns, table.rows)))

    def manifest(self, out_dir: Path) -> Path:
        elapsed = time.perf_counter() - self.start
        lines = [
            f"# {PROG} run manifest",
            f"# command: {self.command}",
            f"# version: {__version__}",
            f"# kernel: {BACKEND}",
            f"# seed: {self.settings['seed']}",
            f"# elapsed_seconds: {elapsed:.3f}",
        ]
        for path, rows in self.files:
            try:
                name = path.resolve().relative_to(out_dir.resolve())
            except ValueError:
                name = path.resolve()
            lines.append(f"# file: {name} rows={rows}")
        lines.append("# config")
        for key in ECHO_KEYS[self.command]:
            text = _echo(key, self.settings[key])
            if text:
                lines.append(f"{key}={text}")
        path = out_dir / "manifest.txt"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path


def _out_dir(s: Settings) -> Path:
    path = Path(s["out_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_convolve(s: Settings, run: Run) -> None:
    _require(s, "pmf", "n", "out")
    d = from_pmf(read_pmf(s["pmf"]))
    result = convolve_n(d, s["n"], s["trunc_eps"])
    out = Path(s["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    run.files.append((out, write_pmf(out, result.dist)))
    run.manifest(_out_dir(s) if "out_dir" in s.explicit else out.parent)


def cmd_premium(s: Settings, run: Run) -> None:
    _require(s, "claims", "n", "out")
    if s["method"] not in ("plugin", "normal"):
        raise ValueError(f"--method must be plugin or normal, got {s['method']!r}")
    sample = ClaimSample(read_claims(s["claims"]), s["h"])
    measure = _measure(s)
    if s["method"] == "plugin":
        rep = plugin_premium(sample, s["n"], measure, s["trunc_eps"])
    else:
        rep = normal_approx_premium(sample, s["n"], measure)
    rep = with_interval(rep, s["ci"])
    row = rep.as_row()
    row["method"] = s["method"]
    out = Path(s["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    run.files.append((out, write_csv(out, tuple(row), [tuple(row.values())])))
    run.manifest(_out_dir(s) if "out_dir" in s.explicit else out.parent)


def _study(runner: Callable[[ExperimentConfig], Table | list[Table]], pairs_default=None):
    def command(s: Settings, run: Run) -> None:
        config = _config(s, pairs_default)
        result = runner(config)
        out_dir = _out_dir(s)
        for table in (result if isinstance(result, list) else [result]):
            run.table(out_dir, table)
        run.manifest(out_dir)

    return command


def _fig1(s: Settings, run: Run) -> None:
    config = _config(s, FIG1_PAIRS)
    out_dir = _out_dir(s)
    for table in run_fig1(config, s["sizes"]):
        run.table(out_dir, table)
    run.manifest(out_dir)


COMMANDS = {
    "convolve": cmd_convolve,
    "premium": cmd_premium,
    "simulate fig1": _fig1,
    "simulate fig2": _study(run_fig2, FIG1_PAIRS),
    "study rates": _study(run_rates),
    "study coverage": _study(run_coverage),
    "study mz": _study(run_mz_check),
    "study errors": _study(run_errors),
}


class _Parser(argparse.ArgumentParser):
    """Argument errors as a single stderr line."""

    def error(self, message: str):
        self.exit(2, f"{PROG}: error: {' '.join(message.split())}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("settings (override --config)")
    g.add_argument("--config", metavar="FILE", help="key=value settings file; manifest.txt files qualify")
    g.add_argument("--seed", type=int, metavar="U64")
    g.add_argument("--out-dir", metavar="DIR")
    g.add_argument("--measure", metavar="SPEC",
                   help="var:A | avar:A | osm:a,p | expectile:A | distortion:FILE.csv")
    g.add_argument("--p", type=float, help="claim probability")
    g.add_argument("--a", type=float, help="Pareto shape")
    g.add_argument("--b", type=float, help="Pareto scale")
    g.add_argument("--h", type=float, help="lattice step")
    g.add_argument("--pairs", metavar="A:B;A:B", help="several (a,b) panels at once")
    g.add_argument("--n-grid", metavar="LIST", help="comma-separated collective sizes")
    g.add_argument("--sizes", metavar="LIST", help="collective sizes of the fig1 panels")
    g.add_argument("--paths", type=int, metavar="K", help="Monte-Carlo paths")
    g.add_argument("--paths-reference", type=int, metavar="K", help="runs of the mc reference")
    g.add_argument("--ratio-c", type=float, metavar="R", help="claims per risk, u_n = ceil(R n)")
    g.add_argument("--ci", type=float, metavar="LEVEL", help="confidence level")
    g.add_argument("--tail-eps", type=float, metavar="E", help="tail mass dropped when discretizing")
    g.add_argument("--trunc-eps", type=float, metavar="E", help="mass truncated from convolution tails")
    g.add_argument("--reference", metavar="exact|mc:K", help="how reference premiums are computed")
    g.add_argument("--jobs", type=int, metavar="J", help="worker threads; outputs do not depend on it")
    g.add_argument("--r", type=float, help="exponent of the scaled-error check")
    g.add_argument("--lambda", dest="lam", type=float, help="weight exponent of the distance")
    g.add_argument("--refine", type=int, help="interior points per lattice cell in the distance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Premiums of collective insurance risks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convolve", help="n-fold convolution of a lattice pmf")
    p.add_argument("--pmf", metavar="FILE", help="input CSV with columns x,prob")
    p.add_argument("--n", type=int)
    p.add_argument("--out", metavar="FILE")
    _add_common(p)

    p = sub.add_parser("premium", help="premium per risk from a claim sample")
    p.add_argument("--claims", metavar="FILE", help="input CSV with column claim")
    p.add_argument("--n", type=int)
    p.add_argument("--method", choices=("plugin", "normal"))
    p.add_argument("--out", metavar="FILE")
    _add_common(p)

    groups = (
        ("simulate", "figure data", {"fig1": "aggregate pmf against its normal density",
                                     "fig2": "estimator averages against the exact premium"}),
        ("study", "Monte-Carlo and rate studies", {"rates": "weighted Kolmogorov distance along n",
                                                   "coverage": "confidence-interval coverage",
                                                   "mz": "scaled error with nested claim samples",
                                                   "errors": "mean absolute error of both estimators"}),
    )
    for group, text, names in groups:
        gp = sub.add_parser(group, help=text)
        gsub = gp.add_subparsers(dest="which", required=True)
        for name, help_text in names.items():
            _add_common(gsub.add_parser(name, help=help_text))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command if args.command in COMMANDS else f"{args.command} {args.which}"
    try:
        settings = resolve_settings(args)
        run = Run(command, settings)
        COMMANDS[command](settings, run)
    except (CollRiskError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"{PROG}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
