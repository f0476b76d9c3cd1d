"""Command line front end: batch enhancement with before/after reports.

Subcommands
-----------
``hazeflow run INPUT... -o OUTDIR``
    Enhance every PNG/JPEG/PPM/PGM image found in the inputs (files or
    directories, non-recursive). Writes ``<stem>.png`` per image,
    ``report.json`` and/or ``report.csv``, ``run_config.json`` (the effective
    configuration) and, on failures, ``failures.txt``.
``hazeflow synth OUTDIR``
    Write a seeded synthetic hazy corpus.

Exit codes: 0 success, 2 usage error or no input images, 3 at least one
image failed (the others are still processed and reported).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import enhance, fastdehaze, pde, synth
from .imgcore import (CorruptImageError, ImageIOError, UnsupportedFormatError, from_unit,
                      invert, load_image, save_image, to_gray, to_unit)
from .lip import LipParams, resolve_lambda
from .metrics import METRIC_NAMES, MetricsReport, improvement_flags

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".ppm", ".pgm"}
MODES = ("haze", "underwater", "dust")
PIPELINES = ("pde", "fast-a", "fast-b")
REPORT_FORMATS = ("json", "csv", "both")
RATIO_KEYS = ("rag", "cef", "f_factor")

ROW_KEYS = ("image", "mode", "pipeline", "before", "after", "improved", "lambda_used",
            "alpha_used", "iters_run", "best_iter", "runtime_ms")
CSV_COLUMNS = (
    ["image", "mode", "pipeline"]
    + [f"before_{m}" for m in METRIC_NAMES]
    + [f"after_{m}" for m in METRIC_NAMES]
    + [f"after_{r}" for r in RATIO_KEYS]
    + [f"improved_{m}" for m in METRIC_NAMES]
    + ["lambda_used", "alpha_used", "iters_run", "best_iter", "runtime_ms"]
)

# config key -> (section, dataclass field); section None is RunConfig itself
_PARAM_KEYS = {
    "alpha": ("pde", "alpha"), "beta_stat": ("pde", "beta_stat"), "dt": ("pde", "dt"),
    "max_iters": ("pde", "max_iters"), "patience": ("pde", "patience"),
    "lambda": ("lip", "lambda_"), "t_low": ("lip", "t_low"), "t_high": ("lip", "t_high"),
    "lambda_min": ("lip", "lambda_min"), "lambda_max": ("lip", "lambda_max"),
    "lambda_base": ("lip", "lambda_base"), "w_black": ("lip", "w_black"),
    "w_white": ("lip", "w_white"),
    "filter": ("filter", "kind"), "d0": ("filter", "d0"), "nu": ("filter", "nu"),
    "sigma_s": ("filter", "sigma_s"), "sigma_r": ("filter", "sigma_r"),
    "clip": ("clahe", "clip"), "tiles": ("clahe", "tiles"),
    "sigma_l": ("irces", "sigma_l"), "gamma": ("irces", "gamma"),
    "sharpen_k": ("irces", "sharpen_k"), "noise_gate": ("irces", "noise_gate"),
    "sharpen_sigma": ("irces", "sharpen_sigma"),
    "gamma_low": ("fhe", "gamma_low"), "gamma_high": ("fhe", "gamma_high"),
    "fhe_d0": ("fhe", "d0"), "int_passes": ("fhe", "int_passes"),
    "p_low": ("goc", "p_low"), "p_high": ("goc", "p_high"),
}
_TOP_KEYS = ("mode", "pipeline", "post", "refine", "log_scaling", "debug", "report",
             "workers", "timing")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _auto_float(text):
    if text is None or (isinstance(text, str) and text.lower() == "auto"):
        return None
    return float(text)


def _int(value):
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


def _bool(value):
    if isinstance(value, bool):
        return value
    raise ValueError(f"expected true/false, got {value!r}")


_CONVERTERS = {
    "alpha": _auto_float, "lambda": _auto_float, "sigma_l": _auto_float,
    "max_iters": _int, "patience": _int, "tiles": _int, "int_passes": _int, "workers": _int,
    "filter": str, "mode": str, "pipeline": str, "post": str, "log_scaling": str, "report": str,
    "refine": _bool, "debug": _bool, "timing": _bool,
}


@dataclass
class RunConfig:
    """Everything one batch run needs; every numeric field is bound-checked."""

    mode: str = "haze"
    pipeline: str = "pde"
    post: str = "irces"
    pde: pde.PdeParams = field(default_factory=pde.PdeParams)
    filter: fastdehaze.FilterCfg = field(default_factory=fastdehaze.FilterCfg)
    clahe: enhance.ClaheCfg = field(default_factory=enhance.ClaheCfg)
    irces: enhance.IrcesCfg = field(default_factory=enhance.IrcesCfg)
    fhe: enhance.FheCfg = field(default_factory=enhance.FheCfg)
    goc: enhance.GocCsCfg = field(default_factory=enhance.GocCsCfg)
    refine: bool = False
    log_scaling: str = "rescale"
    debug: bool = False
    report: str = "json"
    workers: int = 1
    timing: bool = True
    inputs: list = field(default_factory=list)
    output: Path = Path("out")

    def to_dict(self) -> dict:
        """Flat echo keyed like the config file."""
        out = {k: getattr(self, k) for k in _TOP_KEYS}
        for key, (section, attr) in _PARAM_KEYS.items():
            holder = self.pde.lip if section == "lip" else getattr(self, section)
            out[key] = getattr(holder, attr)
        out["inputs"] = [str(p) for p in self.inputs]
        out["output"] = str(self.output)
        return out


def build_config(values: dict) -> RunConfig:
    """Build a :class:`RunConfig` from flat ``key -> value`` pairs.

    Raises :class:`ConfigError` naming the first offending key.
    """
    sections = {s: {} for s in ("pde", "lip", "filter", "clahe", "irces", "fhe", "goc")}
    top = {}
    for key, raw in values.items():
        if key not in _PARAM_KEYS and key not in _TOP_KEYS and key not in ("inputs", "output"):
            raise ConfigError(key, "unknown configuration key")
        try:
            value = _CONVERTERS.get(key, float)(raw) if key not in ("inputs", "output") else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from None
        if key in _PARAM_KEYS:
            section, attr = _PARAM_KEYS[key]
            sections[section][attr] = value
        else:
            top[key] = value

    for key, allowed in (("mode", MODES), ("pipeline", PIPELINES), ("post", pde.POST_OPS),
                         ("report", REPORT_FORMATS), ("log_scaling", fastdehaze.LOG_SCALINGS)):
        if key in top and top[key] not in allowed:
            raise ConfigError(key, f"must be one of {allowed}, got {top[key]!r}")
    if top.get("workers", 1) < 1:
        raise ConfigError("workers", "must be >= 1")

    built = {}
    for section, cls in (("lip", LipParams), ("filter", fastdehaze.FilterCfg),
                         ("clahe", enhance.ClaheCfg), ("irces", enhance.IrcesCfg),
                         ("fhe", enhance.FheCfg), ("goc", enhance.GocCsCfg)):
        try:
            built[section] = cls(**sections[section])
        except ValueError as exc:
            raise ConfigError(_key_from_error(exc, section), str(exc)) from None
    try:
        built["pde"] = pde.PdeParams(lip=built.pop("lip"), **sections["pde"])
    except ValueError as exc:
        raise ConfigError(_key_from_error(exc, "pde"), str(exc)) from None

    cfg = RunConfig(**built, **{k: v for k, v in top.items() if k not in ("inputs", "output")})
    if "inputs" in top:
        cfg.inputs = [Path(p) for p in top["inputs"]]
    if "output" in top:
        cfg.output = Path(top["output"])
    return cfg


def _key_from_error(exc: ValueError, section: str) -> str:
    name = str(exc).split("=", 1)[0].strip()
    return name if name and " " not in name else section


def _add_run_args(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("inputs", nargs="*", default=S, help="image files or directories")
    p.add_argument("-o", "--output", default=S, help="output directory (default: out)")
    p.add_argument("--config", help="JSON file of configuration keys; flags override it")
    g = p.add_argument_group("pipeline")
    g.add_argument("--mode", choices=MODES, default=S)
    g.add_argument("--pipeline", choices=PIPELINES, default=S,
                   help="pde: LIP-driven PDE flow; fast-a: LIP+CLAHE (uniform thin haze only); "
                        "fast-b: filtered log-inverted transmission")
    g.add_argument("--post", choices=pde.POST_OPS, default=S, help="post operator (default irces)")
    g.add_argument("--refine", action="store_const", const=True, default=S,
                   help="fast-b: refine with the PDE flow")
    g.add_argument("--log-scaling", dest="log_scaling", choices=fastdehaze.LOG_SCALINGS, default=S)
    g = p.add_argument_group("PDE flow and LIP")
    for flag, hlp in (("alpha", "forcing weight or 'auto'"), ("beta-stat", "statistical term weight"),
                      ("dt", "time step, 0 < dt <= 0.25"), ("max-iters", None), ("patience", None),
                      ("lambda", "LIP exponent or 'auto'"), ("t-low", None), ("t-high", None),
                      ("lambda-min", None), ("lambda-max", None), ("lambda-base", None),
                      ("w-black", None), ("w-white", None)):
        g.add_argument(f"--{flag}", dest=flag.replace("-", "_"), default=S, help=hlp)
    g = p.add_argument_group("filters and enhancement operators")
    g.add_argument("--filter", choices=fastdehaze.FILTER_KINDS, default=S)
    for flag in ("d0", "nu", "sigma-s", "sigma-r", "clip", "tiles", "sigma-l", "gamma",
                 "sharpen-k", "noise-gate", "sharpen-sigma", "gamma-low", "gamma-high",
                 "fhe-d0", "int-passes", "p-low", "p-high"):
        g.add_argument(f"--{flag}", dest=flag.replace("-", "_"), default=S)
    g = p.add_argument_group("output")
    g.add_argument("--debug", action="store_const", const=True, default=S,
                   help="also write transmission estimate, log-inverted image and AG trace")
    g.add_argument("--report", choices=REPORT_FORMATS, default=S)
    g.add_argument("--workers", default=S, help="images processed concurrently")
    g.add_argument("--no-timing", dest="timing", action="store_const", const=False, default=S,
                   help="report runtime_ms as 0 so reports are byte-reproducible")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hazeflow", description=__doc__.split("\n\n")[0],
        epilog="Haze reduction is judged by AG/RAG; fog-density models are not included.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="enhance a batch of images",
                         description="Haze reduction is reported through AG and RAG (after/before "
                                     "average gradient); no fog-density model is used. "
                                     "Exit codes: 0 ok, 2 usage / no images, 3 some images failed. "
                                     "JSON report: array of objects with keys " + ", ".join(ROW_KEYS)
                                     + " (before/after hold the metrics; after also holds "
                                     + "rag, cef, f_factor). CSV columns: " + ",".join(CSV_COLUMNS)
                                     + ". Numbers carry 6 significant digits.")
    _add_run_args(run)
    s = sub.add_parser("synth", help="write a seeded synthetic hazy corpus")
    s.add_argument("output")
    s.add_argument("--scenes", type=int, default=20)
    s.add_argument("--betas", default="0.5,1,2", help="comma-separated scattering coefficients")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--size", type=int, default=256)
    return parser


def parse_config(argv=None, parser=None) -> RunConfig:
    """Parse ``run`` arguments: flags override the config file, which overrides defaults."""
    parser = parser or make_parser()
    ns = parser.parse_args(["run", *(argv or [])]) if argv is None or argv[:1] != ["run"] \
        else parser.parse_args(argv)
    values = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {ns.config}: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config", "top level must be a JSON object")
        values.update(file_values)
    values.update({k: v for k, v in vars(ns).items() if k not in ("command", "config")})
    return build_config(values)


@dataclass
class ReportRow:
    image: str
    mode: str
    pipeline: str
    metrics: MetricsReport
    lambda_used: float | None = None
    alpha_used: float | None = None
    iters_run: int | None = None
    best_iter: int | None = None
    runtime_ms: float = 0.0

    def to_dict(self) -> dict:
        after = dict(self.metrics.after)
        after.update({k: getattr(self.metrics, k) for k in RATIO_KEYS})
        return {
            "image": self.image, "mode": self.mode, "pipeline": self.pipeline,
            "before": _round(self.metrics.before), "after": _round(after),
            "improved": dict(self.metrics.improved),
            "lambda_used": _round(self.lambda_used), "alpha_used": _round(self.alpha_used),
            "iters_run": self.iters_run, "best_iter": self.best_iter,
            "runtime_ms": _round(self.runtime_ms),
        }


def _round(x):
    """Six significant digits, recursively."""
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, bool) or x is None or isinstance(x, int):
        return x
    return float(f"{float(x):.6g}")


def emit_report(rows, fmt: str, out_dir) -> list[Path]:
    """Write ``report.json`` and/or ``report.csv`` for ``rows`` (sorted by image)."""
    if not rows:
        raise ValueError("no report rows")
    out_dir = Path(out_dir)
    dicts = [r.to_dict() for r in sorted(rows, key=lambda r: r.image)]
    written = []
    if fmt in ("json", "both"):
        path = out_dir / "report.json"
        with open(path, "w") as fh:
            json.dump(dicts, fh, indent=2)
            fh.write("\n")
        written.append(path)
    if fmt in ("csv", "both"):
        path = out_dir / "report.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for d in dicts:
                writer.writerow([_csv_cell(_flat_get(d, col)) for col in CSV_COLUMNS])
        written.append(path)
    return written


def _flat_get(d: dict, col: str):
    for prefix in ("before", "after", "improved"):
        if col.startswith(prefix + "_"):
            return d[prefix].get(col[len(prefix) + 1:])
    return d[col]


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


def recompute_improved(row: dict) -> dict:
    """Improvement flags from a report row's before/after blocks."""
    return improvement_flags(row["before"], {k: v for k, v in row["after"].items()
                                             if k not in RATIO_KEYS})


def collect_inputs(paths) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(q for q in p.iterdir() if q.is_file() and q.suffix.lower() in IMAGE_SUFFIXES)
        elif p.exists():
            found.append(p)
        else:
            raise ConfigError("inputs", f"{p} does not exist")
    return sorted(set(found), key=lambda q: (q.name, str(q)))


def enhance_image(img: np.ndarray, cfg: RunConfig):
    """Run the configured pipeline; return (output, trace or None, debug fields)."""
    debug = {}
    trace = None
    lam = None
    work = img
    if cfg.mode != "haze":
        if img.ndim != 3:
            raise ValueError(f"{cfg.mode} mode needs an RGB image")
        work = enhance.goc_cs(img, cfg.goc)

    if cfg.pipeline == "pde":
        out, trace = pde.dehaze_pde(work, cfg.pde, "none", return_trace=True)
    elif cfg.pipeline == "fast-a":
        lam = resolve_lambda(invert(work), cfg.pde.lip)
        out, est = fastdehaze.fast_dehaze_a(work, cfg.clahe, cfg.pde.lip, return_transmission=True)
        debug["tprime"] = to_gray(est.t_prime)
    else:
        out, state = fastdehaze.fast_dehaze_b(work, cfg.filter, False, log_scaling=cfg.log_scaling,
                                              return_state=True)
        if cfg.refine:
            out, trace = pde.dehaze_pde(out, cfg.pde, "none", return_trace=True)
        tp = state.t_prime.t_prime
        debug["tprime"] = np.clip(to_gray(tp) / 255.0, 0.0, 1.0)
        ilog = np.stack(state.log_inverted, axis=-1) if img.ndim == 3 else state.log_inverted[0]
        debug["ilog"] = np.clip(to_gray(ilog) / 255.0, 0.0, 1.0)
    if "ilog" not in debug:
        # the inverted image is the transmission proxy the other pipelines refine
        gray = to_gray(work)
        debug.setdefault("tprime", 1.0 - gray)
        debug["ilog"] = np.clip(fastdehaze.log_inverted(gray) / 255.0, 0.0, 1.0)
    out = pde.apply_post(out, cfg.post, cfg.irces, cfg.fhe)
    if trace is not None:
        debug["trace"] = trace
    return out, trace, lam, debug


def _process(path: Path, cfg: RunConfig):
    t0 = time.perf_counter()
    img = to_unit(load_image(path))
    out, trace, lam, debug = enhance_image(img, cfg)
    out8 = from_unit(out)
    elapsed = (time.perf_counter() - t0) * 1000.0 if cfg.timing else 0.0
    stem = path.stem
    save_image(out8, cfg.output / f"{stem}.png")
    if cfg.debug:
        for key in ("tprime", "ilog"):
            if key in debug:
                save_image(from_unit(debug[key]), cfg.output / f"{stem}_{key}.png")
        if trace is not None:
            with open(cfg.output / f"{stem}_trace.json", "w") as fh:
                json.dump({"ag_per_iter": trace.ag_per_iter, "best_iter": trace.best_iter,
                           "iters_run": trace.iters_run, "alpha_used": trace.alpha_used,
                           "lambda_used": trace.lambda_used}, fh, indent=2)
    report = MetricsReport.compare(from_unit(img), out8)
    return ReportRow(
        image=path.name, mode=cfg.mode, pipeline=cfg.pipeline, metrics=report,
        lambda_used=trace.lambda_used if trace else lam,
        alpha_used=trace.alpha_used if trace else None,
        iters_run=trace.iters_run if trace else None,
        best_iter=trace.best_iter if trace else None,
        runtime_ms=elapsed,
    )


def run_batch(cfg: RunConfig, log=None) -> int:
    log = log or sys.stderr
    try:
        paths = collect_inputs(cfg.inputs)
    except ConfigError as exc:
        print(f"error: {exc}", file=log)
        return 2
    if not paths:
        print("error: inputs: no images found", file=log)
        return 2
    cfg.output.mkdir(parents=True, exist_ok=True)

    def task(p):
        try:
            return _process(p, cfg), None
        except (ImageIOError, UnsupportedFormatError, CorruptImageError, ValueError) as exc:
            return None, f"{p}: {exc}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(task, paths))
    else:
        results = [task(p) for p in paths]

    rows = [r for r, _ in results if r is not None]
    failures = [msg for _, msg in results if msg is not None]
    with open(cfg.output / "run_config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")
    if rows:
        emit_report(rows, cfg.report, cfg.output)
    if failures:
        with open(cfg.output / "failures.txt", "w") as fh:
            fh.write("\n".join(failures) + "\n")
        for msg in failures:
            print(f"failed: {msg}", file=log)
        return 3
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns, _ = parser.parse_known_args(argv)
    if ns.command == "synth":
        ns = parser.parse_args(argv)
        try:
            betas = [float(b) for b in ns.betas.split(",") if b.strip()]
        except ValueError:
            parser.error(f"--betas: cannot parse {ns.betas!r}")
        synth.synth_corpus(ns.output, ns.scenes, betas, ns.seed, ns.size)
        return 0
    try:
        cfg = parse_config(argv, parser)
    except ConfigError as exc:
        print(f"hazeflow: error: {exc}", file=sys.stderr)
        return 2
    return run_batch(cfg)


if __name__ == "__main__":
    sys.exit(main())
