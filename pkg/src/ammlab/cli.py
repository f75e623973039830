"""Command-line front end.

Every command that produces data writes a self-describing bundle:

    <out>/
      manifest.json   command, resolved config, sha256 of every other file
      schema.json     what each file is and what its columns mean
      *.csv, *.json   the data, floats at full 17-digit precision

Bundles contain no timestamps, hostnames or other incidental state, so the
same command line yields byte-identical bundles on any machine and with any
thread count; `ammlab replay <bundle>` re-executes the manifest and verifies
that.  Configuration is resolved in a fixed order: built-in defaults, then
--preset, then --config KEY=VALUE file, then explicit flags.

Exit codes: 0 success, 1 replay mismatch, 2 configuration error,
3 resource-guard refusal, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from math import isfinite, sqrt
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    BarrierSpec,
    ILDistParams,
    StepKind,
    analytic_il_mean,
    build_il_table,
    clt_sum_experiment,
    expected_il_gbm,
    expected_il_quadrature,
    expected_lvr,
    expected_lvr_gbm,
    first_passage,
    il_pdf,
)
from .engine import BandRule, TradeTarget
from .errors import ConfigError, NumericalError, ResourceLimitError
from .harness import (
    ExperimentConfig,
    Observables,
    classify_regime,
    run_campaign,
    sweep_fee,
    sweep_volume_vs_sigma,
    sweep_volume_vs_steps,
)
from .presets import get_preset, preset_names
from .stats import Histogram
from .stochastic import ProcessKind, derive_run_seed, pdf_bm, pdf_gbm

# ---------------------------------------------------------------------------
# config keys: one flat vocabulary shared by defaults, presets, files, flags


def _cast_float(key: str, v: str) -> float:
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {v!r}") from None


def _cast_int(key: str, v: str) -> int:
    try:
        return int(v)
    except ValueError:
        pass
    f = _cast_float(key, v)
    if f != int(f):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return int(f)


def _cast_bool(key: str, v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {v!r}")


def _cast_choice(*options: str):
    def cast(key: str, v: str) -> str:
        if v not in options:
            raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {v!r}")
        return v

    return cast


def _split(v: str) -> list[str]:
    return [part.strip() for part in v.split(",") if part.strip()]


def _cast_float_list(key: str, v: str) -> list[float]:
    return [_cast_float(key, part) for part in _split(v)]


def _cast_int_list(key: str, v: str) -> list[int]:
    return [_cast_int(key, part) for part in _split(v)]


def _cast_opt_float(key: str, v: str):
    return None if v.strip() == "" else _cast_float(key, v)


_MODES = (
    "simulate",
    "il-pdf",
    "il-mean",
    "lvr-mean",
    "sample-il",
    "clt-sum",
    "first-passage",
    "sweep-fee",
    "sweep-sigma",
    "sweep-steps",
)

# key -> (caster, default string, help text)
_KEYS = {
    "mode": (_cast_choice(*_MODES), "simulate", "what the configuration drives"),
    "process": (_cast_choice("bm", "gbm", "both"),
                "gbm", "price process: additive (bm), multiplicative (gbm), or both"),
    "p0": (_cast_float, "100.0", "entry price"),
    "sigma": (_cast_float, "0.001", "per-step relative volatility"),
    "n_steps": (_cast_int, "1000", "steps per run"),
    "liquidity": (_cast_float, "10000.0", "pool liquidity parameter L"),
    "n_runs": (_cast_int, "10000", "independent runs in the campaign"),
    "seed": (_cast_int, "0", "campaign seed; run i derives its own stream from it"),
    "fee": (_cast_float, "0.0", "proportional fee; 0 disables the no-trade band"),
    "band_rule": (_cast_choice("exact", "linearized"),
                  "exact", "no-trade band shape around the pool price"),
    "target": (_cast_choice("marginal", "oracle"),
               "oracle", "post-trade price: reference (oracle) or band edge (marginal)"),
    "observables": (_cast_choice("pool", "prices"),
                    "pool", "pool metrics, or endpoint prices only"),
    "bins": (_cast_int, "50", "histogram bins"),
    "t": (_cast_float, "1.0", "horizon for the analytic distribution commands"),
    "n_per_sum": (_cast_int, "10000", "draws added per sum in clt-sum"),
    "n_repeats": (_cast_int, "1000", "number of sums in clt-sum"),
    "n_samples": (_cast_int, "100000", "draws for sample-il"),
    "il_points": (_cast_int, "4000", "points in the tabulated density output"),
    "k_list": (_cast_int_list, "3,10,30", "barrier distances for the paired passage study"),
    "n_walks": (_cast_int, "20000", "walks per barrier spec"),
    "step_kind": (_cast_choice("unit", "gaussian"), "unit", "walk increment"),
    "lower": (_cast_float, "-10", "lower barrier (single passage run, k_list empty)"),
    "upper": (_cast_float, "10", "upper barrier (single passage run, k_list empty)"),
    "fees": (_cast_float_list, "", "comma list of fees for sweep-fee"),
    "sigmas": (_cast_float_list, "", "comma list of volatilities for sweep-sigma"),
    "steps_list": (_cast_int_list, "", "comma list of step counts for sweep-steps"),
    "total_variance": (_cast_opt_float, "",
                       "sigma^2 n held fixed across sweep-steps (default: from base config)"),
    "streaming": (_cast_bool, "false",
                  "two-pass histograms without the per-run table in memory"),
}

_CAMPAIGN_KEYS = (
    "process", "p0", "sigma", "n_steps", "liquidity", "n_runs", "seed",
    "fee", "band_rule", "target", "observables", "bins", "streaming",
)
_DIST_KEYS = ("process", "p0", "liquidity", "sigma", "t", "seed")

_MODE_KEYS: dict[str, tuple[str, ...]] = {
    "simulate": _CAMPAIGN_KEYS,
    "il-pdf": ("process", "p0", "liquidity", "sigma", "t", "il_points"),
    "il-mean": ("process", "p0", "liquidity", "sigma", "t"),
    "lvr-mean": ("process", "p0", "liquidity", "sigma", "t"),
    "sample-il": _DIST_KEYS + ("n_samples", "bins"),
    "clt-sum": _DIST_KEYS + ("n_per_sum", "n_repeats", "bins"),
    "first-passage": ("k_list", "n_walks", "step_kind", "lower", "upper", "seed"),
    "sweep-fee": _CAMPAIGN_KEYS + ("fees",),
    "sweep-sigma": _CAMPAIGN_KEYS + ("sigmas",),
    "sweep-steps": _CAMPAIGN_KEYS + ("steps_list", "total_variance"),
}


def read_config_file(path: str) -> dict[str, str]:
    """KEY=VALUE lines; # starts a comment; unknown keys are rejected."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected KEY=VALUE, got {raw.strip()!r}")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _resolve(args: argparse.Namespace, mode: str) -> tuple[dict, str | None]:
    """Merge defaults < preset < config file < flags and parse types."""
    keys = _MODE_KEYS[mode]
    strings = {k: _KEYS[k][1] for k in keys}

    preset_name = getattr(args, "preset", None)
    if preset_name:
        try:
            preset = get_preset(preset_name)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        pmode = preset.overrides.get("mode", mode)
        if pmode != mode:
            raise ConfigError(
                f"preset {preset_name!r} is a {pmode} study; run it under that command"
            )
        for k, v in preset.items():
            if k == "mode":
                continue
            if k not in keys:
                raise ConfigError(f"preset {preset_name!r} sets {k!r}, unused by {mode}")
            strings[k] = v

    config_path = getattr(args, "config", None)
    if config_path:
        for k, v in read_config_file(config_path).items():
            if k == "mode":
                if v != mode:
                    raise ConfigError(f"{config_path}: mode={v} does not match {mode}")
                continue
            if k not in keys:
                raise ConfigError(f"{config_path}: key {k!r} is unused by {mode}")
            strings[k] = v

    for k in keys:
        flag_value = getattr(args, k, None)
        if flag_value is not None:
            strings[k] = flag_value

    typed = {k: _KEYS[k][0](k, strings[k]) for k in keys}
    return typed, preset_name


# ---------------------------------------------------------------------------
# bundle writing


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _fmt_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


class Bundle:
    """Accumulates output files, then seals them under a manifest."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.schema: dict[str, dict] = {}

    def write_json(self, name: str, payload: dict, description: str) -> None:
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
        (self.dir / name).write_text(text)
        self.schema[name] = {"kind": "json", "description": description}

    def write_histogram(self, name: str, observable: str, hist: Histogram) -> None:
        self.write_json(
            name,
            {"observable": observable, **hist.to_dict()},
            f"binned distribution of {observable} with raw sample moments",
        )

    def write_csv(self, name: str, columns: list[str], rows, description: str) -> None:
        lines = [",".join(columns)]
        lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
        (self.dir / name).write_text("\n".join(lines) + "\n")
        self.schema[name] = {"kind": "csv", "columns": columns, "description": description}

    def seal(self, command: list[str], config: dict) -> int:
        self.write_json("schema.json", {"files": self.schema},
                        "description of every file in this bundle")
        outputs = []
        for name in sorted(self.schema):
            digest = hashlib.sha256((self.dir / name).read_bytes()).hexdigest()
            outputs.append({"path": name, "sha256": digest})
        manifest = {
            "tool": "ammlab",
            "version": __version__,
            "command": command,
            "config": _jsonable(config),
            "outputs": outputs,
        }
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        return len(outputs) + 1


def _out_dir(args: argparse.Namespace, default_name: str) -> Path:
    explicit = getattr(args, "out", None)
    if explicit:
        return Path(explicit)
    root = os.environ.get("AMM_LAB_OUT", "ammlab_out")
    return Path(root) / default_name


# ---------------------------------------------------------------------------
# runners (shared by live commands and replay)


def _campaign_config(cfg: dict, kind: ProcessKind) -> ExperimentConfig:
    return ExperimentConfig(
        kind=kind,
        p0=cfg["p0"],
        sigma=cfg["sigma"],
        n_steps=cfg["n_steps"],
        liquidity=cfg["liquidity"],
        n_runs=cfg["n_runs"],
        seed=cfg["seed"],
        fee=cfg["fee"],
        band_rule=BandRule(cfg["band_rule"]),
        target=TradeTarget(cfg["target"]),
        observables=Observables(cfg["observables"]),
        bins=cfg["bins"],
    )


def _single_process(cfg: dict, context: str) -> ProcessKind:
    if cfg["process"] == "both":
        raise ConfigError(f"{context} needs process=bm or process=gbm")
    return ProcessKind(cfg["process"])


def _dist_params(cfg: dict, context: str) -> ILDistParams:
    return ILDistParams(
        p0=cfg["p0"],
        liquidity=cfg["liquidity"],
        sigma=cfg["sigma"],
        t=cfg["t"],
        process=_single_process(cfg, context),
    )


def _config_payload(conf: ExperimentConfig) -> dict:
    return {
        "kind": conf.kind.value,
        "p0": conf.p0,
        "sigma": conf.sigma,
        "n_steps": conf.n_steps,
        "liquidity": conf.liquidity,
        "n_runs": conf.n_runs,
        "seed": conf.seed,
        "fee": conf.fee,
        "band_rule": conf.band_rule.value,
        "target": conf.target.value,
        "observables": conf.observables.value,
        "bins": conf.bins,
    }


def _price_density_rows(hist: Histogram, kind: ProcessKind, p0, sigma, t):
    edges = hist.bin_edges
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    empirical = hist.counts / (hist.n_total * widths)
    if kind is ProcessKind.BM:
        analytic = pdf_bm(centers, p0, sigma, t)
    else:
        analytic = np.where(
            centers > 0.0, pdf_gbm(np.maximum(centers, 1e-300), p0, sigma, t), 0.0
        )
    return [
        [c, w, int(n), e, a]
        for c, w, n, e, a in zip(centers, widths, hist.counts, empirical, analytic)
    ]


_TABLE_CSV_COLUMNS = ["run_index", "il", "lvr", "volume", "fees", "n_arb_events",
                      "final_price"]


def _run_simulate(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    both = cfg["process"] == "both"
    kinds = [ProcessKind.BM, ProcessKind.GBM] if both else [ProcessKind(cfg["process"])]
    bundle = Bundle(out)
    notes = []
    summaries: dict[str, dict] = {}
    for kind in kinds:
        prefix = f"{kind.value}_" if both else ""
        conf = _campaign_config(cfg, kind)
        result = run_campaign(conf, threads=threads, streaming=cfg["streaming"])
        summaries[kind.value] = result.summary
        bundle.write_json(
            f"{prefix}summary.json",
            {"config": _config_payload(conf), "summary": result.summary},
            "campaign configuration and ensemble summary",
        )
        for name, hist in result.histograms.items():
            bundle.write_histogram(f"{prefix}hist_{name}.json", name, hist)
        if result.table is not None and conf.observables is Observables.POOL:
            rows = ([i, *row] for i, row in enumerate(result.table))
            bundle.write_csv(f"{prefix}table.csv", _TABLE_CSV_COLUMNS, rows,
                             "per-run metrics, one row per seeded run")
        if conf.observables is Observables.PRICES:
            bundle.write_csv(
                f"{prefix}price_density.csv",
                ["price", "bin_width", "count", "empirical_density", "analytic_density"],
                _price_density_rows(result.histograms["final_price"], kind,
                                    conf.p0, conf.sigma, conf.n_steps),
                "endpoint price histogram against the analytic density",
            )
        if conf.observables is Observables.POOL:
            notes.append(
                f"{kind.value}: mean_lvr={result.summary['mean_lvr']:.6g} "
                f"mean_il={result.summary['mean_il']:.6g} "
                f"mean_volume={result.summary['mean_volume']:.6g} "
                f"regime={result.summary['regime']}"
            )
        else:
            notes.append(
                f"{kind.value}: mean_final_price={result.summary['mean_final_price']:.6g} "
                f"regime={result.summary['regime']}"
            )
    if both:
        bundle.write_json("compare.json", summaries,
                          "per-process summaries on matched per-run seeds")
    return bundle, notes


def _run_il_pdf(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    params = _dist_params(cfg, "il-pdf")
    table = build_il_table(params)
    mean_density = analytic_il_mean(params)
    mean_price = expected_il_quadrature(params)
    il_max = float(table.u[-1] ** 2)
    ils = np.geomspace(mean_density * 1e-10, il_max, cfg["il_points"])
    pdf = il_pdf(ils, params)
    cdf = table.cdf(ils)
    trapz_mass = float(np.trapezoid(pdf, ils))
    bundle = Bundle(out)
    bundle.write_csv(
        "il_pdf.csv",
        ["il", "pdf", "cdf"],
        zip(ils, pdf, np.asarray(cdf)),
        "endpoint-loss density and distribution on log-spaced losses",
    )
    bundle.write_json(
        "pdf_meta.json",
        {
            "params": _params_payload(params),
            "mass_in_table": table.total,
            "mass_under_tabulated_points": trapz_mass,
            "mean_via_density": mean_density,
            "mean_via_price_integral": mean_price,
            "small_sigma_mean": params.scale,
            "il_max_tabulated": il_max,
        },
        "normalization and mean checks for the tabulated density",
    )
    notes = [
        f"mass under curve {trapz_mass:.6f} (table {table.total:.6f})",
        f"mean via density {mean_density:.6g}, via price integral {mean_price:.6g}",
    ]
    return bundle, notes


def _params_payload(params: ILDistParams) -> dict:
    return {
        "process": params.process.value,
        "p0": params.p0,
        "liquidity": params.liquidity,
        "sigma": params.sigma,
        "t": params.t,
    }


def _run_il_mean(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    params = _dist_params(cfg, "il-mean")
    payload = {
        "params": _params_payload(params),
        "sigma2_t": params.sigma * params.sigma * params.t,
        "regime": classify_regime(params.sigma * params.sigma * params.t).value,
        "small_sigma_mean": params.scale,
        "mean_via_price_integral": expected_il_quadrature(params),
        "mean_via_density": analytic_il_mean(params),
    }
    if params.process is ProcessKind.GBM:
        payload["gbm_any_horizon_mean"] = expected_il_gbm(
            params.liquidity, params.p0, params.sigma, params.t
        )
    bundle = Bundle(out)
    bundle.write_json("analytic.json", payload, "mean endpoint loss by several routes")
    return bundle, [f"mean endpoint loss {payload['mean_via_price_integral']:.6g}"]


def _run_lvr_mean(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    process = _single_process(cfg, "lvr-mean")
    liq, p0, sigma, t = cfg["liquidity"], cfg["p0"], cfg["sigma"], cfg["t"]
    s2t = sigma * sigma * t
    with_warning = expected_lvr if s2t < 1.0 else _quiet_expected_lvr
    payload = {
        "params": {"process": process.value, "p0": p0, "liquidity": liq,
                   "sigma": sigma, "t": t},
        "sigma2_t": s2t,
        "regime": classify_regime(s2t).value,
        "small_sigma_mean": with_warning(liq, p0, sigma, t),
    }
    if process is ProcessKind.GBM:
        payload["gbm_any_horizon_mean"] = expected_lvr_gbm(liq, p0, sigma, int(round(t)))
    bundle = Bundle(out)
    bundle.write_json("analytic.json", payload, "mean cumulative rebalancing loss")
    return bundle, [f"mean rebalancing loss {payload['small_sigma_mean']:.6g}"]


def _quiet_expected_lvr(liq, p0, sigma, t):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return expected_lvr(liq, p0, sigma, t)


def _run_sample_il(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    params = _dist_params(cfg, "sample-il")
    table = build_il_table(params)
    draws = table.sample(cfg["n_samples"], cfg["seed"])
    hist = Histogram.from_samples(draws, bins=cfg["bins"])
    mean = float(draws.mean())
    stderr = float(draws.std(ddof=1) / sqrt(draws.size)) if draws.size > 1 else 0.0
    bundle = Bundle(out)
    bundle.write_csv("samples.csv", ["il"], ([v] for v in draws),
                     "independent draws from the endpoint-loss distribution")
    bundle.write_histogram("hist_il.json", "il", hist)
    bundle.write_json(
        "summary.json",
        {
            "params": _params_payload(params),
            "n_samples": cfg["n_samples"],
            "seed": cfg["seed"],
            "sample_mean": mean,
            "sample_stderr": stderr,
            "mean_via_density": analytic_il_mean(params),
            "mean_via_price_integral": expected_il_quadrature(params),
        },
        "sample moments against the analytic means",
    )
    return bundle, [f"sample mean {mean:.6g} +- {stderr:.2g}"]


def _run_clt_sum(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    params = _dist_params(cfg, "clt-sum")
    hist = clt_sum_experiment(params, cfg["n_per_sum"], cfg["n_repeats"], cfg["seed"])
    expected_mean = cfg["n_per_sum"] * analytic_il_mean(params)
    stderr = sqrt(hist.variance / hist.n_total)
    bundle = Bundle(out)
    bundle.write_histogram("hist_sums.json", "sum_of_il", hist)
    bundle.write_json(
        "summary.json",
        {
            "params": _params_payload(params),
            "n_per_sum": cfg["n_per_sum"],
            "n_repeats": cfg["n_repeats"],
            "seed": cfg["seed"],
            "mean": hist.mean,
            "stderr_of_mean": stderr,
            "variance": hist.variance,
            "skewness": hist.skewness,
            "expected_mean": expected_mean,
        },
        "moments of the summed losses against the analytic prediction",
    )
    return bundle, [
        f"sum mean {hist.mean:.6g} (expected {expected_mean:.6g}), "
        f"skewness {hist.skewness:.3f}"
    ]


def _run_first_passage(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    from .stats import fit_loglog

    kind = StepKind(cfg["step_kind"])
    bundle = Bundle(out)
    if not cfg["k_list"]:
        spec = BarrierSpec(lower=cfg["lower"], upper=cfg["upper"], step_kind=kind)
        res = first_passage(spec, cfg["n_walks"], cfg["seed"])
        bundle.write_json(
            "summary.json",
            {
                "lower": spec.lower,
                "upper": spec.upper,
                "step_kind": kind.value,
                "n_walks": res.n_walks,
                "mean_steps": res.mean_steps,
                "stderr": res.stderr,
                "frac_lower": res.frac_lower,
            },
            "absorption statistics for a single barrier pair",
        )
        return bundle, [f"mean absorption time {res.mean_steps:.4g} +- {res.stderr:.2g}"]

    rows = []
    for i, k in enumerate(cfg["k_list"]):
        if k < 1:
            raise ConfigError(f"k_list entries must be >= 1, got {k}")
        sym = first_passage(
            BarrierSpec(-float(k), float(k), kind),
            cfg["n_walks"],
            int(derive_run_seed(cfg["seed"], 2 * i)),
        )
        asym = first_passage(
            BarrierSpec(-float(k), 1.0, kind),
            cfg["n_walks"],
            int(derive_run_seed(cfg["seed"], 2 * i + 1)),
        )
        rows.append([
            k,
            sym.mean_steps, sym.stderr, sym.frac_lower, float(k * k),
            asym.mean_steps, asym.stderr, asym.frac_lower, float(k),
        ])
    ks = [r[0] for r in rows]
    sym_slope, sym_err = fit_loglog(ks, [r[1] for r in rows])
    asym_slope, asym_err = fit_loglog(ks, [r[5] for r in rows])
    bundle.write_csv(
        "rows.csv",
        ["k", "symmetric_mean", "symmetric_stderr", "symmetric_frac_lower",
         "symmetric_exact", "asymmetric_mean", "asymmetric_stderr",
         "asymmetric_frac_lower", "asymmetric_exact"],
        rows,
        "absorption times for barriers (-k, k) and (-k, 1)",
    )
    bundle.write_json(
        "fits.json",
        {
            "n_walks": cfg["n_walks"],
            "step_kind": kind.value,
            "seed": cfg["seed"],
            "symmetric_slope": sym_slope,
            "symmetric_slope_stderr": sym_err,
            "asymmetric_slope": asym_slope,
            "asymmetric_slope_stderr": asym_err,
        },
        "log-log scaling of mean absorption time with k",
    )
    return bundle, [
        f"mean time scaling: symmetric k^{sym_slope:.3f}, asymmetric k^{asym_slope:.3f}"
    ]


_SWEEP_ROW_KEYS = [
    "mean_il", "stderr_il", "mean_lvr", "stderr_lvr", "mean_volume", "stderr_volume",
    "mean_fees", "stderr_fees", "mean_events", "mean_wait",
]


def _sweep_rows_csv(bundle: Bundle, rows: list[dict], lead: list[str], description: str):
    columns = lead + _SWEEP_ROW_KEYS + [
        k for k in rows[0] if k not in lead and k not in _SWEEP_ROW_KEYS
    ]
    bundle.write_csv("rows.csv", columns, ([row[c] for c in columns] for row in rows),
                     description)


def _run_sweep_fee(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    if not cfg["fees"]:
        raise ConfigError("sweep-fee needs a nonempty fees list")
    base = _campaign_config(cfg, _single_process(cfg, "sweep-fee"))
    result = sweep_fee(base, cfg["fees"], threads=threads)
    bundle = Bundle(out)
    _sweep_rows_csv(bundle, result["rows"], ["fee", "f_over_sigma"],
                    "campaign summaries per fee level")
    bundle.write_json("baseline.json", result["baseline"],
                      "fee-free campaign on the same per-run seeds")
    bundle.write_json("fits.json", result["fits"],
                      "deep-fee scaling and the trade-thinning crossover")
    notes = []
    if result["fits"].get("deep_volume_slope") is not None:
        notes.append(f"deep-fee volume slope {result['fits']['deep_volume_slope']:.3f}")
    if result["fits"].get("crossover_fee"):
        notes.append(f"mean wait crosses 2 steps near fee {result['fits']['crossover_fee']:.3g}")
    return bundle, notes or ["sweep complete"]


def _run_sweep_sigma(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    if not cfg["sigmas"]:
        raise ConfigError("sweep-sigma needs a nonempty sigmas list")
    base = _campaign_config(cfg, _single_process(cfg, "sweep-sigma"))
    result = sweep_volume_vs_sigma(base, cfg["sigmas"], threads=threads)
    bundle = Bundle(out)
    _sweep_rows_csv(bundle, result["rows"], ["sigma"], "campaign summaries per volatility")
    bundle.write_json(
        "fits.json",
        {k: result[k] for k in
         ("volume_slope", "volume_slope_stderr", "lvr_slope", "lvr_slope_stderr")},
        "log-log scaling of volume and loss with volatility",
    )
    return bundle, [f"volume ~ sigma^{result['volume_slope']:.3f}, "
                    f"loss ~ sigma^{result['lvr_slope']:.3f}"]


def _run_sweep_steps(cfg: dict, out: Path, threads: int | None) -> tuple[Bundle, list[str]]:
    if not cfg["steps_list"]:
        raise ConfigError("sweep-steps needs a nonempty steps_list")
    base = _campaign_config(cfg, _single_process(cfg, "sweep-steps"))
    result = sweep_volume_vs_steps(
        base, cfg["steps_list"], total_variance=cfg["total_variance"], threads=threads
    )
    bundle = Bundle(out)
    _sweep_rows_csv(bundle, result["rows"], ["n_steps", "sigma"],
                    "campaign summaries per step count at fixed total variance")
    bundle.write_json(
        "fits.json",
        {k: result[k] for k in
         ("volume_slope", "volume_slope_stderr", "lvr_relative_spread")},
        "volume scaling with sampling rate; loss stays put",
    )
    return bundle, [f"volume ~ n^{result['volume_slope']:.3f}, loss spread "
                    f"{result['lvr_relative_spread'] * 100:.2f}%"]


_RUNNERS = {
    ("simulate",): ("simulate", _run_simulate),
    ("analytic", "il-pdf"): ("il-pdf", _run_il_pdf),
    ("analytic", "il-mean"): ("il-mean", _run_il_mean),
    ("analytic", "lvr-mean"): ("lvr-mean", _run_lvr_mean),
    ("analytic", "sample-il"): ("sample-il", _run_sample_il),
    ("analytic", "clt-sum"): ("clt-sum", _run_clt_sum),
    ("analytic", "first-passage"): ("first-passage", _run_first_passage),
    ("sweep", "fee"): ("sweep-fee", _run_sweep_fee),
    ("sweep", "sigma"): ("sweep-sigma", _run_sweep_sigma),
    ("sweep", "steps"): ("sweep-steps", _run_sweep_steps),
}


def _execute(command: tuple[str, ...], cfg: dict, out: Path, threads: int | None) -> list[str]:
    mode, runner = _RUNNERS[command]
    bundle, notes = runner(cfg, out, threads)
    n_files = bundle.seal(list(command), cfg)
    return notes + [f"wrote {n_files} files to {bundle.dir}"]


def _cmd_bundle(args: argparse.Namespace, command: tuple[str, ...]) -> int:
    mode = _RUNNERS[command][0]
    cfg, preset_name = _resolve(args, mode)
    out = _out_dir(args, preset_name or mode)
    threads = args.threads
    for line in _execute(command, cfg, out, threads):
        print(line)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load manifest {path}: {exc}") from None
    command = tuple(manifest["command"])
    if command not in _RUNNERS:
        raise ConfigError(f"manifest names unknown command {list(command)}")
    if manifest.get("version") != __version__:
        print(f"note: bundle written by version {manifest.get('version')}, "
              f"replaying under {__version__}")
    cfg = manifest["config"]
    bundle_dir = path.parent
    mismatches = 0
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "replay"
        _execute(command, cfg, out, args.threads)
        stored = {entry["path"]: entry["sha256"] for entry in manifest["outputs"]}
        fresh = {}
        for name in sorted(p.name for p in out.iterdir() if p.name != "manifest.json"):
            fresh[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
        for name in sorted(set(stored) | set(fresh)):
            if name not in fresh:
                print(f"MISSING   {name}")
                mismatches += 1
            elif name not in stored:
                print(f"EXTRA     {name}")
                mismatches += 1
            elif stored[name] != fresh[name]:
                print(f"MISMATCH  {name}")
                mismatches += 1
            else:
                # the re-run agrees with the manifest; now check the bundle
                # on disk was not edited after sealing
                on_disk = bundle_dir / name
                if not on_disk.is_file():
                    print(f"MISSING   {name} (bundle file deleted)")
                    mismatches += 1
                elif hashlib.sha256(on_disk.read_bytes()).hexdigest() != stored[name]:
                    print(f"MISMATCH  {name} (bundle file edited after sealing)")
                    mismatches += 1
                else:
                    print(f"ok        {name}")
    if mismatches:
        print(f"replay differs in {mismatches} file(s)")
        return 1
    print("replay reproduced every file byte for byte")
    return 0


def _cmd_presets(args: argparse.Namespace) -> int:
    for name in preset_names():
        preset = get_preset(name)
        print(f"{name}\n    {preset.description}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_key_flags(parser: argparse.ArgumentParser, keys: tuple[str, ...]) -> None:
    for key in keys:
        parser.add_argument(
            "--" + key.replace("_", "-"),
            dest=key,
            default=None,
            metavar="V",
            help=f"{_KEYS[key][2]} (default {_KEYS[key][1] or 'empty'})",
        )


def _add_io_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default=None, help="start from a named preset")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="KEY=VALUE file applied over the preset")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="bundle directory (default $AMM_LAB_OUT/<name>)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: all cores; never changes results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ammlab",
        description="Monte Carlo and closed-form laboratory for constant-product "
                    "market-making losses",
    )
    parser.add_argument("--version", action="version", version=f"ammlab {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    for command, (mode, _) in _RUNNERS.items():
        if len(command) == 1:
            p = sub.add_parser(command[0], help=f"run a {mode} study")
            _add_io_flags(p)
            _add_key_flags(p, _MODE_KEYS[mode])
            p.set_defaults(func=lambda a, c=command: _cmd_bundle(a, c))

    for group, label in (("analytic", "closed-form and distribution commands"),
                         ("sweep", "parameter sweeps")):
        gp = sub.add_parser(group, help=label)
        gsub = gp.add_subparsers(dest=f"{group}_cmd", required=True)
        for command, (mode, _) in _RUNNERS.items():
            if len(command) == 2 and command[0] == group:
                p = gsub.add_parser(command[1], help=f"run a {mode} study")
                _add_io_flags(p)
                _add_key_flags(p, _MODE_KEYS[mode])
                p.set_defaults(func=lambda a, c=command: _cmd_bundle(a, c))

    rp = sub.add_parser("replay", help="re-run a bundle's manifest and verify the bytes")
    rp.add_argument("manifest", help="bundle directory or manifest.json path")
    rp.add_argument("--threads", type=int, default=None)
    rp.set_defaults(func=_cmd_replay)

    lp = sub.add_parser("presets", help="list the canned study configurations")
    lp.set_defaults(func=_cmd_presets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
