"""Command-line front end.

Commands: ``design``, ``evaluate``, ``ccdf``, ``sense`` and ``ber``.  Exit codes
are 0 on success, 1 on a configuration error and 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, io
from .baselines import conventional_afdm, gps_sweep
from .config import ConfigError, RunConfig, normalize_mode, normalize_vars, parse_source
from .core import synthesize, synthesize_oversampled
from .metrics import (
    ambiguity_grid,
    build_quadform_cache,
    ccdf,
    papr,
    papr_samples,
    weighted_isl,
    weighted_isl_samples,
)
from .optimizer import TRACE_FIELDS, run_jipd_mm
from .sim.ber import BerScenario, run_ber_mc
from .sim.sensing import CfarConfig, DetectionScenario, run_detection_mc

logger = logging.getLogger("afdm_shaping")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", type=Path, help="INI file overriding the shipped defaults")
    p.add_argument("--seed", type=int, default=0, help="base seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="afdm-shaping", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", help="design waveforms for a range of seeds")
    _common(p)
    p.add_argument("--mode", help="af_shape | papr_min | joint")
    p.add_argument("--vars", help="rcs_only (rcs) | rcs_plus_prechirp (rcs+c2)")
    p.add_argument("--rcs-ratio", type=float, help="fraction of reserved subcarriers")
    p.add_argument("--gamma", type=float, help="PAPR target in dB")
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--baseline", choices=("none", "conventional", "gps"))

    p = sub.add_parser("evaluate", help="recompute metrics from waveform files")
    _common(p)
    p.add_argument("files", nargs="+", type=Path)
    p.add_argument("--reference", nargs="*", type=Path, default=[],
                   help="waveforms whose mean ISL defines the 0 dB row")

    p = sub.add_parser("ccdf", help="PAPR CCDF of a waveform source")
    _common(p)
    p.add_argument("--source")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("sense", help="two-target detection Monte Carlo")
    _common(p)
    p.add_argument("--sources", help="comma-separated waveform sources")
    p.add_argument("--pfa", type=float)
    p.add_argument("--snr", help="SNR grid start:step:stop (dB)")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("ber", help="BER Monte Carlo with PA nonlinearity")
    _common(p)
    p.add_argument("--sources", help="comma-separated waveform sources")
    p.add_argument("--ibo", help="input back-off in dB, or 'none' for a linear PA")
    p.add_argument("--channel", choices=("awgn", "random", "fixed"))
    p.add_argument("--snr", help="SNR grid start:step:stop (dB)")
    p.add_argument("--min-bits", type=int)
    return parser


def _overrides(args):
    c = args.command
    o = {}
    if c == "design":
        o = {("optimizer", "mode"): args.mode and normalize_mode(args.mode),
             ("optimizer", "variable_set"): args.vars and normalize_vars(args.vars),
             ("system", "reserved_ratio"): args.rcs_ratio,
             ("optimizer", "gamma_db"): args.gamma,
             ("optimizer", "max_iter"): args.max_iter,
             ("design", "seeds"): args.seeds,
             ("design", "baseline"): args.baseline}
    elif c == "ccdf":
        o = {("ccdf", "source"): args.source, ("ccdf", "trials"): args.trials}
    elif c == "sense":
        o = {("sense", "sources"): args.sources, ("sense", "pfa"): args.pfa,
             ("sense", "snr_db"): args.snr, ("sense", "trials"): args.trials}
    elif c == "ber":
        o = {("ber", "sources"): args.sources, ("ber", "ibo_db"): args.ibo,
             ("ber", "channel"): args.channel, ("ber", "snr_db"): args.snr,
             ("ber", "min_bits"): args.min_bits}
    return o


# ---------------------------------------------------------------------------
# workers (top level so that they pickle)

def make_design(cfg, laz, kind, options, seed):
    """Return ``(design, result or None)`` for one seed of one source."""
    init = conventional_afdm(cfg, seed)
    if kind == "conventional":
        return init, None
    if kind == "gps":
        return gps_sweep(cfg, init), None
    res = run_jipd_mm(cfg, laz, init, options)
    return res.design, res


def _design_task(job):
    cfg, laz, kind, options, seed = job
    try:
        design, res = make_design(cfg, laz, kind, options, seed)
        return seed, design, res, None
    except Exception as exc:  # recorded per seed, the run continues
        logger.debug("seed %d failed", seed, exc_info=True)
        return seed, None, None, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _source_jobs(run_cfg, source, seeds):
    cfg = run_cfg.afdm(source["ratio"])
    laz = run_cfg.laz()
    opts = None
    if source["kind"] not in ("conventional", "gps"):
        opts = run_cfg.optimizer_options(mode=source["kind"], variable_set=source["variable_set"],
                                         gamma_db=source["gamma_db"])
    return cfg, [(cfg, laz, source["kind"], opts, s) for s in seeds]


def _source_designs(run_cfg, source, seeds, threads):
    cfg, jobs = _source_jobs(run_cfg, source, seeds)
    out = _map(_design_task, jobs, threads)
    bad = [f"{source['label']} seed {s}: {err}" for s, _, _, err in out if err]
    return cfg, [d for _, d, _, err in out if not err], bad


# ---------------------------------------------------------------------------
# commands

def cmd_design(run_cfg, args):
    d = run_cfg["design"]
    seeds = [args.seed + i for i in range(d["seeds"])]
    if d["baseline"] != "none":
        source = {"kind": d["baseline"], "ratio": 0.0, "label": d["baseline"]}
    else:
        o = run_cfg["optimizer"]
        source = parse_source(f"{o['mode']}:{o['variable_set']}:{run_cfg['system']['reserved_ratio']}"
                              + (f":{o['gamma_db']}" if o["gamma_db"] > 0 else ""), run_cfg)
    cfg, jobs = _source_jobs(run_cfg, source, seeds)
    results = _map(_design_task, jobs, args.threads)
    laz = run_cfg.laz()
    outputs, failures, rows = [], [], []
    for seed, design, res, err in results:
        if err:
            failures.append(f"seed {seed}: {err}")
            rows.append((seed, "error", "nan", "nan", "nan", 0, 0, 0))
            continue
        stem = args.out / f"seed_{seed}"
        samples = synthesize_oversampled(cfg, design)
        outputs.append(io.write_waveform(stem.with_suffix(".afdm"), samples, cfg.n_subcarriers,
                                         cfg.oversampling))
        outputs.append(io.write_csv(Path(f"{stem}_samples.csv"), ("index", "re", "im"),
                                    ((i, v.real, v.imag) for i, v in enumerate(samples))))
        cache = build_quadform_cache(cfg, laz, design.b)
        isl = weighted_isl(design.u, cache)
        isl0 = weighted_isl(conventional_afdm(cfg, seed).u, cache) if res is None else res.isl_initial
        p_db = papr(design.u, cache).db
        meta = {"source": source["label"], "seed": seed, "reserved_ratio": source["ratio"],
                "laz": [laz.tau_max, laz.mu_min, laz.mu_max, laz.n_mu]}
        if res is not None:
            meta.update(mode=res.options.mode, gamma_db=res.options.gamma_db,
                        variable_set=res.options.variable_set)
            outputs.append(io.write_csv(Path(f"{stem}_trace.csv"), TRACE_FIELDS, res.trace))
        outputs.append(io.write_json(stem.with_suffix(".json"), io.design_to_dict(design, **meta)))
        rows.append((seed, "ok", isl, 10 * np.log10(isl0 / isl), p_db,
                     res.iterations if res else 0, int(res.converged) if res else 1,
                     int(res.feasible) if res else 1))
    outputs.append(io.write_csv(args.out / "summary.csv",
                                ("seed", "status", "isl", "isl_reduction_db", "papr_db",
                                 "iterations", "converged", "feasible"), rows))
    ok = [r for r in rows if r[1] == "ok"]
    if ok:
        logger.info("%s: mean ISL reduction %.2f dB, mean PAPR %.2f dB over %d seeds",
                    source["label"], np.mean([r[3] for r in ok]), np.mean([r[4] for r in ok]), len(ok))
    return outputs, failures, bool(ok)


def evaluate_file(path, laz):
    """Metrics of one stored waveform: ``(row values, AF grid)``."""
    samples, n, lp = io.read_waveform(path)
    s = np.sqrt(lp) * samples[::lp]
    isl = weighted_isl_samples(s, laz)
    grid = ambiguity_grid(s, laz)
    laz_match = ""
    side = Path(path).with_suffix(".json")
    if side.exists():
        import json

        stored = json.loads(side.read_text()).get("laz")
        if stored is not None:
            laz_match = int(stored == [laz.tau_max, laz.mu_min, laz.mu_max, laz.n_mu])
    return (n, lp, isl, 10 * np.log10(isl), papr_samples(samples), laz_match), grid


def cmd_evaluate(run_cfg, args):
    laz = run_cfg.laz()
    outputs, failures = [], []
    ref = []
    for path in args.reference:
        try:
            ref.append(evaluate_file(path, laz)[0][2])
        except (OSError, ValueError) as exc:
            failures.append(f"{path}: {exc}")
    ref_db = 10 * np.log10(np.mean(ref)) if ref else None
    rows = []
    for path in args.files:
        try:
            vals, grid = evaluate_file(path, laz)
        except (OSError, ValueError) as exc:
            failures.append(f"{path}: {exc}")
            rows.append((str(path), "error", "", "", "nan", "nan", "nan", "nan", ""))
            continue
        n, lp, isl, isl_db, p_db, match = vals
        rel = isl_db - ref_db if ref_db is not None else "nan"
        rows.append((str(path), "ok", n, lp, isl, isl_db, rel, p_db, match))
        outputs.append(io.write_csv(args.out / f"af_{Path(path).stem}.csv", ("tau", "mu", "re", "im", "abs2"),
                                    grid.rows()))
    outputs.append(io.write_csv(args.out / "evaluate.csv",
                                ("file", "status", "n", "oversampling", "isl", "isl_db",
                                 "isl_rel_db", "papr_db", "laz_matches"), rows))
    report = [(r[0], r[4], -r[6] if r[1] == "ok" and ref_db is not None else "nan") for r in rows]
    outputs.append(io.write_csv(args.out / "isl_report.csv",
                                ("instance", "isl_raw", "isl_db_vs_baseline"), report))
    return outputs, failures, any(r[1] == "ok" for r in rows)


def cmd_ccdf(run_cfg, args):
    c = run_cfg["ccdf"]
    source = parse_source(c["source"], run_cfg)
    seeds = [args.seed + i for i in range(c["trials"])]
    cfg, designs, failures = _source_designs(run_cfg, source, seeds, args.threads)
    vals = [papr_samples(synthesize_oversampled(cfg, d)) for d in designs]
    if not vals:
        return [], failures, False
    outputs = [
        io.write_csv(args.out / f"papr_{source['label']}.csv", ("index", "papr_db"), enumerate(vals)),
        io.write_csv(args.out / f"ccdf_{source['label']}.csv", ("gamma_db", "ccdf"),
                     zip(c["thresholds_db"], ccdf(vals, c["thresholds_db"]))),
    ]
    return outputs, failures, True


def cmd_sense(run_cfg, args):
    c = run_cfg["sense"]
    scenario = DetectionScenario(
        strong_cell=(c["strong_delay"], c["strong_doppler"]),
        weak_offset=(c["weak_delay"] - c["strong_delay"], c["weak_doppler"] - c["strong_doppler"]),
        gap_db=c["gap_db"], snr_db=tuple(c["snr_db"]), trials=c["trials"],
        cfar=CfarConfig(c["guard"], c["train"], c["pfa"]), roc_snr_db=c["roc_snr_db"])
    seeds = [args.seed + i for i in range(c["n_waveforms"])]
    outputs, failures = [], []
    for text in c["sources"]:
        source = parse_source(text, run_cfg)
        cfg, designs, bad = _source_designs(run_cfg, source, seeds, args.threads)
        failures += bad
        if not designs:
            continue
        res = run_detection_mc(scenario, [synthesize(cfg, d) for d in designs], seed=args.seed)
        outputs.append(io.write_csv(args.out / f"pd_{source['label']}.csv",
                                    ("snr_db", "pd", "ci_lo", "ci_hi"), res.rows()))
        outputs.append(io.write_csv(args.out / f"roc_{source['label']}.csv", ("pfa", "pd"),
                                    res.roc_rows()))
    return outputs, failures, bool(outputs)


def cmd_ber(run_cfg, args):
    c = run_cfg["ber"]
    scenario = BerScenario(snr_db=tuple(c["snr_db"]), ibo_db=c["ibo_db"], smoothness=c["smoothness"],
                           channel=c["channel"], min_bits=c["min_bits"],
                           order=run_cfg["system"]["psk_order"], profile_db=tuple(c["profile_db"]),
                           cp_len=c["cp_len"], max_doppler=c["max_doppler"])
    seeds = [args.seed + i for i in range(c["n_waveforms"])]
    outputs, failures = [], []
    for text in c["sources"]:
        source = parse_source(text, run_cfg)
        cfg, designs, bad = _source_designs(run_cfg, source, seeds, args.threads)
        failures += bad
        if not designs:
            continue
        res = run_ber_mc(scenario, cfg, designs, seed=args.seed)
        rows = [(s, b, int(n), int(e)) for s, b, n, e in zip(res.snr_db, res.ber, res.bits, res.errors)]
        outputs.append(io.write_csv(args.out / f"ber_{source['label']}.csv",
                                    ("snr_db", "ber", "bits", "errors"), rows))
    return outputs, failures, bool(outputs)


COMMANDS = {"design": cmd_design, "evaluate": cmd_evaluate, "ccdf": cmd_ccdf,
            "sense": cmd_sense, "ber": cmd_ber}


def _join_grid_values(argv):
    # grids such as "-10:2:10" start with a dash and would read as options
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--snr", "--ibo"):
            out.append(f"{tok}={next(it, '')}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_join_grid_values(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_cfg = RunConfig.load(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outputs, failures, ok = COMMANDS[args.command](run_cfg, args)
        io.write_manifest(args.out, args.command, run_cfg.text, args.seed, outputs, failures,
                          {"argv": argv})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_RUNTIME
    for f in failures:
        print(f"failed: {f}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
