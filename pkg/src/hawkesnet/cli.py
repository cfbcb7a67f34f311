"""Command-line interface: ``hawkesnet {simulate,fit,replicate,stats,gof,convert}``.

Exit codes: 0 success, 1 model or runtime failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings


from . import config as cfgmod
from .dynet import degree_distribution, esp_distribution, summary_statistics
from .errors import ConfigError, HawkesNetError, ParseError
from .estimate import (
    FitOptions,
    Likelihood,
    fit_mle,
    initial_guess,
    parse_report,
    replicate_experiment,
    std_errors,
    write_report,
)
from .gof import bootstrap_pvalue, gof_report, rescale
from .ingest import contacts_to_events, dumps_events, parse_events, read_contacts, write_events
from .process import ModelSpec, branching_ratio, simulate

EXIT_OK, EXIT_MODEL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("hawkesnet")


class UsageError(Exception):
    pass


def _scope(s: str) -> str:
    return {"new-node": "new_node_only", "all-pairs": "all_pairs"}[s]


def _cutoff(s: str):
    if s.lower() in ("none", "off"):
        return "none"
    x = float(s)
    if not 0 < x <= 1:
        raise argparse.ArgumentTypeError("node cutoff must lie in (0, 1]")
    return s


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", metavar="PATH", help="INI run configuration (default: none)")
    g.add_argument("--preset", choices=cfgmod.PRESETS, help="bundled configuration (default: none)")
    g.add_argument("--model", choices=("ba", "cs", "sbm", "ls"), help="mark model (default: from config, else ba)")
    g.add_argument("--edge-scope", choices=("new-node", "all-pairs"),
                   help="candidate edges (default: all-pairs for cs, new-node otherwise)")
    g.add_argument("--activity", choices=("arrival", "last-edge"),
                   help="time a node was last active (default: arrival)")
    g.add_argument("--node-cutoff", type=_cutoff, metavar="FRACTION",
                   help="no new nodes after FRACTION*T; 'none' disables (default: none)")
    g.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config key (repeatable)")
    g.add_argument("--explain", action="store_true", help="print the config schema with defaults and exit")


def _opt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fix", action="append", default=[], metavar="NAME=VALUE",
                   help="hold a parameter fixed (repeatable; default: none)")
    p.add_argument("--init", action="append", default=[], metavar="NAME=VALUE",
                   help="starting value (repeatable; default: data-driven)")
    p.add_argument("--restarts", type=int, help="ground-block restarts (default: 5)")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    # keep defaults spelled out in the help text, append the rest
    def _get_help_string(self, action):
        if "default" in (action.help or ""):
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _Formatter
    ap = argparse.ArgumentParser(prog="hawkesnet", description="Hawkes processes with network-update marks.",
                                 formatter_class=fmt)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an event stream", formatter_class=fmt)
    _model_flags(p)
    p.add_argument("--seed", type=_seed, help="master seed (default: config seeds.master)")
    p.add_argument("--out", metavar="PATH", help="event-stream output (default: stdout)")
    p.add_argument("--max-events", type=int, default=10_000_000, help="explosion guard")

    p = sub.add_parser("fit", help="maximum-likelihood fit of an event stream", formatter_class=fmt)
    p.add_argument("events", help="event-stream file")
    _model_flags(p)
    _opt_flags(p)
    p.add_argument("--std-errors", choices=("hessian", "replication", "none"), default=None,
                   help="standard errors (default: config optimizer.std_errors)")
    p.add_argument("--reps", type=int, default=50, help="replications for replication standard errors")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--seed", type=_seed, help="optimizer seed (default: config seeds.master)")
    p.add_argument("--out", metavar="PATH", help="report output (default: stdout)")

    p = sub.add_parser("replicate", help="simulate and refit repeatedly", formatter_class=fmt)
    _model_flags(p)
    _opt_flags(p)
    p.add_argument("--reps", type=int, default=100, help="number of replications")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--seed", type=_seed, help="master seed (default: config seeds.master)")
    p.add_argument("--out", metavar="PATH", help="CSV output (default: stdout)")

    p = sub.add_parser("stats", help="network summaries and histograms as CSV", formatter_class=fmt)
    p.add_argument("events", help="event-stream file")
    p.add_argument("--out", metavar="DIR", default=".", help="directory for summary/degree/esp CSVs")

    p = sub.add_parser("gof", help="residual KS test of a fitted model", formatter_class=fmt)
    p.add_argument("events", help="event-stream file")
    p.add_argument("report", help="fit report from 'hawkesnet fit'")
    p.add_argument("--bootstrap", type=int, default=0, metavar="N", help="bootstrap replications (0: off, else >= 99)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--seed", type=_seed, default=0, help="bootstrap seed")
    p.add_argument("--residuals", metavar="PATH", help="write residual series CSV")
    p.add_argument("--out", metavar="PATH", help="report output (default: stdout)")

    p = sub.add_parser("convert", help="contact rows 't i j' to an event stream", formatter_class=fmt)
    p.add_argument("contacts", help="whitespace-separated contact file")
    p.add_argument("--out", metavar="PATH", help="event-stream output (default: stdout)")
    p.add_argument("--ids", metavar="PATH", help="identifier map CSV (default: OUT.ids.csv when --out is set)")
    p.add_argument("--rescale", type=float, metavar="T", help="map times affinely onto [0, T] (default: raw times)")
    return ap


# ---------------------------------------------------------------------------


def _pairs(items) -> dict[str, float]:
    out = {}
    for item in items:
        k, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"bad value in {item!r}") from None
    return out


def _load_config(args) -> tuple[cfgmod.RunConfig, bool]:
    """Config from preset, file and flags (later wins). Returns (config, explicit)."""
    cfg = cfgmod.preset(args.preset) if args.preset else cfgmod.defaults()
    if args.config:
        cfg = cfgmod.load(args.config, cfg)
    for item in args.set:
        path, sep, raw = item.partition("=")
        section, dot, key = path.partition(".")
        if not sep or not dot:
            raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(section, key, raw)
    if args.model:
        if args.model != cfg.get("mark", "variant"):
            cfg.set("mark", "variant", args.model)
            if args.model == "cs" and not cfg.get("mark", "theta"):
                cfg.values["mark"]["theta"] = (-6.0, 0.0, 0.0, 0.0)[:len(cfg.get("mark", "stats"))]
            if args.model == "ls" and not cfg.get("mark", "theta"):
                cfg.values["mark"]["theta"] = (-1.0,)
    if args.edge_scope:
        cfg.set("mark", "edge_scope", _scope(args.edge_scope))
    if args.activity:
        cfg.set("mark", "activity", args.activity.replace("-", "_"))
    if args.node_cutoff:
        cfg.set("horizon", "node_cutoff", args.node_cutoff)
    explicit = bool(args.preset or args.config or args.set)
    return cfg, explicit


def _options(cfg: cfgmod.RunConfig, args) -> FitOptions:
    opts = cfg.fit_options()
    opts.fixed.update(_pairs(args.fix))
    opts.init.update(_pairs(args.init))
    if args.restarts is not None:
        opts.restarts = args.restarts
    if getattr(args, "seed", None) is not None:
        opts.seed = args.seed
    return opts


def _read_stream(path: str):
    try:
        return parse_events(path)
    except (ParseError, OSError):
        raise
    except HawkesNetError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg, _ = _load_config(args)
    spec = cfg.model_spec()
    seed = cfg.get("seeds", "master") if args.seed is None else args.seed
    if spec.ground.mu == 0:
        warnings.warn("mu = 0: the stream will be empty", RuntimeWarning, stacklevel=1)
    real = simulate(spec, seed, max_events=args.max_events)
    _emit(dumps_events(real), args.out)
    net = real.network()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        br = branching_ratio(spec)
    summary = (f"events = {len(real.events)}\nnodes = {net.n_nodes}\nedges = {net.n_edges}\n"
               f"branching_ratio = {br:.6g}\nclamp_events = {real.clamp_events}\n"
               f"empty_marks = {real.empty_marks}\nseed = {seed}\n")
    sys.stderr.write(summary)
    return EXIT_OK


def cmd_fit(args) -> int:
    stream = _read_stream(args.events)
    cfg, explicit = _load_config(args)
    spec = cfg.model_spec()
    spec = ModelSpec(spec.ground, spec.mark, stream.T, spec.node_cutoff)
    opts = _options(cfg, args)
    if not explicit:
        start = initial_guess(stream.events, spec, stream.start)
        start.update(opts.init)
        opts.init = start
    lik = Likelihood(stream.events, spec, aux=stream.aux, start=stream.start)
    fit = fit_mle(stream.events, spec, opts, lik=lik)
    method = args.std_errors or cfg.get("optimizer", "std_errors")
    if method != "none":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            std_errors(stream.events, fit, method, aux=stream.aux, reps=args.reps, seed=opts.seed, lik=lik)
    for key in ("start", "time_scale", "time_offset"):
        if key in stream.header:
            fit.meta[key] = stream.header[key]
    fit.meta["source"] = os.path.basename(args.events)
    _emit(write_report(fit), args.out)
    if not fit.converged:
        log.warning("optimizer did not reach the convergence tolerance")
    return EXIT_OK


def cmd_replicate(args) -> int:
    cfg, _ = _load_config(args)
    spec = cfg.model_spec()
    opts = _options(cfg, args)
    seed = cfg.get("seeds", "master") if args.seed is None else args.seed
    table = replicate_experiment(spec, args.reps, seed, opts, jobs=args.jobs)
    _emit(table.to_csv(), args.out)
    if table.failures:
        log.warning("%d of %d replications failed", table.failures, args.reps)
    return EXIT_OK


def _csv_hist(hist: dict, name: str) -> str:
    return f"{name},count\n" + "".join(f"{k},{int(v)}\n" for k, v in sorted(hist.items()))


def cmd_stats(args) -> int:
    net = _read_stream(args.events).network()
    os.makedirs(args.out, exist_ok=True)
    summ = summary_statistics(net)
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("statistic,value\n" + "".join(f"{k},{v:.10g}\n" for k, v in summ.items()))
    with open(os.path.join(args.out, "degree.csv"), "w", encoding="utf-8") as fh:
        fh.write(_csv_hist(degree_distribution(net), "degree"))
    with open(os.path.join(args.out, "esp.csv"), "w", encoding="utf-8") as fh:
        fh.write(_csv_hist(esp_distribution(net), "esp"))
    return EXIT_OK


def cmd_gof(args) -> int:
    stream = _read_stream(args.events)
    with open(args.report, encoding="utf-8") as fh:
        fit = parse_report(fh.read())
    if fit.spec is None:
        raise UsageError("fit report carries no model specification")
    times = stream.times - stream.start
    boot = None
    if args.bootstrap:
        spec = ModelSpec(fit.spec.ground, fit.spec.mark, stream.T - stream.start, fit.spec.node_cutoff)
        boot = bootstrap_pvalue(times, spec, args.bootstrap, args.seed, args.jobs)
    if args.residuals:
        _emit(rescale(times, fit.spec.ground).to_csv(), args.residuals)
    _emit(gof_report(times, fit.spec, boot), args.out)
    return EXIT_OK


def cmd_convert(args) -> int:
    conv = contacts_to_events(read_contacts(args.contacts), rescale_to=args.rescale)
    write_events(conv.stream, args.out) if args.out else sys.stdout.write(dumps_events(conv.stream))
    ids = args.ids or (args.out + ".ids.csv" if args.out else None)
    if ids:
        _emit(conv.id_map_csv(), ids)
    net_nodes = len(conv.ids)
    n_edges = sum(len(ev.mark.new_edges) for ev in conv.events)
    sys.stderr.write(f"rows = {conv.rows}\nevents = {len(conv.events)}\nnodes = {net_nodes}\n"
                     f"edges = {n_edges}\nself_loops_skipped = {conv.self_loops}\n"
                     f"repeats_dropped = {conv.repeats}\n")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "replicate": cmd_replicate, "stats": cmd_stats,
            "gof": cmd_gof, "convert": cmd_convert}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--explain" in argv:
        sys.stdout.write(cfgmod.explain())
        return EXIT_OK
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ParseError, OSError) as exc:
        sys.stderr.write(f"hawkesnet: error: {exc}\n")
        return EXIT_USAGE
    except (HawkesNetError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(f"hawkesnet: {type(exc).__name__}: {exc}\n")
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
