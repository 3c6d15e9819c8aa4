"""Command-line entry point: ``gated-eoc <subcommand> [options]``.

Every option can also come from a plain-text config file (``--config``)
holding ``key = value`` lines. A key may carry a section prefix naming the
subcommand (``lyapunov.T = 2000``); unprefixed keys apply to every
subcommand that has that option, and prefixed keys win over unprefixed
ones. Blank lines and lines starting with ``#`` are ignored. Precedence is
command-line flag > config file > built-in default.

Environment overrides (only these two):
  GATED_EOC_OUTPUT_DIR  directory for output when ``--out`` is not given
                        (file name ``<subcommand>.<format>``)
  GATED_EOC_JOBS        default worker count when ``--jobs`` is not given
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .architecture import ArchitectureSpec
from .criterion import extract_MLR, critical_gain, gc_asymptotic
from .disorder import BiasScheme, NetworkConfig, realize
from .errors import GatedEOCError
from .lyapunov import (
    DEFAULT_EPS,
    DEFAULT_T,
    DEFAULT_TOL_G,
    DEFAULT_TRANSIENT,
    find_crossing,
    lambda_grid,
    phase_diagram,
)
from .observables import estimate_q_inf
from .parallel import set_default_jobs
from .reservoir import MackeyGlassConfig, ReservoirConfig, mackey_glass, rc_heatmap, rc_sweep
from .results import SweepResult, format_value, write_results
from .spectrum import build_jacobian, eigenvalues, radius_vs_gain_sweep

ENV_OUTPUT_DIR = "GATED_EOC_OUTPUT_DIR"
ENV_JOBS = "GATED_EOC_JOBS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- typed list parsers --------------------------------------------------------------

def float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def float_pair(text):
    vals = float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return tuple(vals)


# -- option registry -------------------------------------------------------------------
# Defaults live here rather than in argparse so that "was this flag given?"
# can be told apart from "the flag equals its default".

class Options:
    def __init__(self, parser, name):
        self.parser = parser
        self.name = name
        self.defaults = {}
        self.types = {}

    def add(self, flag, default, type=str, help="", **kw):
        dest = flag.lstrip("-").replace("-", "_")
        self.defaults[dest] = default
        self.types[dest] = type
        shown = ",".join(map(str, default)) if isinstance(default, (list, tuple)) else default
        self.parser.add_argument(flag, dest=dest, type=type, default=None,
                                 help=f"{help} (default: {shown})", **kw)


def _network_options(o: Options, arch="lstm", N=1000):
    o.add("--arch", arch, str, "architecture: lstm, gru or rnn", choices=["lstm", "gru", "rnn"])
    o.add("--N", N, int, "hidden units")
    o.add("--seed", 0, int, "master seed")


def _bias_options(o: Options, bias="gaussian"):
    o.add("--bias", bias, str, "bias scheme", choices=["zero", "gaussian", "chrono"])
    o.add("--sb", 0.0, float, "gate-bias standard deviation s_b (gaussian)")
    o.add("--sc", 0.0, float, "candidate-bias standard deviation s_c")
    o.add("--tmax", 100.0, float, "chrono: largest timescale T_max")
    o.add("--output-bias", "zero", str, "chrono: output-gate bias", choices=["zero", "gaussian"])
    o.add("--so", 0.0, float, "chrono: output-gate bias standard deviation")


def _benettin_options(o: Options):
    o.add("--T", DEFAULT_T, int, "Benettin steps")
    o.add("--transient", DEFAULT_TRANSIENT, int, "discarded initial steps")
    o.add("--eps", DEFAULT_EPS, float, "trajectory separation")
    o.add("--h0", 1.0, float, "initial state value (h0 = value * ones)")


def build_parser():
    parser = _Parser(prog="gated-eoc",
                     description="Edge-of-chaos analysis of randomly initialized gated RNNs.",
                     epilog=f"Environment: {ENV_OUTPUT_DIR}, {ENV_JOBS}.")
    parser.add_argument("--version", action="version", version=f"gated-eoc {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    registry = {}

    def command(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", help="key=value config file (flags override it)")
        p.add_argument("--out", help="output file (default: stdout, or "
                                     f"${ENV_OUTPUT_DIR}/<command>.<format>)")
        p.add_argument("--jobs", type=int, help=f"worker processes (default: ${ENV_JOBS} or 1)")
        p.add_argument("-v", "--verbose", action="store_true", help="extra diagnostics on stderr")
        o = Options(p, name)
        registry[name] = o
        return o

    o = command("gc", "closed-form critical gain")
    _network_options(o)
    _bias_options(o, bias="zero")
    o.add("--mode", "asymptotic", str, "asymptotic expectation or finite_N sampled triples",
          choices=["asymptotic", "finite_N"])
    o.add("--replicas", 1, int, "finite_N: sampled realizations to average")
    o.add("--format", "text", str, "output format", choices=["text", "csv", "json"])

    o = command("qinf", "long-time order parameter q_inf versus gain")
    _network_options(o, N=500)
    _bias_options(o)
    o.add("--gains", [1.0, 3.0], float_list, "comma-separated gains")
    o.add("--T", 4000, int, "time steps")
    o.add("--replicas", 20, int, "replicas")
    o.add("--tail-window", 0, int, "averaging window; 0 = min(T/4, 500)")
    o.add("--h0", 1.0, float, "initial state value (h0 = value * ones)")
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])

    o = command("lyapunov", "maximal Lyapunov exponent on a gain grid or its zero crossing")
    _network_options(o)
    _bias_options(o)
    _benettin_options(o)
    o.add("--gains", [1.5, 2.0, 2.5], float_list, "grid mode: comma-separated gains")
    o.add("--replicas", 10, int, "replicas")
    o.add("--bisect", 0, int, "1 = locate the zero crossing instead of a grid sweep")
    o.add("--bracket", (1.0, 3.0), float_pair, "crossing search bracket lo,hi")
    o.add("--tol", DEFAULT_TOL_G, float, "crossing tolerance in g")
    o.add("--crossing-mode", "per_replica", str, "per-replica crossings or one shared bracket",
          choices=["per_replica", "shared"])
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])

    o = command("phase", "phase diagram: predicted g_c(s_b) and empirical crossings")
    _network_options(o)
    _benettin_options(o)
    o.add("--sb", [0.0, 1.0, 2.0, 3.0], float_list, "comma-separated s_b values")
    o.add("--mode", "both", str, "which columns to compute", choices=["predicted", "empirical", "both"])
    o.add("--replicas", 10, int, "replicas per s_b")
    o.add("--rel-tol", 5e-3, float, "crossing tolerance relative to predicted g_c")
    o.add("--expand", 8, int, "bracket expansions (x4) allowed when there is no sign change")
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])

    o = command("spectrum", "spectral radius of the origin Jacobian versus gain")
    _network_options(o, N=2000)
    _bias_options(o)
    o.add("--gains", [1.9, 2.0, 2.1], float_list, "comma-separated gains")
    o.add("--replicas", 5, int, "replicas")
    o.add("--tol", 1e-8, float, "power-iteration tolerance")
    o.add("--max-iters", 5000, int, "power-iteration cap")
    o.add("--restarts", 8, int, "random restarts")
    o.add("--dump-eigs", "", str, "write all eigenvalues (re, im) of replica 0 at the first "
                                  "gain to this CSV (N <= 300)")
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])

    o = command("reservoir", "Mackey-Glass reservoir benchmark over g/g_c (and s_b)")
    o.add("--arch", "lstm", str, "architecture", choices=["lstm", "gru", "rnn"])
    o.add("--N", 500, int, "reservoir size")
    o.add("--sb", [0.0], float_list, "comma-separated s_b; more than one gives a heatmap")
    o.add("--ratios", [0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0], float_list, "g/g_c grid")
    o.add("--seeds", [0, 1, 2, 3, 4], int_list, "network seeds")
    o.add("--heatmap", 0, int, "1 = row-normalized accuracy table even for one s_b")
    o.add("--normalization", "asymptotic", str, "g_c used for g/g_c",
          choices=["asymptotic", "finite_N"])
    o.add("--washout", 500, int, "reservoir washout steps")
    o.add("--train", 3000, int, "training samples")
    o.add("--test", 1000, int, "test samples")
    o.add("--ridge", 1e-6, float, "ridge penalty lambda")
    o.add("--input-scale", 1.0, float, "input amplitude")
    o.add("--mg-washout", 1000, int, "Mackey-Glass samples discarded")
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])

    o = command("mackey-glass", "generate the Mackey-Glass series")
    o.add("--beta", 0.2, float, "beta")
    o.add("--gamma", 0.1, float, "gamma")
    o.add("--n", 10.0, float, "Hill exponent n")
    o.add("--tau", 25, int, "delay")
    o.add("--history", 1.2, float, "constant initial history")
    o.add("--length", 6501, int, "total steps including washout")
    o.add("--washout", 1000, int, "initial samples discarded")
    o.add("--format", "csv", str, "output format", choices=["csv", "json"])
    return parser, registry


# -- configuration resolution ------------------------------------------------------------

def read_config_file(path) -> dict:
    entries = {}
    with open(path, encoding="utf8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise UsageError(f"{path}:{lineno}: expected key = value")
            entries[key.strip()] = value.strip()
    return entries


def resolve(args, options: Options) -> dict:
    """Merge flags, config file and defaults into one dictionary."""
    file_values = read_config_file(args.config) if args.config else {}
    known = set(options.defaults)
    for key in file_values:
        section, _, name = key.rpartition(".")
        name = name.replace("-", "_")
        if section and section not in (options.name,) and section not in _ALL_COMMANDS:
            raise UsageError(f"config key {key!r} has unknown section {section!r}")
        if section == options.name and name not in known:
            raise UsageError(f"config key {key!r} is not an option of {options.name}")
    resolved = {}
    for dest, default in options.defaults.items():
        value = getattr(args, dest)
        if value is None:
            text = None
            for key in (f"{options.name}.{dest}", f"{options.name}.{dest.replace('_', '-')}",
                        dest, dest.replace("_", "-")):
                if key in file_values:
                    text = file_values[key]
                    break
            if text is not None:
                try:
                    value = options.types[dest](text)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config value for {dest}: {exc}")
            else:
                value = default
        resolved[dest] = value
    return resolved


_ALL_COMMANDS = ("gc", "qinf", "lyapunov", "phase", "spectrum", "reservoir", "mackey-glass")


def _scheme(c) -> BiasScheme:
    if c["bias"] == "zero":
        return BiasScheme(variant="zero", s_c=c["sc"])
    if c["bias"] == "gaussian":
        return BiasScheme.gaussian(c["sb"], s_c=c["sc"])
    return BiasScheme.chrono(c["tmax"], output_scheme=c["output_bias"], s_o=c["so"], s_c=c["sc"])


def _network(c) -> NetworkConfig:
    return NetworkConfig(arch=c["arch"], N=c["N"], K=1, bias=_scheme(c), seed=c["seed"])


def _h0(c):
    return np.full(c["N"], float(c["h0"]))


# -- subcommands ----------------------------------------------------------------------------

def cmd_gc(c, log):
    arch = ArchitectureSpec(c["arch"])
    scheme = _scheme(c)
    if c["mode"] == "asymptotic":
        pred = gc_asymptotic(arch, scheme)
        g_c, extra = pred.g_c, pred.details
    else:
        gains, summaries = [], []
        for r in range(c["replicas"]):
            triple = extract_MLR(realize(_network(c), replica=r))
            gains.append(critical_gain(triple, arch, scheme).g_c)
            summaries.append(triple.summary())
        g_c = float(np.mean(gains))
        extra = summaries[0]
        log(" ".join(f"{k}={format_value(v)}" for k, v in extra.items()))
    result = SweepResult(columns=["arch", "scheme", "s_b", "mode", "g_c"],
                         metadata={**scheme.describe(), "arch": arch.kind, "mode": c["mode"],
                                   "N": c["N"], "seed": c["seed"], "replicas": c["replicas"],
                                   **{k: v for k, v in extra.items() if k != "N"}})
    result.add(arch=arch.kind, scheme=scheme.variant, s_b=scheme.s_b, mode=c["mode"], g_c=g_c)
    return result


def cmd_qinf(c, log):
    cfg = _network(c)
    result = SweepResult(columns=["g", "s_b", "s_c", "N", "T", "replicas", "mean_q_inf", "ci95"],
                         metadata=_meta(c))
    for g in c["gains"]:
        est = estimate_q_inf(cfg, g, T=c["T"], replicas=c["replicas"],
                             tail_window=c["tail_window"] or None, h0=_h0(c))
        log(f"g={g} q_inf={est.mean_q_inf:.6g} +/- {est.ci95_halfwidth:.3g}")
        result.add(**est.row(cfg))
    return result


def cmd_lyapunov(c, log):
    cfg = _network(c)
    kw = dict(T=c["T"], transient=c["transient"], eps=c["eps"], h0=_h0(c))
    if c["bisect"]:
        est = find_crossing(cfg, c["bracket"], tol_g=c["tol"], replicas=c["replicas"],
                            mode=c["crossing_mode"], **kw)
        result = SweepResult(columns=["s_b", "g_star", "ci95", "bracket_lo", "bracket_hi",
                                      "replicas", "N", "T", "eps", "seed"], metadata=_meta(c))
        result.add(s_b=cfg.bias.s_b, g_star=est.g_star, ci95=est.ci95_halfwidth,
                   bracket_lo=est.bracket[0], bracket_hi=est.bracket[1], replicas=est.replicas,
                   N=cfg.N, T=c["T"], eps=c["eps"], seed=cfg.seed)
        return result
    result = SweepResult(columns=["s_b", "g", "lambda_max", "stderr", "N", "T", "eps", "seed"],
                         metadata=_meta(c))
    for est in lambda_grid(cfg, c["gains"], replicas=c["replicas"], **kw):
        result.add(s_b=cfg.bias.s_b, g=est.g, lambda_max=est.lambda_max, stderr=est.stderr,
                   N=cfg.N, T=c["T"], eps=c["eps"], seed=cfg.seed)
    return result


def cmd_phase(c, log):
    def report(est):
        log(f"s_b={est.s_b}: g_star={est.g_star:.6g} +/- {est.ci95_halfwidth:.3g}")

    result = phase_diagram(c["arch"], c["sb"], N=c["N"], replicas=c["replicas"], seed=c["seed"],
                           mode=c["mode"], T=c["T"], transient=c["transient"], eps=c["eps"],
                           rel_tol=c["rel_tol"], expand=c["expand"], on_crossing=report)
    result.metadata.update(_meta(c))
    return result


def cmd_spectrum(c, log):
    cfg = _network(c)
    result = radius_vs_gain_sweep(cfg, c["gains"], replicas=c["replicas"], tol=c["tol"],
                                  max_iters=c["max_iters"], restarts=c["restarts"])
    result.metadata.update(_meta(c))
    if c["dump_eigs"]:
        eig = eigenvalues(build_jacobian(realize(cfg), None, c["gains"][0]))
        dump = SweepResult(columns=["re", "im"], metadata={**_meta(c), "g": c["gains"][0]})
        for z in eig:
            dump.add(re=float(z.real), im=float(z.imag))
        write_results(dump, "csv", c["dump_eigs"])
    return result


def cmd_reservoir(c, log):
    mg = MackeyGlassConfig(washout=c["mg_washout"])
    cfg = ReservoirConfig(arch=c["arch"], N=c["N"], mg=mg, reservoir_washout=c["washout"],
                          train_length=c["train"], test_length=c["test"],
                          ridge_lambda=c["ridge"], input_scale=c["input_scale"])
    if len(c["sb"]) > 1 or c["heatmap"]:
        return rc_heatmap(cfg, c["sb"], c["ratios"], c["seeds"], c["normalization"])
    return rc_sweep(cfg, c["ratios"], c["seeds"], c["sb"][0], c["normalization"])


def cmd_mackey_glass(c, log):
    cfg = MackeyGlassConfig(beta=c["beta"], gamma=c["gamma"], n=c["n"], tau=c["tau"],
                            history_init=c["history"], length=c["length"], washout=c["washout"])
    u = mackey_glass(cfg)
    result = SweepResult(columns=["t", "u"], metadata=_meta(c))
    for t, v in enumerate(u, start=cfg.washout):
        result.add(t=t, u=float(v))
    return result


COMMANDS = {
    "gc": cmd_gc, "qinf": cmd_qinf, "lyapunov": cmd_lyapunov, "phase": cmd_phase,
    "spectrum": cmd_spectrum, "reservoir": cmd_reservoir, "mackey-glass": cmd_mackey_glass,
}


def _meta(c) -> dict:
    return {k: v for k, v in c.items() if k not in ("format",)}


def _output_path(args, fmt):
    if args.out:
        return args.out
    directory = os.environ.get(ENV_OUTPUT_DIR)
    if directory:
        return os.path.join(directory, f"{args.command}.{'csv' if fmt == 'text' else fmt}")
    return None


def _jobs(args) -> int:
    if args.jobs is not None:
        jobs = args.jobs
    else:
        text = os.environ.get(ENV_JOBS, "1")
        try:
            jobs = int(text)
        except ValueError:
            raise UsageError(f"{ENV_JOBS} must be an integer, got {text!r}")
    if jobs < 1:
        raise UsageError(f"jobs must be >= 1, got {jobs}")
    return jobs


def main(argv=None) -> int:
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        set_default_jobs(_jobs(args))
        config = resolve(args, registry[args.command])
        verbose = args.verbose

        def log(msg):
            if verbose:
                print(msg, file=sys.stderr)

        result = COMMANDS[args.command](config, log)
        fmt = config["format"]
        path = _output_path(args, fmt)
        if fmt == "text":
            text = format_value(float(result.column("g_c")[0])) + "\n"
            if path:
                with open(path, "w", encoding="utf8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return 0
        text = write_results(result, fmt, path)
        if path is None:
            sys.stdout.write(text)
        return 0
    except UsageError as exc:
        print(f"gated-eoc: usage error: {exc}", file=sys.stderr)
        return 2
    except (GatedEOCError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"gated-eoc: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
