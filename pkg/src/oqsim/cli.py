"""Command-line front end.

Experiments are described in INI files::

    [experiment]
    kind = evolve            ; spectrum | evolve | trajectories | qec | envbench | zeno
    output = out/decay       ; path prefix for the CSV and sidecar files

    [model]
    dims = 2
    hamiltonian = 0.5*sz
    jump.1 = 1.0 | sm        ; rate | expression

    [grid]
    t1 = 5
    dt = 0.001
    sample_every = 10

    [initial]
    basis = 0                ; one index per factor, or `state = maximally_mixed`

    [observables]
    pe = sp*sm               ; column name = expression

    [scheme]                 ; trajectories only
    name = counting
    n_traj = 100
    seed = 0

Every run writes ``<output>.csv`` and a ``<output>.meta.ini`` sidecar that
holds the fully resolved configuration; running the sidecar reproduces the
CSV byte for byte. Exit codes: 2 for configuration errors, 3 for numerical
failures, 4 for requests beyond a capability limit.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import DensityMatrix, HilbertSpace, Ket, Operator, basis
from .dynamics import (
    EnvBenchParams,
    RepeatedInteractionParams,
    TimeGrid,
    default_dt,
    evolve_master,
    random_environment_benchmark,
    repeated_interaction_map,
)
from .errors import CapabilityError, InvalidArgumentError, NumericError, OqsimError, ParseError, SemanticError
from .parser import parse_operator_expression
from .qec import logical_error_ratio
from .superop import LindbladModel, build_liouvillian, spectrum
from .trajectories import TrajectoryConfig, ensemble_average, run_ensemble

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_CAPABILITY = 0, 2, 3, 4
KINDS = ("spectrum", "evolve", "trajectories", "qec", "envbench", "zeno")
SECTION_ORDER = ("experiment", "model", "grid", "initial", "scheme", "observables", "qec", "envbench", "zeno")
_REQUIRED = {
    "spectrum": ("model",),
    "evolve": ("model", "grid", "initial"),
    "trajectories": ("model", "grid", "initial", "scheme"),
    "qec": ("qec",),
    "envbench": ("envbench", "grid"),
    "zeno": ("zeno",),
}


class SchemaError(OqsimError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# ---------------------------------------------------------------------------
# config handling

class Config:
    """Parsed INI text plus the line number of every section and key."""

    def __init__(self, text: str, source="<config>"):
        self.source = source
        self.cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        self.cp.optionxform = str
        try:
            self.cp.read_string(text, source=source)
        except configparser.ParsingError as e:
            line = e.errors[0][0] if getattr(e, "errors", None) else None
            raise SchemaError(f"malformed line {e.errors[0][1].strip()!r}" if line else str(e), line) from None
        except configparser.Error as e:
            raise SchemaError(str(e).splitlines()[0], getattr(e, "lineno", None)) from None
        self.lines = _index_lines(text)

    def line(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    def has(self, section, key=None):
        if key is None:
            return self.cp.has_section(section)
        return self.cp.has_option(section, key)

    def get(self, section, key, default=None, required=False):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            raise SchemaError(f"missing required key [{section}] {key}", self.line(section))
        return default

    def typed(self, section, key, conv, default=None, required=False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (ValueError, TypeError) as e:
            raise SchemaError(f"[{section}] {key}: cannot read {raw!r} ({e})", self.line(section, key)) from None

    def items(self, section):
        return list(self.cp.items(section)) if self.cp.has_section(section) else []

    def set(self, section, key, value):
        if not self.cp.has_section(section):
            self.cp.add_section(section)
        self.cp.set(section, key, value)


def _index_lines(text):
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), n)
        elif section and s and s[0] not in ";#" and not raw[:1].isspace():
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            out.setdefault((section, key), n)
    return out


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (list, tuple)):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


# ---------------------------------------------------------------------------
# building blocks from config

def _expression(cfg, section, key, expr, space):
    try:
        return parse_operator_expression(expr, space)
    except ParseError as e:
        raise SchemaError(f"[{section}] {key}: {e}", cfg.line(section, key)) from None
    except (SemanticError, InvalidArgumentError) as e:
        raise SchemaError(f"[{section}] {key}: {e}", cfg.line(section, key)) from None


def build_model(cfg: Config) -> LindbladModel:
    dims = cfg.typed("model", "dims", _ints, required=True)
    try:
        space = HilbertSpace(dims)
    except InvalidArgumentError as e:
        raise SchemaError(f"[model] dims: {e}", cfg.line("model", "dims")) from None
    h_expr = cfg.get("model", "hamiltonian", "0")
    H = _expression(cfg, "model", "hamiltonian", h_expr, space)
    jumps = []
    for key, val in cfg.items("model"):
        if not key.startswith("jump"):
            continue
        if "|" not in val:
            raise SchemaError(f"[model] {key}: expected 'rate | expression'", cfg.line("model", key))
        rate_s, expr = val.split("|", 1)
        try:
            rate = float(rate_s)
        except ValueError:
            raise SchemaError(f"[model] {key}: bad rate {rate_s.strip()!r}", cfg.line("model", key)) from None
        if rate < 0:
            raise SchemaError(f"[model] {key}: negative rate", cfg.line("model", key))
        jumps.append((rate, _expression(cfg, "model", key, expr.strip(), space)))
    try:
        model = LindbladModel(H, jumps)
        model.validate()
    except InvalidArgumentError as e:
        raise SchemaError(f"[model] {e}", cfg.line("model", "hamiltonian")) from None
    return model


def build_grid(cfg: Config, model=None) -> TimeGrid:
    t0 = cfg.typed("grid", "t0", float, 0.0)
    t1 = cfg.typed("grid", "t1", float, required=True)
    dt = cfg.typed("grid", "dt", float)
    if dt is None:
        if model is None:
            raise SchemaError("missing required key [grid] dt", cfg.line("grid"))
        dt = default_dt(model)
        cfg.set("grid", "dt", _fmt(dt))
    every = cfg.typed("grid", "sample_every", int, 1)
    try:
        return TimeGrid(t0, t1, dt, every)
    except InvalidArgumentError as e:
        raise SchemaError(f"[grid] {e}", cfg.line("grid")) from None


def build_initial(cfg: Config, dims) -> Ket | DensityMatrix:
    state = cfg.get("initial", "state")
    if state is not None:
        if state != "maximally_mixed":
            raise SchemaError(f"[initial] state: unknown value {state!r}", cfg.line("initial", "state"))
        return DensityMatrix.maximally_mixed(dims)
    idx = cfg.typed("initial", "basis", _ints, required=True)
    try:
        return basis(dims, idx)
    except InvalidArgumentError as e:
        raise SchemaError(f"[initial] basis: {e}", cfg.line("initial", "basis")) from None


def build_observables(cfg: Config, space) -> list[tuple[str, Operator]]:
    obs = []
    for key, val in cfg.items("observables"):
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise SchemaError(f"observable name {key!r} is not a valid column name", cfg.line("observables", key))
        obs.append((key, _expression(cfg, "observables", key, val, space)))
    return obs


# ---------------------------------------------------------------------------
# CSV output

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _complex_cols(names):
    return [c for n in names for c in (f"{n}_re", f"{n}_im")]


def _complex_vals(vals):
    return [float(x) for v in vals for x in (np.real(v), np.imag(v))]


def run_spectrum(cfg):
    model = build_model(cfg)
    max_dim = cfg.typed("experiment", "max_dim", int, 32)
    s = spectrum(build_liouvillian(model), max_dim=max_dim)
    rows = [(k, float(l.real) + 0.0, float(l.imag) + 0.0) for k, l in enumerate(s.eigenvalues)]
    return {".csv": _csv_text(["index", "re_lambda", "im_lambda"], rows)}


def run_evolve(cfg):
    model = build_model(cfg)
    grid = build_grid(cfg, model)
    init = build_initial(cfg, model.dims)
    rho0 = DensityMatrix.from_ket(init) if isinstance(init, Ket) else init
    obs = build_observables(cfg, model.H.space)
    states = evolve_master(model, rho0, grid)
    rows = []
    for t, rho in zip(grid.times(), states):
        vals = [np.trace(o.data @ rho.data) for _, o in obs]
        rows.append([float(t)] + _complex_vals(vals))
    return {".csv": _csv_text(["time"] + _complex_cols([n for n, _ in obs]), rows)}


def run_trajectories(cfg):
    model = build_model(cfg)
    grid = build_grid(cfg, model)
    init = build_initial(cfg, model.dims)
    obs = build_observables(cfg, model.H.space)
    if grid.t0 != 0.0:
        raise SchemaError("[grid] t0 must be 0 for trajectories", cfg.line("grid", "t0"))
    name = cfg.get("scheme", "name", "counting")
    n_traj = cfg.typed("scheme", "n_traj", int, 100)
    try:
        tcfg = TrajectoryConfig(
            dt=grid.dt, t_max=grid.t1, seed=cfg.typed("scheme", "seed", int, 0), scheme=name,
            beta=cfg.typed("scheme", "beta", float, 0.0), observables=[o for _, o in obs],
            conditional_no_jump=cfg.typed("scheme", "conditional_no_jump", _bool, False),
            sample_every=grid.sample_every,
        )
    except InvalidArgumentError as e:
        raise SchemaError(f"[scheme] {e}", cfg.line("scheme")) from None
    results = run_ensemble(model, init, tcfg, n_traj)
    names = [n for n, _ in obs]
    rows = []
    for r in results:
        for t, e in zip(r.times, r.expect):
            rows.append([float(t), r.index] + _complex_vals(e))
    stats = ensemble_average(results)
    avg_rows = []
    for k, t in enumerate(stats.times):
        row = [float(t)]
        for j in range(len(names)):
            m = stats.mean[k, j]
            row += [float(m.real), float(m.imag), float(stats.stderr[k, j])]
        avg_rows.append(row)
    avg_header = ["time"] + [c for n in names for c in (f"{n}_mean_re", f"{n}_mean_im", f"{n}_stderr")]
    jump_rows = [(r.index, float(t), ch) for r in results for t, ch in r.jumps]
    return {
        ".csv": _csv_text(["time", "traj_id"] + _complex_cols(names), rows),
        ".avg.csv": _csv_text(avg_header, avg_rows),
        ".jumps.csv": _csv_text(["traj_id", "time", "channel"], jump_rows),
    }


def run_qec(cfg):
    gamma = cfg.typed("qec", "gamma", float, required=True)
    taus = cfg.typed("qec", "taus", _floats, required=True)
    try:
        table = logical_error_ratio(gamma, taus)
    except InvalidArgumentError as e:
        raise SchemaError(f"[qec] {e}", cfg.line("qec")) from None
    rows = [(r.tau, r.lambda_eff_logical, r.bare_rate, r.ratio) for r in table]
    return {".csv": _csv_text(["tau", "lambda_eff_logical", "bare_rate", "ratio"], rows)}


def run_envbench(cfg):
    try:
        p = EnvBenchParams(
            M=cfg.typed("envbench", "M", int, 20),
            omega=cfg.typed("envbench", "omega", float, 1.0),
            gbar1=cfg.typed("envbench", "gbar1", float, 1e-3),
            rel_sigma=cfg.typed("envbench", "rel_sigma", float, 0.05),
            seed=cfg.typed("envbench", "seed", int, 0),
            rwa=cfg.typed("envbench", "rwa", _bool, True),
        )
    except InvalidArgumentError as e:
        raise SchemaError(f"[envbench] {e}", cfg.line("envbench")) from None
    grid = build_grid(cfg)
    times, exc = random_environment_benchmark(p, grid)
    return {".csv": _csv_text(["time", "excitation"], [(float(t), float(e)) for t, e in zip(times, exc)])}


def run_zeno(cfg):
    g = cfg.typed("zeno", "g", float, required=True)
    taus = cfg.typed("zeno", "taus", _floats, required=True)
    n_cycles = cfg.typed("zeno", "n_cycles", int, 2000)
    cutoff = cfg.typed("zeno", "cutoff", int, 1)
    omega = cfg.typed("zeno", "omega", float, 0.0)
    rows = []
    for tau in taus:
        try:
            res = repeated_interaction_map(RepeatedInteractionParams(g, tau, n_cycles, cutoff, omega))
        except InvalidArgumentError as e:
            raise SchemaError(f"[zeno] {e}", cfg.line("zeno")) from None
        rows.append((float(tau), res.gamma_eff, g * g * tau))
    return {".csv": _csv_text(["tau", "gamma_eff", "g_squared_tau"], rows)}


RUNNERS = {
    "spectrum": run_spectrum,
    "evolve": run_evolve,
    "trajectories": run_trajectories,
    "qec": run_qec,
    "envbench": run_envbench,
    "zeno": run_zeno,
}


def _kind(cfg):
    kind = cfg.get("experiment", "kind", required=True)
    if kind not in KINDS:
        raise SchemaError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}",
                          cfg.line("experiment", "kind"))
    for sec in _REQUIRED[kind]:
        if not cfg.has(sec):
            raise SchemaError(f"experiment kind {kind!r} needs a [{sec}] section", cfg.line("experiment", "kind"))
    for sec in cfg.cp.sections():
        if sec not in SECTION_ORDER and sec != "meta":
            raise SchemaError(f"unknown section [{sec}]", cfg.line(sec))
    return kind


def validate_config(cfg: Config) -> str:
    """Build every object the run would need, without running it."""
    kind = _kind(cfg)
    if kind in ("spectrum", "evolve", "trajectories"):
        model = build_model(cfg)
        build_observables(cfg, model.H.space)
        if kind != "spectrum":
            build_grid(cfg, model)
            build_initial(cfg, model.dims)
    elif kind == "envbench":
        build_grid(cfg)
    return kind


def resolved_text(cfg: Config, meta: dict) -> str:
    """The sidecar: every section in a fixed order, then run metadata."""
    out = configparser.ConfigParser(interpolation=None)
    out.optionxform = str
    for sec in SECTION_ORDER:
        if cfg.has(sec):
            out.add_section(sec)
            for k, v in cfg.items(sec):
                out.set(sec, k, v)
    out.add_section("meta")
    for k, v in meta.items():
        out.set("meta", k, str(v))
    buf = io.StringIO()
    out.write(buf)
    return buf.getvalue()


def execute(cfg: Config, output: str | None = None) -> dict[str, Path]:
    kind = _kind(cfg)
    prefix = output or cfg.get("experiment", "output", required=True)
    cfg.set("experiment", "output", prefix)
    start = time.perf_counter()
    files = RUNNERS[kind](cfg)
    wall = time.perf_counter() - start
    meta = {"tool_version": __version__, "wall_time_s": f"{wall:.3f}",
            "seed": cfg.get("scheme", "seed") or cfg.get("envbench", "seed") or "none"}
    files[".meta.ini"] = resolved_text(cfg, meta)
    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = {}
    for suffix, text in files.items():
        path = base.with_name(base.name + suffix)
        path.write_text(text)
        written[suffix] = path
    return written


# ---------------------------------------------------------------------------
# presets

_SQ = repr(float(1 / np.sqrt(2)))
_PSI_MINUS = "0.5*sp1*sm1*sm2*sp2 + 0.5*sm1*sp1*sp2*sm2 - 0.5*sp1*sm2 - 0.5*sm1*sp2"

PRESETS = {
    "fig2_envbench": (
        "qubit excitation coupled to M random bosonic modes (Fig. 2)",
        {
            "experiment": {"kind": "envbench", "output": "out/fig2_envbench"},
            "envbench": {"M": "20", "omega": "1.0", "gbar1": "0.001", "rel_sigma": "0.05", "seed": "0", "rwa": "true"},
            "grid": {"t0": "0.0", "t1": "20000.0", "dt": "10.0", "sample_every": "1"},
        },
    ),
    "fig5_cavity_unravelings": (
        "damped cavity from Fock |10>, counting trajectories (Fig. 5); set scheme.name=homodyne_ideal for panel b",
        {
            "experiment": {"kind": "trajectories", "output": "out/fig5_cavity"},
            "model": {"dims": "31", "hamiltonian": "1.0*n", "jump.1": "1.0 | a"},
            "grid": {"t0": "0.0", "t1": "5.0", "dt": "0.001", "sample_every": "50"},
            "initial": {"basis": "10"},
            "scheme": {"name": "counting", "n_traj": "100", "seed": "0", "beta": "0.0", "conditional_no_jump": "false"},
            "observables": {"n": "n"},
        },
    ),
    "fig6_state_transfer": (
        "two qubits with local and collective decay from |e,g>, no-jump branch (Fig. 6)",
        {
            "experiment": {"kind": "trajectories", "output": "out/fig6_transfer"},
            "model": {
                "dims": "2, 2",
                "hamiltonian": "0.5*sz1 + 0.5*sz2",
                "jump.1": "0.1 | sm1",
                "jump.2": "0.1 | sm2",
                "jump.3": f"1.0 | {_SQ}*sm1 + {_SQ}*sm2",
            },
            "grid": {"t0": "0.0", "t1": "10.0", "dt": "0.001", "sample_every": "100"},
            "initial": {"basis": "0, 1"},
            "scheme": {"name": "counting", "n_traj": "1", "seed": "0", "beta": "0.0", "conditional_no_jump": "true"},
            "observables": {"n1": "sp1*sm1", "n2": "sp2*sm2", "fid_psi_minus": _PSI_MINUS},
        },
    ),
    "fig3_qec_ratio": (
        "repetition-code logical bit-flip rate over the bare rate against the period (Fig. 3)",
        {
            "experiment": {"kind": "qec", "output": "out/fig3_qec"},
            "qec": {"gamma": "1.0", "taus": "0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2"},
        },
    ),
    "zeno_appendixA2": (
        "cavity damping from repeated detector interactions, gamma_eff against g^2 tau",
        {
            "experiment": {"kind": "zeno", "output": "out/zeno"},
            "zeno": {"g": "1.0", "taus": "0.0125, 0.025, 0.05", "n_cycles": "4000", "cutoff": "1", "omega": "0.0"},
        },
    ),
}


def preset_config(name: str, overrides=()) -> Config:
    if name not in PRESETS:
        raise SchemaError(f"unknown preset {name!r}; see list-presets")
    _, sections = PRESETS[name]
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_dict(sections)
    buf = io.StringIO()
    cp.write(buf)
    cfg = Config(buf.getvalue(), source=f"<preset {name}>")
    for item in overrides:
        key, sep, value = item.partition("=")
        sec, dot, opt = key.strip().partition(".")
        if not sep or not dot or not opt:
            raise SchemaError(f"--set expects section.key=value, got {item!r}")
        cfg.set(sec, opt, value.strip())
    return cfg


def list_presets(stream=None):
    stream = stream or sys.stdout
    for name, (desc, sections) in PRESETS.items():
        print(f"{name}: {desc}", file=stream)
        for sec, kv in sections.items():
            if sec == "experiment":
                continue
            print(f"    [{sec}] " + "; ".join(f"{k} = {v}" for k, v in kv.items()), file=stream)


# ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="oqsim", description="Open quantum system experiments")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output", help="override the output path prefix")
    pr = sub.add_parser("preset", help="run a shipped scenario")
    pr.add_argument("name")
    pr.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    pr.add_argument("--output")
    sub.add_parser("list-presets", help="show shipped scenarios")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    return p


def _load(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None
    return Config(text, source=str(path))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "list-presets":
            list_presets()
            return EXIT_OK
        if args.cmd == "validate":
            kind = validate_config(_load(args.config))
            print(f"ok ({kind})")
            return EXIT_OK
        cfg = _load(args.config) if args.cmd == "run" else preset_config(args.name, args.set)
        written = execute(cfg, args.output)
        for path in written.values():
            print(path)
        return EXIT_OK
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except CapabilityError as e:
        print(f"capability error: {e}", file=sys.stderr)
        return EXIT_CAPABILITY
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
