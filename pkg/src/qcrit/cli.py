"""Command-line front end: point, sweep, verify and detect."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dft import (QptOptions, SweepOptions, density, detect_qpt,
                  make_grid, max_chain_rule_residual, point_measures, sweep,
                  verify_hellmann_feynman, verify_hk_duality)
from .eigensolver import SolverOptions, detect_degeneracy, ground_state
from .entanglement import MEASURES, linear_entropy
from .errors import ConvergenceError, DegenerateGroundState, QcritError
from .models import CONTROL_NAMES, MODELS, ModelParams
from .observables import (bloch_vector, expectation, hubbard_site_spectrum,
                          reduced_density_matrix, xxz_pair_rdm_from_energy)
from .oracles import xxz_l4

CSV_COLUMNS = ("model", "param", "n_sites", "lambda", "epsilon", "a", "d1", "d2",
               "L2", "L4", "negativity", "dL2_dlambda", "dL4_dlambda", "dneg_dlambda",
               "dL2_da", "dL4_da", "dneg_da", "degenerate")

_VALUE_FLAGS = {"tfim": "lam", "lipkin": "lam", "xxz": "delta", "hubbard": "u"}
_SHORT = {"L2": "L2", "L4": "L4", "negativity": "neg"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str
    size: int
    value: float | None = None
    t: float = 1.0
    sector: str | None = None
    grid: tuple | None = None
    sizes: list = field(default_factory=list)
    measures: tuple = MEASURES
    seed: int = 42
    dense_cutoff: int | None = None
    format: str = "json"
    out: str | None = None
    trials: int = 20
    sweep_dir: str | None = None

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.grid is not None:
            start, stop, step = self.grid
            if not step > 0:
                raise ConfigError("grid step must be positive")
            if not start < stop:
                raise ConfigError("grid start must be below stop")
            if self.value is not None:
                raise ConfigError("give either a grid or a point value, not both")
        if self.command in ("point", "verify") and self.value is None:
            raise ConfigError(f"{self.command} needs a value for "
                              f"{CONTROL_NAMES[self.model]}")
        if self.command in ("sweep", "detect") and self.grid is None:
            raise ConfigError(f"{self.command} needs --grid start:stop:step")
        if self.command == "detect" and len(self.sizes) < 2:
            raise ConfigError("detect needs at least two sizes")
        if self.command != "detect" and not self.size:
            raise ConfigError("system size missing (--n, or --l for hubbard)")
        bad = set(self.measures) - set(MEASURES)
        if bad:
            raise ConfigError(f"unknown measures {sorted(bad)}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        return self

    def solver(self, sweep_default=False) -> SolverOptions:
        kw = {"seed": self.seed}
        if self.dense_cutoff is not None:
            kw["dense_cutoff"] = self.dense_cutoff
        elif sweep_default:
            kw["dense_cutoff"] = SweepOptions().solver.dense_cutoff
        return SolverOptions(**kw)


def parse_grid(text):
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError("grid must look like start:stop:step")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


def _parse_list(text, conv=str):
    if isinstance(text, (list, tuple)):
        return [conv(x) for x in text]
    return [conv(x) for x in str(text).split(",") if x.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="qcrit", description=__doc__)
    p.add_argument("--json-config", help="RunConfig as a JSON file or inline JSON document")
    sub = p.add_subparsers(dest="command")
    p.subcommands = {}
    for name in ("point", "sweep", "verify", "detect"):
        s = p.subcommands[name] = sub.add_parser(name)
        s.add_argument("--json-config", help=argparse.SUPPRESS, default=argparse.SUPPRESS)
        s.add_argument("--model", choices=MODELS)
        s.add_argument("--n", type=int, help="sites (tfim, xxz) or particles (lipkin)")
        s.add_argument("--l", type=int, help="Hubbard sites")
        s.add_argument("--lambda", dest="lam", type=float)
        s.add_argument("--delta", type=float)
        s.add_argument("--u", type=float)
        s.add_argument("--t", type=float, default=1.0, help="Hubbard hopping")
        s.add_argument("--sector", help="full, sz=0, parity=even, particles=3,3, collective=even")
        s.add_argument("--grid", help="start:stop:step (inclusive)")
        s.add_argument("--sizes", help="comma separated sizes (detect)")
        s.add_argument("--measures", default=",".join(MEASURES))
        s.add_argument("--seed", type=int, default=42)
        s.add_argument("--dense-cutoff", type=int)
        s.add_argument("--format", choices=("csv", "json"),
                       default="csv" if name == "sweep" else "json")
        s.add_argument("--out")
        s.add_argument("--trials", type=int, default=20, help="HK pairs (verify)")
        s.add_argument("--sweep-dir", help="write per-size sweep CSVs here (detect)")
    return p


_JSON_KEYS = {"lambda": "lam", "dense-cutoff": "dense_cutoff", "sweep-dir": "sweep_dir"}


def _load_json_config(text):
    path = Path(text)
    raw = path.read_text() if not text.lstrip().startswith("{") and path.exists() else text
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad JSON config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("JSON config must be an object")
    return doc


def _apply_json_config(parser, ns, argv):
    """Fill options not given on the command line from the JSON document."""
    doc = _load_json_config(ns.json_config)
    if ns.command is None:
        if "command" not in doc:
            raise ConfigError("no command given")
        ns = parser.parse_args([doc["command"]] + list(argv))
    sub = parser.subcommands[ns.command]
    for k, v in doc.items():
        if k == "command":
            continue
        if k == "value":
            k = _VALUE_FLAGS.get(doc.get("model", ns.model), "lam")
        key = _JSON_KEYS.get(k, k.replace("-", "_"))
        if not hasattr(ns, key):
            raise ConfigError(f"unknown config key {k!r}")
        if key == "grid" and isinstance(v, list):
            v = ":".join(map(str, v))
        elif key in ("sizes", "measures") and isinstance(v, list):
            v = ",".join(map(str, v))
        if getattr(ns, key) == sub.get_default(key):
            setattr(ns, key, v)
    return ns


def _attach_negative_values(argv):
    """Let ``--grid -0.5:0.5:0.1`` through; argparse takes it for an option."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--grid", "--lambda", "--delta", "--u", "--t"):
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and (nxt[1:2].isdigit() or nxt[1:2] == "."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def config_from_args(argv=None) -> RunConfig:
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    ns = parser.parse_args(argv)
    if getattr(ns, "json_config", None):
        ns = _apply_json_config(parser, ns, argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        raise ConfigError("no command given")
    if ns.model is None:
        raise ConfigError("--model is required")
    flag = _VALUE_FLAGS[ns.model]
    for other in ("lam", "delta", "u"):
        if other != flag and getattr(ns, other) is not None:
            opt = {"lam": "--lambda", "delta": "--delta", "u": "--u"}[other]
            raise ConfigError(f"{opt} does not apply to model {ns.model}")
    size = ns.l if ns.model == "hubbard" else ns.n
    if ns.model == "hubbard" and ns.n is not None and ns.l is None:
        size = ns.n
    sizes = _parse_list(ns.sizes, int) if ns.sizes else ([size] if size else [])
    return RunConfig(
        command=ns.command, model=ns.model, size=size, value=getattr(ns, flag), t=ns.t,
        sector=ns.sector, grid=parse_grid(ns.grid) if ns.grid else None, sizes=sizes,
        measures=tuple(_parse_list(ns.measures)), seed=ns.seed,
        dense_cutoff=ns.dense_cutoff, format=ns.format, out=ns.out, trials=ns.trials,
        sweep_dir=ns.sweep_dir,
    ).validate()


# ---------------------------------------------------------------------------
# output helpers


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or not math.isfinite(float(x)):
        return ""
    return format(float(x), ".12g")


def sweep_rows(cfg_model, size, param, records):
    rows = []
    for r in records:
        row = {"model": cfg_model, "param": param, "n_sites": size, "lambda": r.lam,
               "epsilon": r.epsilon, "a": r.a, "d1": r.d1, "d2": r.d2}
        for k in MEASURES:
            s = _SHORT[k]
            row[k] = r.measures.get(k, math.nan)
            row[f"d{s}_dlambda"] = r.dM_dlambda.get(k, math.nan)
            row[f"d{s}_da"] = r.dM_da.get(k, math.nan)
        row["degenerate"] = bool(r.degenerate)
        if r.failed:
            for key in CSV_COLUMNS[4:-1]:
                row[key] = math.nan
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) if c not in ("model", "param") else row[c]
                    for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    clean = [{c: (row[c] if c in ("model", "param", "degenerate", "n_sites")
                  else _num(row[c])) for c in CSV_COLUMNS} for row in rows]
    return json.dumps(clean, indent=2) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _dump(obj):
    def scrub(x):
        if isinstance(x, dict):
            return {k: scrub(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [scrub(v) for v in x]
        if isinstance(x, (float, np.floating)):
            return _num(x)
        return x
    return json.dumps(scrub(obj), indent=2, default=_json_default) + "\n"


def _spec_and_sector(cfg, size=None, value=None):
    spec = ModelParams(cfg.model, size or cfg.size,
                       cfg.value if value is None else value, cfg.t).build()
    return spec, spec.sector(cfg.sector)


# ---------------------------------------------------------------------------
# commands


def cmd_point(cfg: RunConfig) -> int:
    spec, sector = _spec_and_sector(cfg)
    sol = ground_state(spec, sector, cfg.solver())
    a = density(spec, sol)
    meas = point_measures(spec, sol, cfg.measures, a=a)
    flag, msg = detect_degeneracy(sol)
    report = {
        "model": cfg.model, "param": spec.control.name, "n_sites": spec.size,
        "lambda": spec.control.value, "epsilon": sol.energy_per_site, "energy": sol.energy,
        "a": a, **meas, "degenerate": flag,
        "solver": {"method": sol.method, "iterations": sol.iterations,
                   "residual": sol.residual, "gap": sol.gap, "sector": sector.describe(),
                   "message": msg},
    }
    _emit(_dump(report), cfg.out)
    return 0


def _run_sweep(cfg, size):
    spec, sector = _spec_and_sector(cfg, size=size, value=0.0)
    grid = make_grid(*cfg.grid)
    opts = SweepOptions(measures=MEASURES, sector=sector,
                        solver=cfg.solver(sweep_default=True))
    return spec, sweep(spec, grid, opts)


def cmd_sweep(cfg: RunConfig) -> int:
    spec, records = _run_sweep(cfg, cfg.size)
    rows = sweep_rows(cfg.model, spec.size, spec.control.name, records)
    for r in records:
        if r.failed:
            print(f"warning: {spec.control.name}={r.lam:g} failed: {r.error}", file=sys.stderr)
    text = rows_to_csv(rows) if cfg.format == "csv" else rows_to_json(rows)
    _emit(text, cfg.out)
    return 2 if all(r.failed for r in records) else 0


def _verify_checks(cfg):
    """Yield (name, status, detail) with status in pass/fail/skip."""
    spec, sector = _spec_and_sector(cfg)
    opts = cfg.solver()
    v = spec.control.value
    name = spec.control.name
    sol = ground_state(spec, sector, opts)
    degenerate = sol.degenerate
    if degenerate:
        yield "degeneracy", "skip", detect_degeneracy(sol)[1] + f" at {name}={v:g}"

    try:
        hf = verify_hellmann_feynman(spec, sector, v, 1e-4, opts)
        yield ("hellmann-feynman", "pass" if hf.passed else "fail",
               f"|dE/d{name} - <A>| = {hf.residual:.3e} (threshold {hf.threshold:.1e})")
    except DegenerateGroundState as exc:
        yield "hellmann-feynman", "skip", str(exc)

    rng = np.random.default_rng(cfg.seed)
    lo_bound = 0.0 if cfg.model == "lipkin" else -math.inf
    vals, skipped = [], 0
    for _ in range(cfg.trials):
        x, y = np.clip(v + rng.uniform(-0.5, 0.5, size=2), lo_bound, None)
        if x == y:
            continue
        try:
            vals.append(verify_hk_duality(spec, sector, x, y, opts))
        except DegenerateGroundState:
            skipped += 1
    if vals:
        bad = sum(val <= 0 for val in vals)
        yield ("hk-duality", "pass" if bad == 0 else "fail",
               f"{len(vals)} pairs, {bad} violations, min {min(vals):.3e}, {skipped} skipped")
    else:
        yield "hk-duality", "skip", "no non-degenerate pairs"

    grid = make_grid(v - 0.05, v + 0.05, 0.01)
    sw_opts = SweepOptions(sector=sector, solver=cfg.solver(sweep_default=True))
    records = sweep(spec, grid, sw_opts)
    res = max_chain_rule_residual(records, ("L2", "L4"))
    finite = [x for x in res.values() if math.isfinite(x)]
    if finite:
        worst = max(finite)
        yield ("chain-rule", "pass" if worst < 1e-3 else "fail",
               "max residual " + ", ".join(f"{k}={x:.3e}" for k, x in res.items()))
    else:
        yield "chain-rule", "skip", "no clean window points"

    if degenerate:
        yield "rdm-identity", "skip", "degenerate ground state"
        return
    if cfg.model == "xxz":
        h = 1e-4
        e_lo = ground_state(spec.with_value(v - h), sector, opts).energy_per_site
        e_hi = ground_state(spec.with_value(v + h), sector, opts).energy_per_site
        d1 = (e_hi - e_lo) / (2 * h)
        rdm = reduced_density_matrix(sol.state, (0, 1))
        model = xxz_pair_rdm_from_energy(sol.energy_per_site, d1, v)
        dev = float(np.abs(rdm.matrix - model.matrix).max())
        yield ("pair-rdm-identity", "pass" if dev < 1e-5 else "fail",
               f"max |rho - rho(eps, d1)| = {dev:.3e}")
        dl4 = abs(xxz_l4(sol.energy_per_site, d1, v) - linear_entropy(rdm))
        yield ("l4-closed-form", "pass" if dl4 < 1e-4 else "fail", f"|dL4| = {dl4:.3e}")
    elif cfg.model == "hubbard":
        spec_vals = np.sort(hubbard_site_spectrum(sol.state))
        eig = np.sort(reduced_density_matrix(sol.state, (0, 1)).eigenvalues())
        dev = float(np.abs(spec_vals - eig).max())
        yield ("site-spectrum-identity", "pass" if dev < 1e-8 else "fail",
               f"max |(w,u+,u-,z) - eig rho| = {dev:.3e}")
    elif cfg.model == "tfim":
        r = bloch_vector(sol.state, 0)
        l2 = linear_entropy(reduced_density_matrix(sol.state, (0,)))
        dev = abs(l2 - (1 - r.norm ** 2))
        yield ("bloch-purity-identity", "pass" if dev < 1e-10 else "fail",
               f"|L2 - (1 - |r|^2)| = {dev:.3e}")
    else:
        a = expectation(spec.control.operator, sol.state) / spec.size
        yield ("collective-density", "pass" if -0.5 - 1e-12 <= a <= 0.5 + 1e-12 else "fail",
               f"a = {a:.6g}")


def cmd_verify(cfg: RunConfig) -> int:
    failed = 0
    lines = []
    for name, status, detail in _verify_checks(cfg):
        failed += status == "fail"
        lines.append(f"{status.upper():4s} {name}: {detail}")
        print(lines[-1])
    summary = "all checks passed" if not failed else f"{failed} check(s) failed"
    print(summary)
    if cfg.out:
        Path(cfg.out).write_text("\n".join(lines + [summary]) + "\n")
    return 0 if not failed else 1


def cmd_detect(cfg: RunConfig) -> int:
    sweeps, refs = {}, []
    for n in cfg.sizes:
        spec, records = _run_sweep(cfg, n)
        sweeps[spec.size] = records
        ref = {"size": spec.size, "file": None,
               "failed_rows": sum(r.failed for r in records)}
        if cfg.sweep_dir:
            d = Path(cfg.sweep_dir)
            d.mkdir(parents=True, exist_ok=True)
            path = d / f"{cfg.model}_{spec.size}.csv"
            path.write_text(rows_to_csv(sweep_rows(cfg.model, spec.size,
                                                   spec.control.name, records)))
            ref["file"] = str(path)
        refs.append(ref)
    report = detect_qpt(sweeps, QptOptions())
    out = {"model": cfg.model, "param": CONTROL_NAMES[cfg.model],
           "grid": list(cfg.grid), "sector": cfg.sector or "default",
           **report.to_dict(), "sweeps": refs}
    _emit(_dump(out), cfg.out)
    return 0


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "verify": cmd_verify,
            "detect": cmd_detect}


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except (ConfigError, QcritError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[cfg.command](cfg)
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (QcritError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
