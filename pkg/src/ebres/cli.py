"""Command-line interface ``ebres``.

Subcommands: ``transform``, ``det``, ``resonances``, ``count``, ``scatter``,
``trace``, ``oracle`` and ``verify``. Grids go to CSV and structured
results to JSON. Every output embeds the run configuration and the
package version. Exit status is 0 on success, 1 on input errors and 2 on
numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .coeffs import BeamCoeffs, CoeffPair, CompactCoeff, kappa_integral, liouville_data
from .errors import EbresError, InputError, NumericalFailure

__all__ = ["RunConfig", "main", "run", "parse_complex", "load_json", "read_grid"]

FMT = "%.17g"


# ---------------------------------------------------------------------------
# configuration and IO helpers
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved command-line configuration.

    Attributes
    ----------
    subcommand : str
    inputs : dict
        Input file paths by role.
    options : dict
        Numeric options after defaults are applied.
    out : str or None
    seed : int
    """

    subcommand: str
    inputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out: Optional[str] = None
    seed: int = 0

    def validate(self):
        for key in ("tol",):
            v = self.options.get(key)
            if v is not None and not v > 0:
                raise InputError(f"--{key} must be positive, got {v}")
        radii = self.options.get("radii")
        if radii is not None:
            if any(r <= 0 for r in radii):
                raise InputError("radii must be positive")
            if list(radii) != sorted(radii):
                raise InputError("radii must be sorted ascending")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            return cls(str(d["subcommand"]), dict(d.get("inputs", {})), dict(d.get("options", {})),
                       d.get("out"), int(d.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid run configuration: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def load_json(path: str):
    """Parse a JSON file; malformed input names the file and byte offset."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 at byte {exc.start}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise InputError(f"{path}: malformed JSON at byte {offset} "
                         f"(line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc


def parse_complex(s: str) -> complex:
    """Parse ``2+2i``, ``-1.5i``, ``3`` or Python-style ``1+2j``."""
    t = s.strip().replace(" ", "").replace("I", "i").replace("i", "j")
    try:
        return complex(t)
    except ValueError as exc:
        raise InputError(f"cannot parse complex number {s!r}") from exc


def _floats(s: str, n: Optional[int] = None, name="value"):
    try:
        vals = [float(v) for v in s.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse {name} {s!r}") from exc
    if n is not None and len(vals) != n:
        raise InputError(f"{name} needs {n} comma-separated numbers, got {s!r}")
    return vals


def read_grid(obj) -> np.ndarray:
    """Points of a grid file, sorted by ``(Re k, Im k)``.

    Accepted forms are ``{"points": [{"re": .., "im": ..}, ..]}`` and
    ``{"rect": {"x0": .., "x1": .., "y0": .., "y1": ..}, "nx": .., "ny": ..}``.
    """
    try:
        if "points" in obj:
            pts = [complex(float(p["re"]), float(p.get("im", 0.0))) for p in obj["points"]]
        elif "rect" in obj:
            r = obj["rect"]
            if isinstance(r, dict):
                x0, x1, y0, y1 = (float(r[k]) for k in ("x0", "x1", "y0", "y1"))
            else:
                x0, x1, y0, y1 = map(float, r)
            nx, ny = int(obj["nx"]), int(obj["ny"])
            if nx < 1 or ny < 1:
                raise InputError("nx and ny must be positive")
            xs = np.linspace(x0, x1, nx) if nx > 1 else np.array([0.5 * (x0 + x1)])
            ys = np.linspace(y0, y1, ny) if ny > 1 else np.array([0.5 * (y0 + y1)])
            pts = [complex(x, y) for x in xs for y in ys]
        else:
            raise InputError('grid needs "points" or "rect"')
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid grid: {exc}") from exc
    pts.sort(key=lambda z: (z.real, z.imag))
    return np.array(pts, dtype=complex)


def _load_pair(path) -> CoeffPair:
    return CoeffPair.from_dict(load_json(path))


def _header(cfg: RunConfig) -> dict:
    return {"version": __version__, "config": cfg.to_dict()}


def _write_csv(cfg: RunConfig, columns, rows):
    buf = io.StringIO()
    buf.write(f"# ebres {__version__}\n")
    buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([FMT % v if isinstance(v, float) else v for v in row])
    _emit(cfg, buf.getvalue())


def _write_json(cfg: RunConfig, payload: dict):
    doc = dict(_header(cfg))
    doc.update(payload)
    _emit(cfg, json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _emit(cfg: RunConfig, text: str):
    if cfg.out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"{cfg.out}: cannot write ({exc.strerror})") from exc


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _require(cfg, role):
    path = cfg.inputs.get(role)
    if not path:
        raise InputError(f"{cfg.subcommand} needs --{role}")
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _plan(cfg: RunConfig) -> dict:
    return {"subcommand": cfg.subcommand, "inputs": cfg.inputs, "options": cfg.options,
            "out": cfg.out, "version": __version__}


def cmd_transform(cfg: RunConfig, dry: bool):
    beam = BeamCoeffs.from_dict(load_json(_require(cfg, "beam")))
    order = cfg.options["order"] or 64
    if dry:
        return _plan(cfg)
    res = liouville_data(beam, grid_order=order)
    payload = res.pair.to_dict()
    payload.update({"gamma": res.gamma, "kappa_integral": kappa_integral(beam, order),
                    "grid_order": order})
    _write_json(cfg, payload)


def cmd_det(cfg: RunConfig, dry: bool):
    from .fredholm import DetOptions, det_D

    pair = _load_pair(_require(cfg, "pq"))
    pts = read_grid(load_json(_require(cfg, "grid")))
    o = cfg.options
    start = o["order"] or 32
    opts = DetOptions(start_order=start, tol=o["tol"] or 1e-10, max_order=max(512, start))
    if dry:
        plan = _plan(cfg)
        plan.update({"points": len(pts), "det_options": asdict(opts)})
        return plan
    samples = _pmap(lambda k: det_D(pair, k, opts), list(pts), o["threads"])
    rows = [(s.k.real, s.k.imag, complex(s.value).real, complex(s.value).imag, float(s.err_est),
             s.order) for s in samples]
    _write_csv(cfg, ["re_k", "im_k", "re_D", "im_D", "err_est", "N"], rows)


def cmd_resonances(cfg: RunConfig, dry: bool):
    from .rootfind import asymptotic_seeds, find_resonances

    pair = _load_pair(_require(cfg, "pq"))
    rect = cfg.options.get("rect")
    if rect is None:
        raise InputError("resonances needs --rect x0,x1,y0,y1")
    order = cfg.options["order"] or 64
    seeds = []
    if pair.p_plus != 0:
        kp, km = asymptotic_seeds(pair.p_plus, pair.gamma, range(1, 200))
        seeds = [complex(z) for z in np.concatenate([kp, km, 1j * np.conj(kp)])]
    if dry:
        plan = _plan(cfg)
        plan.update({"box_size": cfg.options.get("box") or 2 * math.pi / pair.gamma,
                     "order": order, "seeded": bool(seeds)})
        return plan
    rs = find_resonances(pair, rect, seeds=seeds, box_size=cfg.options.get("box"), order=order,
                         threads=cfg.options["threads"] or 1)
    _write_json(cfg, rs.to_dict())


def cmd_count(cfg: RunConfig, dry: bool):
    from .rootfind import counting_function

    pair = _load_pair(_require(cfg, "pq"))
    radii = cfg.options.get("radii")
    if not radii:
        raise InputError("count needs --radii")
    order = cfg.options["order"] or 64
    if dry:
        return _plan(cfg)
    rows = counting_function(pair, radii, order=order)
    _write_csv(cfg, ["r", "N", "N1", "N2", "N3", "N4", "N_circle", "bound_4gr_over_pi"],
               [(r.r, r.N, r.N1, r.N2, r.N3, r.N4, r.N_circle, r.bound) for r in rows])


def cmd_scatter(cfg: RunConfig, dry: bool):
    from .scattering import identity_residual_S, scattering_phase

    pair = _load_pair(_require(cfg, "pq"))
    o = cfg.options
    kmin, kmax, n = o.get("kmin"), o.get("kmax"), o.get("n")
    kmin = 0.5 if kmin is None else kmin
    kmax = 30.0 if kmax is None else kmax
    n = 600 if n is None else n
    if not (0 < kmin < kmax) or n < 2:
        raise InputError("scatter needs 0 < kmin < kmax and n >= 2")
    order = o["order"] or 64
    if dry:
        plan = _plan(cfg)
        plan.update({"kmin": kmin, "kmax": kmax, "n": n, "order": order})
        return plan
    grid = np.linspace(kmin, kmax, n)
    trace = scattering_phase(pair, grid, order=order)

    def resid(k):
        return 0.0 if pair.is_free else identity_residual_S(pair, k)

    res = _pmap(resid, [float(k) for k in trace.k], o["threads"])
    rows = [(float(k), float(S.real), float(S.imag), float(ph), r)
            for k, S, ph, r in zip(trace.k, trace.S, trace.phi, res)]
    _write_csv(cfg, ["k", "re_S", "im_S", "phi", "identity_residual"], rows)


def cmd_trace(cfg: RunConfig, dry: bool):
    from .rootfind import ResonanceSet
    from .traces import hadamard_fit, trace_lhs, trace_rhs

    pair = _load_pair(_require(cfg, "pq"))
    res = ResonanceSet.from_dict(load_json(_require(cfg, "res")))
    k = cfg.options.get("k")
    if k is None:
        raise InputError("trace needs --k")
    radii = cfg.options.get("radii") or [10.0 / pair.gamma, 20.0 / pair.gamma, 30.0 / pair.gamma]
    if dry:
        return _plan(cfg)
    had = hadamard_fit(pair, res, max(radii), order=cfg.options["order"] or 64)
    lhs = trace_lhs(pair, k)
    rows = []
    for r in radii:
        rhs = trace_rhs(had, k, r)
        rows.append({"radius": r, "rhs": rhs.value, "residual": abs(lhs.value - rhs.value),
                     "tail_bound": rhs.tail_bound, "n_terms": rhs.n_terms})
    payload = {"k": lhs.k, "lhs": lhs.value, "truncations": rows,
               "hadamard": {key: v for key, v in had.to_dict().items() if key != "zeros"}}
    _write_json(cfg, payload)


def cmd_oracle(cfg: RunConfig, dry: bool):
    from .oracle import jost_d

    p = CompactCoeff.from_dict(load_json(_require(cfg, "p")))
    pts = read_grid(load_json(_require(cfg, "grid")))
    tol = cfg.options["tol"] or 1e-11
    if dry:
        plan = _plan(cfg)
        plan["points"] = len(pts)
        return plan

    def one(k):
        d = jost_d(p, k, tol).d
        di = jost_d(p, 1j * k, tol).d
        return (k.real, k.imag, d.real, d.imag, (di * d).real, (di * d).imag)

    rows = _pmap(one, list(pts), cfg.options["threads"])
    _write_csv(cfg, ["re_k", "im_k", "re_d", "im_d", "re_D", "im_D"], rows)


VERIFY_THRESHOLDS = {"identity_S": 1e-7, "identity_Omega": 1e-7, "symmetry": 1e-9,
                     "unitarity": 1e-8, "closed_form_trace": 1e-8}


def cmd_verify(cfg: RunConfig, dry: bool):
    from .fredholm import DetOptions, build_Y0, det_D, trace_Y0_closed
    from .scattering import S_matrix, identity_residual_Omega, identity_residual_S

    path = cfg.inputs.get("pq")
    if path:
        pair = _load_pair(path)
    else:
        pair = CoeffPair(CompactCoeff.constant(2.0, 1.0), CompactCoeff.zero(1.0))
    if dry:
        plan = _plan(cfg)
        plan["thresholds"] = VERIFY_THRESHOLDS
        return plan
    rng = np.random.default_rng(cfg.seed)
    g = pair.gamma
    res = {}
    res["identity_S"] = max(identity_residual_S(pair, k / g) for k in range(1, 9))
    ks1 = [r / g * np.exp(1j * a) for r, a in zip(rng.uniform(2, 8, 6), rng.uniform(0.1, 1.47, 6))]
    res["identity_Omega"] = max(identity_residual_Omega(pair, k) for k in ks1)
    opts = DetOptions(tol=1e-11)
    sym = 0.0
    for k in [r / g * np.exp(1j * a) for r, a in zip(rng.uniform(1, 10, 8), rng.uniform(-np.pi, np.pi, 8))]:
        a, b = det_D(pair, k, opts).value, np.conj(det_D(pair, 1j * np.conj(k), opts).value)
        sym = max(sym, abs(a - b) / max(abs(a), 1.0))
    res["symmetry"] = sym
    res["unitarity"] = max(abs(abs(S_matrix(pair, k).S) - 1.0) for k in np.linspace(0.5, 20, 12) / g)
    tr = 0.0
    for k in [r / g * np.exp(1j * a) for r, a in zip(rng.uniform(1, 10, 5), rng.uniform(0.05, 1.5, 5))]:
        num = build_Y0(pair, k, order=64).trace_exact
        ref = trace_Y0_closed(pair, k)
        tr = max(tr, abs(num - ref) / max(abs(ref), 1e-300))
    res["closed_form_trace"] = tr
    report = {name: {"value": float(v), "threshold": VERIFY_THRESHOLDS[name],
                     "pass": bool(v < VERIFY_THRESHOLDS[name])} for name, v in res.items()}
    ok = all(r["pass"] for r in report.values())
    _write_json(cfg, {"checks": report, "all_pass": ok})
    if not ok:
        raise NumericalFailure("verify: " + ", ".join(n for n, r in report.items() if not r["pass"]))


COMMANDS = {
    "transform": cmd_transform, "det": cmd_det, "resonances": cmd_resonances,
    "count": cmd_count, "scatter": cmd_scatter, "trace": cmd_trace,
    "oracle": cmd_oracle, "verify": cmd_verify,
}
INPUT_ROLES = ("pq", "beam", "grid", "res", "p")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors and exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_VALUE_FLAGS = ("--rect", "--radii", "--k")


def _join_negative(argv):
    """Attach values such as ``-11,11,-1,1`` or ``-2+1i`` to their flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ebres", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ebres {__version__}")
    sub = ap.add_subparsers(dest="subcommand")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="run configuration JSON; command-line flags override it")
        for role in INPUT_ROLES:
            sp.add_argument(f"--{role}")
        sp.add_argument("--rect", help="x0,x1,y0,y1")
        sp.add_argument("--radii", help="comma-separated radii, ascending")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--order", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--box", type=float, help="initial box side for resonance search")
        sp.add_argument("--k", help="complex point such as 2+2i")
        sp.add_argument("--kmin", type=float)
        sp.add_argument("--kmax", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--dry-run", action="store_true")
    return ap


def _config_from_args(args) -> RunConfig:
    base = RunConfig(args.subcommand)
    if args.config:
        base = RunConfig.from_dict(load_json(args.config))
        if base.subcommand != args.subcommand:
            raise InputError(f"{args.config} is a {base.subcommand!r} configuration")
    inputs = dict(base.inputs)
    for role in INPUT_ROLES:
        v = getattr(args, role)
        if v is not None:
            inputs[role] = v
    opts = {"tol": None, "order": None, "threads": 1, "rect": None, "radii": None, "k": None,
            "kmin": None, "kmax": None, "n": None, "box": None}
    opts.update(base.options)
    if args.rect is not None:
        opts["rect"] = _floats(args.rect, 4, "--rect")
    if args.radii is not None:
        opts["radii"] = _floats(args.radii, None, "--radii")
    if args.k is not None:
        opts["k"] = parse_complex(args.k)
    for key in ("tol", "order", "threads", "kmin", "kmax", "n", "box"):
        v = getattr(args, key)
        if v is not None:
            opts[key] = v
    if isinstance(opts.get("k"), dict):
        opts["k"] = complex(opts["k"]["re"], opts["k"]["im"])
    elif isinstance(opts.get("k"), list):
        opts["k"] = complex(*opts["k"])
    if opts["order"] is not None and opts["order"] < 1:
        raise InputError("--order must be positive")
    cfg = RunConfig(args.subcommand, inputs, opts, args.out if args.out is not None else base.out,
                    args.seed if args.seed is not None else base.seed)
    return cfg.validate()


def run(cfg: RunConfig, dry_run: bool = False) -> int:
    """Execute one configuration; returns the exit status."""
    try:
        plan = COMMANDS[cfg.subcommand](cfg, dry_run)
        if dry_run:
            sys.stdout.write(json.dumps(_jsonable(plan), indent=2, sort_keys=True) + "\n")
        return 0
    except InputError as exc:
        print(f"ebres {cfg.subcommand}: input error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"ebres {cfg.subcommand}: numerical failure: {exc}", file=sys.stderr)
        return 2
    except EbresError as exc:
        print(f"ebres {cfg.subcommand}: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(_join_negative(list(sys.argv[1:] if argv is None else argv)))
    except SystemExit as exc:
        # usage errors and --help/--version
        return int(exc.code or 0)
    if not args.subcommand:
        ap.print_help()
        return 1
    try:
        cfg = _config_from_args(args)
    except InputError as exc:
        print(f"ebres {args.subcommand}: input error: {exc}", file=sys.stderr)
        return 1
    return run(cfg, args.dry_run)


if __name__ == "__main__":
    sys.exit(main())
