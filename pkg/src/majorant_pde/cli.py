"""Command-line front end.

Usage::

    majorant-pde COMMAND [--config FILE] [--set block.key=value ...] [--out-dir DIR]
                 [--threads N] [--no-timestamp]

Commands are ``kernel``, ``certify``, ``check``, ``solve``, ``decay`` and
``sweep``.  The config file holds ``block.key = value`` lines; ``--set``
overrides them.  Exit status is 0 on success, 2 on invalid input and 3 on a
numerical failure, with a one-line ``error:`` record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from datetime import datetime, timezone

import numpy as np

from .errors import BracketError, MajorantError, NumericalError, TruncationWarning, ValidationError
from .kernels import KernelSpec, Resolution, certify_condition_G, eval_kernel, kernel_mass, make_profile
from .majorant import (MajorantConstants, certify_composition, certify_domination, default_theta,
                       make_majorant)
from .samples import composition_samples, kernel_samples
from .spaces import Field, OrliczSpec, check_initial_condition
from .spectral import derivative_tensor, tensor_norm
from .structure import INF, StructureSpec, classify, preset, to_fraction
from .solver import (Discretization, build_supersolution, check_apriori_bound, gradient_power_norm,
                     initial_field, picard_solve, sharpness_experiment, verify_decay, write_run_summary,
                     write_snapshots, write_sweep_csv)

COMMANDS = ("kernel", "certify", "check", "solve", "decay", "sweep")

_OPT_FLOAT = "float?"
_OPT_INT = "int?"
_OPT_STR = "str?"

SCHEMA = {
    "kernel": {"dim": ("int", 1), "order": ("float", 2.0), "decay_exponent": ("float", 1.0),
               "theta": (_OPT_FLOAT, None), "horizon": ("float", math.inf), "n_radii": ("int", 1201),
               "r_max": (_OPT_FLOAT, None), "cache_dir": (_OPT_STR, None)},
    "structure": {"family": ("str", "SP"), "p": ("str", "2"), "ell": ("int", 1), "n": (_OPT_INT, None),
                  "m": (_OPT_INT, None), "A": ("str", "0")},
    "data": {"profile": ("str", "constant"), "amplitude": ("float", 1.0), "exponent": (_OPT_FLOAT, None),
             "log_exponent": (_OPT_FLOAT, None), "width": ("float", 0.05), "file": (_OPT_STR, None)},
    "disc": {"box": ("float", 20.0), "n": ("int", 1024), "T": ("float", 1.0), "t_min_ratio": ("float", 1e-6),
             "growth": ("float", 1.1), "max_step_ratio": ("float", 0.01), "max_iter": ("int", 200),
             "tol": ("float", 1e-10), "eps": (_OPT_FLOAT, None)},
    "check": {"gamma": ("float", 1.0), "q": (_OPT_FLOAT, None), "beta": ("float", 1.0), "M": (_OPT_FLOAT, None)},
    "certify": {"samples": ("int", 256), "composition_samples": ("int", 64), "seed": ("int", 0),
                "j_max": (_OPT_INT, None)},
    "solve": {"supersolution": ("str", "none"), "eps": ("float", 1e-8), "q": (_OPT_FLOAT, None),
              "beta": ("float", 1.0), "M": (_OPT_FLOAT, None), "snapshots": ("int", 8)},
    "decay": {"tol": ("float", 0.1)},
    "sweep": {"gamma_lo": ("float", 0.0), "gamma_hi": ("float", 1.0), "steps": ("int", 10)},
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _convert(kind, raw, key):
    text = raw.strip()
    if kind.endswith("?"):
        if text.lower() in ("", "none", "auto"):
            return None
        kind = kind[:-1]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ValidationError(f"{key} expects {kind}, got {raw!r}") from None
    return text


def parse_assignments(lines, source="config"):
    """Parse ``block.key = value`` lines into a ``{(block, key): text}`` map."""
    out = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ValidationError(f"{source}:{lineno}: expected 'block.key = value', got {line.strip()!r}")
        lhs, rhs = (s.strip() for s in text.split("=", 1))
        if "." not in lhs:
            raise ValidationError(f"{source}:{lineno}: key {lhs!r} lacks a block prefix")
        block, key = lhs.split(".", 1)
        out[(block, key)] = rhs
    return out


def load_config(path=None, overrides=()):
    """Merge defaults, the config file and ``--set`` overrides; validate every key."""
    raw = {}
    if path is not None:
        if not os.path.exists(path):
            raise ValidationError(f"config file {path!r} does not exist")
        with open(path) as fh:
            raw.update(parse_assignments(fh, path))
    raw.update(parse_assignments(overrides, "--set"))
    cfg = {block: {k: default for k, (_, default) in keys.items()} for block, keys in SCHEMA.items()}
    for (block, key), text in raw.items():
        if block not in SCHEMA:
            raise ValidationError(f"unknown config block {block!r}")
        if key not in SCHEMA[block]:
            raise ValidationError(f"unknown key {block}.{key}")
        cfg[block][key] = _convert(SCHEMA[block][key][0], text, f"{block}.{key}")
    return cfg


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _parse_p(text):
    if ":" not in text:
        return to_fraction(float(text) if "." in text or "e" in text.lower() else int(text))
    out = {}
    for item in text.split(","):
        j, v = item.split(":")
        out[int(j)] = to_fraction(float(v) if "." in v else int(v))
    return out


def build_structure(cfg):
    """Return ``(spec, variants)`` where ``variants`` maps ``n`` to a spec."""
    s = cfg["structure"]
    k = cfg["kernel"]
    family = s["family"]
    p = _parse_p(s["p"])
    if family == "custom":
        if not isinstance(p, dict) or s["m"] is None or s["n"] is None:
            raise ValidationError("custom structure needs structure.p = j:p_j,..., structure.m and structure.n")
        ell = int(s["ell"])
        N = int(k["dim"])
        spec = StructureSpec(ell=ell, m=int(s["m"]), n=int(s["n"]), p=p, A=to_fraction(float(s["A"])),
                             a={tuple(ell if i == 0 else 0 for i in range(N)): 1.0}, family="custom",
                             func=None)
        return spec, {spec.n: spec}
    if isinstance(p, dict):
        raise ValidationError(f"family {family} takes a scalar p")
    pr = preset(family, dim=int(k["dim"]), order=k["order"], p=p, ell=s["ell"], n=s["n"])
    return pr.spec, pr.variants


def build_kernel_spec(cfg, spec=None):
    k = cfg["kernel"]
    budget = 2 if spec is None else max(2, spec.ell + spec.m) if int(k["dim"]) == 1 else 2
    return KernelSpec(dim=int(k["dim"]), order=k["order"], decay_exponent=k["decay_exponent"],
                      horizon=k["horizon"], regularity_budget=budget)


def _resolution(cfg):
    k = cfg["kernel"]
    return Resolution(r_max=k["r_max"], n_radii=int(k["n_radii"]))


def build_discretization(cfg):
    g = cfg["disc"]
    return Discretization.build(g["box"], int(g["n"]), g["T"], int(cfg["kernel"]["dim"]), g["t_min_ratio"],
                                g["growth"], g["max_step_ratio"], g["eps"])


def _read_field_file(path, box, n, dim):
    if not os.path.exists(path):
        raise ValidationError(f"data file {path!r} does not exist")
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], rows[1:]
    col = header.index("value") if "value" in header else len(header) - 1
    vals = np.array([float(r[col]) for r in body])
    if vals.size != n ** dim:
        raise ValidationError(f"data file holds {vals.size} values, grid needs {n ** dim}")
    return Field(vals.reshape((n,) * dim), box, dim)


def _critical_exponent(cfg, spec):
    """``N / r_n`` of the classified case, used when no exponent is given."""
    report = classify(spec, build_kernel_spec(cfg, spec))
    if report.r_n == INF or not report.r_n > 0:
        raise ValidationError("no finite critical exponent; set data.exponent")
    return report.dim / float(report.r_n)


def build_data(cfg, spec):
    """Initial field and, for ``gradient-power`` data, the exact ``|∇φ|``."""
    d = cfg["data"]
    g = cfg["disc"]
    dim = int(cfg["kernel"]["dim"])
    box, n = g["box"], int(g["n"])
    if d["profile"] == "file":
        if d["file"] is None:
            raise ValidationError("data.profile = file needs data.file")
        return _read_field_file(d["file"], box, n, dim), None
    exponent = d["exponent"]
    if d["profile"] in ("power", "gradient-power") and exponent is None:
        exponent = _critical_exponent(cfg, spec)
    log_exponent = d["log_exponent"]
    if log_exponent is None:
        log_exponent = dim / cfg["kernel"]["order"] + 1.0
    phi = initial_field(d["profile"], d["amplitude"], box, n, dim, exponent=exponent,
                        log_exponent=log_exponent, width=d["width"])
    nphi = gradient_power_norm(d["amplitude"], exponent, box, n, dim) if d["profile"] == "gradient-power" else None
    return phi, nphi


def _profiles(cfg, budget):
    k = cfg["kernel"]
    dim = int(k["dim"])
    res = _resolution(cfg)
    G = make_profile(k["order"], dim=dim, budget=budget, resolution=res, cache_dir=k["cache_dir"])
    theta = k["theta"] if k["theta"] is not None else default_theta(k["order"], k["decay_exponent"])
    base = G if abs(theta - k["order"]) < 1e-15 else make_profile(theta, dim=dim, budget=budget, resolution=res,
                                                                   cache_dir=k["cache_dir"])
    return G, make_majorant(base, k["order"], k["decay_exponent"])


def certify_constants(cfg, spec):
    """Certified ``c_j`` (``j <= ℓ + m``), ``C_*`` and the assembled constants."""
    c = cfg["certify"]
    dim = int(cfg["kernel"]["dim"])
    order = cfg["kernel"]["order"]
    j_max = c["j_max"] if c["j_max"] is not None else max(spec.ell + spec.m, 0)
    G, K = _profiles(cfg, max(2, j_max) if dim == 1 else 2)
    ks = kernel_samples(order, dim, n=int(c["samples"]), seed=int(c["seed"]))
    dom = certify_domination(G, K, j_max, ks)
    comp = certify_composition(K, composition_samples(order, dim, n=int(c["composition_samples"]),
                                                      seed=int(c["seed"])))
    cons = MajorantConstants.assemble(dom.c[: spec.ell + spec.m + 1], comp.C_star, a_sum=spec.a_sum,
                                      sample_report={"samples": len(ks), "composition_samples": comp.n_samples,
                                                     "C_star_oracle": f"{comp.C_star_oracle:.10g}",
                                                     "oracle_gap": f"{comp.oracle_gap:.3e}"})
    return G, K, dom, comp, cons


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _write(path, text, stamp):
    with open(path, "w") as fh:
        if stamp is not None:
            fh.write(f"# generated: {stamp}\n")
        fh.write(text.rstrip("\n") + "\n")
    return path


def cmd_kernel(cfg, out, stamp, threads):
    k = cfg["kernel"]
    G, K = _profiles(cfg, 2)
    profile_path = os.path.join(out, f"profile_d{k['order']:g}_N{G.dim}.csv")
    G.save(profile_path)
    paths = [profile_path]
    r = np.concatenate([[0.0], np.geomspace(1e-3, min(G.r_max, 50.0), 200)])
    x = r if G.dim == 1 else np.stack([r, np.zeros_like(r)], axis=-1)
    table = os.path.join(out, "kernel_table.csv")
    with open(table, "w", newline="") as fh:
        if stamp is not None:
            fh.write(f"# generated: {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "G", "dG", "d2G", "K"])
        cols = [eval_kernel(G, j, x, 1.0) for j in range(3)] + [K(x, 1.0)]
        for i in range(r.size):
            w.writerow([f"{r[i]:.12e}"] + [f"{c[i]:.12e}" for c in cols])
    summary = "\n".join([f"order: {G.order:.12g}", f"dim: {G.dim}", f"theta: {K.theta:.12g}",
                         f"mass: {kernel_mass(G):.12g}", f"peak: {G.peak:.12g}", f"tail: {G.tail['kind']}",
                         f"sign_changing: {G.sign_changing}", f"quad_error: {G.quad_error:.3e}",
                         f"interp_error: {G.interp_error:.3e}"])
    paths += [table, _write(os.path.join(out, "kernel_summary.txt"), summary, stamp)]
    return 0, paths, {}


def cmd_certify(cfg, out, stamp, threads):
    spec, _ = build_structure(cfg)
    ks = build_kernel_spec(cfg, spec)
    G, K, dom, comp, cons = certify_constants(cfg, spec)
    gcert = certify_condition_G(G, ks, kernel_samples(ks.order, ks.dim, n=int(cfg["certify"]["samples"]),
                                                       seed=int(cfg["certify"]["seed"])))
    text = "\n".join(["[condition_G]", gcert.report(), "[domination]"]
                     + [f"c_{j}: {v:.10g}" for j, v in enumerate(dom.c)]
                     + ["[composition]", f"C_star: {comp.C_star:.10g}", f"C_star_oracle: {comp.C_star_oracle:.10g}",
                        f"oracle_gap: {comp.oracle_gap:.3e}", "[constants]", cons.to_text()])
    return 0, [_write(os.path.join(out, "certificate.txt"), text, stamp)], {}


def _orlicz(cfg_block, spec, order, dim):
    beta = cfg_block["beta"]
    M = cfg_block["M"] if cfg_block["M"] is not None else OrliczSpec.minimal_M(beta, float(spec.p_abs))
    return OrliczSpec(beta=beta, M=M, A=float(spec.A), p_bracket_0=float(spec.p_bracket(0)), d=order,
                      p_abs=float(spec.p_abs), dim=dim).validate()


def cmd_check(cfg, out, stamp, threads):
    spec, variants = build_structure(cfg)
    ks = build_kernel_spec(cfg, spec)
    phi, nphi = build_data(cfg, spec)
    c = cfg["check"]
    T = cfg["disc"]["T"]
    blocks, passed = [], []
    for n, s in sorted(variants.items()):
        report = classify(s, ks)
        field = phi
        if report.case == "A" and n > 0:
            field = nphi if nphi is not None else phi.with_values(
                tensor_norm(derivative_tensor(phi, np.fft.fftn(phi.values), n), phi.dim, n))
        q = None
        orlicz = None
        if report.case == "C":
            q = c["q"] if c["q"] is not None else 0.5 * (1.0 + min(float(report.r_n), float(s.p_abs)))
        if report.case == "D":
            orlicz = _orlicz(c, s, ks.order, ks.dim)
        cr = check_initial_condition(field, report, T, c["gamma"], q=q, orlicz=orlicz)
        blocks += [f"[n={n}]", report.to_table(), cr.to_text()]
        passed.append(cr.passed)
    path = _write(os.path.join(out, "condition_report.txt"), "\n".join(blocks), stamp)
    return 0, [path], {"pass": str(all(passed)).lower()}


def _solve(cfg, out, stamp, with_super):
    spec, _ = build_structure(cfg)
    ks = build_kernel_spec(cfg, spec)
    report = classify(spec, ks) if spec.family != "custom" else None
    disc = build_discretization(cfg)
    phi, nphi = build_data(cfg, spec)
    g = cfg["disc"]
    sv = cfg["solve"]
    U = None
    kind = sv["supersolution"]
    if with_super and kind.lower() != "none":
        kind = report.case if kind.lower() == "auto" else kind.upper()
        _, K, _, _, cons = certify_constants(cfg, spec)
        params = {"eps": sv["eps"], "nphi": nphi}
        if kind == "C":
            params["q"] = sv["q"] if sv["q"] is not None else 0.5 * (1.0 + min(float(report.r_n), float(spec.p_abs)))
        if kind == "D":
            params["orlicz"] = _orlicz(sv, spec, ks.order, ks.dim)
        U = build_supersolution(kind, phi, K, cons, params, spec, disc)
    run = picard_solve(ks, spec, phi, g["T"], disc, max_iter=int(g["max_iter"]), tol=g["tol"], supersolution=U)
    bound = check_apriori_bound(run, U) if U is not None else None
    return spec, report, run, U, bound


def cmd_solve(cfg, out, stamp, threads):
    spec, report, run, U, bound = _solve(cfg, out, stamp, True)
    paths = write_snapshots(run, os.path.join(out, "snapshots"), count=int(cfg["solve"]["snapshots"]),
                            timestamp=stamp)
    paths.append(write_run_summary(run, os.path.join(out, "run_summary.txt"), bound=bound, supersolution=U,
                                   timestamp=stamp))
    info = {"status": run.status, "iterations": run.iterations, "final_sup": f"{run.final_sup:.10g}"}
    if run.status != "converged":
        raise RunFailure(f"picard iteration ended with status {run.status}", paths, info)
    return 0, paths, info


def cmd_decay(cfg, out, stamp, threads):
    spec, report, run, U, bound = _solve(cfg, out, stamp, False)
    info = {"status": run.status}
    if run.status != "converged":
        path = write_run_summary(run, os.path.join(out, "run_summary.txt"), timestamp=stamp)
        raise RunFailure(f"decay fit needs a converged run (status {run.status})", [path], info)
    if report is None:
        raise ValidationError("decay fits need a preset structure")
    result = verify_decay(run, report, tol=cfg["decay"]["tol"])
    table = os.path.join(out, "decay.csv")
    with open(table, "w", newline="") as fh:
        if stamp is not None:
            fh.write(f"# generated: {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "slope", "expected", "window_lo", "window_hi", "log_corrected", "passed"])
        for f in result.fits:
            w.writerow([f.j, f"{f.slope:.10f}", f"{f.expected:.10f}", f"{f.window[0]:.6e}", f"{f.window[1]:.6e}",
                        f.corrected, f.passed])
    summary = write_run_summary(run, os.path.join(out, "run_summary.txt"), decay=result, timestamp=stamp)
    info["decay_passed"] = str(result.passed).lower()
    return 0, [table, summary], info


def cmd_sweep(cfg, out, stamp, threads):
    spec, _ = build_structure(cfg)
    k, g, d, s = cfg["kernel"], cfg["disc"], cfg["data"], cfg["sweep"]
    params = {"p": spec.p_abs, "dim": int(k["dim"]), "order": k["order"], "ell": cfg["structure"]["ell"],
              "n_ref": spec.n, "decay_exponent": k["decay_exponent"], "box": g["box"], "n": int(g["n"]),
              "T": g["T"], "max_iter": int(g["max_iter"]), "tol": g["tol"], "t_min_ratio": g["t_min_ratio"],
              "growth": g["growth"], "max_step_ratio": g["max_step_ratio"]}
    if d["profile"] != "auto":
        params["profile"] = d["profile"]
    if d["exponent"] is not None:
        params["exponent"] = d["exponent"]
    if d["log_exponent"] is not None:
        params["log_exponent"] = d["log_exponent"]
    try:
        bracket = sharpness_experiment(spec.family, params, (s["gamma_lo"], s["gamma_hi"]), int(s["steps"]),
                                       workers=threads)
    except BracketError as exc:
        path = write_sweep_csv(exc.records, os.path.join(out, "sweep.csv"), timestamp=stamp)
        raise RunFailure(str(exc), [path], {}) from None
    path = write_sweep_csv(bracket.records, os.path.join(out, "sweep.csv"), timestamp=stamp)
    summary = _write(os.path.join(out, "sweep_summary.txt"),
                     f"label: {bracket.label}\nlower: {bracket.lower:.12g}\nupper: {bracket.upper:.12g}", stamp)
    return 0, [path, summary], {"lower": f"{bracket.lower:.10g}", "upper": f"{bracket.upper:.10g}"}


class RunFailure(NumericalError):
    def __init__(self, message, paths, info):
        super().__init__(message)
        self.paths = paths
        self.info = info


HANDLERS = {"kernel": cmd_kernel, "certify": cmd_certify, "check": cmd_check, "solve": cmd_solve,
            "decay": cmd_decay, "sweep": cmd_sweep}


def _validate_blocks(command, cfg):
    """Cheap validation of every block before any computation."""
    spec, _ = build_structure(cfg)
    ks = build_kernel_spec(cfg, spec)
    ks.check_structure(spec.ell, spec.m)
    if command in ("check", "solve", "decay", "sweep"):
        build_discretization(cfg)
        if cfg["data"]["profile"] not in ("constant", "power", "log", "bump", "gradient-power", "file", "auto"):
            raise ValidationError(f"unknown data.profile {cfg['data']['profile']!r}")
    if command in ("solve", "decay") and spec.family == "custom":
        raise ValidationError("solving needs a preset family (custom structures carry no nonlinearity)")
    if command == "solve":
        kind = cfg["solve"]["supersolution"].lower()
        if kind not in ("none", "auto", "a", "b", "c", "d"):
            raise ValidationError(f"unknown solve.supersolution {kind!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="majorant-pde", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="file of 'block.key = value' lines")
    ap.add_argument("--set", action="append", default=[], metavar="BLOCK.KEY=VALUE", help="override a config value")
    ap.add_argument("--out-dir", default="majorant_out", help="root directory for artifacts")
    ap.add_argument("--threads", type=int, default=1, help="cap on concurrent runs (sweep)")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the generated-at header line")
    return ap


def _error_line(code, exc):
    return f"error: code={code} kind={type(exc).__name__} message={json.dumps(str(exc))}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print(_error_line(2, ValidationError("--threads must be >= 1")), file=sys.stderr)
        return 2
    stamp = None if args.no_timestamp else datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        cfg = load_config(args.config, args.set)
        _validate_blocks(args.command, cfg)
        os.makedirs(args.out_dir, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            code, paths, info = HANDLERS[args.command](cfg, args.out_dir, stamp, args.threads)
    except ValidationError as exc:
        print(_error_line(2, exc), file=sys.stderr)
        return 2
    except RunFailure as exc:
        extra = " ".join(f"{k}={v}" for k, v in exc.info.items())
        print(f"{_error_line(3, exc)} {extra}".rstrip(), file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(_error_line(3, exc), file=sys.stderr)
        return 3
    except MajorantError as exc:
        print(_error_line(3, exc), file=sys.stderr)
        return 3
    extra = " ".join(f"{k}={v}" for k, v in info.items())
    print(f"ok: command={args.command} artifacts={len(paths)} {extra}".rstrip())
    return code


if __name__ == "__main__":
    sys.exit(main())
