"""Batch front-end: config-driven experiments with JSON/CSV artifacts.

Usage: diractrace <command> --config <file> [--out <dir>] [--format json|csv]
[--threads N].  Commands: classify, spectrum, heat, bnf, trace-check, eta.
Configs are flat JSON objects, one experiment per file; outputs are written
atomically and floats printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


def _need(cfg, key, types, check=None, what=""):
    if key not in cfg:
        raise ConfigError(key, "missing")
    val = cfg[key]
    if not isinstance(val, types):
        raise ConfigError(key, f"expected {what or types}")
    if check is not None and not check(val):
        raise ConfigError(key, f"failed validation: {what}")
    return val


def _fmt(x):
    if isinstance(x, float):
        return float(f"{x:.17g}")
    if isinstance(x, complex):
        return {"re": float(f"{x.real:.17g}"), "im": float(f"{x.imag:.17g}")}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (np.floating,)):
        return _fmt(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.complexfloating,)):
        return _fmt(complex(x))
    return x


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_to_csv(rows):
    import csv
    import io

    if not rows:
        return ""
    buf = io.StringIO()
    keys = list(rows[0].keys())
    cols = []
    for k in keys:
        if isinstance(rows[0][k], dict) and set(rows[0][k]) == {"re", "im"}:
            cols += [f"{k}_re", f"{k}_im"]
        else:
            cols.append(k)
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(cols)
    for r in rows:
        out = []
        for k in keys:
            v = r[k]
            if isinstance(v, dict) and set(v) == {"re", "im"}:
                out += [f"{v['re']:.17g}", f"{v['im']:.17g}"]
            elif isinstance(v, float):
                out.append(f"{v:.17g}")
            elif isinstance(v, (list, tuple)):
                out.append(" ".join(str(t) for t in v))
            else:
                out.append("" if v is None else v)
        w.writerow(out)
    return buf.getvalue()


# --- command implementations -----------------------------------------------

def _cmd_classify(cfg):
    from . import symplectic as sy

    if "matrix" in cfg:
        P = np.asarray(cfg["matrix"], dtype=float)
    elif "matrix_file" in cfg:
        with open(cfg["matrix_file"]) as fh:
            P = sy.matrix_from_text(fh.read())
    else:
        raise ConfigError("matrix", "missing (matrix or matrix_file)")
    tol = cfg.get("tolerance", 1e-8)
    d = sy.classify_return_map(P, tol=tol)
    out = {
        "elliptic": list(d.elliptic),
        "pos_hyp": list(d.pos_hyp),
        "neg_hyp": list(d.neg_hyp),
        "loxodromic": [list(p) for p in d.loxodromic],
    }
    ell = cfg.get("iterate")
    if ell:
        out["det_one_minus"] = sy.det_one_minus(d, int(ell))
        out["maslov"] = sy.maslov_index(d, int(ell))
    if cfg.get("check_nonresonant"):
        out["nonresonance"] = sy.check_nonresonant(
            d, int(cfg.get("coeff_bound", 20)), cfg.get("relation_tol", 1e-9)
        )
    return {"result": out}


def _cmd_spectrum(cfg):
    from . import landau

    mu = _need(cfg, "mu", list, lambda v: all(x > 0 for x in v), "positive reals")
    h = _need(cfg, "h", (int, float), lambda v: v > 0, "positive")
    cutoff = _need(cfg, "cutoff", (int, float), lambda v: v > 0, "positive")
    p = landau.ModelParams(tuple(sorted(float(x) for x in mu)), float(h))
    lines = landau.model_spectrum(p, float(cutoff))
    rows = [
        {
            "value": l.value,
            "multiplicity": l.multiplicity,
            "tau": list(l.label.tau),
            "sign": l.label.sign,
        }
        for l in lines
    ]
    out = {"rows": rows}
    if cfg.get("oracle"):
        basis_cut = int(cfg.get("basis_cut", 40))
        vals = landau.truncated_eigenvalues(p, basis_cut, float(cutoff))
        pred = []
        for l in lines:
            pred += [l.value] * l.multiplicity
        pred = np.sort(pred)
        out["oracle"] = {
            "count_matrix": len(vals),
            "count_model": len(pred),
            "max_abs_err": float(np.abs(vals - pred).max())
            if len(vals) == len(pred)
            else None,
        }
    return out


def _cmd_heat(cfg):
    from . import heatkernel as hk

    mu = _need(cfg, "mu", list, lambda v: all(x > 0 for x in v), "positive reals")
    ts = _need(cfg, "t_list", list, lambda v: all(x > 0 for x in v), "positive reals")
    m = len(mu)
    n = 2 * m + 1
    A = np.zeros((n, n, n))
    for j, k, l, v in cfg.get("A_entries", []):
        A[int(j), int(k), int(l)] = v
        A[int(k), int(j), int(l)] = -v
    jet = hk.JetData(tuple(mu), A)
    rows = []
    for t in ts:
        rows.append(
            {
                "t": float(t),
                "u1": hk.u1_pointwise(jet, float(t)),
                "quadrature_check": hk.u1_pointwise_three_term(jet, float(t)),
                "abs_err": abs(
                    hk.u1_pointwise(jet, float(t))
                    - hk.u1_pointwise_three_term(jet, float(t))
                ),
            }
        )
    return {
        "rows": rows,
        "u1_time_integral": hk.u1_time_integral(jet),
        "master_integral": hk.master_integral_quadrature(),
    }


def _cmd_bnf(cfg):
    from . import weylseries as ws

    mu = _need(cfg, "mu", list, lambda v: all(x > 0 for x in v), "positive reals")
    beta = _need(cfg, "beta", list, lambda v: all(x > 0 for x in v), "positive angles")
    N = int(_need(cfg, "order", (int,), lambda v: 2 <= v <= 6, "2..6"))
    L = float(cfg.get("L_gamma", 1.0))
    model = ws.WeylModel(m=len(mu), mu=tuple(mu), L=L, elliptic=tuple(beta))
    T = N + 1
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    eps = float(cfg.get("perturbation_scale", 0.03))
    d1 = ws.model_symbol(model, T)
    hb, _, null = ws.harmonic_basis(model, T, 2, parity=1, exact=2)
    pert = ws.KoszulElement(model.m, T)
    if null.shape[1]:
        z = eps * rng.normal(size=null.shape[1])
        pert = ws._vector_to_koszul(null @ z, hb, model.m, T)
    f, a, om, res = ws.birkhoff_normal_form(d1 + pert, N, model)
    res_min = min(
        (ws.weight(mo) for mo, c in res.terms.items()
         if (np.abs(c).max() if isinstance(c, np.ndarray) else abs(c)) > 1e-9),
        default=None,
    )
    return {
        "result": {
            "order": N,
            "residual_min_weight": res_min,
            "residual_max_abs": res.max_abs(),
            "omega_terms": sum(len(s.terms) for s in om.parts.values()),
            "f_terms": len(f.terms),
        }
    }


def _build_geometry(cfg):
    from . import gutzwiller as gw
    from .symplectic import BlockDecomposition

    betas = tuple(cfg.get("beta", []))
    return gw.ModelGeometry(
        L_gamma=float(cfg.get("L_gamma", 1.0)),
        T_gamma=float(_need(cfg, "T_gamma", (int, float), lambda v: v > 0, "positive")),
        transverse=BlockDecomposition(elliptic=betas),
    )


def _cmd_trace_check(cfg, threads=1):
    from . import gutzwiller as gw

    g = _build_geometry(cfg)
    h_list = _need(cfg, "h_list", list, lambda v: all(x > 0 for x in v), "positive")
    lam = float(cfg.get("lambda", 0.3))
    fw = cfg.get("f_window", [0.0, 1.2, 0.6])
    tw = cfg.get("theta_window", [1.0, 0.45, 0.22])

    def w_builder(h):
        return gw.Window(
            gw.SmoothBump(*fw), gw.SmoothBump(*tw), lam=lam, h=h,
        )

    if threads > 1 and len(h_list) > 1:
        # per-h comparisons are independent; assemble in the given order
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(
                ex.map(lambda h: gw.trace_compare(g, w_builder, [h]), h_list)
            )
        rows = [p["rows"][0] for p in parts]
        hs = np.array(h_list)
        key = "dyn_rel_err" if g.betas else "abs_err"
        es = np.array([max(r[key], 1e-300) for r in rows])
        slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0]) if len(rows) > 1 else None
        report = {"rows": rows, "error_slope": slope, "certificate": g.certificate()}
    else:
        report = gw.trace_compare(g, w_builder, [float(h) for h in h_list])
    report["rows"] = [_fmt(r) for r in report["rows"]]
    return report


def _cmd_eta(cfg):
    from . import gutzwiller as gw

    g = _build_geometry(cfg)
    h_list = _need(cfg, "h_list", list, lambda v: all(x > 0 for x in v), "positive")
    rep = gw.eta_limit_check(
        g,
        [float(h) for h in h_list],
        eps_factor=float(cfg.get("eps_factor", 5.0)),
        k_span=int(cfg.get("k_span", 60000)),
        reference_volume=cfg.get("reference_volume"),
    )
    rep["rows"] = [_fmt(r) for r in rep["rows"]]
    return rep


COMMANDS = {
    "classify": _cmd_classify,
    "spectrum": _cmd_spectrum,
    "heat": _cmd_heat,
    "bnf": _cmd_bnf,
    "trace-check": _cmd_trace_check,
    "eta": _cmd_eta,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="diractrace",
        description="model spectra, return-map classification, heat tables, "
        "normal forms and two-sided trace checks",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("DIRACTRACE_THREADS", "1"))
    threads = max(1, threads)

    def fail(code, kind, message):
        payload = json.dumps({"error": {"code": kind, "message": message}})
        if args.format == "json":
            print(payload)
        else:
            print(message, file=sys.stderr)
        return code

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        return fail(EXIT_CONFIG, "config-parse", f"cannot read config: {e}")

    try:
        if args.command == "trace-check":
            result = COMMANDS[args.command](cfg, threads=threads)
        else:
            result = COMMANDS[args.command](cfg)
    except ConfigError as e:
        return fail(EXIT_CONFIG, "config-invalid", str(e))
    except Exception as e:
        return fail(EXIT_NUMERIC, type(e).__name__, str(e))

    result = _fmt(result)
    if args.format == "json":
        text = json.dumps(result, indent=2, sort_keys=True)
        ext = "json"
    else:
        rows = result.get("rows")
        if rows is None:
            text = json.dumps(result, indent=2, sort_keys=True)
            ext = "json"
        else:
            text = _rows_to_csv(rows)
            ext = "csv"
    if args.out:
        path = os.path.join(args.out, f"{args.command}.{ext}")
        _atomic_write(path, text)
        print(path)
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
