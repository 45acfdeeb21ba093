"""Command-line front end: analyze, certify, simulate."""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import certify as cert
from . import frequency, nonstationary, storage, trajectory
from .config import resolve_tol
from .errors import DocumentError, KypError, NoDichotomy, SingularAminus
from .systems import (
    BicausalRealization,
    StateSpaceSystem,
    dichotomy_split,
    from_bicausal,
)

EXIT_OK = 0
EXIT_NOT_CONTRACTIVE = 2
EXIT_INCONCLUSIVE = 3
EXIT_INPUT = 4


# ------------------------------------------------------------- documents

def _entry(v, where):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise DocumentError(f"{where}: matrix entries must be numbers or [re, im] pairs")


def _matrix(doc, key, where=""):
    if key not in doc:
        raise DocumentError(f"{where}: missing matrix {key!r}")
    rows = doc[key]
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise DocumentError(f"{where}: {key!r} must be a nested array")
    if rows and len({len(r) for r in rows}) != 1:
        raise DocumentError(f"{where}: {key!r} has ragged rows")
    out = np.array([[_entry(v, f"{where}:{key}") for v in r] for r in rows],
                   dtype=np.complex128)
    return out if rows else np.zeros((0, 0), dtype=np.complex128)


def load_document(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DocumentError(f"{path}: document must be an object with a 'kind' field")
    return doc


def document_system(doc, path=""):
    """Validate a SystemDocument and build the matching system object."""
    kind = doc.get("kind")
    try:
        if kind == "dichotomous":
            return StateSpaceSystem(_matrix(doc, "A", path), _matrix(doc, "B", path),
                                    _matrix(doc, "C", path), _matrix(doc, "D", path))
        if kind == "bicausal":
            return BicausalRealization(
                _matrix(doc, "A_plus", path), _matrix(doc, "B_plus", path),
                _matrix(doc, "C_plus", path), _matrix(doc, "D", path),
                _matrix(doc, "A_minus", path), _matrix(doc, "B_minus", path),
                _matrix(doc, "C_minus", path))
        if kind == "periodic":
            period = doc.get("period")
            if not isinstance(period, int) or period < 1:
                raise DocumentError(f"{path}: 'period' must be a positive integer")
            mats = {}
            for key in "ABCD":
                seq = doc.get(key)
                if not isinstance(seq, list) or len(seq) != period:
                    raise DocumentError(f"{path}: {key!r} must list {period} matrices")
                mats[key] = [_matrix({"M": M}, "M", f"{path}:{key}[{k}]")
                             for k, M in enumerate(seq)]
            return nonstationary.PeriodicSystem(mats["A"], mats["B"], mats["C"], mats["D"])
    except (ValueError, KypError) as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    raise DocumentError(f"{path}: unknown kind {kind!r} "
                        "(expected dichotomous, bicausal, or periodic)")


def _enc_matrix(M):
    return [[[float(f"{v.real:.15g}"), float(f"{v.imag:.15g}")] for v in row]
            for row in np.asarray(M, dtype=np.complex128)]


def system_to_document(obj) -> dict:
    """SystemDocument for a system object; 15-significant-digit payload.

    Export followed by import round-trips bit-identically: parsed values are
    re-rounded to the same decimal form.
    """
    if isinstance(obj, nonstationary.PeriodicSystem):
        return {"kind": "periodic", "period": obj.period,
                "A": [_enc_matrix(obj.A(k)) for k in range(obj.period)],
                "B": [_enc_matrix(obj.B(k)) for k in range(obj.period)],
                "C": [_enc_matrix(obj.C(k)) for k in range(obj.period)],
                "D": [_enc_matrix(obj.D(k)) for k in range(obj.period)]}
    if isinstance(obj, BicausalRealization):
        return {"kind": "bicausal",
                "A_plus": _enc_matrix(obj.Aplus), "B_plus": _enc_matrix(obj.Bplus),
                "C_plus": _enc_matrix(obj.Cplus), "D": _enc_matrix(obj.D),
                "A_minus": _enc_matrix(obj.Aminus), "B_minus": _enc_matrix(obj.Bminus),
                "C_minus": _enc_matrix(obj.Cminus)}
    if isinstance(obj, StateSpaceSystem):
        return {"kind": "dichotomous", "A": _enc_matrix(obj.A),
                "B": _enc_matrix(obj.B), "C": _enc_matrix(obj.C),
                "D": _enc_matrix(obj.D)}
    raise TypeError(f"cannot encode {type(obj)!r} as a SystemDocument")


def write_document(obj, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(system_to_document(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    doc = load_document(args.document)
    obj = document_system(doc, args.document)
    tol = resolve_tol(doc.get("tol"))
    out = []
    if isinstance(obj, nonstationary.PeriodicSystem):
        rep = nonstationary.tv_dichotomy(obj, tol)
        out.append(f"kind              periodic (period {obj.period})")
        out.append(f"dichotomy margin  {rep.margin:.6g}")
        out.append(f"split dimensions  dim_minus={rep.dim_minus} dim_plus={rep.dim_plus}")
        if rep.margin > tol:
            lifted = nonstationary.lift_stationary(obj, tol)
            dec = dichotomy_split(lifted.system, tol)
            out.append(f"lifted hinf       {frequency.hinf_norm(dec, tol):.9g}")
        else:
            out.append("diagnostic        NoDichotomy: monodromy spectrum meets the circle")
        print("\n".join(out))
        return EXIT_OK

    if isinstance(obj, BicausalRealization):
        out.append("kind              bicausal")
        rm, rp = obj.rho()
        out.append(f"stability radii   rho_minus={rm:.6g} rho_plus={rp:.6g}")
        out.append(f"hinf              {frequency.hinf_norm(obj, tol):.9g}")
        g = storage.build_gramians(obj, frequency.default_window(obj).N)
        rep = storage.check_exact_minimality(g, tol)
        out.append(f"exactly minimal   {rep.is_minimal} "
                   f"(margins c+={rep.margin_c_plus:.3g} c-={rep.margin_c_minus:.3g} "
                   f"o+={rep.margin_o_plus:.3g} o-={rep.margin_o_minus:.3g})")
        try:
            eq = from_bicausal(obj, tol)
            out.append(f"dichotomous form  n={eq.n} via inverted anticausal block")
        except SingularAminus:
            out.append("dichotomous form  none (anticausal state operator singular)")
        if args.gain_csv:
            frequency.write_gain_csv(obj, args.gain_csv)
            out.append(f"gain profile      {args.gain_csv}")
        print("\n".join(out))
        return EXIT_OK

    out.append("kind              dichotomous")
    try:
        dec = dichotomy_split(obj, tol)
    except NoDichotomy:
        out.append("diagnostic        NoDichotomy: spectrum meets the unit circle")
        print("\n".join(out))
        return EXIT_OK
    out.append(f"dichotomy margin  {dec.margin:.6g}")
    out.append(f"split dimensions  dim_minus={dec.dim_minus} dim_plus={dec.dim_plus}")
    out.append(f"hinf              {frequency.hinf_norm(dec, tol):.9g}")
    g = storage.build_gramians(dec, frequency.default_window(dec).N)
    rep = storage.check_exact_minimality(g, tol)
    out.append(f"exactly minimal   {rep.is_minimal} "
               f"(margins c+={rep.margin_c_plus:.3g} c-={rep.margin_c_minus:.3g} "
               f"o+={rep.margin_o_plus:.3g} o-={rep.margin_o_minus:.3g})")
    if args.gain_csv:
        frequency.write_gain_csv(dec, args.gain_csv)
        out.append(f"gain profile      {args.gain_csv}")
    print("\n".join(out))
    return EXIT_OK


# ------------------------------------------------------------- certify

def _certify_document(path, strict, bicausal_native, tol_override=None):
    doc = load_document(path)
    obj = document_system(doc, path)
    tol = resolve_tol(tol_override if tol_override is not None else doc.get("tol"))
    N = doc.get("window_N")
    epsilon = doc.get("epsilon")
    if isinstance(obj, nonstationary.PeriodicSystem):
        try:
            tv = nonstationary.solve_tv_kyp(obj, tol, epsilon=epsilon)
        except NoDichotomy as exc:
            return cert.CertificationReport(cert.INCONCLUSIVE, float("nan"),
                                            diagnostics={"error": str(exc)}), None
        except KypError as exc:
            lifted = nonstationary.lift_stationary(obj, tol)
            hinf = frequency.hinf_norm(dichotomy_split(lifted.system, tol), tol)
            verdict = cert.NOT_CONTRACTIVE if hinf > 1.0 + tol else cert.INCONCLUSIVE
            return cert.CertificationReport(verdict, hinf,
                                            diagnostics={"error": str(exc)}), None
        report = cert.CertificationReport(
            cert.STRICTLY_CONTRACTIVE_CERTIFIED, float("nan"),
            diagnostics={"epsilon": tv.epsilon,
                         "residual_min": tv.residual_min,
                         "inertia": list(tv.inertia),
                         "max_norm_H": tv.max_norm,
                         "max_norm_Hinv": tv.max_inv_norm})
        return report, tv
    if isinstance(obj, BicausalRealization):
        if bicausal_native:
            return cert.certify_bicausal(obj, strict=strict, tol=tol, N=N,
                                         epsilon=epsilon), None
        try:
            sys_eq = from_bicausal(obj, tol)
        except SingularAminus:
            return cert.certify_bicausal(obj, strict=strict, tol=tol, N=N,
                                         epsilon=epsilon), None
        obj = sys_eq
    if strict:
        return cert.certify_strict(obj, tol, N=N, epsilon=epsilon), None
    return cert.certify_standard(obj, tol, N=N), None


def _tv_certificate_json(tv) -> dict:
    enc = storage._encode_cmat
    return {"period": len(tv.H),
            "epsilon": tv.epsilon,
            "inertia": list(tv.inertia),
            "H": [enc(H) for H in tv.H],
            "residual_spectra": [[float(f"{v:.15g}") for v in s]
                                 for s in tv.residual_spectra]}


def _report_line(path, report) -> str:
    hinf = f"{report.hinf:.9g}" if np.isfinite(report.hinf) else "-"
    return f"{path}: {report.verdict} (hinf={hinf}, exit={report.exit_code})"


def cmd_certify(args) -> int:
    paths = [args.document] if not args.batch else \
        sorted(str(p) for p in Path(args.batch).glob("*.json"))
    if not paths:
        raise DocumentError(f"{args.batch}: no .json documents found")

    def run(path):
        return _certify_document(path, args.strict, args.bicausal_native)

    if args.batch and len(paths) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(run, paths))
    else:
        results = [run(p) for p in paths]

    worst = EXIT_OK
    for path, (report, tv) in zip(paths, results):
        print(_report_line(path, report))
        worst = max(worst, report.exit_code)
        if args.json:
            doc = cert.report_to_json(report)
            if tv is not None:
                doc["tv_certificate"] = _tv_certificate_json(tv)
            target = Path(args.json)
            if args.batch:
                target.mkdir(parents=True, exist_ok=True)
                target = target / (Path(path).stem + ".report.json")
            with open(target, "w", encoding="ascii") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
    return worst


# ------------------------------------------------------------- simulate

def _read_input_csv(path, m):
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DocumentError(f"{path}: empty input file")
    names = [h.strip() for h in lines[0].split(",")]
    if names[0] != "n":
        raise DocumentError(f"{path}: first column must be 'n'")
    mu = sum(1 for h in names if h.startswith("u_"))
    if mu != m:
        raise DocumentError(f"{path}: expected {m} input columns, found {mu}")
    rows = []
    try:
        for ln in lines[1:]:
            cells = ln.split(",")
            rows.append((int(cells[0]), [complex(c) for c in cells[1:1 + m]]))
    except ValueError as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    rows.sort(key=lambda r: r[0])
    n0 = rows[0][0]
    L = rows[-1][0] - n0 + 1
    u = np.zeros((L, m), dtype=np.complex128)
    for n, vals in rows:
        u[n - n0] = vals
    return n0, u


def cmd_simulate(args) -> int:
    doc = load_document(args.document)
    obj = document_system(doc, args.document)
    tol = resolve_tol(doc.get("tol"))
    if isinstance(obj, nonstationary.PeriodicSystem):
        raise DocumentError(f"{args.document}: simulate expects a stationary document")
    if isinstance(obj, BicausalRealization):
        runner, model = trajectory.simulate_bicausal, obj
    else:
        model = dichotomy_split(obj, tol)
        runner = trajectory.simulate
    n0, u = _read_input_csv(args.input, model.m)
    traj = runner(model, u, n0=n0, tol=tol)
    if not isinstance(obj, BicausalRealization):
        # trajectories run in split coordinates; exported states are original
        traj = trajectory.map_states(traj, model.T)
    if args.output:
        trajectory.trajectory_to_csv(traj, args.output)
    else:
        trajectory.trajectory_to_csv(traj, sys.stdout)
    if args.check_H:
        c = storage.read_certificate(args.check_H)
        eps = float(np.sqrt(c.strict_margin))
        res = trajectory.dissipation_residuals(c.pullback(), traj, eps=eps, tol=tol)
        print(f"min dissipation residual: {res.min():.15g}", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(
        prog="kypcert",
        description="Dichotomous/bicausal Bounded Real Lemma toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="margins, split dimensions, hinf, minimality")
    a.add_argument("document")
    a.add_argument("--gain-csv", default=None, help="write (theta, sigma_max) CSV")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("certify", help="run a Bounded Real Lemma pipeline")
    c.add_argument("document", nargs="?", default=None)
    c.add_argument("--strict", action="store_true")
    c.add_argument("--bicausal-native", action="store_true",
                   help="certify bicausal documents without converting")
    c.add_argument("--json", default=None, help="report path (directory in batch mode)")
    c.add_argument("--batch", default=None, help="directory of documents")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="run a square-summable trajectory")
    s.add_argument("document")
    s.add_argument("--input", required=True, help="CSV with columns n,u_1..u_m")
    s.add_argument("--output", default=None, help="trajectory CSV (default stdout)")
    s.add_argument("--check-H", dest="check_H", default=None,
                   help="certificate JSON; prints the min dissipation residual")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "certify" and not args.document and not args.batch:
        print("kypcert certify: a document or --batch directory is required",
              file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"kypcert: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KypError as exc:
        print(f"kypcert: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
