"""End-to-end certification pipelines for the four Bounded Real Lemmas."""

from dataclasses import dataclass, field

import numpy as np

from .config import resolve_tol
from .errors import KypError, NoDichotomy, RangeViolation, SylvesterFailure
from .frequency import default_window, hinf_norm
from .storage import (
    KypCertificate,
    bicausal_kyp_residual,
    build_gramians,
    certificate_to_json,
    check_exact_minimality,
    compute_Ha,
    compute_Hr,
    inertia,
    kyp_residual,
)
from .systems import (
    BicausalRealization,
    StateSpaceSystem,
    augment_epsilon,
    augment_epsilon_bicausal,
    dichotomy_split,
)

__all__ = [
    "CONTRACTIVE_CERTIFIED",
    "STRICTLY_CONTRACTIVE_CERTIFIED",
    "NOT_CONTRACTIVE",
    "INCONCLUSIVE",
    "CertificationReport",
    "choose_epsilon",
    "certify_standard",
    "certify_strict",
    "certify_bicausal",
    "report_to_json",
]

CONTRACTIVE_CERTIFIED = "CONTRACTIVE_CERTIFIED"
STRICTLY_CONTRACTIVE_CERTIFIED = "STRICTLY_CONTRACTIVE_CERTIFIED"
NOT_CONTRACTIVE = "NOT_CONTRACTIVE"
INCONCLUSIVE = "INCONCLUSIVE"

_EXIT_CODES = {
    CONTRACTIVE_CERTIFIED: 0,
    STRICTLY_CONTRACTIVE_CERTIFIED: 0,
    NOT_CONTRACTIVE: 2,
    INCONCLUSIVE: 3,
}


@dataclass
class CertificationReport:
    verdict: str
    hinf: float
    certificate: KypCertificate = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self.verdict]


def report_to_json(report: CertificationReport) -> dict:
    doc = {
        "verdict": report.verdict,
        "hinf": float(f"{report.hinf:.15g}") if np.isfinite(report.hinf) else None,
        "diagnostics": {k: (float(f"{v:.15g}") if isinstance(v, (int, float)) and
                            not isinstance(v, bool) and np.isfinite(v) else v)
                        for k, v in report.diagnostics.items()},
        "exit_code": report.exit_code,
    }
    if report.certificate is not None:
        doc["certificate"] = certificate_to_json(report.certificate)
    return doc


def choose_epsilon(obj, hinf: float, tol=None, kmax: int = 60):
    """Largest eps in {2^-k} whose augmentation keeps the norm below (1+hinf)/2.

    `obj` is a StateSpaceSystem or BicausalRealization with hinf < 1; returns
    (eps, hinf of the augmented system).
    """
    from .frequency import _sigma_vec

    tol = resolve_tol(tol)
    target = (1.0 + hinf) / 2.0
    augment = (augment_epsilon_bicausal if isinstance(obj, BicausalRealization)
               else augment_epsilon)
    coarse = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
    for k in range(kmax + 1):
        eps = 2.0 ** (-k)
        aug = augment(obj, eps)
        # a grid maximum lower-bounds the sup: sound cheap rejection
        if float(_sigma_vec(aug.system, coarse).max()) > target:
            continue
        h = hinf_norm(aug.system, tol)
        if h <= target:
            return eps, h
    raise KypError(f"no eps in 2^-k, k <= {kmax}, meets the augmented norm target")


def _minimality_diag(report):
    return {
        "minimality_margin_c_plus": report.margin_c_plus,
        "minimality_margin_c_minus": report.margin_c_minus,
        "minimality_margin_o_plus": report.margin_o_plus,
        "minimality_margin_o_minus": report.margin_o_minus,
        "exactly_minimal": report.is_minimal,
    }


def _validated_verdict(cert: KypCertificate, tol: float, strict: bool, diag: dict):
    diag["residual_min"] = float(cert.residual_spectrum.min()) if \
        cert.residual_spectrum.size else 0.0
    diag["window_N"] = cert.window_N
    diag["tail_bound"] = cert.tail_bound
    diag["inertia"] = list(cert.inertia)
    expected = (cert.dim_plus, cert.dim_minus, 0)
    ok = cert.is_valid(tol) and cert.inertia == expected
    if not ok:
        return INCONCLUSIVE
    return STRICTLY_CONTRACTIVE_CERTIFIED if strict else CONTRACTIVE_CERTIFIED


def _strict_certificate(sys: StateSpaceSystem, dec, hinf: float, tol: float,
                        diag: dict, N=None, epsilon=None):
    """Strict certificate via the epsilon-augmented, exactly minimal system.

    The augmented certificate lives on the same state space; dropping the
    added input rows/columns of its KYP inequality leaves the strict
    inequality of the base system.  The epsilon paddings are identities in
    the original coordinates, so the strict residual is recorded against the
    original system with the pulled-back H (in split coordinates it would
    carry eps^2 T^*T instead of eps^2 I).
    """
    if epsilon is None:
        eps, hinf_eps = choose_epsilon(sys, hinf, tol)
    else:
        eps = float(epsilon)
        hinf_eps = hinf_norm(augment_epsilon(sys, eps).system, tol)
    diag["epsilon"] = eps
    diag["hinf_augmented"] = hinf_eps
    aug = augment_epsilon(sys, eps)
    aug_dec = dichotomy_split(aug.system, tol)
    try:
        cert_aug = compute_Ha(aug_dec, N=N, tol=tol, hinf=hinf_eps)
    except RangeViolation:
        cert_aug = compute_Hr(aug_dec, N=N, tol=tol, hinf=hinf_eps)
    H_orig = cert_aug.pullback()
    H_orig = (H_orig + H_orig.conj().T) / 2.0
    R = kyp_residual(sys, H_orig, eps, tol)
    spec = np.linalg.eigvalsh(R) if R.size else np.zeros(0)
    H = dec.T.conj().T @ H_orig @ dec.T
    H = (H + H.conj().T) / 2.0
    return KypCertificate(H, spec, inertia(H, tol), eps ** 2, dec.T,
                          cert_aug.window_N, cert_aug.tail_bound,
                          dec.dim_minus, dec.dim_plus)


def certify_standard(sys: StateSpaceSystem, tol=None, N=None) -> CertificationReport:
    """Standard Bounded Real Lemma pipeline: hinf <= 1 with a selfadjoint H.

    Exactly minimal systems get the available-storage certificate (required
    supply as fallback); non-minimal but strictly contractive systems are
    certified through the augmented route so that every strictly certified
    system also passes here.
    """
    tol = resolve_tol(tol)
    diag = {}
    try:
        dec = dichotomy_split(sys, tol)
    except (NoDichotomy, SylvesterFailure) as exc:
        return CertificationReport(INCONCLUSIVE, float("nan"),
                                   diagnostics={"error": str(exc)})
    diag["dichotomy_margin"] = dec.margin
    hinf = hinf_norm(dec, tol)
    diag["hinf"] = hinf
    if hinf > 1.0 + tol:
        return CertificationReport(NOT_CONTRACTIVE, hinf, diagnostics=diag)
    N = default_window(dec).N if N is None else int(N)
    minimal = check_exact_minimality(build_gramians(dec, N), tol)
    diag.update(_minimality_diag(minimal))
    if minimal.is_minimal:
        try:
            try:
                cert = compute_Ha(dec, N=N, tol=tol, hinf=hinf)
            except RangeViolation:
                cert = compute_Hr(dec, N=N, tol=tol, hinf=hinf)
        except KypError as exc:
            diag["error"] = str(exc)
            return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
        verdict = _validated_verdict(cert, tol, strict=False, diag=diag)
        return CertificationReport(verdict, hinf, cert, diag)
    if hinf < 1.0 - tol:
        try:
            cert = _strict_certificate(sys, dec, hinf, tol, diag, N=N)
        except KypError as exc:
            diag["error"] = str(exc)
            return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
        verdict = _validated_verdict(cert, tol, strict=False, diag=diag)
        diag["route"] = "augmented"
        return CertificationReport(verdict, hinf, cert, diag)
    diag["reason"] = "hinf within tolerance of 1 and system not exactly minimal"
    return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)


def certify_strict(sys: StateSpaceSystem, tol=None, N=None,
                   epsilon=None) -> CertificationReport:
    """Strict Bounded Real Lemma pipeline: hinf < 1 with a strict certificate.

    No minimality hypothesis: the epsilon augmentation is exactly minimal by
    construction and its standard certificate, restricted to the original
    rows and columns, is the strict certificate.  When hinf is within
    tolerance of 1 the call falls through to `certify_standard`.
    """
    tol = resolve_tol(tol)
    diag = {}
    try:
        dec = dichotomy_split(sys, tol)
    except (NoDichotomy, SylvesterFailure) as exc:
        return CertificationReport(INCONCLUSIVE, float("nan"),
                                   diagnostics={"error": str(exc)})
    diag["dichotomy_margin"] = dec.margin
    hinf = hinf_norm(dec, tol)
    diag["hinf"] = hinf
    if hinf > 1.0 + tol:
        return CertificationReport(NOT_CONTRACTIVE, hinf, diagnostics=diag)
    if hinf >= 1.0 - tol:
        report = certify_standard(sys, tol, N=N)
        report.diagnostics["strict_fallthrough"] = True
        return report
    try:
        cert = _strict_certificate(sys, dec, hinf, tol, diag, N=N, epsilon=epsilon)
    except KypError as exc:
        diag["error"] = str(exc)
        return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
    verdict = _validated_verdict(cert, tol, strict=True, diag=diag)
    return CertificationReport(verdict, hinf, cert, diag)


def certify_bicausal(bi: BicausalRealization, strict: bool = False,
                     tol=None, N=None, epsilon=None) -> CertificationReport:
    """Bicausal Bounded Real Lemma pipeline on the native pair realization.

    Standard path: bicausal gramians, available-storage certificate, bicausal
    KYP residual.  Strict path: epsilon-augment both subsystems, certify the
    augmentation, then drop the added rows/columns and re-validate with the
    epsilon penalty.
    """
    tol = resolve_tol(tol)
    diag = {"dim_minus": bi.dim_minus, "dim_plus": bi.dim_plus}
    hinf = hinf_norm(bi, tol)
    diag["hinf"] = hinf
    if hinf > 1.0 + tol:
        return CertificationReport(NOT_CONTRACTIVE, hinf, diagnostics=diag)

    if strict and hinf < 1.0 - tol:
        try:
            if epsilon is None:
                eps, hinf_eps = choose_epsilon(bi, hinf, tol)
            else:
                eps = float(epsilon)
                hinf_eps = hinf_norm(augment_epsilon_bicausal(bi, eps).system, tol)
            diag["epsilon"] = eps
            diag["hinf_augmented"] = hinf_eps
            aug = augment_epsilon_bicausal(bi, eps)
            try:
                cert_aug = compute_Ha(aug.system, N=N, tol=tol, hinf=hinf_eps)
            except RangeViolation:
                cert_aug = compute_Hr(aug.system, N=N, tol=tol, hinf=hinf_eps)
        except KypError as exc:
            diag["error"] = str(exc)
            return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
        H = cert_aug.H
        R = bicausal_kyp_residual(bi, H, eps, tol)
        spec = np.linalg.eigvalsh(R) if R.size else np.zeros(0)
        cert = KypCertificate(H, spec, inertia(H, tol), eps ** 2,
                              np.eye(bi.n, dtype=np.complex128),
                              cert_aug.window_N, cert_aug.tail_bound,
                              bi.dim_minus, bi.dim_plus)
        verdict = _validated_verdict(cert, tol, strict=True, diag=diag)
        return CertificationReport(verdict, hinf, cert, diag)

    N = default_window(bi).N if N is None else int(N)
    minimal = check_exact_minimality(build_gramians(bi, N), tol)
    diag.update(_minimality_diag(minimal))
    if not minimal.is_minimal:
        if hinf < 1.0 - tol:
            report = certify_bicausal(bi, strict=True, tol=tol, N=N, epsilon=epsilon)
            report.diagnostics["route"] = "augmented"
            if report.verdict == STRICTLY_CONTRACTIVE_CERTIFIED and not strict:
                report.verdict = CONTRACTIVE_CERTIFIED
            return report
        diag["reason"] = "hinf within tolerance of 1 and pair not exactly minimal"
        return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
    try:
        try:
            cert = compute_Ha(bi, N=N, tol=tol, hinf=hinf)
        except RangeViolation:
            cert = compute_Hr(bi, N=N, tol=tol, hinf=hinf)
    except KypError as exc:
        diag["error"] = str(exc)
        return CertificationReport(INCONCLUSIVE, hinf, diagnostics=diag)
    verdict = _validated_verdict(cert, tol, strict=False, diag=diag)
    return CertificationReport(verdict, hinf, cert, diag)
