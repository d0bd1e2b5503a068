"""One verification operation per trace-Jensen inequality, plus
hypothesis-ablation searches.

Every check is a pure function of its inputs returning a CheckReport, so a
failure witness replays bit-exactly. The inequalities verified:

  * check_cfl: the density-matrix partial-trace inequality
      Tr_2 f(Tr_1((rho x 1)^(1/2) H (rho x 1)^(1/2))) <= Tr_1(rho^(1/2) Tr_2 f(H) rho^(1/2))
  * check_main_tracial: the weighted-trace version with a in L^2,
      tau_2 f((tau_1 x id)[(a* x 1) H (a x 1)]) <= tau_1[a* (id x tau_2) f(H) a],
    for tau_1(a* a) = 1, or tau_1(a* a) <= 1 with f(0) = 0.
  * check_petz: tau(f(Phi(x))) <= tau(Phi(f(x))) for unital positive Phi and
    self-adjoint x (contractive Phi allowed when f(0) = 0).
  * check_vector_jensen: f(<Phi(x) xi, xi>) <= <Phi(f(x)) xi, xi>.
  * check_spectral_preorder_lemma: the compressed spectral pre-order
    comparisons behind the Petz-type proof.
  * check_pinching_chain: the pinching / Jordan-part bookkeeping chain that
    assembles those comparisons into the trace inequality.
  * check_partial_trace_duality: tau_2((tau_1 x id)((a* x 1) X (a x 1))) =
    tau_1(a* (id x tau_2)(X) a).
  * check_state_version: the normal-state version with operator convex f and
    a contraction a.
  * check_hansen_pedersen: the operator-level contractive Jensen inequality
    f((a* x 1) H (a x 1)) <= (a* x 1) f(H) (a x 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex_catalog import ScalarFunction, get_function
from .errors import BoundaryAmbiguityError, DimensionError, HypothesisError, NumericError
from .intervals import Interval
from .linalg_core import (
    DEFAULT_TOL,
    ToleranceConfig,
    as_complex,
    complex_gaussian,
    frob,
    hermitian_eig,
    hermitize,
    matrix_function,
    opnorm,
    psd_sqrt,
    random_contraction,
    random_density,
    random_hermitian,
    random_l2_normalized,
    random_unit_vector,
    random_unitary,
    rng_stream,
    symmetrize,
)
from .positive_maps import (
    PositiveMap,
    apply_map,
    random_positive_map,
)
from .reporting import CheckReport, decode_matrix, encode_matrix
from .spectral_tools import (
    MonotoneSplit,
    jordan_split,
    monotone_sign_split,
    pinching,
    preorder_violation,
    snap_away_from_spectrum,
    spectral_projection,
)
from .tensor_ops import (
    BlockAlgebra,
    LinearFunctional,
    TensorSpace,
    conjugate_compress,
    partial_trace,
    slice_map,
)

__all__ = [
    "check_cfl",
    "check_main_tracial",
    "check_petz",
    "check_vector_jensen",
    "check_spectral_preorder_lemma",
    "check_pinching_chain",
    "check_partial_trace_duality",
    "check_state_version",
    "check_hansen_pedersen",
    "ablation_search",
    "AblationResult",
    "ABLATION_TARGETS",
    "generate_trial",
    "run_trial",
    "replay_report",
    "working_interval",
    "petz_compatible",
    "trial_compatible",
    "PETZ_STYLE_KINDS",
]

_UNITAL_TOL = 1e-10
_NORMALIZED_TOL = 1e-10


def _attach_tol(witness: dict | None, tol: ToleranceConfig) -> dict | None:
    if witness is not None:
        witness.setdefault("inputs", {})["tol"] = [tol.atol, tol.rtol, tol.eig_cluster_tol]
    return witness


def _one_sided_report(
    name: str,
    seed: int,
    params: dict,
    lhs: float,
    rhs: float,
    tol: ToleranceConfig,
    witness_fn: Callable[[], dict] | None,
) -> CheckReport:
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise NumericError(f"{name}: non-finite lhs/rhs ({lhs!r}, {rhs!r})")
    gap = rhs - lhs
    tol_val = tol.bound(lhs, rhs)
    passed = gap >= -tol_val
    witness = None if passed or witness_fn is None else _attach_tol(witness_fn(), tol)
    return CheckReport(
        check_name=name, seed=seed, params=params,
        lhs=lhs, rhs=rhs, gap=gap, tol=tol_val, passed=passed, witness=witness,
    )


def _indicator_report(
    name: str,
    seed: int,
    params: dict,
    failed_assertions: list[str],
    tol: ToleranceConfig,
    witness_fn: Callable[[], dict] | None,
) -> CheckReport:
    n_failed = float(len(failed_assertions))
    tol_val = tol.bound()
    passed = n_failed == 0.0
    witness = None
    if not passed:
        params = dict(params, failed=failed_assertions)
        if witness_fn is not None:
            witness = _attach_tol(witness_fn(), tol)
    return CheckReport(
        check_name=name, seed=seed, params=params,
        lhs=n_failed, rhs=0.0, gap=-n_failed, tol=tol_val, passed=passed, witness=witness,
    )


def working_interval(
    eigenvalues: np.ndarray,
    pad_fraction: float = 0.05,
    domain: Interval | None = None,
) -> Interval:
    """Compact interval enclosing a spectrum with padding on both sides.

    The padding is clamped into `domain` when given, so a function defined on
    a half-line is never evaluated outside it (eigenvalues themselves always
    lie in the domain, or the functional calculus would have rejected them).
    """
    lo = float(np.min(eigenvalues))
    hi = float(np.max(eigenvalues))
    pad = pad_fraction * max(hi - lo, 1.0)
    lo -= pad
    hi += pad
    if domain is not None:
        if math.isfinite(domain.lo):
            inset = 1e-9 * max(1.0, abs(domain.lo)) if domain.lo_open else 0.0
            lo = max(lo, domain.lo + inset)
        if math.isfinite(domain.hi):
            inset = 1e-9 * max(1.0, abs(domain.hi)) if domain.hi_open else 0.0
            hi = min(hi, domain.hi - inset)
    return Interval.closed(lo, hi)


def _function_payload(f: ScalarFunction) -> dict:
    return {"name": f.name, "params": list(f.params)}


def _decode_function(obj: dict) -> ScalarFunction:
    return get_function(obj["name"], tuple(obj["params"]))


def _map_payload(phi: PositiveMap) -> dict:
    out = {
        "kind": phi.kind,
        "in_dim": phi.in_dim,
        "out_dim": phi.out_dim,
        "claimed_positive": phi.claimed_positive,
        "claimed_unital": phi.claimed_unital,
        "claimed_contractive": phi.claimed_contractive,
    }
    if phi.kraus is not None:
        out["kraus"] = [encode_matrix(v) for v in phi.kraus]
    else:
        out["action"] = encode_matrix(phi.action)
    return out


def _decode_map(obj: dict) -> PositiveMap:
    kwargs = dict(
        kind=obj["kind"], in_dim=int(obj["in_dim"]), out_dim=int(obj["out_dim"]),
        claimed_positive=bool(obj["claimed_positive"]),
        claimed_unital=bool(obj["claimed_unital"]),
        claimed_contractive=bool(obj["claimed_contractive"]),
    )
    if "kraus" in obj:
        kwargs["kraus"] = tuple(decode_matrix(v) for v in obj["kraus"])
    else:
        kwargs["action"] = decode_matrix(obj["action"])
    return PositiveMap(**kwargs)


def _algebra_payload(alg: BlockAlgebra) -> dict:
    return {"block_dims": list(alg.block_dims), "trace_weights": list(alg.trace_weights)}


def _decode_algebra(obj: dict) -> BlockAlgebra:
    return BlockAlgebra(tuple(obj["block_dims"]), tuple(obj["trace_weights"]))


# ---------------------------------------------------------------------------
# The checks
# ---------------------------------------------------------------------------

def check_cfl(
    H,
    rho,
    f: ScalarFunction,
    space: TensorSpace,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """Density-matrix partial-trace Jensen inequality on H_1 (x) H_2."""
    Hm = hermitize(H)
    rho_m = hermitize(rho)
    if Hm.shape != (space.total_dim, space.total_dim):
        raise DimensionError(f"H has shape {Hm.shape}, expected {space.total_dim}")
    if rho_m.shape != (space.d1, space.d1):
        raise DimensionError(f"rho has shape {rho_m.shape}, expected {space.d1}")
    if enforce_hypotheses:
        if not f.is_convex:
            raise HypothesisError(f"function {f.label} is not flagged convex")
        if abs(float(np.trace(rho_m).real) - 1.0) > 1e-10:
            raise HypothesisError("rho must have unit trace")
    root = psd_sqrt(rho_m)
    compressed = hermitize(
        partial_trace(conjugate_compress(Hm, root, space), "trace_first", space)
    )
    lhs = float(np.trace(matrix_function(compressed, f)).real)
    pt2_fH = hermitize(partial_trace(matrix_function(Hm, f), "trace_second", space))
    rhs = float(np.trace(root @ pt2_fH @ root).real)
    params = {"d1": space.d1, "d2": space.d2, "function": f.label}
    params.update(extra_params or {})

    def witness():
        return {"inputs": {
            "H": encode_matrix(Hm), "rho": encode_matrix(rho_m),
            "function": _function_payload(f), "d1": space.d1, "d2": space.d2,
        }}

    return _one_sided_report("check_cfl", seed, params, lhs, rhs, tol, witness)


def check_main_tracial(
    H,
    a,
    f: ScalarFunction,
    space: TensorSpace,
    weights: tuple[float, float],
    branch: str,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """Weighted-trace partial-trace Jensen inequality.

    branch='normalized' requires tau_1(a* a) = 1; branch='subnormalized'
    requires tau_1(a* a) <= 1 and f(0) = 0.
    """
    Hm = hermitize(H)
    am = as_complex(a)
    w1, w2 = float(weights[0]), float(weights[1])
    if am.shape != (space.d1, space.d1):
        raise DimensionError(f"a has shape {am.shape}, expected ({space.d1}, {space.d1})")
    norm_sq = w1 * float(np.trace(am.conj().T @ am).real)
    if enforce_hypotheses:
        if branch == "normalized":
            if abs(norm_sq - 1.0) > _NORMALIZED_TOL:
                raise HypothesisError(
                    f"normalized branch needs tau_1(a* a) = 1, got {norm_sq!r}"
                )
        elif branch == "subnormalized":
            if norm_sq > 1.0 + _NORMALIZED_TOL:
                raise HypothesisError(
                    f"subnormalized branch needs tau_1(a* a) <= 1, got {norm_sq!r}"
                )
            if not f.vanishes_at_zero:
                raise HypothesisError(
                    f"subnormalized branch needs f(0) = 0; {f.label} does not vanish"
                )
        else:
            raise ValueError(f"unknown branch {branch!r}")
        if not f.is_convex:
            raise HypothesisError(f"function {f.label} is not flagged convex")
    compressed = hermitize(
        partial_trace(conjugate_compress(Hm, am, space), "trace_first", space, (w1, w2))
    )
    lhs = w2 * float(np.trace(matrix_function(compressed, f)).real)
    pt2_fH = hermitize(
        partial_trace(matrix_function(Hm, f), "trace_second", space, (w1, w2))
    )
    rhs = w1 * float(np.trace(am.conj().T @ pt2_fH @ am).real)
    params = {
        "d1": space.d1, "d2": space.d2, "function": f.label,
        "w1": w1, "w2": w2, "branch": branch,
    }
    params.update(extra_params or {})

    def witness():
        return {"inputs": {
            "H": encode_matrix(Hm), "a": encode_matrix(am),
            "function": _function_payload(f), "d1": space.d1, "d2": space.d2,
            "w1": w1, "w2": w2, "branch": branch,
        }}

    return _one_sided_report("check_main_tracial", seed, params, lhs, rhs, tol, witness)


def _petz_branch(phi: PositiveMap, f: ScalarFunction, enforce: bool) -> str:
    one_img = phi.on_identity()
    unital = frob(one_img - np.eye(phi.out_dim)) <= _UNITAL_TOL
    contractive = float(hermitian_eig(one_img).eigenvalues[-1]) <= 1.0 + _UNITAL_TOL
    positive = phi.claimed_positive
    if positive and unital and f.is_convex:
        return "unital"
    if positive and contractive and f.is_convex and f.vanishes_at_zero:
        return "contractive"
    if not enforce:
        return "ablated"
    raise HypothesisError(
        f"map kind {phi.kind!r} (positive={positive}, unital={unital}, "
        f"contractive={contractive}) with function {f.label} satisfies neither the "
        f"unital-convex nor the contractive-f(0)=0 hypothesis set"
    )


def check_petz(
    phi: PositiveMap,
    x,
    f: ScalarFunction,
    out_algebra: BlockAlgebra,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """tau(f(Phi(x))) <= tau(Phi(f(x))) on the output algebra."""
    xm = hermitize(x)
    branch = _petz_branch(phi, f, enforce_hypotheses)
    y = symmetrize(apply_map(phi, xm))
    lhs = out_algebra.trace(matrix_function(y, f))
    rhs = out_algebra.trace(apply_map(phi, matrix_function(xm, f)))
    params = {
        "d1": phi.in_dim, "d2": phi.out_dim, "function": f.label,
        "map_kind": phi.kind, "branch": branch,
        "w2": out_algebra.trace_weights[0],
    }
    params.update(extra_params or {})

    def witness():
        return {"inputs": {
            "x": encode_matrix(xm), "map": _map_payload(phi),
            "function": _function_payload(f), "algebra": _algebra_payload(out_algebra),
            "enforce_hypotheses": enforce_hypotheses,
        }}

    return _one_sided_report("check_petz", seed, params, lhs, rhs, tol, witness)


def check_vector_jensen(
    phi: PositiveMap,
    x,
    f: ScalarFunction,
    xi,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """f(<Phi(x) xi, xi>) <= <Phi(f(x)) xi, xi> for a unit vector xi."""
    xm = hermitize(x)
    v = as_complex(xi).reshape(-1)
    if v.shape[0] != phi.out_dim:
        raise DimensionError(f"xi has dim {v.shape[0]}, expected {phi.out_dim}")
    if enforce_hypotheses and abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise HypothesisError("xi must be a unit vector")
    branch = _petz_branch(phi, f, enforce_hypotheses)
    mean = float((v.conj() @ apply_map(phi, xm) @ v).real)
    lhs = f(mean)
    rhs = float((v.conj() @ apply_map(phi, matrix_function(xm, f)) @ v).real)
    params = {
        "d1": phi.in_dim, "d2": phi.out_dim, "function": f.label,
        "map_kind": phi.kind, "branch": branch,
    }
    params.update(extra_params or {})

    def witness():
        return {"inputs": {
            "x": encode_matrix(xm), "map": _map_payload(phi), "xi": encode_matrix(v),
            "function": _function_payload(f), "enforce_hypotheses": enforce_hypotheses,
        }}

    return _one_sided_report("check_vector_jensen", seed, params, lhs, rhs, tol, witness)


def _piece_sign(f: ScalarFunction, piece: Interval, tol: ToleranceConfig) -> int:
    """Constant sign of f on a compact piece, sampled; raises on sign change.

    Sampling is restricted to the part of the piece inside f's domain (the
    part outside cannot carry spectrum); an empty overlap counts as
    nonnegative, matching a zero projection.
    """
    lo, hi = piece.lo, piece.hi
    dom = f.domain
    if math.isfinite(dom.lo):
        lo = max(lo, dom.lo + (1e-9 * max(1.0, abs(dom.lo)) if dom.lo_open else 0.0))
    if math.isfinite(dom.hi):
        hi = min(hi, dom.hi - (1e-9 * max(1.0, abs(dom.hi)) if dom.hi_open else 0.0))
    if lo > hi:
        return 1
    ts = np.linspace(lo, hi, 33)
    vals = np.array([f(float(t)) for t in ts])
    scale = max(1.0, float(np.max(np.abs(vals))))
    eps = tol.bound(scale)
    if np.all(vals >= -eps):
        return 1
    if np.all(vals <= eps):
        return -1
    raise HypothesisError(f"function changes sign on piece {piece}")


def _snap_piece(piece: Interval, eigenvalues: np.ndarray, tol: ToleranceConfig) -> Interval:
    """Perturb a spectral-window piece so its endpoints avoid the spectrum.

    Endpoints that coincide with eigenvalue clusters (exact for degenerate
    images like the zero map) are pushed deterministically off the clusters;
    the shift is a handful of cluster tolerances, far below any scale the
    sign and pre-order assertions can resolve.
    """
    scale = max(1.0, float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0)
    ctol = tol.eig_cluster_tol * scale
    lo = snap_away_from_spectrum(piece.lo, eigenvalues, ctol)
    hi = snap_away_from_spectrum(piece.hi, eigenvalues, ctol)
    if lo > hi:
        lo = hi
    return Interval(lo, hi, lo_open=piece.lo_open, hi_open=piece.hi_open)


def _snapped_projections(
    dec_y, split: MonotoneSplit, tol: ToleranceConfig
) -> list[np.ndarray]:
    """Spectral projections for the split pieces with snapped boundaries.

    Interior piece boundaries are moved off eigenvalue clusters monotonically,
    and the outermost pieces are widened to half-lines (the monotone/sign
    structure of a convex function extends past the working window), so the
    projections always form a resolution of the identity, even when the
    spectrum touches the window ends.
    """
    w = dec_y.eigenvalues
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 0.0)
    ctol = tol.eig_cluster_tol * scale
    pieces = [p for _, p in split.nonempty_pieces()]
    interior = [p.hi for p in pieces[:-1]]
    snapped = [-math.inf]
    for b in interior:
        s = snap_away_from_spectrum(b, w, ctol)
        snapped.append(max(s, snapped[-1]))
    snapped.append(math.inf)
    rebuilt = [
        Interval(snapped[i], snapped[i + 1], lo_open=(i == 0), hi_open=True)
        for i in range(len(snapped) - 1)
    ]
    return [
        spectral_projection(None, piece, tol, decomp=dec_y) for piece in rebuilt
    ]


def check_spectral_preorder_lemma(
    phi: PositiveMap,
    x,
    f: ScalarFunction,
    piece: Interval,
    algebra: BlockAlgebra,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """Compressed pre-order comparison on one monotone piece.

    With p the spectral projection of Phi(x) onto the piece: when f >= 0
    there, p Phi(f(x)) p must be positive semidefinite and dominate
    p f(Phi(x)) p in the spectral pre-order; when f <= 0, the negative
    Jordan part of p Phi(f(x)) p must be dominated by -p f(Phi(x)) p.
    """
    xm = hermitize(x)
    branch = _petz_branch(phi, f, enforce_hypotheses)
    y = symmetrize(apply_map(phi, xm))
    dec_y = hermitian_eig(y)
    piece = _snap_piece(piece, dec_y.eigenvalues, tol)
    sign = _piece_sign(f, piece, tol)
    p = spectral_projection(y, piece, tol, decomp=dec_y)
    fy = matrix_function(y, f, decomp=dec_y)
    phi_fx = symmetrize(apply_map(phi, matrix_function(xm, f)))
    a_side = symmetrize(p @ fy @ p)
    b_side = symmetrize(p @ phi_fx @ p)
    failed: list[str] = []
    detail: dict = {}
    if sign >= 0:
        lam_min = float(hermitian_eig(b_side).eigenvalues[0])
        if lam_min < -tol.bound(opnorm(b_side)):
            failed.append("compressed_positivity")
            detail["min_eigenvalue"] = lam_min
        bad = preorder_violation(a_side, b_side, algebra, tol)
        if bad is not None:
            failed.append("preorder_nonnegative_piece")
            detail["preorder"] = bad
    else:
        neg_part = jordan_split(b_side)[1]
        bad = preorder_violation(neg_part, -a_side, algebra, tol)
        if bad is not None:
            failed.append("preorder_nonpositive_piece")
            detail["preorder"] = bad
    params = {
        "d1": phi.in_dim, "d2": phi.out_dim, "function": f.label,
        "map_kind": phi.kind, "branch": branch,
        "piece": [piece.lo, piece.hi], "piece_sign": sign,
    }
    params.update(extra_params or {})
    if detail:
        params["detail"] = detail

    def witness():
        return {"inputs": {
            "x": encode_matrix(xm), "map": _map_payload(phi),
            "function": _function_payload(f),
            "piece": {"lo": piece.lo, "hi": piece.hi,
                      "lo_open": piece.lo_open, "hi_open": piece.hi_open},
            "algebra": _algebra_payload(algebra),
            "enforce_hypotheses": enforce_hypotheses,
        }}

    return _indicator_report(
        "check_spectral_preorder_lemma", seed, params, failed, tol, witness
    )


def check_pinching_chain(
    phi: PositiveMap,
    x,
    f: ScalarFunction,
    algebra: BlockAlgebra,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """The pinching bookkeeping that assembles the trace inequality.

    Builds spectral projections of Phi(x) for the monotone/sign pieces of f,
    pinches E(y) = sum p_i y p_i, and asserts:
      (1) preorder: f(Phi(x))_+ <~ E(Phi(f(x)))_+ and
          E(Phi(f(x)))_- <~ f(Phi(x))_-;
      (2) tau(E(Phi(f(x)))) = tau(Phi(f(x)));
      (3) tau(E(Phi(f(x)))) >= tau(f(Phi(x)));
      (4) Jordan minimality: tau(E(Y)_+-) <= tau(E(Y_+-)) for Y = Phi(f(x)).
    """
    xm = hermitize(x)
    branch = _petz_branch(phi, f, enforce_hypotheses)
    y = symmetrize(apply_map(phi, xm))
    dec_y = hermitian_eig(y)
    split = monotone_sign_split(f, working_interval(dec_y.eigenvalues, domain=f.domain))
    projections = _snapped_projections(dec_y, split, tol)
    fy = matrix_function(y, f, decomp=dec_y)
    phi_fx = symmetrize(apply_map(phi, matrix_function(xm, f)))
    e_phi_fx = symmetrize(pinching(phi_fx, projections))

    fy_pos, fy_neg = jordan_split(fy)
    e_pos, e_neg = jordan_split(e_phi_fx)
    failed: list[str] = []
    detail: dict = {}

    bad = preorder_violation(fy_pos, e_pos, algebra, tol)
    if bad is not None:
        failed.append("preorder_positive_parts")
        detail["preorder_positive_parts"] = bad
    bad = preorder_violation(e_neg, fy_neg, algebra, tol)
    if bad is not None:
        failed.append("preorder_negative_parts")
        detail["preorder_negative_parts"] = bad

    tr_e = algebra.trace(e_phi_fx)
    tr_phi_fx = algebra.trace(phi_fx)
    if abs(tr_e - tr_phi_fx) > tol.bound(tr_e, tr_phi_fx):
        failed.append("pinching_trace_preservation")
        detail["traces"] = [tr_e, tr_phi_fx]

    tr_fy = algebra.trace(fy)
    if tr_e < tr_fy - tol.bound(tr_e, tr_fy):
        failed.append("trace_inequality")
        detail["trace_inequality"] = [tr_e, tr_fy]

    y_pos, y_neg = jordan_split(phi_fx)
    min_pos = algebra.trace(pinching(y_pos, projections))
    min_neg = algebra.trace(pinching(y_neg, projections))
    if algebra.trace(e_pos) > min_pos + tol.bound(min_pos) or \
            algebra.trace(e_neg) > min_neg + tol.bound(min_neg):
        failed.append("jordan_minimality")
        detail["jordan_minimality"] = [
            algebra.trace(e_pos), min_pos, algebra.trace(e_neg), min_neg,
        ]

    params = {
        "d1": phi.in_dim, "d2": phi.out_dim, "function": f.label,
        "map_kind": phi.kind, "branch": branch,
        "n_pieces": len(projections),
    }
    params.update(extra_params or {})
    if detail:
        params["detail"] = detail

    def witness():
        return {"inputs": {
            "x": encode_matrix(xm), "map": _map_payload(phi),
            "function": _function_payload(f), "algebra": _algebra_payload(algebra),
            "enforce_hypotheses": enforce_hypotheses,
        }}

    return _indicator_report("check_pinching_chain", seed, params, failed, tol, witness)


def check_partial_trace_duality(
    X,
    a,
    space: TensorSpace,
    weights: tuple[float, float],
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """tau_2((tau_1 x id)((a* x 1) X (a x 1))) = tau_1(a* (id x tau_2)(X) a).

    Both sides are computed through independent contraction orders; the
    report stores the absolute discrepancy in lhs (rhs = 0) and the two
    complex values in params.
    """
    Xm = as_complex(X)
    am = as_complex(a)
    w1, w2 = float(weights[0]), float(weights[1])
    pt1 = partial_trace(conjugate_compress(Xm, am, space), "trace_first", space, (w1, 1.0))
    lhs_val = w2 * complex(np.trace(pt1))
    pt2 = partial_trace(Xm, "trace_second", space, (1.0, w2))
    rhs_val = w1 * complex(np.trace(am.conj().T @ pt2 @ am))
    discrepancy = abs(lhs_val - rhs_val)
    tol_val = tol.bound(abs(lhs_val), abs(rhs_val))
    passed = discrepancy <= tol_val
    params = {
        "d1": space.d1, "d2": space.d2, "w1": w1, "w2": w2,
        "lhs_value": lhs_val, "rhs_value": rhs_val,
    }
    params.update(extra_params or {})
    witness = None
    if not passed:
        witness = _attach_tol({"inputs": {
            "X": encode_matrix(Xm), "a": encode_matrix(am),
            "d1": space.d1, "d2": space.d2, "w1": w1, "w2": w2,
        }}, tol)
    return CheckReport(
        check_name="check_partial_trace_duality", seed=seed, params=params,
        lhs=discrepancy, rhs=0.0, gap=-discrepancy, tol=tol_val, passed=passed,
        witness=witness,
    )


def check_state_version(
    H,
    a,
    f: ScalarFunction,
    rho1,
    rho2,
    space: TensorSpace,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """Normal-state version: for states rho_i(y) = Tr(D_i y), a contraction a,
    and operator convex f,
      rho_2 f[(rho_1 x id)((a* x 1) H (a x 1))] <= rho_1(a* (id x rho_2)(f(H)) a).
    """
    Hm = hermitize(H)
    am = as_complex(a)
    d1_m = hermitize(rho1)
    d2_m = hermitize(rho2)
    if enforce_hypotheses:
        if not f.is_operator_convex:
            raise HypothesisError(f"function {f.label} is not flagged operator convex")
        if opnorm(am) > 1.0 + 1e-10:
            raise HypothesisError("a must be a contraction")
        for name, dm, dim in (("rho1", d1_m, space.d1), ("rho2", d2_m, space.d2)):
            if dm.shape != (dim, dim):
                raise DimensionError(f"{name} has shape {dm.shape}, expected dim {dim}")
            w = hermitian_eig(dm).eigenvalues
            if w[0] <= 0.0:
                raise HypothesisError(f"{name} must be faithful (min eigenvalue > 0)")
            if abs(float(np.sum(w)) - 1.0) > 1e-10:
                raise HypothesisError(f"{name} must have unit trace")
    X = conjugate_compress(Hm, am, space)
    compressed = symmetrize(
        slice_map(X, LinearFunctional.from_state(d1_m), "left", space)
    )
    lhs = float(np.trace(d2_m @ matrix_function(compressed, f)).real)
    fH = matrix_function(Hm, f)
    sliced = symmetrize(
        slice_map(fH, LinearFunctional.from_state(d2_m), "right", space)
    )
    rhs = float(np.trace(d1_m @ (am.conj().T @ sliced @ am)).real)
    params = {"d1": space.d1, "d2": space.d2, "function": f.label}
    params.update(extra_params or {})

    def witness():
        return {"inputs": {
            "H": encode_matrix(Hm), "a": encode_matrix(am),
            "rho1": encode_matrix(d1_m), "rho2": encode_matrix(d2_m),
            "function": _function_payload(f), "d1": space.d1, "d2": space.d2,
            "enforce_hypotheses": enforce_hypotheses,
        }}

    return _one_sided_report("check_state_version", seed, params, lhs, rhs, tol, witness)


def _is_numerically_unitary(a: np.ndarray) -> bool:
    n = a.shape[0]
    return frob(a.conj().T @ a - np.eye(n)) <= 1e-10 * max(1.0, math.sqrt(n))


def check_hansen_pedersen(
    H,
    a,
    f: ScalarFunction,
    space: TensorSpace,
    tol: ToleranceConfig = DEFAULT_TOL,
    seed: int = 0,
    extra_params: dict | None = None,
    enforce_hypotheses: bool = True,
) -> CheckReport:
    """Operator-level contractive Jensen inequality
    f((a* x 1) H (a x 1)) <= (a* x 1) f(H) (a x 1) in the Loewner order.

    Requires operator convex f with f(0) <= 0 for a genuine contraction; for
    a unitary a the compression is a *-isomorphism and the condition on f(0)
    is not needed (both sides agree exactly).
    """
    Hm = hermitize(H)
    am = as_complex(a)
    unitary = _is_numerically_unitary(am)
    if enforce_hypotheses:
        if not f.is_operator_convex:
            raise HypothesisError(f"function {f.label} is not flagged operator convex")
        if opnorm(am) > 1.0 + 1e-10:
            raise HypothesisError("a must be a contraction")
        if not unitary:
            if not f.defined_at_zero() or f(0.0) > tol.bound():
                raise HypothesisError(
                    f"contractive operator Jensen needs f(0) <= 0; {f.label} fails "
                    f"(use a unitary a instead)"
                )
    fH = matrix_function(Hm, f)
    compressed = symmetrize(conjugate_compress(Hm, am, space))
    lhs_mat = matrix_function(compressed, f)
    diff = symmetrize(conjugate_compress(fH, am, space)) - lhs_mat
    lam_min = float(hermitian_eig(diff).eigenvalues[0])
    tol_val = tol.atol + tol.rtol * max(1.0, opnorm(fH))
    passed = lam_min >= -tol_val
    params = {
        "d1": space.d1, "d2": space.d2, "function": f.label,
        "a_unitary": unitary,
    }
    params.update(extra_params or {})
    witness = None
    if not passed:
        witness = _attach_tol({"inputs": {
            "H": encode_matrix(Hm), "a": encode_matrix(am),
            "function": _function_payload(f), "d1": space.d1, "d2": space.d2,
            "enforce_hypotheses": enforce_hypotheses,
        }}, tol)
    return CheckReport(
        check_name="check_hansen_pedersen", seed=seed, params=params,
        lhs=0.0, rhs=lam_min, gap=lam_min, tol=tol_val, passed=passed, witness=witness,
    )


# ---------------------------------------------------------------------------
# Seeded trial generation
# ---------------------------------------------------------------------------

PETZ_STYLE_KINDS = ("ucp_stinespring", "transpose", "pinching", "scaled_contractive", "zero")
_UNITAL_KINDS = ("ucp_stinespring", "transpose", "pinching", "identity")


def petz_compatible(map_kind: str, f: ScalarFunction) -> bool:
    """Whether (map kind, function) satisfies one of the two hypothesis sets."""
    if not f.is_convex:
        return False
    if map_kind in _UNITAL_KINDS:
        return True
    return f.vanishes_at_zero


def trial_compatible(check_name: str, cell: dict) -> bool:
    """Whether a campaign cell is a valid instance of a check's hypotheses."""
    f: ScalarFunction | None = cell.get("function")
    kind = cell.get("map_kind")
    if check_name in ("check_petz", "check_vector_jensen",
                      "check_spectral_preorder_lemma", "check_pinching_chain"):
        return f is not None and kind is not None and petz_compatible(kind, f)
    if check_name in ("check_state_version", "check_hansen_pedersen"):
        return f is not None and f.is_operator_convex
    if check_name == "check_main_tracial":
        if f is None or not f.is_convex:
            return False
        if cell.get("branch") == "subnormalized":
            return f.vanishes_at_zero
        return True
    if check_name == "check_cfl":
        return f is not None and f.is_convex
    if check_name == "check_partial_trace_duality":
        return True
    return False


def _fit_spectrum(h: np.ndarray, f: ScalarFunction, margin: float = 0.5) -> np.ndarray:
    """Shift a Hermitian matrix so its spectrum sits inside f's domain.

    Only lower-bounded domains occur in the catalog; the spectrum is shifted
    to keep a safety margin above the lower endpoint.
    """
    dom = f.domain
    if not math.isfinite(dom.lo):
        return h
    w_min = float(hermitian_eig(h).eigenvalues[0])
    target = dom.lo + margin
    if w_min >= target:
        return h
    return h + (target - w_min) * np.eye(h.shape[0])


def _faithful_density(dim: int, rng: np.random.Generator, floor: float = 0.05) -> np.ndarray:
    d = random_density(dim, rng)
    mixed = (d + floor * np.eye(dim)) / (1.0 + floor * dim)
    return hermitize(mixed)


def _subnormalized_element(dim: int, rng: np.random.Generator, w1: float) -> np.ndarray:
    g = complex_gaussian(rng, dim, dim)
    s = rng.uniform(0.05, 0.95)
    norm_sq = w1 * float(np.trace(g.conj().T @ g).real)
    return g * (s / math.sqrt(norm_sq))


def _petz_dims(map_kind: str, d1: int, d2: int) -> tuple[int, int]:
    if map_kind in ("transpose", "pinching"):
        return d1, d1
    return d1, d2


def _contraction_for(f: ScalarFunction, dim: int, rng: np.random.Generator) -> np.ndarray:
    """A contraction compatible with f for the state-version checks.

    The operator-level contractive inequality needs f(0) <= 0; for functions
    undefined at 0 or positive there, a unitary (still a contraction) is the
    valid instance class, since unitary compression is a *-isomorphism.
    """
    if not f.defined_at_zero() or f(0.0) > 0.0:
        return random_unitary(dim, rng)
    return random_contraction(dim, rng)


def generate_trial(
    check_name: str,
    cell: dict,
    entropy: tuple[int, ...],
    tol: ToleranceConfig = DEFAULT_TOL,
) -> CheckReport:
    """Draw one random instance for a check and run it.

    `cell` carries the sweep axes (d1, d2, function, map_kind, w1, w2,
    branch); `entropy` keys the RNG stream, so identical (cell, entropy)
    always reproduces the same trial.
    """
    from .linalg_core import stream_token

    rng = rng_stream(*entropy)
    seed_token = stream_token(*entropy)
    f: ScalarFunction | None = cell.get("function")
    d1 = int(cell.get("d1", 2))
    d2 = int(cell.get("d2", 2))
    w1 = float(cell.get("w1", 1.0))
    w2 = float(cell.get("w2", 1.0))
    kind = cell.get("map_kind")
    extra = dict(cell.get("extra_params") or {})

    if check_name == "check_cfl":
        space = TensorSpace(d1, d2)
        h = _fit_spectrum(random_hermitian(space.total_dim, rng), f)
        rho = random_density(d1, rng)
        return check_cfl(h, rho, f, space, tol, seed=seed_token, extra_params=extra)

    if check_name == "check_main_tracial":
        branch = cell.get("branch", "normalized")
        space = TensorSpace(d1, d2)
        h = _fit_spectrum(random_hermitian(space.total_dim, rng), f)
        if branch == "normalized":
            a = random_l2_normalized(d1, rng, w1)
        else:
            a = _subnormalized_element(d1, rng, w1)
        return check_main_tracial(
            h, a, f, space, (w1, w2), branch, tol, seed=seed_token, extra_params=extra
        )

    if check_name in ("check_petz", "check_vector_jensen",
                      "check_spectral_preorder_lemma", "check_pinching_chain"):
        in_dim, out_dim = _petz_dims(kind, d1, d2)
        phi = random_positive_map(kind, in_dim, out_dim, rng)
        x = _fit_spectrum(random_hermitian(in_dim, rng), f)
        algebra = BlockAlgebra.single(out_dim, w2)
        if check_name == "check_petz":
            return check_petz(phi, x, f, algebra, tol, seed=seed_token, extra_params=extra)
        if check_name == "check_vector_jensen":
            xi = random_unit_vector(out_dim, rng)
            return check_vector_jensen(phi, x, f, xi, tol, seed=seed_token, extra_params=extra)
        if check_name == "check_pinching_chain":
            return check_pinching_chain(phi, x, f, algebra, tol, seed=seed_token, extra_params=extra)
        y = symmetrize(apply_map(phi, hermitize(x)))
        split = monotone_sign_split(
            f, working_interval(hermitian_eig(y).eigenvalues, domain=f.domain)
        )
        pieces = split.nonempty_pieces()
        slot, piece = pieces[int(rng.integers(len(pieces)))]
        extra = dict(extra, piece_slot=slot)
        return check_spectral_preorder_lemma(
            phi, x, f, piece, algebra, tol, seed=seed_token, extra_params=extra
        )

    if check_name == "check_partial_trace_duality":
        space = TensorSpace(d1, d2)
        x = complex_gaussian(rng, space.total_dim, space.total_dim)
        a = complex_gaussian(rng, d1, d1)
        return check_partial_trace_duality(
            x, a, space, (w1, w2), tol, seed=seed_token, extra_params=extra
        )

    if check_name == "check_state_version":
        space = TensorSpace(d1, d2)
        h = _fit_spectrum(random_hermitian(space.total_dim, rng), f)
        a = _contraction_for(f, d1, rng)
        rho1 = _faithful_density(d1, rng)
        rho2 = _faithful_density(d2, rng)
        return check_state_version(
            h, a, f, rho1, rho2, space, tol, seed=seed_token, extra_params=extra
        )

    if check_name == "check_hansen_pedersen":
        space = TensorSpace(d1, d2)
        h = _fit_spectrum(random_hermitian(space.total_dim, rng), f)
        a = _contraction_for(f, d1, rng)
        return check_hansen_pedersen(h, a, f, space, tol, seed=seed_token, extra_params=extra)

    raise ValueError(f"unknown check name {check_name!r}")


def run_trial(
    check_name: str,
    cell: dict,
    master_seed: int,
    trial_index: int,
    tol: ToleranceConfig = DEFAULT_TOL,
    max_resamples: int = 64,
) -> CheckReport:
    """One campaign trial with deterministic resampling.

    Boundary-ambiguity errors (an eigenvalue landing on a spectral-window
    endpoint) resample the trial with fresh entropy; the resample count is
    recorded in the report params.
    """
    attempts = 0
    while True:
        try:
            report = generate_trial(
                check_name, cell, (master_seed, trial_index, attempts), tol
            )
            break
        except BoundaryAmbiguityError:
            attempts += 1
            if attempts > max_resamples:
                raise NumericError(
                    f"{check_name}: trial {trial_index} hit boundary ambiguity "
                    f"{max_resamples} times in a row"
                ) from None
    report.params["trial"] = trial_index
    report.params["resampled"] = attempts
    return report


# ---------------------------------------------------------------------------
# Hypothesis-ablation searches
# ---------------------------------------------------------------------------

ABLATION_TARGETS = (
    "petz_drop_f0",
    "state_drop_opconvex",
    "drop_positivity",
    "drop_contractive",
)


@dataclass
class AblationResult:
    target: str
    trials: int
    max_violation: float
    witness: CheckReport | None

    @property
    def found_violation(self) -> bool:
        return self.witness is not None


def _nonpositive_unital_map(n: int, rng: np.random.Generator) -> PositiveMap:
    """Hermiticity-preserving unital map that is generically not positive.

    Built from a random Hermitian (not PSD) block matrix read as the map's
    matrix of values on matrix units, then corrected by a trace term to be
    unital.
    """
    c = random_hermitian(n * n, rng)
    act = np.zeros((n * n, n * n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            blk = c[i * n:(i + 1) * n, j * n:(j + 1) * n]
            for m in range(n):
                for mm in range(n):
                    act[m + mm * n, i + j * n] = blk[m, mm]
    base = PositiveMap(
        kind="nonpositive_unital", in_dim=n, out_dim=n, action=act,
        claimed_positive=False, claimed_unital=False, claimed_contractive=False,
    )
    r = np.eye(n) - base.on_identity()
    act = act.copy()
    for i in range(n):
        for m in range(n):
            for mm in range(n):
                act[m + mm * n, i + i * n] += r[m, mm] / n
    return PositiveMap(
        kind="nonpositive_unital", in_dim=n, out_dim=n, action=act,
        claimed_positive=False, claimed_unital=True, claimed_contractive=False,
    )


def _expansive_map(in_dim: int, out_dim: int, rng: np.random.Generator) -> PositiveMap:
    base = random_positive_map("ucp_stinespring", in_dim, out_dim, rng)
    c = 1.0 + float(rng.uniform(0.25, 1.0))
    scaled = tuple(math.sqrt(c) * v for v in base.kraus)
    return PositiveMap(
        kind="expansive", in_dim=in_dim, out_dim=out_dim, kraus=scaled,
        claimed_positive=True, claimed_unital=False, claimed_contractive=False,
    )


def ablation_search(
    target: str,
    trials: int,
    dims: list[int],
    seed: int,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> AblationResult:
    """Re-run a check with one hypothesis removed and hunt for violations.

    Only petz_drop_f0 guarantees a violation: the zero map is positive and
    contractive, and f with f(0) != 0 gives tau(f(Phi(x))) = n * f(0) against
    tau(Phi(f(x))) = 0, a gap of exactly -n * f(0). The other targets are
    exploratory searches; the most negative gap found is reported either way.
    """
    if target not in ABLATION_TARGETS:
        raise ValueError(f"unknown ablation target {target!r}; expected one of {ABLATION_TARGETS}")
    if not dims:
        dims = [2, 3]
    worst_gap = math.inf
    worst: CheckReport | None = None
    for i in range(trials):
        rng = rng_stream(seed, i)
        from .linalg_core import stream_token

        token = stream_token(seed, i)
        n = int(dims[i % len(dims)])
        extra = {"ablation": target, "trial": i}
        if target == "petz_drop_f0":
            phi = random_positive_map("zero", n, n, rng)
            x = random_hermitian(n, rng)
            f = get_function("shifted_square", (1.0,))
            report = check_petz(
                phi, x, f, BlockAlgebra.single(n, 1.0), tol,
                seed=token, extra_params=extra, enforce_hypotheses=False,
            )
        elif target == "state_drop_opconvex":
            space = TensorSpace(n, n)
            f = get_function("quartic")
            h = random_hermitian(space.total_dim, rng)
            a = random_contraction(n, rng)
            report = check_state_version(
                h, a, f, _faithful_density(n, rng), _faithful_density(n, rng),
                space, tol, seed=token, extra_params=extra, enforce_hypotheses=False,
            )
        elif target == "drop_positivity":
            phi = _nonpositive_unital_map(n, rng)
            x = random_hermitian(n, rng)
            f = get_function("quartic")
            report = check_petz(
                phi, x, f, BlockAlgebra.single(n, 1.0), tol,
                seed=token, extra_params=extra, enforce_hypotheses=False,
            )
        else:  # drop_contractive
            phi = _expansive_map(n, n, rng)
            x = random_hermitian(n, rng)
            f = get_function("square")
            report = check_petz(
                phi, x, f, BlockAlgebra.single(n, 1.0), tol,
                seed=token, extra_params=extra, enforce_hypotheses=False,
            )
        if report.gap < worst_gap:
            worst_gap = report.gap
            worst = report
    witness = worst if worst is not None and not worst.passed else None
    return AblationResult(
        target=target, trials=trials,
        max_violation=worst_gap if trials else math.nan,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# Witness replay
# ---------------------------------------------------------------------------

def _witness_tol(inputs: dict) -> ToleranceConfig:
    t = inputs.get("tol")
    if t is None:
        return DEFAULT_TOL
    return ToleranceConfig(atol=t[0], rtol=t[1], eig_cluster_tol=t[2])


def replay_report(report: CheckReport | dict) -> CheckReport:
    """Re-run a failure witness from its serialized inputs.

    The checks are pure functions, so the replay reproduces lhs, rhs, and gap
    bit-for-bit from the recorded matrices.
    """
    rep = report if isinstance(report, CheckReport) else CheckReport.from_dict(report)
    if not rep.witness or "inputs" not in rep.witness:
        raise ValueError("report carries no witness inputs to replay")
    inputs = rep.witness["inputs"]
    tol = _witness_tol(inputs)
    seed = rep.seed
    name = rep.check_name
    enforce = bool(inputs.get("enforce_hypotheses", True))
    if name == "check_cfl":
        return check_cfl(
            decode_matrix(inputs["H"]), decode_matrix(inputs["rho"]),
            _decode_function(inputs["function"]),
            TensorSpace(int(inputs["d1"]), int(inputs["d2"])), tol, seed=seed,
            enforce_hypotheses=enforce,
        )
    if name == "check_main_tracial":
        return check_main_tracial(
            decode_matrix(inputs["H"]), decode_matrix(inputs["a"]),
            _decode_function(inputs["function"]),
            TensorSpace(int(inputs["d1"]), int(inputs["d2"])),
            (inputs["w1"], inputs["w2"]), inputs["branch"], tol, seed=seed,
            enforce_hypotheses=enforce,
        )
    if name == "check_petz":
        return check_petz(
            _decode_map(inputs["map"]), decode_matrix(inputs["x"]),
            _decode_function(inputs["function"]), _decode_algebra(inputs["algebra"]),
            tol, seed=seed, enforce_hypotheses=enforce,
        )
    if name == "check_vector_jensen":
        return check_vector_jensen(
            _decode_map(inputs["map"]), decode_matrix(inputs["x"]),
            _decode_function(inputs["function"]), decode_matrix(inputs["xi"]),
            tol, seed=seed, enforce_hypotheses=enforce,
        )
    if name == "check_spectral_preorder_lemma":
        p = inputs["piece"]
        piece = Interval(p["lo"], p["hi"], lo_open=p["lo_open"], hi_open=p["hi_open"])
        return check_spectral_preorder_lemma(
            _decode_map(inputs["map"]), decode_matrix(inputs["x"]),
            _decode_function(inputs["function"]), piece,
            _decode_algebra(inputs["algebra"]), tol, seed=seed,
            enforce_hypotheses=enforce,
        )
    if name == "check_pinching_chain":
        return check_pinching_chain(
            _decode_map(inputs["map"]), decode_matrix(inputs["x"]),
            _decode_function(inputs["function"]), _decode_algebra(inputs["algebra"]),
            tol, seed=seed, enforce_hypotheses=enforce,
        )
    if name == "check_partial_trace_duality":
        return check_partial_trace_duality(
            decode_matrix(inputs["X"]), decode_matrix(inputs["a"]),
            TensorSpace(int(inputs["d1"]), int(inputs["d2"])),
            (inputs["w1"], inputs["w2"]), tol, seed=seed,
        )
    if name == "check_state_version":
        return check_state_version(
            decode_matrix(inputs["H"]), decode_matrix(inputs["a"]),
            _decode_function(inputs["function"]),
            decode_matrix(inputs["rho1"]), decode_matrix(inputs["rho2"]),
            TensorSpace(int(inputs["d1"]), int(inputs["d2"])), tol, seed=seed,
            enforce_hypotheses=enforce,
        )
    if name == "check_hansen_pedersen":
        return check_hansen_pedersen(
            decode_matrix(inputs["H"]), decode_matrix(inputs["a"]),
            _decode_function(inputs["function"]),
            TensorSpace(int(inputs["d1"]), int(inputs["d2"])), tol, seed=seed,
            enforce_hypotheses=enforce,
        )
    raise ValueError(f"cannot replay unknown check {name!r}")
