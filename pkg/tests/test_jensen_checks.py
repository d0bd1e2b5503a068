"""Per-inequality verification operations, ablations, and witness replay."""

import json

import numpy as np
import pytest

from opjensen.convex_catalog import get_function
from opjensen.errors import HypothesisError
from opjensen.jensen_checks import (
    ablation_search,
    check_cfl,
    check_hansen_pedersen,
    check_main_tracial,
    check_partial_trace_duality,
    check_petz,
    check_pinching_chain,
    check_spectral_preorder_lemma,
    check_state_version,
    check_vector_jensen,
    generate_trial,
    replay_report,
    run_trial,
    working_interval,
)
from opjensen.linalg_core import (
    complex_gaussian,
    frob,
    hermitian_eig,
    kron,
    psd_sqrt,
    random_density,
    random_hermitian,
    random_unitary,
    rng_stream,
)
from opjensen.positive_maps import (
    identity_map,
    pinching_map,
    random_positive_map,
    slice_compress_map,
)
from opjensen.reporting import CheckReport
from opjensen.spectral_tools import monotone_sign_split
from opjensen.tensor_ops import BlockAlgebra, TensorSpace

SPACE22 = TensorSpace(2, 2)


# ---------------------------------------------------------------------------
# check_cfl
# ---------------------------------------------------------------------------

def test_cfl_hand_computed_diagonal():
    # diagonal H = diag(0, 2, 2, 0), rho maximally mixed, f = t^2:
    # lhs = (a p + c q)^2 + (b p + d q)^2 with p = q = 1/2 -> 2, rhs -> 4
    h = np.diag([0.0, 2.0, 2.0, 0.0])
    rho = np.eye(2) / 2.0
    rep = check_cfl(h, rho, get_function("square"), SPACE22)
    assert abs(rep.lhs - 2.0) <= 1e-12
    assert abs(rep.rhs - 4.0) <= 1e-12
    assert rep.passed


def test_cfl_linear_function_equality():
    rng = rng_stream(60)
    rep = check_cfl(
        random_hermitian(4, rng), random_density(2, rng),
        get_function("linear", (3.0,)), SPACE22,
    )
    assert abs(rep.gap) <= 1e-12 * max(1.0, abs(rep.lhs))


def test_cfl_random_campaign_small():
    for fname, params in (("square", ()), ("abs", ()), ("exp", ()), ("quartic", ()), ("hinge", (0.0,))):
        f = get_function(fname, params)
        for s in range(40):
            rep = generate_trial("check_cfl", {"d1": 2, "d2": 3, "function": f}, (71, s))
            assert rep.passed, (fname, s, rep.gap)


def test_cfl_unitary_covariance():
    rng = rng_stream(62)
    h = random_hermitian(4, rng)
    rho = random_density(2, rng)
    u1 = random_unitary(2, rng)
    u2 = random_unitary(2, rng)
    f = get_function("quartic")
    base = check_cfl(h, rho, f, SPACE22)
    rotated = check_cfl(
        kron(u1, u2) @ h @ kron(u1, u2).conj().T,
        u1 @ rho @ u1.conj().T, f, SPACE22,
    )
    assert abs(base.lhs - rotated.lhs) <= 1e-10 * max(1.0, abs(base.lhs))
    assert abs(base.rhs - rotated.rhs) <= 1e-10 * max(1.0, abs(base.rhs))


def test_degenerate_spectra_across_checks():
    # constructed repeated eigenvalues everywhere
    h = np.diag([1.0, 1.0, 1.0, -2.0])
    rho = np.diag([0.5, 0.5])
    for fname in ("square", "abs", "exp"):
        f = get_function(fname)
        assert check_cfl(h, rho, f, SPACE22).passed
        assert check_main_tracial(
            h, psd_sqrt(rho), f, SPACE22, (1.0, 1.0), "normalized"
        ).passed
    x = np.diag([2.0, 2.0, -1.0])
    phi = random_positive_map("ucp_stinespring", 3, 2, 7)
    assert check_petz(phi, x, get_function("abs"), BlockAlgebra.single(2)).passed
    u = random_unitary(2, rng_stream(59))
    assert check_state_version(
        h, u, get_function("square"), np.eye(2) / 2, np.eye(2) / 2, SPACE22
    ).passed
    assert check_hansen_pedersen(h, u, get_function("square"), SPACE22).passed


def test_cfl_rejects_nonconvex_flag():
    with pytest.raises(HypothesisError):
        f = get_function("square")
        bad = type(f)("notconvex", (), f.fn, f.domain, False, False, True)
        check_cfl(np.eye(4), np.eye(2) / 2, bad, SPACE22)


# ---------------------------------------------------------------------------
# check_main_tracial
# ---------------------------------------------------------------------------

def test_tracial_reduces_to_cfl_at_density_root():
    rng = rng_stream(63)
    for s in range(10):
        h = random_hermitian(4, rng)
        rho = random_density(2, rng)
        a = psd_sqrt(rho)
        for fname in ("square", "abs", "exp"):
            f = get_function(fname)
            r_cfl = check_cfl(h, rho, f, SPACE22)
            r_tr = check_main_tracial(h, a, f, SPACE22, (1.0, 1.0), "normalized")
            assert abs(r_cfl.lhs - r_tr.lhs) <= 1e-12 * max(1.0, abs(r_cfl.lhs))
            assert abs(r_cfl.rhs - r_tr.rhs) <= 1e-12 * max(1.0, abs(r_cfl.rhs))


def test_tracial_normalized_weighted_batch():
    f = get_function("quartic")
    for s in range(30):
        rep = generate_trial(
            "check_main_tracial",
            {"d1": 2, "d2": 3, "function": f, "w1": 0.3, "w2": 2.5, "branch": "normalized"},
            (64, s),
        )
        assert rep.passed, (s, rep.gap)


def test_tracial_subnormalized_batch():
    f = get_function("hinge", (0.0,))
    for s in range(30):
        rep = generate_trial(
            "check_main_tracial",
            {"d1": 3, "d2": 2, "function": f, "w1": 2.5, "w2": 0.3, "branch": "subnormalized"},
            (65, s),
        )
        assert rep.passed, (s, rep.gap)


def test_tracial_branch_hypothesis_errors():
    rng = rng_stream(66)
    h = random_hermitian(4, rng)
    a = 2.0 * np.eye(2)  # tau(a* a) = 8, neither normalized nor subnormalized
    with pytest.raises(HypothesisError):
        check_main_tracial(h, a, get_function("square"), SPACE22, (1.0, 1.0), "normalized")
    with pytest.raises(HypothesisError):
        check_main_tracial(h, a, get_function("square"), SPACE22, (1.0, 1.0), "subnormalized")
    # subnormalized needs f(0) = 0
    small = 0.1 * np.eye(2)
    with pytest.raises(HypothesisError):
        check_main_tracial(h, small, get_function("exp"), SPACE22, (1.0, 1.0), "subnormalized")


def test_tracial_consistency_with_petz_via_compress_map():
    # the normalized instance re-checked through the compression-slice map
    rng = rng_stream(67)
    w1, w2 = 0.3, 2.5
    for s in range(10):
        h = random_hermitian(6, rng)
        g = complex_gaussian(rng, 2, 2)
        a = g / np.sqrt(w1 * np.trace(g.conj().T @ g).real)
        space = TensorSpace(2, 3)
        f = get_function("abs")
        r_tr = check_main_tracial(h, a, f, space, (w1, w2), "normalized")
        phi = slice_compress_map(a, space, w1)
        r_petz = check_petz(phi, h, f, BlockAlgebra.single(3, w2))
        assert r_tr.passed and r_petz.passed
        assert abs(r_tr.lhs - r_petz.lhs) <= 1e-10 * max(1.0, abs(r_tr.lhs))
        assert abs(r_tr.rhs - r_petz.rhs) <= 1e-10 * max(1.0, abs(r_tr.rhs))


# ---------------------------------------------------------------------------
# check_petz
# ---------------------------------------------------------------------------

def test_petz_identity_map_equality():
    x = random_hermitian(3, rng_stream(68))
    rep = check_petz(identity_map(3), x, get_function("quartic"), BlockAlgebra.single(3))
    assert abs(rep.gap) <= 1e-10 * max(1.0, abs(rep.lhs))


def test_petz_transpose_batch():
    f = get_function("quartic")
    for s in range(40):
        rep = generate_trial(
            "check_petz",
            {"d1": 4, "d2": 4, "function": f, "map_kind": "transpose"},
            (69, s),
        )
        assert rep.passed, (s, rep.gap)
        assert rep.params["branch"] == "unital"


def test_petz_zero_map_f0_violation_is_exact():
    # f(0) = 1 and the zero map: lhs = n, rhs = 0 exactly
    n = 3
    phi = random_positive_map("zero", n, n, 0)
    x = random_hermitian(n, rng_stream(70))
    f = get_function("shifted_square", (1.0,))
    rep = check_petz(phi, x, f, BlockAlgebra.single(n, 1.0), enforce_hypotheses=False)
    assert not rep.passed
    assert rep.lhs == float(n) and rep.rhs == 0.0
    assert abs(rep.gap + n) <= 1e-12


def test_petz_zero_map_needs_f0_hypothesis():
    phi = random_positive_map("zero", 2, 2, 0)
    x = random_hermitian(2, rng_stream(71))
    with pytest.raises(HypothesisError):
        check_petz(phi, x, get_function("shifted_square", (1.0,)), BlockAlgebra.single(2))


def test_petz_block_valued_map_weighted_algebra():
    # pinch a UCP map onto blocks so the output lives in a genuine direct sum
    rng = rng_stream(72)
    alg = BlockAlgebra((2, 2), (0.3, 2.5))
    p1 = np.diag([1.0, 1.0, 0.0, 0.0])
    p2 = np.diag([0.0, 0.0, 1.0, 1.0])
    for s in range(15):
        base = random_positive_map("ucp_stinespring", 3, 4, rng)
        blocked = pinching_map([p1, p2])
        kraus = tuple(v @ p for v in base.kraus for p in (p1, p2))
        phi = type(base)(
            kind="block_ucp", in_dim=3, out_dim=4, kraus=kraus,
            claimed_positive=True, claimed_unital=True, claimed_contractive=True,
        )
        assert frob(phi.on_identity() - np.eye(4)) <= 1e-10
        x = random_hermitian(3, rng)
        rep = check_petz(phi, x, get_function("abs"), alg)
        assert rep.passed, (s, rep.gap)
        assert alg.off_block_mass(phi(x)) <= 1e-10


# ---------------------------------------------------------------------------
# check_vector_jensen
# ---------------------------------------------------------------------------

def test_vector_jensen_linear_gap_zero():
    rng = rng_stream(73)
    phi = random_positive_map("ucp_stinespring", 3, 2, rng)
    x = random_hermitian(3, rng)
    xi = np.array([1.0, 0.0])
    rep = check_vector_jensen(phi, x, get_function("linear", (2.0,)), xi)
    assert abs(rep.gap) <= 1e-11


def test_vector_jensen_eigenvector_equality():
    rng = rng_stream(74)
    x = random_hermitian(3, rng)
    dec = hermitian_eig(x)
    xi = dec.eigenvectors[:, 0]
    rep = check_vector_jensen(identity_map(3), x, get_function("exp"), xi)
    assert abs(rep.gap) <= 1e-10 * max(1.0, abs(rep.lhs))


def test_vector_jensen_batch():
    f = get_function("quartic")
    for s in range(60):
        rep = generate_trial(
            "check_vector_jensen",
            {"d1": 3, "d2": 2, "function": f, "map_kind": "ucp_stinespring"},
            (75, s),
        )
        assert rep.passed, (s, rep.gap)


def test_vector_jensen_unit_norm_required():
    phi = identity_map(2)
    with pytest.raises(HypothesisError):
        check_vector_jensen(phi, np.eye(2), get_function("square"), np.array([1.0, 1.0]))


# ---------------------------------------------------------------------------
# pre-order lemma and pinching chain
# ---------------------------------------------------------------------------

def test_preorder_lemma_identity_map_trivial():
    rng = rng_stream(76)
    x = random_hermitian(4, rng)
    f = get_function("square")
    split = monotone_sign_split(f, working_interval(hermitian_eig(x).eigenvalues))
    for _, piece in split.nonempty_pieces():
        rep = check_spectral_preorder_lemma(
            identity_map(4), x, f, piece, BlockAlgebra.single(4)
        )
        assert rep.passed


def test_preorder_lemma_square_nonnegative_piece():
    f = get_function("square")
    for s in range(30):
        rep = run_trial(
            "check_spectral_preorder_lemma",
            {"d1": 4, "d2": 4, "function": f, "map_kind": "ucp_stinespring"},
            77, s,
        )
        assert rep.passed, (s, rep.params)


def test_preorder_lemma_negative_piece():
    f = get_function("shifted_square", (-1.0,))
    seen_negative = 0
    for s in range(40):
        rep = run_trial(
            "check_spectral_preorder_lemma",
            {"d1": 4, "d2": 4, "function": f, "map_kind": "ucp_stinespring"},
            78, s,
        )
        assert rep.passed, (s, rep.params)
        if rep.params["piece_sign"] < 0:
            seen_negative += 1
    assert seen_negative > 0


def test_preorder_lemma_sign_change_rejected():
    rng = rng_stream(79)
    x = random_hermitian(4, rng)
    phi = identity_map(4)
    f = get_function("shifted_square", (-1.0,))
    whole = working_interval(hermitian_eig(x).eigenvalues)
    with pytest.raises(HypothesisError):
        check_spectral_preorder_lemma(phi, x, f, whole, BlockAlgebra.single(4))


def test_pinching_chain_single_sign_function():
    f = get_function("square")
    for s in range(20):
        rep = run_trial(
            "check_pinching_chain",
            {"d1": 3, "d2": 3, "function": f, "map_kind": "transpose"},
            80, s,
        )
        assert rep.passed, (s, rep.params)
        assert rep.params["n_pieces"] <= 2


def test_pinching_chain_sign_changing_function():
    f = get_function("shifted_square", (-1.0,))
    for s in range(30):
        rep = run_trial(
            "check_pinching_chain",
            {"d1": 4, "d2": 3, "function": f, "map_kind": "ucp_stinespring"},
            81, s,
        )
        assert rep.passed, (s, rep.params)


def test_pinching_chain_identity_map_exact():
    # with Phi = id the pinching projections diagonalize f(x) itself
    rng = rng_stream(82)
    x = random_hermitian(4, rng)
    f = get_function("shifted_square", (-1.0,))
    rep = check_pinching_chain(identity_map(4), x, f, BlockAlgebra.single(4))
    assert rep.passed and rep.lhs == 0.0


def test_pinching_chain_zero_map_runs():
    # the zero map's image has a one-point spectrum sitting on every split
    # boundary; endpoint snapping must keep this deterministic
    f = get_function("hinge", (0.0,))
    rep = run_trial(
        "check_pinching_chain",
        {"d1": 3, "d2": 3, "function": f, "map_kind": "zero"},
        83, 0,
    )
    assert rep.passed
    assert rep.params["resampled"] == 0


def test_checks_with_one_dimensional_factors():
    # d1 = 1 or d2 = 1 degenerate tensor factors stay well-formed
    for d1, d2 in ((1, 3), (3, 1), (1, 1)):
        for s in range(5):
            cell = {"d1": d1, "d2": d2, "function": get_function("square")}
            assert run_trial("check_cfl", cell, 300, s).passed
            assert run_trial(
                "check_main_tracial",
                dict(cell, w1=0.3, w2=2.5, branch="normalized"), 301, s,
            ).passed
            assert run_trial(
                "check_partial_trace_duality",
                {"d1": d1, "d2": d2, "w1": 0.3, "w2": 2.5}, 302, s,
            ).passed
            assert run_trial("check_state_version", cell, 303, s).passed
    cellp = {"d1": 1, "d2": 2, "function": get_function("abs"), "map_kind": "ucp_stinespring"}
    for s in range(5):
        assert run_trial("check_petz", cellp, 304, s).passed
        assert run_trial("check_vector_jensen", cellp, 305, s).passed


def test_piece_checks_respect_half_line_domains():
    # contractive maps pull the image spectrum toward 0, and the padded
    # working window must not poke below the domain of t^p
    f = get_function("power", (1.5,))
    for kind in ("scaled_contractive", "zero"):
        for s in range(10):
            rep = run_trial(
                "check_pinching_chain",
                {"d1": 3, "d2": 3, "function": f, "map_kind": kind},
                84, s,
            )
            assert rep.passed, (kind, s, rep.params)
            rep = run_trial(
                "check_spectral_preorder_lemma",
                {"d1": 3, "d2": 3, "function": f, "map_kind": kind},
                85, s,
            )
            assert rep.passed, (kind, s, rep.params)


# ---------------------------------------------------------------------------
# duality, state version, operator-level inequality
# ---------------------------------------------------------------------------

def test_duality_elementary_tensor():
    rng = rng_stream(84)
    a_fac = random_hermitian(2, rng)
    b_fac = random_hermitian(3, rng)
    a = complex_gaussian(rng, 2, 2)
    space = TensorSpace(2, 3)
    w1, w2 = 0.3, 2.5
    rep = check_partial_trace_duality(kron(a_fac, b_fac), a, space, (w1, w2))
    assert rep.passed
    expected = w1 * np.trace(a.conj().T @ a_fac @ a) * w2 * np.trace(b_fac)
    assert abs(complex(*_as_pair(rep.params["lhs_value"])) - expected) <= 1e-10 * max(1.0, abs(expected))


def _as_pair(value):
    if isinstance(value, complex):
        return value.real, value.imag
    return value


def test_duality_zero_element():
    rep = check_partial_trace_duality(
        np.zeros((4, 4)), np.zeros((2, 2)), SPACE22, (1.0, 1.0)
    )
    assert rep.passed and rep.lhs == 0.0


def test_duality_random_batch_weighted():
    for s in range(60):
        rep = generate_trial(
            "check_partial_trace_duality",
            {"d1": 3, "d2": 2, "w1": 0.3, "w2": 2.5},
            (85, s),
        )
        assert rep.passed, (s, rep.lhs)


def test_state_version_unitary_square_reduces_to_tracial():
    rng = rng_stream(86)
    h = random_hermitian(4, rng)
    u = random_unitary(2, rng)
    f = get_function("square")
    r_state = check_state_version(h, u, f, np.eye(2) / 2, np.eye(2) / 2, SPACE22)
    r_tr = check_main_tracial(h, u, f, SPACE22, (0.5, 0.5), "normalized")
    assert r_state.passed
    assert abs(r_state.lhs - r_tr.lhs) <= 1e-11 * max(1.0, abs(r_tr.lhs))
    assert abs(r_state.rhs - r_tr.rhs) <= 1e-11 * max(1.0, abs(r_tr.rhs))


def test_state_version_contraction_batches():
    for fname, params in (("square", ()), ("power", (1.5,))):
        f = get_function(fname, params)
        for s in range(25):
            rep = run_trial(
                "check_state_version", {"d1": 2, "d2": 3, "function": f}, 87, s,
            )
            assert rep.passed, (fname, s, rep.gap)


def test_state_version_inv_on_shifted_positive():
    f = get_function("inv")
    for s in range(25):
        rep = run_trial("check_state_version", {"d1": 3, "d2": 2, "function": f}, 88, s)
        assert rep.passed, (s, rep.gap)


def test_state_version_requires_operator_convex_flag():
    rng = rng_stream(89)
    with pytest.raises(HypothesisError):
        check_state_version(
            random_hermitian(4, rng), random_unitary(2, rng), get_function("abs"),
            np.eye(2) / 2, np.eye(2) / 2, SPACE22,
        )


def test_state_version_requires_faithful_states():
    rng = rng_stream(90)
    singular = np.diag([1.0, 0.0])
    with pytest.raises(HypothesisError):
        check_state_version(
            random_hermitian(4, rng), random_unitary(2, rng), get_function("square"),
            singular, np.eye(2) / 2, SPACE22,
        )


def test_hansen_pedersen_identity_contraction():
    rng = rng_stream(91)
    h = random_hermitian(4, rng)
    rep = check_hansen_pedersen(h, np.eye(2), get_function("square"), SPACE22)
    assert rep.passed and abs(rep.rhs) <= 1e-9


def test_hansen_pedersen_batch():
    f = get_function("square")
    for s in range(40):
        rep = run_trial("check_hansen_pedersen", {"d1": 2, "d2": 2, "function": f}, 92, s)
        assert rep.passed, (s, rep.gap)


def test_hansen_pedersen_unitary_inv():
    f = get_function("inv")
    for s in range(20):
        rep = run_trial("check_hansen_pedersen", {"d1": 2, "d2": 3, "function": f}, 93, s)
        assert rep.passed, (s, rep.gap)
        assert rep.params["a_unitary"]


def test_hansen_pedersen_quartic_negative_control():
    # t^4 is not operator convex: the Loewner comparison must fail somewhere
    rng = rng_stream(94)
    f = get_function("quartic")
    violations = 0
    for s in range(60):
        h = random_hermitian(4, rng)
        g = complex_gaussian(rng, 2, 2)
        a = g / (np.linalg.norm(g, 2) * (1.0 + rng.uniform()))
        rep = check_hansen_pedersen(h, a, f, SPACE22, enforce_hypotheses=False)
        if not rep.passed:
            violations += 1
    assert violations > 0


def test_hansen_pedersen_rejects_positive_f0_contraction():
    rng = rng_stream(95)
    g = complex_gaussian(rng, 2, 2)
    a = g / (np.linalg.norm(g, 2) * 1.5)
    with pytest.raises(HypothesisError):
        check_hansen_pedersen(random_hermitian(4, rng), a, get_function("inv"), SPACE22)


# ---------------------------------------------------------------------------
# equality at linear f across the one-sided checks
# ---------------------------------------------------------------------------

def test_equality_at_linear_function():
    rng = rng_stream(96)
    f = get_function("linear", (0.7,))
    h = random_hermitian(4, rng)
    rho = random_density(2, rng)
    assert abs(check_cfl(h, rho, f, SPACE22).gap) <= 1e-11
    a = psd_sqrt(rho)
    assert abs(check_main_tracial(h, a, f, SPACE22, (1.0, 1.0), "normalized").gap) <= 1e-11
    phi = random_positive_map("ucp_stinespring", 3, 2, rng)
    x = random_hermitian(3, rng)
    assert abs(check_petz(phi, x, f, BlockAlgebra.single(2)).gap) <= 1e-11
    u = random_unitary(2, rng)
    st = check_state_version(h, u, f, random_density(2, rng), random_density(2, rng), SPACE22)
    assert abs(st.gap) <= 1e-11


# ---------------------------------------------------------------------------
# ablation searches and replay
# ---------------------------------------------------------------------------

def test_ablation_petz_drop_f0_guaranteed():
    res = ablation_search("petz_drop_f0", 10, [2, 3], 1)
    assert res.found_violation
    n = res.witness.params["d2"]
    assert abs(res.witness.gap + n) <= 1e-12


def test_ablation_exploratory_targets_run():
    for target in ("state_drop_opconvex", "drop_positivity", "drop_contractive"):
        res = ablation_search(target, 6, [2], 3)
        assert res.trials == 6
        assert np.isfinite(res.max_violation)


def test_ablation_unknown_target():
    with pytest.raises(ValueError):
        ablation_search("bogus", 1, [2], 0)


def test_report_invariant_pass_iff_gap_above_neg_tol():
    reports = []
    for s in range(10):
        reports.append(generate_trial(
            "check_cfl", {"d1": 2, "d2": 2, "function": get_function("abs")}, (97, s)
        ))
    res = ablation_search("petz_drop_f0", 2, [2], 7)
    reports.append(res.witness)
    for rep in reports:
        assert rep.passed == (rep.gap >= -rep.tol)
        assert np.isfinite(rep.lhs) and np.isfinite(rep.rhs)


def test_witness_only_on_failure():
    ok = generate_trial("check_cfl", {"d1": 2, "d2": 2, "function": get_function("square")}, (98, 0))
    assert ok.passed and ok.witness is None
    bad = ablation_search("petz_drop_f0", 1, [2], 9).witness
    assert bad is not None and bad.witness is not None


def test_replay_reproduces_bit_exactly():
    res = ablation_search("petz_drop_f0", 4, [2, 4], 11)
    line = res.witness.to_json_line()
    replayed = replay_report(json.loads(line))
    assert replayed.lhs == res.witness.lhs
    assert replayed.rhs == res.witness.rhs
    assert replayed.gap == res.witness.gap


def test_replay_roundtrip_via_checkreport_json():
    res = ablation_search("drop_contractive", 8, [3], 13)
    if res.witness is None:
        pytest.skip("no violation found for this seed")
    rt = CheckReport.from_json_line(res.witness.to_json_line())
    replayed = replay_report(rt)
    assert replayed.gap == res.witness.gap
