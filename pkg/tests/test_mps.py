from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempim.mps import (
    TemporalMPS,
    TransferMPO,
    all_spectra,
    append_product,
    apply_mpo,
    bond_spectrum,
    canonicalize,
    compress,
    cut_entropy,
    fidelity,
    from_dense,
    identity_mpo,
    is_canonical,
    mpo_to_dense,
    norm_squared,
    overlap,
    product_mps,
    random_mpo,
    random_mps,
    to_dense,
)
from tempim.oracle import exact_entropy

shapes = st.tuples(st.integers(2, 6), st.integers(2, 4), st.integers(1, 8), st.integers(0, 2**31 - 1))


def _dense_fid(a, b):
    return abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)


@settings(max_examples=30, deadline=None)
@given(shapes)
def test_dense_round_trip(args):
    n, d, chi, seed = args
    m = random_mps(n, d, chi, np.random.default_rng(seed))
    v = to_dense(m)
    back = from_dense(v, n, d)
    assert np.allclose(to_dense(back), v, atol=1e-10 * np.linalg.norm(v))


@settings(max_examples=30, deadline=None)
@given(shapes, st.data())
def test_canonicalize_preserves_state(args, data):
    n, d, chi, seed = args
    m = random_mps(n, d, chi, np.random.default_rng(seed))
    c = data.draw(st.integers(0, n - 1))
    can = canonicalize(m, c)
    assert is_canonical(can)
    assert np.linalg.norm(can.tensors[c]) == pytest.approx(1.0)
    v, w = to_dense(m), to_dense(can)
    assert np.allclose(v, w, atol=1e-10 * np.linalg.norm(v))
    # moving an existing center also works
    assert np.allclose(to_dense(canonicalize(can, 0)), v, atol=1e-10 * np.linalg.norm(v))


@settings(max_examples=30, deadline=None)
@given(shapes, st.integers(1, 4))
def test_compress_discarded_weight_is_infidelity(args, chi_new):
    n, d, chi, seed = args
    m = random_mps(n, d, max(chi, 2), np.random.default_rng(seed))
    c, disc = compress(m, chi_new)
    assert c.max_bond <= chi_new
    assert 0.0 <= disc <= 1.0
    assert 1.0 - fidelity(m, c) == pytest.approx(disc, abs=1e-10)
    # squared norm of the truncated state is the kept weight
    assert norm_squared(c) / norm_squared(m) == pytest.approx(1.0 - disc, rel=1e-8, abs=1e-12)


def test_compress_untruncated_is_exact(rng):
    m = random_mps(5, 3, 6, rng)
    c, disc = compress(m, None)
    assert disc == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(to_dense(c), to_dense(m))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(2, 3), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_apply_mpo_matches_dense(n, d, bond, seed):
    rng = np.random.default_rng(seed)
    m = random_mps(n, d, 3, rng)
    o = random_mpo(n, d, bond, rng)
    out = apply_mpo(o, m)
    ref = mpo_to_dense(o) @ to_dense(m)
    assert np.allclose(to_dense(out), ref, atol=1e-9 * np.linalg.norm(ref))


def test_apply_mpo_truncated_reports_discarded(rng):
    m = random_mps(6, 2, 8, rng)
    o = random_mpo(6, 2, 3, rng)
    exact = apply_mpo(o, m)
    approx, disc = apply_mpo(o, m, chi=4, return_discarded=True)
    assert approx.max_bond <= 4
    assert disc > 0
    # zip-up weights are estimates in a non-orthogonal gauge; they track the true error
    assert 1 - fidelity(exact, approx) <= 3 * disc


def test_identity_mpo(rng):
    m = random_mps(4, 4, 5, rng)
    assert fidelity(apply_mpo(identity_mpo(4, 4), m), m) == pytest.approx(1.0)


def test_overlap_and_norm_include_scale(rng):
    m = random_mps(4, 2, 3, rng)
    v = to_dense(m)
    s = m.scaled(-2.5)
    assert overlap(m, s) == pytest.approx(-2.5 * np.vdot(v, v))
    assert norm_squared(s) == pytest.approx(6.25 * np.vdot(v, v).real)
    with pytest.raises(ValueError):
        m.scaled(0)


@settings(max_examples=20, deadline=None)
@given(shapes)
def test_bond_entropy_matches_dense(args):
    n, d, chi, seed = args
    m = random_mps(n, d, chi, np.random.default_rng(seed))
    v = to_dense(m)
    spectra = all_spectra(m)
    for cut in range(n - 1):
        ref = exact_entropy(v, cut, d)
        assert cut_entropy(m, cut) == pytest.approx(ref, abs=1e-9)
        assert spectra[cut].entropy() == pytest.approx(ref, abs=1e-9)


def test_product_state_has_zero_entropy():
    m = product_mps([np.array([1.0, 2.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])])
    assert all(s.entropy() == 0.0 for s in all_spectra(m))
    with pytest.raises(ValueError):
        bond_spectrum(m, 2)


def test_append_product(rng):
    m = random_mps(3, 2, 2, rng)
    e = np.array([0.0, 1.0])
    v = to_dense(append_product(m, [e]))
    assert np.allclose(v, np.kron(to_dense(m), e))


def test_validation_errors():
    with pytest.raises(ValueError):
        TemporalMPS(())
    with pytest.raises(ValueError):
        TemporalMPS((np.ones((1, 2, 2)), np.ones((3, 2, 1))))
    with pytest.raises(ValueError):
        TemporalMPS((np.ones((2, 2, 1)),))
    with pytest.raises(ValueError):
        TransferMPO((np.ones((1, 2, 2)),))
    with pytest.raises(ValueError):
        from_dense(np.zeros(4), 2, 2)
    with pytest.raises(ValueError):
        apply_mpo(identity_mpo(3, 2), product_mps([np.ones(2)] * 2))
