from __future__ import annotations

import numpy as np
import pytest

from tempim.circuit import PAULI_Z, CircuitParams, x_polarized
from tempim.errors import ConfigError
from tempim.oracle import exact_polarization
from tempim.tebd import tebd_autocorr, tebd_autocorr_run, tebd_quench, tebd_quench_run

from .conftest import G, H, J
from .test_observables import AUTOCORR_X, QUENCH_X


def test_quench_matches_dense_chain(chaotic_x):
    series = tebd_quench(chaotic_x, 10, None, 3)
    assert [v for _, v in series] == pytest.approx(QUENCH_X, abs=1e-12)


def test_autocorrelator_matches_dense_chain(chaotic):
    series = tebd_autocorr(chaotic, 10, None, 3)
    assert [v for _, v in series] == pytest.approx(AUTOCORR_X, abs=1e-12)


def test_quench_other_axis_matches_oracle():
    p = CircuitParams(0.4, -0.9, 0.3, 3, x_polarized())
    ref = exact_polarization(p, 10, PAULI_Z, site=5)
    series = tebd_quench(p, 10, None, 3, "Z")
    assert [v for _, v in series] == pytest.approx([r.real for _, r in ref], abs=1e-12)


def test_result_is_independent_of_chain_length(chaotic_x):
    a = tebd_quench(chaotic_x.with_T(4), 12, None, 4)
    b = tebd_quench(chaotic_x.with_T(4), 16, None, 4)
    assert [v for _, v in a] == pytest.approx([v for _, v in b], abs=1e-12)


def test_trivial_circuit_is_static():
    p = CircuitParams(0.0, 0.0, 0.0, 2, x_polarized())
    assert all(v == pytest.approx(1.0) for _, v in tebd_quench(p, 8, 4, 2))
    assert all(v == pytest.approx(1.0) for _, v in tebd_autocorr(p, 8, 4, 2))


def test_truncation_bookkeeping(chaotic_x):
    res = tebd_quench_run(chaotic_x.with_T(8), 20, 4, 8)
    assert res.total_discarded > 0
    assert all(b >= a for a, b in zip(res.discarded, res.discarded[1:]))
    # each truncation removes exactly its discarded fraction of the squared norm
    for n, d in zip(res.norms, res.discarded):
        assert n == pytest.approx(1.0 - d, rel=1e-10)
    op = tebd_autocorr_run(CircuitParams(G, J, H, 6), 16, 4, 6)
    for n, d in zip(op.norms, op.discarded):
        assert n / op.norms[0] == pytest.approx(1.0 - d, rel=1e-10)


def test_input_validation(chaotic, chaotic_x):
    with pytest.raises(ConfigError):
        tebd_quench(chaotic_x, 9, None, 3)
    with pytest.raises(ConfigError):
        tebd_quench(chaotic, 10, None, 3)
    mixed = CircuitParams(G, J, H, 3, 0.5 * x_polarized() + 0.25 * np.eye(2))
    with pytest.raises(ConfigError):
        tebd_quench(mixed, 10, None, 3)
    with pytest.raises(ConfigError):
        tebd_quench(chaotic_x, 10, None, 3, "W")
    with pytest.raises(ConfigError):
        tebd_autocorr(chaotic, 10, None, 3, np.eye(3))
    with pytest.raises(ConfigError):
        tebd_autocorr(chaotic, 10, None, 3, np.zeros((2, 2)))
