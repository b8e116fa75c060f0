import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from temphist import histories as hist
from temphist.histories import chain, chain_operator, inner_product, weight
from temphist.linalg import SX, SY, SZ, ket, proj, projector, random_state, random_unitary
from temphist.scenarios import example1_family, ghz_from_family, ghz_history

R2 = math.sqrt(2)
seeds = st.integers(0, 2**63 - 1)
zp, zm, xp, xm = proj("z+"), proj("z-"), proj("x+"), proj("x-")


def outer(a, b):
    return np.outer(ket(a), ket(b).conj())


def random_history(rng, n=3, d=2, terms=2, bridging=None):
    h = None
    for _ in range(terms):
        ops = [projector(random_state(rng, d)) for _ in range(n)]
        c = complex(rng.standard_normal(), rng.standard_normal())
        e = c * hist.HistoryVector.elementary(ops, None, bridging)
        h = e if h is None else h + e
    return h


# chain operator and weight

def test_chain_operator_examples():
    assert np.allclose(chain_operator(chain(zp, zp)), zp)
    h1 = example1_family()[0]
    assert np.max(np.abs(chain_operator(h1) - outer("x-", "z+"))) <= 1e-12
    assert np.allclose(chain_operator(chain(zp, xp, zp)), 0.5 * zp)


def test_weight_examples():
    assert weight(chain(zp, zp)) == pytest.approx(1, abs=1e-12)
    assert weight(chain(zp, xp, zp)) == pytest.approx(0.25, abs=1e-12)
    assert weight(example1_family()[0]) == pytest.approx(1, abs=1e-12)


def test_chain_operator_matches_explicit_product(rng):
    us = [random_unitary(rng, 2) for _ in range(2)]
    ops = [projector(random_state(rng, 2)) for _ in range(3)]
    h = hist.HistoryVector.elementary(ops, None, us)
    # K = P2 T(t2,t1) P1 T(t1,t0) P0
    oracle = ops[2] @ us[1] @ ops[1] @ us[0] @ ops[0]
    assert np.allclose(chain_operator(h), oracle, atol=1e-12)


def test_notation_order():
    # chain() reads late -> early; the earliest op sits rightmost
    h = chain(zp, xp)
    assert np.allclose(h.terms[0][1].ops[0], xp)
    assert np.allclose(chain_operator(h), zp @ xp)


# inner product

def test_inner_product_examples():
    h1, h2, _, _ = example1_family()
    phi = chain(zp, zp, zp)
    amp = inner_product(phi, h1)
    assert amp == pytest.approx(1 / R2, abs=1e-12)
    assert abs(amp) ** 2 == pytest.approx(0.5, abs=1e-12)
    assert abs(inner_product(h1, h2)) <= 1e-12
    assert inner_product(h1, h1) == pytest.approx(1, abs=1e-12)


def test_inner_product_grid_mismatch():
    with pytest.raises(hist.GridMismatchError):
        inner_product(chain(zp, zp), chain(zp, zp, zp))


@given(seeds)
def test_sesquilinear(seed):
    rng = np.random.default_rng(seed)
    h1, h2, h3 = (random_history(rng) for _ in range(3))
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = inner_product(h1, a * h2 + b * h3)
    rhs = a * inner_product(h1, h2) + b * inner_product(h1, h3)
    assert abs(lhs - rhs) <= 1e-10
    assert abs(inner_product(a * h1, h2) - np.conj(a) * inner_product(h1, h2)) <= 1e-10


@given(seeds)
def test_self_inner_is_weight(seed):
    h = random_history(np.random.default_rng(seed))
    assert inner_product(h, h).real == weight(h) >= 0


@given(seeds)
def test_chain_operator_linear(seed):
    rng = np.random.default_rng(seed)
    h1, h2 = random_history(rng), random_history(rng)
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    k = chain_operator(a * h1 + b * h2)
    assert np.max(np.abs(k - a * chain_operator(h1) - b * chain_operator(h2))) <= 1e-12


@given(seeds)
def test_bridging_algebra(seed):
    rng = np.random.default_rng(seed)
    us = [random_unitary(rng, 2) for _ in range(3)]
    t20 = hist.propagator(us, 0, 2)
    assert np.max(np.abs(t20 - hist.propagator(us, 1, 2) @ hist.propagator(us, 0, 1))) <= 1e-10
    assert np.max(np.abs(hist.propagator(us, 2, 0) - t20.conj().T)) <= 1e-10


# equivalence

def test_equivalence_examples():
    h1, h2, _, _ = example1_family()
    assert hist.equivalent((h1 + h2) / R2, chain(zp, zp, zp))
    assert not hist.equivalent(chain(zp, zp), chain(zm, zm))
    for a, b in [(1, 0), (0, 1), (1 / R2, 1 / R2), (0.6, 0.8j)]:
        assert hist.equivalent(ghz_from_family(a, b), ghz_history(a, b))


def test_equivalence_up_to_global_phase():
    h = example1_family()[0]
    assert hist.equivalent(h, np.exp(0.7j) * h)


@given(seeds)
def test_equivalence_relation(seed):
    rng = np.random.default_rng(seed)
    h = random_history(rng)
    g = np.exp(1j * rng.uniform(0, 6.28)) * h
    f = np.exp(1j * rng.uniform(0, 6.28)) * g
    assert hist.equivalent(h, h)
    assert hist.equivalent(h, g) and hist.equivalent(g, h)
    assert hist.equivalent(g, f) and hist.equivalent(h, f)
    other = random_history(rng)
    assert hist.equivalent(h, other) == hist.equivalent(other, h)


# normalize

def test_normalize_examples():
    h = hist.normalize(chain(zp, xp, zp))
    assert h.terms[0][0] == pytest.approx(2)
    assert weight(h) == pytest.approx(1, abs=1e-10)
    h1 = example1_family()[0]
    assert np.allclose(chain_operator(hist.normalize(h1)), chain_operator(h1), atol=1e-10)
    with pytest.raises(hist.NullHistoryError, match="null history"):
        hist.normalize(chain(zp, zm))


# odot

def test_odot_examples():
    a = hist.HistoryVector.elementary([zp])
    h = hist.odot(a, a)
    assert h.grid.labels == (0, 1)
    assert hist.equivalent(h, chain(zp, zp)) and len(h) == 1

    late = hist.HistoryVector.elementary([zp]) + hist.HistoryVector.elementary([zm])
    h = hist.odot(late, hist.HistoryVector.elementary([xp]))
    assert len(h) == 2
    assert np.allclose(chain_operator(h), (zp + zm) @ xp)


def test_odot_reproduces_temporal_entanglement_structure(rng):
    # |phi32) (.) (|phi21)(.)|phi11) + |phi22)(.)|phi12)) on t1..t3
    ph = {k: projector(random_state(rng, 2)) for k in ["11", "12", "21", "22", "32"]}
    inner = chain(ph["21"], ph["11"]) + chain(ph["22"], ph["12"])
    h = hist.odot(hist.HistoryVector.elementary([ph["32"]]), inner)
    assert len(h) == 2 and len(h.grid) == 3
    direct = chain(ph["32"], ph["21"], ph["11"]) + chain(ph["32"], ph["22"], ph["12"])
    assert np.allclose(hist.tensor(h), hist.tensor(direct))


def test_odot_dimension_mismatch():
    with pytest.raises(ValueError):
        hist.odot(hist.HistoryVector.elementary([np.eye(3)]), hist.HistoryVector.elementary([zp]))


# measurement injection

def test_inject_pauli_pair(rng):
    p1, p2 = projector(random_state(rng, 2)), projector(random_state(rng, 2))
    h = hist.normalize(chain(p2, p1))
    out, alpha = hist.inject_measurement(h, [SX, SY])  # grid order: t1 then t2
    expected = hist.normalize(chain(SY @ p2 @ SY.conj().T, SX @ p1 @ SX.conj().T))
    assert hist.equivalent(out, expected)
    assert weight(out) == pytest.approx(1, abs=1e-10)
    assert alpha > 0


def test_inject_identity_unchanged():
    h = example1_family()[2]
    out, alpha = hist.inject_measurement(h, [np.eye(2)] * 3)
    assert hist.equivalent(out, h) and alpha == pytest.approx(1)


def test_inject_projector_kills_branch():
    p0, p1 = proj("z+"), proj("z-")
    h = (chain(p0, p0) + chain(p1, p1)) / R2
    out, alpha = hist.inject_measurement(h, [p0, np.eye(2)])
    assert hist.equivalent(out, chain(p0, p0))
    assert alpha == pytest.approx(R2)


def test_inject_annihilates():
    with pytest.raises(hist.NullHistoryError, match="annihilates"):
        hist.inject_measurement(chain(zp, zp), [zm, np.eye(2)])


@pytest.mark.parametrize("k", [2, 3, 5])
@pytest.mark.parametrize("name,obs", [("z+", SZ), ("x-", SX)])
def test_repeated_projector_persistence(k, name, obs):
    b = proj(name)
    h = chain(*([b] * k))
    assert weight(h) == pytest.approx(1, abs=1e-12)
    for m in (b, obs):
        out, _ = hist.inject_measurement(h, [m] * k)
        assert hist.equivalent(out, h)


# observables

def test_history_expectation_examples():
    h1, h2, _, _ = example1_family()
    phi = chain(zp, zp, zp)
    assert hist.history_expectation([(1.0, phi)], phi) == pytest.approx(1)
    assert hist.history_expectation([(1.0, h1), (-1.0, h2)], phi) == pytest.approx(0, abs=1e-12)
    assert hist.history_expectation([(1.0, h1), (-1.0, h2)], h2) == pytest.approx(-1)


def test_history_expectation_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        hist.history_expectation([(1.0, chain(zp, zp)), (2.0, hist.normalize(chain(zp, xp)))],
                                 chain(zp, zp))


# consistency and completeness

def test_consistency_examples():
    rep = hist.consistency_check(example1_family())
    assert rep.consistent and rep.additive
    rep = hist.consistency_check([chain(zp, zp), chain(zp, xp)])
    assert not rep.consistent
    assert rep.max_off_diagonal == pytest.approx(0.5)
    assert hist.consistency_check([example1_family()[0]]).consistent


def test_completeness_examples():
    fam = [chain(a, b) for a in (zp, zm) for b in (zp, zm)]
    rep = hist.completeness_check(fam, [1, 1, 1, 1])
    assert rep.identity_raw and rep.resolves_identity and not rep.unit_norm
    rep = hist.completeness_check(example1_family(), [0.5] * 4)
    assert rep.identity_normalized and rep.unit_norm and bool(rep)
    assert not hist.completeness_check([chain(zp, zp)], [1])


# serialization

def test_json_round_trip(rng):
    h = random_history(rng, bridging=[random_unitary(rng, 2), random_unitary(rng, 2)])
    back = hist.history_from_json(hist.history_to_json(h))
    assert back.grid == h.grid
    assert np.allclose(chain_operator(back), chain_operator(h), atol=0)
