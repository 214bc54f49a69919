import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aspkit.fermion_core import Sector, build_final_hamiltonian, enumerate_basis, fock_diagonal
from aspkit.integrals_io import IntegralSet, spatial_to_spin
from aspkit.qubit_map import (
    APPENDIX_WORDS,
    ImaginaryResidueError,
    PauliSum,
    appendix_coefficients,
    appendix_discrepancy,
    appendix_hamiltonian,
    jw_annihilation,
    jw_creation,
    jw_map,
    jw_number,
    jw_one_body_diagonal,
    local_x_hamiltonian,
    pauli_to_matrix,
    sector_block,
)
from conftest import random_spatial
from oracles import creation_matrix, fock_hamiltonian, word_matrix

words = st.integers(1, 3).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_single_qubit_lowering_raising():
    a_dag = jw_creation(1, 1).to_matrix()
    assert np.array_equal(a_dag, [[0, 0], [1, 0]])
    assert np.array_equal(jw_annihilation(1, 1).to_matrix(), [[0, 1], [0, 0]])


def test_second_orbital_carries_parity_string():
    op = jw_creation(2, 2)
    assert op.terms == {"ZX": 0.5, "ZY": -0.5j}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_creation_matches_bit_oracle(n):
    for p in range(1, n + 1):
        assert np.allclose(jw_creation(p, n).to_matrix(), creation_matrix(p - 1, n), atol=0)


@pytest.mark.parametrize("n", [3, 4])
def test_canonical_anticommutation(n):
    cre = [jw_creation(p, n) for p in range(1, n + 1)]
    ann = [jw_annihilation(p, n) for p in range(1, n + 1)]
    ident = PauliSum.identity(n)
    for p, q in itertools.product(range(n), repeat=2):
        assert (ann[p] @ cre[q] + cre[q] @ ann[p]).allclose(ident * (p == q))
        assert len(ann[p] @ ann[q] + ann[q] @ ann[p]) == 0


def test_number_operator():
    for p in (1, 3):
        assert (jw_creation(p, 3) @ jw_annihilation(p, 3)).allclose(jw_number(p, 3))
    assert jw_number(1, 1).terms == {"I": 0.5, "Z": -0.5}


def test_orbital_range():
    with pytest.raises(IndexError):
        jw_creation(0, 3)
    with pytest.raises(IndexError):
        jw_annihilation(4, 3)


@settings(max_examples=60, deadline=None)
@given(words, words, st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2))
def test_product_matches_matrices(w1, w2, c1, c2):
    n = max(len(w1), len(w2))
    w1, w2 = w1.ljust(n, "I"), w2.ljust(n, "I")
    a, b = PauliSum(n, {w1: c1}), PauliSum(n, {w2: c2})
    assert np.allclose((a @ b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)
    assert np.allclose((a + b).to_matrix(), a.to_matrix() + b.to_matrix(), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(words)
def test_word_matrix_matches_oracle(word):
    assert np.allclose(PauliSum(len(word), {word: 1.0}).to_matrix(), word_matrix(word), atol=0)


def test_small_matrices():
    assert np.array_equal(pauli_to_matrix(PauliSum(1, {"X": 0.5})), [[0, 0.5], [0.5, 0]])
    assert np.array_equal(pauli_to_matrix(PauliSum.identity(2)), np.eye(4))
    assert np.array_equal(np.diag(pauli_to_matrix(PauliSum(2, {"ZZ": 1.0}))), [1, -1, -1, 1])


def test_dense_cap():
    with pytest.raises(ValueError, match="dense cap"):
        pauli_to_matrix(PauliSum.identity(15))


def test_paulisum_bookkeeping():
    h = PauliSum(3, {"XIZ": 1.0, "III": 2.0, "ZZI": 0.0})
    assert len(h) == 2
    assert h.coeff("XIZ") == 1.0 and h.coeff("YYY") == 0
    assert h.locality("XIZ") == 2 and h.max_locality() == 2
    assert h.is_hermitian()
    assert not PauliSum(1, {"X": 1j}).is_hermitian()
    assert (h - h).terms == {}
    assert (2 * h).coeff("III") == 4.0
    assert h.extend(5).coeff("XIZII") == 1.0
    with pytest.raises(ValueError):
        h.extend(2)
    with pytest.raises(ValueError):
        h + PauliSum(2)
    with pytest.raises(ValueError):
        PauliSum(2, {"XQ": 1.0})
    assert PauliSum.single(4, {2: "Y", 4: "Z"}).terms == {"IYIZ": 1.0}


def test_real_part_guard():
    with pytest.raises(ImaginaryResidueError):
        PauliSum(1, {"Z": 1 + 1e-6j}).real()
    assert PauliSum(1, {"Z": 1 + 1e-14j}).real().terms == {"Z": 1.0}


def test_text_round_trip(ch2):
    h = jw_map(ch2)
    assert PauliSum.from_text(h.to_text()) == h
    with pytest.raises(ValueError, match="line 1"):
        PauliSum.from_text("0.5 XX extra")
    with pytest.raises(ImaginaryResidueError):
        PauliSum(1, {"X": 1j}).to_text()


def test_single_orbital_map():
    h = jw_map(IntegralSet(1, np.array([[0.8]]), {}))
    assert h.allclose(PauliSum(1, {"I": 0.4, "Z": -0.4}))


def test_local_x():
    h = local_x_hamiltonian(3)
    m = h.to_matrix()
    w, v = np.linalg.eigh(m)
    assert w[0] == pytest.approx(0, abs=1e-14)
    assert np.allclose(np.abs(v[:, 0]), 1 / np.sqrt(8))
    assert np.allclose(w, np.repeat([0, 1, 2, 3], [1, 3, 3, 1]))


@pytest.mark.parametrize("seed", range(3))
def test_jw_map_matches_fock_space(seed):
    sp = random_spatial(2 + seed % 2, np.random.default_rng(seed))
    ints = spatial_to_spin(sp)
    assert np.allclose(jw_map(ints).to_matrix(), fock_hamiltonian(sp), atol=1e-12)


def test_jw_map_qubit_limit(ch2):
    with pytest.raises(ValueError, match="limit"):
        jw_map(ch2, max_qubits=3)


def test_zz_coefficient(ch2):
    h = jw_map(ch2)
    assert h.coeff("ZZII") == pytest.approx(0.530171 / 4, abs=1e-15)
    assert h.coeff("ZZII") == pytest.approx(0.13254275, abs=1e-12)


def test_sector_block_examples(ch2):
    n = 4
    ident = np.eye(1 << n)
    assert np.array_equal(sector_block(ident, Sector(4, 1, 1)), np.eye(4))
    number = sum(jw_number(p, n) for p in range(2, n + 1)) + jw_number(1, n)
    assert np.allclose(sector_block(number.to_sparse(), Sector(4, 1, 1)), 2 * np.eye(4))
    basis = enumerate_basis(Sector(4, 1, 1))
    block = sector_block(jw_map(ch2).to_sparse(), basis)
    assert np.allclose(block, build_final_hamiltonian(ch2, basis).toarray(), atol=1e-14)
    with pytest.raises(ValueError):
        sector_block(np.eye(8), Sector(4, 1, 1))


def test_one_body_diagonal(ch2):
    f = fock_diagonal(ch2, 0b0011)
    m = jw_one_body_diagonal(f).to_matrix()
    for det in range(16):
        assert m[det, det] == pytest.approx(sum(f[p] for p in range(4) if det >> p & 1), abs=1e-14)


# --------------------------------------------------------------------------- closed-form model

def test_appendix_words():
    assert sum(len(w) for w in APPENDIX_WORDS) == 15
    assert APPENDIX_WORDS[7] == ("YYXX", "XXYY") and APPENDIX_WORDS[8] == ("XYYX", "YXXY")


def test_appendix_table_entries(ch2):
    h1 = appendix_hamiltonian(ch2, 1.0)
    assert h1.coeff("YYXX") == pytest.approx(-0.0082085, abs=1e-15)
    assert h1.coeff("ZZII") == pytest.approx(0.13254275, abs=1e-15)
    assert len(h1) == 15


def test_appendix_four_local_vanish_at_start(ch2):
    h0 = appendix_hamiltonian(ch2, 0.0)
    assert h0.max_locality() <= 1
    assert all(h0.coeff(w) == 0 for words_ in APPENDIX_WORDS[3:] for w in words_)


@pytest.mark.parametrize("s", [0.0, 0.3, 0.75, 1.0])
def test_appendix_matches_operator_path(builtin_ints, s):
    path = jw_one_body_diagonal(fock_diagonal(builtin_ints, 0b0011)) * (1 - s) + jw_map(builtin_ints) * s
    assert appendix_hamiltonian(builtin_ints, s).allclose(path, atol=1e-14)
    assert appendix_discrepancy(builtin_ints, s)["oracle"] < 1e-14


def test_printed_variant_differs_below_one(ch2):
    for s in (0.0, 0.5):
        d = appendix_discrepancy(ch2, s)
        assert abs(d["c2"]) > 1e-2 and abs(d["c3"]) > 1e-2
        assert all(d[f"c{i}"] == 0 for i in (1, 4, 5, 6, 7, 8, 9))
    d1 = appendix_discrepancy(ch2, 1.0)
    assert max(abs(d1[f"c{i}"]) for i in range(1, 10)) < 1e-15


def test_printed_start_misplaces_ground_state(ch2):
    h0 = appendix_hamiltonian(ch2, 0.0, variant="printed").to_matrix()
    assert int(np.argmin(np.diag(h0))) == 0b1111
    h0d = appendix_hamiltonian(ch2, 0.0).to_matrix()
    assert int(np.argmin(np.diag(h0d))) == 0b0011


def test_restrict_c9(ch2):
    h = appendix_hamiltonian(ch2, 1.0, restrict_c9=True)
    assert h.coeff("XYYX") == 0 and h.coeff("YXXY") == 0 and h.coeff("XXYY") != 0


def test_coefficient_set_affine(ch2):
    c = appendix_coefficients(ch2)
    assert np.allclose(c(0.5), 0.5 * (c(0.0) + c(1.0)))
    assert c.variant == "derived"


def test_appendix_errors(ch2):
    with pytest.raises(ValueError, match="outside"):
        appendix_hamiltonian(ch2, 1.5)
    with pytest.raises(ValueError, match="variant"):
        appendix_coefficients(ch2, "guess")
    six = spatial_to_spin(random_spatial(3, np.random.default_rng(0)))
    with pytest.raises(ValueError, match="4 spin orbitals"):
        appendix_coefficients(six)
