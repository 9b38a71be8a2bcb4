import numpy as np
import pytest

from entwitness.qstate import (

    InvalidStateError,
    NonPhysicalStateWarning,
    bloch_vector,
    check_density,
    decohered,
    dop,
    from_stokes,
    ghz,
    kron,
    parse_state,
    partial_trace,
    random_density,
    random_unitary,
    reduced_state,
    singlet,
    stokes_tensor,
    werner,
)

H = np.array([1, 0])
PLUS = np.array([1, 1]) / np.sqrt(2)


def dm(v):
    return np.outer(v, np.conj(v))


def brute_partial_trace(rho, keep):
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                if keep == 1:
                    out[i, j] += rho[2 * i + k, 2 * j + k]
                else:
                    out[i, j] += rho[2 * k + i, 2 * k + j]
    return out


class TestPartialTrace:
    def test_singlet_marginal_is_mixed(self):
        assert np.allclose(partial_trace(singlet(), 1), np.eye(2) / 2, atol=1e-15)

    def test_product_state(self):
        rho = kron(dm(H), dm(PLUS))
        assert np.allclose(partial_trace(rho, 2), dm(PLUS), atol=1e-15)

    @pytest.mark.parametrize("keep", [1, 2])
    def test_matches_index_summation(self, rng, keep):
        rho = random_density(rng)
        assert np.max(np.abs(partial_trace(rho, keep) - brute_partial_trace(rho, keep))) <= 1e-14

    def test_preserves_trace_of_unnormalized(self, rng):
        rho = 0.3 * random_density(rng)
        m = partial_trace(rho, 1)
        assert np.trace(m).real == pytest.approx(0.3, abs=1e-14)
        check_density(m, normalized=False)

    def test_invariant_under_unitary_on_discarded_arm(self, rng):
        rho = random_density(rng)
        U = np.kron(np.eye(2), random_unitary(rng))
        assert np.allclose(partial_trace(U @ rho @ U.conj().T, 1), partial_trace(rho, 1), atol=1e-12)

    def test_rejects_wrong_dimension(self):
        with pytest.raises(InvalidStateError):
            partial_trace(np.eye(2) / 2, 1)
        with pytest.raises(InvalidStateError):
            partial_trace(singlet(), 3)

    def test_three_qubit_marginals(self):
        for arm in (1, 2, 3):
            assert np.allclose(reduced_state(ghz(3), arm), np.eye(2) / 2)


class TestBloch:
    def test_mixed(self):
        assert np.allclose(bloch_vector(np.eye(2) / 2), 0)
        assert dop(np.eye(2) / 2) == 0

    def test_horizontal_is_plus_z(self):
        assert np.allclose(bloch_vector(dm(H)), [0, 0, 1])
        assert dop(dm(H)) == pytest.approx(1)

    def test_partial_polarization(self):
        r = bloch_vector(np.diag([0.75, 0.25]))
        assert np.allclose(r, [0, 0, 0.5])

    def test_unnormalized_divides_by_trace(self):
        assert np.allclose(bloch_vector(0.2 * np.diag([0.75, 0.25])), [0, 0, 0.5])

    def test_extinct_state_rejected(self):
        with pytest.raises(InvalidStateError):
            bloch_vector(np.zeros((2, 2)))

    def test_dop_unitary_invariant(self, rng):
        rho1 = partial_trace(random_density(rng), 1)
        U = random_unitary(rng)
        assert dop(U @ rho1 @ U.conj().T) == pytest.approx(dop(rho1), abs=1e-12)


class TestStokes:
    def test_singlet(self):
        st = stokes_tensor(singlet())
        assert np.allclose(st.T, -np.eye(3), atol=1e-15)
        assert np.allclose(st.S[0, 1:], 0) and np.allclose(st.S[1:, 0], 0)

    def test_hh(self):
        S = stokes_tensor(dm([1, 0, 0, 0])).S
        assert S[0, 3] == S[3, 0] == S[3, 3] == pytest.approx(1)
        assert np.allclose(stokes_tensor(dm([1, 0, 0, 0])).T, np.diag([0, 0, 1]))

    def test_round_trip(self, rng):
        rho = random_density(rng)
        assert np.max(np.abs(from_stokes(stokes_tensor(rho)) - rho)) <= 1e-13

    def test_entries_bounded(self, rng):
        S = stokes_tensor(random_density(rng)).S
        assert S[0, 0] == pytest.approx(1) and np.all(np.abs(S) <= 1 + 1e-10)

    def test_nonphysical_is_flagged_not_fixed(self):
        S = np.zeros((4, 4))
        S[0, 0] = 1
        S[1, 1] = S[2, 2] = S[3, 3] = 1  # T = +I is outside the state space
        with pytest.warns(NonPhysicalStateWarning):
            rho = from_stokes(S)
        assert np.linalg.eigvalsh(rho)[0] < 0


class TestValidation:
    def test_rejects_non_hermitian(self):
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 0.1
        with pytest.raises(InvalidStateError):
            check_density(m)

    def test_rejects_negative(self):
        with pytest.raises(InvalidStateError):
            check_density(np.diag([1.2, -0.2, 0, 0]))

    def test_trace_modes(self):
        half = np.eye(4) / 8
        with pytest.raises(InvalidStateError):
            check_density(half)
        check_density(half, normalized=False)
        with pytest.raises(InvalidStateError):
            check_density(2 * np.eye(4) / 4, normalized=False)

    def test_rejects_odd_dimension(self):
        with pytest.raises(InvalidStateError):
            check_density(np.eye(3) / 3)


class TestLiterals:
    @pytest.mark.parametrize("literal", ["singlet", "werner:0.8", "pure:0.3", "decohered:0.3,0.5,0.1", "decohered-demo"])
    def test_valid(self, literal):
        check_density(parse_state(literal))

    def test_raw_round_trip(self, rng, tmp_path):
        rho = random_density(rng)
        text = " ".join(f"{float(x.real)!r} {float(x.imag)!r}" for x in rho.ravel())
        assert np.allclose(parse_state("raw:" + text), rho)
        p = tmp_path / "rho.txt"
        p.write_text(text)
        assert np.allclose(parse_state(f"raw:@{p}"), rho)

    @pytest.mark.parametrize("literal", ["nope", "werner:x", "decohered:0.1,0.2", "raw:1 2 3"])
    def test_invalid(self, literal):
        with pytest.raises(ValueError):
            parse_state(literal)

    def test_werner_matches_definition(self):
        assert np.allclose(werner(1.0), singlet())
        assert np.allclose(werner(0.0), np.eye(4) / 4)

    def test_decohered_scales_coherence(self):
        rho = decohered(np.pi / 4, 0.5, 0.0)
        assert rho[0, 3] == pytest.approx(0.25)
