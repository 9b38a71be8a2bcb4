import csv
import io
import json

import numpy as np
import pytest

from entwitness.oracle import (
    efficiency_compare,
    psd_project,
    qst_reconstruct,
    wootters_concurrence,
    wootters_concurrence_eig,
)
from entwitness.photonsim import full_stokes_16
from entwitness.pipeline import ExperimentConfig
from entwitness.qstate import (
    DEMO_STATE,
    InvalidStateError,
    check_density,
    decohered,
    fidelity,
    ket_to_dm,
    random_density,
    random_pure,
    random_unitary,
    singlet,
    werner,
)
from entwitness.slocc import identity_composites

from .conftest import wootters_brute

IDS = identity_composites(2)
BELL = [[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]]
BUDGET = 52 * 50_000


class TestWootters:
    @pytest.mark.parametrize("ket", BELL)
    def test_bell_states(self, ket):
        assert wootters_concurrence(ket_to_dm(ket)) == pytest.approx(1, abs=1e-12)

    def test_products(self, rng):
        for _ in range(20):
            psi = np.kron(random_pure(rng), random_pure(rng))
            assert wootters_concurrence(ket_to_dm(psi)) == pytest.approx(0, abs=1e-7)

    @pytest.mark.parametrize("w", [0.2, 1 / 3, 0.5, 0.9])
    def test_werner_closed_form(self, w):
        expected = max(0.0, (3 * w - 1) / 2)
        assert wootters_concurrence(werner(w)) == pytest.approx(expected, abs=1e-12)
        assert wootters_concurrence_eig(werner(w)) == pytest.approx(expected, abs=1e-12)

    def test_routes_agree(self, random_states):
        for rho in random_states:
            assert wootters_concurrence(rho) == pytest.approx(wootters_concurrence_eig(rho), abs=1e-10)
            assert wootters_concurrence(rho) == pytest.approx(wootters_brute(rho), abs=1e-10)

    def test_pure_state_formula(self, rng):
        for _ in range(20):
            psi = random_pure(rng, 4)
            c = 2 * abs(psi[0] * psi[3] - psi[1] * psi[2])
            assert wootters_concurrence(ket_to_dm(psi)) == pytest.approx(c, abs=1e-7)

    def test_local_unitary_invariance(self, rng):
        for _ in range(100):
            rho = random_density(rng)
            U = np.kron(random_unitary(rng), random_unitary(rng))
            assert wootters_concurrence(U @ rho @ U.conj().T) == pytest.approx(wootters_concurrence(rho), abs=1e-10)

    def test_rejects_negative(self):
        with pytest.raises(InvalidStateError):
            wootters_concurrence(np.diag([0.6, 0.6, 0.1, -0.3]))

    def test_rejects_wrong_size(self):
        with pytest.raises(InvalidStateError):
            wootters_concurrence(np.eye(2) / 2)


class TestQst:
    def test_singlet_exact(self):
        rec = qst_reconstruct(full_stokes_16(singlet(), IDS, 1000).records)
        assert np.max(np.abs(rec - singlet())) <= 1e-12

    def test_random_exact(self, random_states):
        for rho in random_states[:20]:
            rec = qst_reconstruct(full_stokes_16(rho, IDS, 1000).records)
            assert np.max(np.abs(rec - rho)) <= 1e-12

    def test_demo_fidelity(self):
        rho = decohered(**DEMO_STATE)
        fids = []
        for seed in range(100):
            rec = qst_reconstruct(full_stokes_16(rho, IDS, 50_000, np.random.default_rng(seed)).records)
            check_density(rec)
            fids.append(fidelity(rho, rec))
        assert np.mean(np.array(fids) >= 0.99) >= 0.95

    def test_output_is_valid_state(self, rng):
        for _ in range(30):
            rec = qst_reconstruct(full_stokes_16(ket_to_dm(random_pure(rng, 4)), IDS, 200, rng).records)
            check_density(rec)

    def test_incomplete_records(self):
        recs = full_stokes_16(singlet(), IDS, 100).records
        with pytest.raises(ValueError):
            qst_reconstruct(recs[:15])
        with pytest.raises(ValueError):
            qst_reconstruct(recs[:15] + recs[:1])

    def test_psd_project(self):
        out = psd_project(np.diag([0.7, 0.5, 0.0, -0.2]))
        assert np.allclose(out, np.diag([0.7, 0.5, 0, 0]) / 1.2)


class TestEfficiency:
    def test_witness_beats_tomography(self):
        rep = efficiency_compare(ExperimentConfig(seed=11), trials=100, budget=BUDGET)
        d = rep.to_dict()
        print(f"std_witness={rep.std_witness:.4f} std_qst={rep.std_qst:.4f} ratio={rep.ratio:.2f}")
        assert rep.std_witness < rep.std_qst
        assert d["witness_more_efficient"]
        assert np.all(rep.pairs_witness <= BUDGET) and np.all(rep.pairs_qst <= BUDGET)

    def test_noiseless_is_exact(self):
        rep = efficiency_compare(ExperimentConfig(noiseless=True, max_steps=1000), trials=3)
        assert rep.std_witness == 0 and rep.std_qst == 0
        assert np.allclose(rep.c_qst, rep.c_true, atol=1e-9)
        assert np.allclose(rep.c_witness, rep.c_true, atol=1e-6)

    def test_werner_unbiased(self):
        rep = efficiency_compare(ExperimentConfig(state="werner:0.8", seed=4), trials=100, budget=BUDGET)
        n = np.sqrt(rep.trials)
        assert abs(np.mean(rep.c_witness) - 0.7) <= 3 * np.std(rep.c_witness, ddof=1) / n
        assert abs(np.mean(rep.c_qst) - 0.7) <= 3 * np.std(rep.c_qst, ddof=1) / n

    def test_budget_floor(self):
        with pytest.raises(ValueError):
            efficiency_compare(ExperimentConfig(), trials=2, budget=15_999)

    def test_exports(self):
        rep = efficiency_compare(ExperimentConfig(pairs_per_setting=2000, seed=2), trials=4)
        rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
        assert list(rows[0]) == ["trial", "c_witness", "c_qst"] and len(rows) == 4
        assert [float(r["c_witness"]) for r in rows] == list(rep.c_witness)
        d = json.loads(rep.to_json())
        assert d["trials"] == 4 and "linear inversion" in d["header"]
        assert d["shots_witness"] == d["shots_qst"] or abs(d["shots_witness"] - d["shots_qst"]) < 16

    def test_deterministic(self):
        cfg = ExperimentConfig(pairs_per_setting=2000, seed=9)
        assert efficiency_compare(cfg, trials=3).to_csv() == efficiency_compare(cfg, trials=3).to_csv()
