import pytest

from entwitness.oracle import wootters_concurrence
from entwitness.pipeline import ExperimentConfig, measure_witness, run_experiment
from entwitness.qstate import werner
from entwitness.slocc import identity_composites


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.pairs_per_setting == 50_000 and cfg.stopping_tol == 0.1
        assert cfg.replace(noiseless=True).stopping_tol == 1e-8

    @pytest.mark.parametrize("kw", [{"pairs_per_setting": 0}, {"tol_dop": -1.0}, {"state": "bogus"}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_from_mapping(self):
        cfg = ExperimentConfig.from_mapping({"state": "werner:0.8", "seed": "3", "noiseless": "true", "tol-dop": "0.01"})
        assert cfg.state == "werner:0.8" and cfg.seed == 3 and cfg.noiseless and cfg.tol_dop == 0.01

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_mapping({"colour": "blue"})


class TestMeasureWitness:
    def test_exact_werner(self):
        m = measure_witness(werner(0.8), identity_composites(2), 1000)
        assert m.report.c_bound == pytest.approx(0.7, abs=1e-12)
        assert m.report.s0 == pytest.approx(1)
        assert m.settings == 28


class TestRunExperiment:
    def test_noiseless_demo_steps(self):
        res = run_experiment(ExperimentConfig(noiseless=True, max_steps=1000))
        assert res.distillation.converged
        for st in res.steps:
            rep = st.measurement.report
            assert rep.c_bound <= res.c_oracle + 1e-9
            assert rep.c_bound_dis == pytest.approx(st.c_dis_oracle, abs=1e-6) or not rep.optimal
            assert st.c_dis_qst == pytest.approx(st.c_dis_oracle, abs=1e-9)
        assert res.final.measurement.report.c_bound == pytest.approx(res.c_oracle, abs=1e-6)

    def test_sampled_demo(self):
        res = run_experiment(ExperimentConfig(seed=7))
        assert abs(res.final.measurement.report.c_bound - res.c_oracle) <= 0.05
        assert res.final.c_dis_oracle >= 1.5 * res.c_oracle
        assert res.pairs_used == res.settings_used * 50_000
        d = res.witness_dict()
        assert len(d["steps"]) == len(res.distillation.trace)

    def test_deterministic(self):
        a = run_experiment(ExperimentConfig(seed=1)).witness_dict()
        b = run_experiment(ExperimentConfig(seed=1)).witness_dict()
        c = run_experiment(ExperimentConfig(seed=2)).witness_dict()
        assert a == b and a != c

    def test_oracle_matches(self):
        res = run_experiment(ExperimentConfig(state="werner:0.8", noiseless=True))
        assert res.c_oracle == pytest.approx(wootters_concurrence(werner(0.8)))
        assert res.final.measurement.report.c_bound == pytest.approx(0.7, abs=1e-6)
