import numpy as np
import pytest

from scapre.geometry import BW_GEODESIC
from scapre.harness import SyntheticModelSpec, generate_model
from scapre.pipeline import EditConfig, PipelineStageError, ZeroTargetWarning, run_edit
from scapre.solver import SUBSTITUTE_TARGET, ZERO_TARGET, EraseSpec


def small_model(seed=0, **kw):
    spec = SyntheticModelSpec(d_in=48, d_out=24, m_targets=4, m_preserved=3, seed=seed, **kw)
    return generate_model(spec)


class TestRunEdit:
    def test_empty_edit_rejected(self):
        with pytest.raises(ValueError, match="no target"):
            EraseSpec(np.zeros((8, 0)), mode=ZERO_TARGET)

    def test_self_substitute_keeps_concept_outputs(self):
        # mapping a concept to itself must barely displace its output
        rng = np.random.default_rng(1)
        d_in, d_out = 32, 12
        w0 = rng.standard_normal((d_out, d_in))
        c = rng.standard_normal(d_in)
        c *= 10.0 / np.linalg.norm(c)
        spec = EraseSpec(c[:, None], mode=SUBSTITUTE_TARGET, substitutes=c[:, None])
        contexts = [c[None, :]]
        features = np.vstack(
            [
                c[None, :] + 0.05 * rng.standard_normal((8, d_in)),
                10.0 * rng.standard_normal((8, d_in)) / np.sqrt(d_in),
            ]
        )
        labels = np.array([1] * 8 + [0] * 8)
        cfg = EditConfig(beta=0.0)
        w_edit, report = run_edit(w0, spec, contexts, features, labels, cfg)
        assert report.max_erasure_err <= 0.05
        assert np.linalg.norm(w_edit @ c - w0 @ c) <= 0.05 * np.linalg.norm(w0 @ c)

    def test_zero_target_degenerates_with_warning(self):
        model = small_model()
        spec = EraseSpec(model.erase_spec.concepts, mode=ZERO_TARGET)
        cfg = EditConfig(target_mode=ZERO_TARGET, beta=0.0)
        with pytest.warns(ZeroTargetWarning):
            w_edit, report = run_edit(
                model.w0, spec, model.contexts, model.features, model.labels, cfg
            )
        assert report.zero_target
        assert np.array_equal(report.intermediates.w_star, np.zeros_like(model.w0))
        assert np.array_equal(w_edit, np.zeros_like(model.w0))

    def test_determinism_bit_identical(self):
        model = small_model(seed=7)
        cfg = EditConfig()
        runs = [
            run_edit(
                model.w0,
                model.erase_spec,
                model.contexts,
                model.features,
                model.labels,
                cfg,
                preserved=model.preserved,
            )
            for _ in range(2)
        ]
        assert runs[0][0].tobytes() == runs[1][0].tobytes()
        assert runs[0][1].sylvester_residual == runs[1][1].sylvester_residual

    def test_report_fields_and_config_echo(self):
        model = small_model(seed=3)
        cfg = EditConfig(beta=0.25)
        _, report = run_edit(
            model.w0,
            model.erase_spec,
            model.contexts,
            model.features,
            model.labels,
            cfg,
            preserved=model.preserved,
        )
        assert report.m == 4 and report.d_in == 48 and report.d_out == 24
        assert report.lam_rule == "relative" and report.lam > 0
        assert report.config["beta"] == 0.25
        assert report.solver_path == "spectral"
        assert len(report.erasure_errors) == 4
        assert len(report.preservation_errors) == 3
        assert report.wall_ms > 0
        doc = report.to_dict()
        assert "intermediates" not in doc and "config" in doc

    def test_residual_recomputable_from_intermediates(self):
        model = small_model(seed=9)
        _, report = run_edit(
            model.w0, model.erase_spec, model.contexts, model.features, model.labels
        )
        inter = report.intermediates
        w_star = inter.w_star
        lhs = inter.decoupler.alpha[:, None] * w_star + w_star @ inter.stabilizer.a
        residual = np.linalg.norm(lhs - inter.m_rhs) / np.linalg.norm(inter.m_rhs)
        assert abs(residual - report.sylvester_residual) < 1e-12

    def test_bures_improves_on_bw_geodesic_full_rank(self):
        # more targets than output channels makes the edit full rank, so the
        # geodesic step must strictly pull the covariance toward the original
        spec = SyntheticModelSpec(d_in=32, d_out=4, m_targets=8, seed=11)
        model = generate_model(spec)
        # distinct substitutes per target keep the edit full rank
        rng = np.random.default_rng(0)
        subs = 10.0 * rng.standard_normal((32, 8)) / np.sqrt(32)
        erase = EraseSpec(model.erase_spec.concepts, mode=SUBSTITUTE_TARGET, substitutes=subs)
        cfg_before = EditConfig(beta=0.0)
        cfg_after = EditConfig(beta=0.6, interpolation_mode=BW_GEODESIC)
        args = (model.w0, erase, model.contexts, model.features, model.labels)
        _, rep0 = run_edit(*args, cfg_before)
        _, rep1 = run_edit(*args, cfg_after)
        assert rep1.refinement_rank == 4 and not rep1.refinement_rank_deficient
        assert rep1.bures_after <= rep1.bures_before + 1e-9
        assert rep1.bures_after < rep0.bures_after  # beta=0 leaves the gap alone
        assert rep0.bures_before == pytest.approx(rep1.bures_before, rel=1e-9)

    def test_stage_error_is_tagged(self):
        model = small_model()
        bad_labels = np.ones_like(model.labels)  # no neutral samples
        with pytest.raises(PipelineStageError, match="informax"):
            run_edit(
                model.w0, model.erase_spec, model.contexts, model.features, bad_labels
            )

    def test_mode_mismatch_rejected(self):
        model = small_model()
        cfg = EditConfig(target_mode=ZERO_TARGET)
        with pytest.raises(PipelineStageError, match="config"):
            run_edit(
                model.w0, model.erase_spec, model.contexts, model.features, model.labels, cfg
            )

    def test_context_group_count_checked(self):
        model = small_model()
        with pytest.raises(PipelineStageError, match="stabilizer"):
            run_edit(
                model.w0,
                model.erase_spec,
                model.contexts[:-1],
                model.features,
                model.labels,
            )


class TestEditConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="beta"):
            EditConfig(beta=1.5)
        with pytest.raises(ValueError, match="lam"):
            EditConfig(lam=0.0)
        with pytest.raises(ValueError, match="interpolation_mode"):
            EditConfig(interpolation_mode="cubic")
        with pytest.raises(ValueError, match="target_mode"):
            EditConfig(target_mode="extra")

    def test_serialization(self):
        assert EditConfig(lam=2.0).to_dict()["lambda"] == 2.0
        assert EditConfig().to_dict()["lambda"] == {"relative": 0.1}
