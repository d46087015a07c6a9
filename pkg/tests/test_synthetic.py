"""Tests for the synthetic process and fault injection."""

import numpy as np
import pytest
from gawno.errors import ConfigurationError
from gawno.synthetic import FaultSpec, SynthConfig, inject_fault, inject_faults, synth_process


class TestSynthProcess:
    def test_shape_names_and_labels(self):
        table = synth_process(5, 480, seed=0)
        assert table.values.shape == (480, 5)
        assert table.names == ["x1", "x2", "x3", "x4", "x5"]
        assert not table.labels.any()

    def test_seed_is_bit_identical(self):
        np.testing.assert_array_equal(
            synth_process(4, 200, seed=3).values, synth_process(4, 200, seed=3).values
        )

    def test_seeds_differ(self):
        assert (synth_process(3, 50, seed=1).values != synth_process(3, 50, seed=2).values).any()

    def test_channels_correlated(self):
        off_diagonal = []
        for seed in range(10):
            corr = np.corrcoef(synth_process(5, 960, seed=seed).values.T)
            off_diagonal.append(corr[~np.eye(5, dtype=bool)].mean())
        assert np.mean(off_diagonal) > 0.3

    def test_zero_noise_is_periodic(self):
        cfg = SynthConfig(latent_periods=(48, 96, 32), noise_std=0.0)
        values = synth_process(3, 400, seed=5, config=cfg).values
        np.testing.assert_allclose(values[96:], values[:-96], atol=1e-12)

    def test_needs_two_variables(self):
        with pytest.raises(ConfigurationError):
            synth_process(1, 100)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SynthConfig(ar_coef=1.0)
        with pytest.raises(ConfigurationError):
            SynthConfig(latent_periods=())


class TestFaultSpec:
    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError, match="kind"):
            FaultSpec(kind="explosion")

    def test_negative_magnitude(self):
        with pytest.raises(ConfigurationError):
            FaultSpec(magnitude=-1.0)


class TestInjectFault:
    @pytest.fixture
    def base(self):
        return synth_process(4, 300, seed=1)

    def test_zero_magnitude_step(self, base):
        faulty = inject_fault(base, FaultSpec("step", variable=2, onset=160, magnitude=0.0))
        np.testing.assert_array_equal(faulty.values, base.values)
        assert not faulty.labels[:160].any()
        assert faulty.labels[160:].all()

    def test_step_offset(self, base):
        faulty = inject_fault(base, FaultSpec("step", variable=1, onset=100, magnitude=3.0))
        sigma = base.values[:100, 1].std(ddof=1)
        np.testing.assert_allclose(faulty.values[100:, 1] - base.values[100:, 1], 3.0 * sigma)
        np.testing.assert_array_equal(faulty.values[:100, 1], base.values[:100, 1])

    def test_sticking_freezes(self, base):
        faulty = inject_fault(base, FaultSpec("sticking", variable=0, onset=160))
        frozen = faulty.values[160:, 0]
        assert np.all(frozen == frozen[0])
        assert frozen[0] == base.values[160, 0]
        assert faulty.values[160, 0] == base.values[160, 0]

    def test_slow_drift_end_value(self, base):
        faulty = inject_fault(base, FaultSpec("slow_drift", variable=3, onset=160, magnitude=2.0))
        sigma = base.values[:160, 3].std(ddof=1)
        assert faulty.values[-1, 3] - base.values[-1, 3] == pytest.approx(2.0 * sigma, abs=1e-12)
        np.testing.assert_array_equal(faulty.values[:160, 3], base.values[:160, 3])

    def test_random_variation_seeded(self, base):
        spec = FaultSpec("random_variation", variable=0, onset=50, magnitude=1.0)
        a = inject_fault(base, spec, seed=4)
        b = inject_fault(base, spec, seed=4)
        np.testing.assert_array_equal(a.values, b.values)
        assert (a.values[50:, 0] != base.values[50:, 0]).all()

    @pytest.mark.parametrize("kind", ["step", "random_variation", "slow_drift", "sticking"])
    def test_other_columns_untouched(self, base, kind):
        faulty = inject_fault(base, FaultSpec(kind, variable=2, onset=120, magnitude=3.0))
        for column in (0, 1, 3):
            np.testing.assert_array_equal(faulty.values[:, column], base.values[:, column])

    def test_target_out_of_range(self, base):
        with pytest.raises(IndexError):
            inject_fault(base, FaultSpec(variable=4))

    def test_onset_beyond_end(self, base):
        with pytest.raises(ConfigurationError):
            inject_fault(base, FaultSpec(onset=300))

    def test_input_not_mutated(self, base):
        before = base.values.copy()
        inject_fault(base, FaultSpec("sticking", variable=1, onset=10))
        np.testing.assert_array_equal(base.values, before)

    def test_several_faults(self, base):
        faulty = inject_faults(
            base,
            [
                FaultSpec("step", variable=0, onset=200, magnitude=2.0),
                FaultSpec("sticking", variable=1, onset=100),
            ],
        )
        assert faulty.labels[100:].all()
        assert not faulty.labels[:100].any()
        assert np.all(faulty.values[100:, 1] == faulty.values[100, 1])
        np.testing.assert_array_equal(faulty.values[:, 2], base.values[:, 2])
