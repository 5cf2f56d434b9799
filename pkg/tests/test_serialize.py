"""Stable serializer: exact float round-trips and schema handling."""

import json
import math

import numpy as np
import pytest

from fafrontier.bounds import BoundConfig, small_ball_constant, smallball_for_cprime
from fafrontier.model import ModelValidationError, PopulationModel
from fafrontier.serialize import (
    bound_config_from_json,
    bound_config_to_json,
    dumps_stable,
    format_float,
    mc_config_from_json,
    model_from_json,
    model_to_json,
)


class TestFloats:
    def test_seventeen_digit_round_trip(self):
        values = [0.1, 1 / 3, math.pi, 1e-300, 6.02e23, 2.0, -0.0]
        for v in values:
            assert float(format_float(v)) == v

    def test_non_finite_rejected(self):
        with pytest.raises(ModelValidationError):
            format_float(float("nan"))
        with pytest.raises(ModelValidationError):
            format_float(float("inf"))

    def test_dumps_is_valid_json_with_stable_bytes(self):
        payload = {"a": 0.1, "b": [1, 2.5, True, None], "c": {"x": np.arange(3) * 0.5}}
        text = dumps_stable(payload)
        assert text == dumps_stable(payload)
        parsed = json.loads(text)
        assert parsed["a"] == 0.1
        assert parsed["c"]["x"] == [0.0, 0.5, 1.0]

    def test_string_escaping(self):
        text = dumps_stable({"msg": 'quote " backslash \\ newline \n'})
        assert json.loads(text)["msg"] == 'quote " backslash \\ newline \n'


class TestModelSchema:
    def test_round_trip(self):
        model = PopulationModel.from_arrays(
            [1.0, 0.25], [[2.0, 0.3], [0.3, 1.0]], [0.0, -1.0], 1.44 * np.eye(2), 0.7
        )
        again = model_from_json(json.loads(dumps_stable(model_to_json(model))))
        np.testing.assert_array_equal(again.red.beta, model.red.beta)
        np.testing.assert_array_equal(again.red.sigma, model.red.sigma)
        np.testing.assert_array_equal(again.blue.sigma, model.blue.sigma)
        assert again.noise_var == model.noise_var

    def test_rho_shortcut_expands(self):
        doc = {
            "d": 3, "noise_var": 0.0,
            "red": {"beta": [0, 0, 0], "rho": 1.5},
            "blue": {"beta": [0, 0, 0], "rho": 1.0},
        }
        model = model_from_json(doc)
        np.testing.assert_allclose(model.red.sigma, 2.25 * np.eye(3))

    def test_sigma_and_rho_mutually_exclusive(self):
        doc = {
            "d": 1, "noise_var": 0.0,
            "red": {"beta": [0.0], "rho": 1.0, "sigma": [[1.0]]},
            "blue": {"beta": [0.0], "rho": 1.0},
        }
        with pytest.raises(ModelValidationError, match="exactly one"):
            model_from_json(doc)

    def test_missing_keys_named(self):
        with pytest.raises(ModelValidationError, match="noise_var"):
            model_from_json({"d": 1, "red": {}, "blue": {}})


class TestConfigSchemas:
    def test_bound_config_round_trip(self):
        cfg = BoundConfig(
            d=3, n_r=120, n_b=80, lam=0.25, rho_r=1.1, rho_b=0.9,
            noise_var=0.5, het=1.5, constant_multiplier=2.0, rho_max_r=1.3,
        )
        again = bound_config_from_json(json.loads(dumps_stable(bound_config_to_json(cfg))))
        assert again == cfg

    def test_smallball_inversion_targets_cprime(self):
        # the sharper Gaussian constant can be fed through the (C, alpha) slots
        c, alpha = smallball_for_cprime(100.0)
        assert small_ball_constant(c, alpha) == pytest.approx(100.0, rel=1e-12)

    def test_mc_config_requires_core_keys(self):
        with pytest.raises(ModelValidationError, match="estimator"):
            mc_config_from_json({"model": {}, "lambda": 0.5, "n_r": 4, "n_b": 4})
