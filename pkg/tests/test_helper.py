#!/usr/bin/env python
import time
import pytest
import numpy as np
from unittest import mock
from rankprep.helper import (
    Backend, BackendSpec, ConfigError, Encoding, RankPrepError, DomainError, RepeatedTimer,
    ensure_rng, get_max_grid_qubits, get_max_joint_qubits, get_semvar_as_integer, parse_backend,
    round_significant, sha256hex, substream, vector_norm,
)


class TestParseBackend:

    @pytest.mark.parametrize('value, expected', [
        ('exact', BackendSpec(kind=Backend.exact)),
        (' Ideal ', BackendSpec(kind=Backend.ideal)),
        ('TAYLOR', BackendSpec(kind=Backend.taylor, taylor_order=7)),
        ('taylor:3', BackendSpec(kind=Backend.taylor, taylor_order=3)),
        (Backend.ideal, BackendSpec(kind=Backend.ideal)),
    ])
    def test_valid(self, value, expected):
        assert expected == parse_backend(value)

    def test_passes_spec_through(self):
        spec = BackendSpec(kind=Backend.taylor, taylor_order=4)
        assert spec is parse_backend(spec)

    @pytest.mark.parametrize('value', ['taylor:0', 'taylor:x', 'rk4', ''])
    def test_invalid(self, value):
        with pytest.raises(ConfigError):
            parse_backend(value)

    @pytest.mark.parametrize('value', ['exact', 'ideal', 'taylor:5'])
    def test_str_round_trip(self, value):
        assert value == str(parse_backend(value))


class TestSubstream:

    def test_same_stream_same_draws(self):
        assert np.array_equal(substream(7, 'step', 3).random(5), substream(7, 'step', 3).random(5))

    @pytest.mark.parametrize('other', [
        (8, 'step', 3),
        (7, 'qpe', 3),
        (7, 'step', 4),
    ])
    def test_streams_are_independent(self, other):
        assert substream(7, 'step', 3).random() != substream(*other).random()

    def test_negative_seed(self):
        assert substream(-1, 'step').random() == substream(2 ** 64 - 1, 'step').random()

    def test_ensure_rng(self):
        rng = np.random.default_rng(0)
        assert rng is ensure_rng(rng)
        assert ensure_rng(5).random() == np.random.default_rng(5).random()
        assert ensure_rng(None, seed=3, name='x').random() == substream(3, 'x').random()


class TestRoundSignificant:

    @pytest.mark.parametrize('value, digits, expected', [
        (0.6149, 2, 0.61),
        (0.615, 1, 0.6),
        (1234.0, 2, 1200.0),
        (-0.000456, 2, -0.00046),
        (0, 2, 0),
    ])
    def test_round(self, value, digits, expected):
        assert expected == round_significant(value, digits)

    def test_inf(self):
        assert np.isinf(round_significant(np.inf))


class TestCaps:

    def test_defaults(self, clean_caps):
        assert 12 == get_max_joint_qubits()
        assert 24 == get_max_grid_qubits()

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv('RANKPREP_MAX_JOINT_QUBITS', '5')
        monkeypatch.setenv('RANKPREP_MAX_GRID_QUBITS', '30')
        assert 5 == get_max_joint_qubits()
        assert 30 == get_max_grid_qubits()

    @pytest.mark.parametrize('value', ['abc', '0', '-3'])
    @mock.patch('rankprep.helper.logger')
    def test_invalid_env_warns(self, mock_logger, monkeypatch, value):
        monkeypatch.setenv('RANKPREP_MAX_JOINT_QUBITS', value)
        assert 12 == get_max_joint_qubits()
        message = mock_logger.warning.call_args[0][0]
        assert 'RANKPREP_MAX_JOINT_QUBITS' in message
        assert repr(value) in message


class TestHelper:

    @pytest.mark.parametrize('version, expected', [
        ('1.23.5', 1023005),
        ('1.22', 1022000),
        ('2.0.0rc1', 2000001),
        ('2.1.3.4', 2001003),
    ])
    def test_get_semvar_as_integer(self, version, expected):
        assert expected == get_semvar_as_integer(version)

    def test_enum_repr(self):
        assert "'integral'" == repr(Encoding.integral)
        assert 'integral' == str(Encoding.integral)
        assert Encoding.integral == 'integral'

    def test_errors_share_a_base(self):
        assert issubclass(DomainError, RankPrepError)
        assert issubclass(DomainError, ValueError)

    def test_vector_norm(self):
        assert 5.0 == vector_norm(np.array([3, 4j]))

    def test_sha256hex(self):
        assert sha256hex('rankprep') == sha256hex(b'rankprep')

    def test_repeated_timer(self):
        calls = []
        timer = RepeatedTimer(0.01, lambda duration: calls.append(duration))
        time.sleep(0.1)
        assert 0 == timer.stop()
        assert calls
        assert 0 == calls[0]
