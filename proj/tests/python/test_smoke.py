# Copyright (c) 2026 The intq Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import intq


def test_quantize_round_trip():
    p = intq.QParams.from_alpha(8, 2.0)
    assert p.bits == 8
    q = intq.quantize([0.0, 1.0, -2.0, 5.0], p)
    assert q == [0, 64, -127, 127]
    x = intq.dequantize(q, p)
    assert abs(x[1] - 1.0) <= p.scale / 2


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        intq.QParams.from_alpha(16, 1.0)
    with pytest.raises(ValueError):
        intq.quantize([math.nan], intq.QParams.from_alpha(8, 1.0))
    with pytest.raises(ValueError):
        intq.DemoEncoder(dims="16x64x5x256")
    with pytest.raises(ValueError):
        intq.microbench("fft", ["16"])


def test_gelu_kernel_tracks_gelu():
    s = 4.0 / 127
    q = list(range(-127, 128))
    out, s_out = intq.i_gelu(q, s)
    worst = max(abs(v * s_out - intq.gelu(k * s)) for k, v in zip(q, out))
    assert worst < 0.05


def test_softmax_and_sqrt():
    out, s_out = intq.i_softmax([100, 0, -100], 0.01)
    probs = [v * s_out for v in out]
    ref = intq.softmax([1.0, 0.0, -1.0])
    assert max(abs(a - b) for a, b in zip(probs, ref)) < 1e-2
    assert intq.i_sqrt(2**31 - 1)[0] == 46340


def test_error_report_and_fit():
    r = intq.error_report("i_gelu", "gelu")
    assert r["linf"] == pytest.approx(0.018, abs=0.002)
    a, b, c = intq.lsq_fit_quadratic(math.exp, -math.log(2), 0.0, lo_open=True)
    assert a == pytest.approx(0.3585, rel=0.02)
    assert b == pytest.approx(1.353, rel=0.02)
    assert c == pytest.approx(0.344, rel=0.02)


def test_encoder_demo():
    enc = intq.DemoEncoder(dims="8x32x2x64", samples=16, seed=1)
    x = intq.random_inputs("8x32x2x64", 1, seed=2)[0]
    y = enc.infer(x)
    assert intq.relative_l2(y, enc.reference(x)) <= 5e-2
    codes, float_ops = enc.run_integer(x)
    assert float_ops == 0
    assert [c * enc.output_scale for c in codes] == y
