// Copyright (c) 2026 The intq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "intq/bench.hpp"
#include "intq/encoder.hpp"
#include "intq/nonlinear.hpp"
#include "intq/oracles.hpp"
#include "intq/poly.hpp"
#include "intq/purity.hpp"
#include "intq/quant.hpp"

namespace py = pybind11;
using namespace intq;

namespace {

using Kernel = IntResult (*)(std::span<const int32_t>, double, OverflowPolicy);

py::tuple to_tuple(const IntResult& r) { return py::make_tuple(r.q, r.scale); }

auto bind_kernel(Kernel k) {
  return [k](const std::vector<int32_t>& q, double scale, bool saturate) {
    return to_tuple(k(q, scale, saturate ? OverflowPolicy::kSaturate : OverflowPolicy::kTrap));
  };
}

// A compiled encoder together with the real parameters it was built from.
struct Demo {
  std::vector<LayerParams> params;
  IntegerEncoder encoder;

  std::vector<double> reference(const std::vector<double>& x) const {
    auto y = x;
    for (const auto& p : params) y = fp32_reference_layer(y, p);
    return y;
  }
};

Demo make_demo(const std::string& dims, int layers, int samples, uint64_t seed) {
  auto m = build_demo_model(EncoderDims::parse(dims), layers, samples, seed);
  return Demo{std::move(m.params), IntegerEncoder::compile(std::move(m.weights))};
}

}  // namespace

PYBIND11_MODULE(_intq, m) {
  m.doc() = "Integer-only transformer kernels";
  m.attr("__version__") = "0.1.0";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<InvalidData>(m, "InvalidData", PyExc_ValueError);
  py::register_exception<OverflowError>(m, "IntegerOverflow", PyExc_OverflowError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<QParams>(m, "QParams")
      .def_static("from_alpha", &QParams::from_alpha, py::arg("bits"), py::arg("alpha"))
      .def_static("from_scale", &QParams::from_scale, py::arg("bits"), py::arg("scale"))
      .def_property_readonly("bits", &QParams::bits)
      .def_property_readonly("alpha", &QParams::alpha)
      .def_property_readonly("scale", &QParams::scale)
      .def("__eq__", [](const QParams& a, const QParams& b) { return a == b; })
      .def("__repr__", [](const QParams& p) {
        return "QParams(bits=" + std::to_string(p.bits()) + ", alpha=" + std::to_string(p.alpha()) +
               ")";
      });

  m.def("quantize", [](const std::vector<double>& x, const QParams& p) {
    return quantize(x, p).data();
  }, py::arg("x"), py::arg("params"));
  m.def("dequantize", [](const std::vector<int32_t>& q, const QParams& p) {
    return dequantize(QTensor(q, p));
  }, py::arg("q"), py::arg("params"));
  m.def("calibrate", [](const std::vector<double>& x, int bits) { return calibrate(x, bits); },
        py::arg("samples"), py::arg("bits"));

  m.def("i_erf", bind_kernel(&i_erf), py::arg("q"), py::arg("scale"), py::arg("saturate") = false,
        "Returns (q_out, scale_out).");
  m.def("i_gelu", bind_kernel(&i_gelu), py::arg("q"), py::arg("scale"), py::arg("saturate") = false);
  m.def("h_gelu", bind_kernel(&h_gelu), py::arg("q"), py::arg("scale"), py::arg("saturate") = false);
  m.def("i_exp", bind_kernel(&i_exp), py::arg("q"), py::arg("scale"), py::arg("saturate") = false);
  m.def("i_softmax", bind_kernel(&i_softmax), py::arg("q"), py::arg("scale"),
        py::arg("saturate") = false);
  m.def("i_layernorm", [](const std::vector<int32_t>& q, double scale) {
    return to_tuple(i_layernorm(q, scale, LayerNormParams::without_affine(q.size())));
  }, py::arg("q"), py::arg("scale"));
  m.def("i_sqrt", [](int64_t n) {
    const auto r = kernels::i_sqrt_counted(n);
    return py::make_tuple(r.root, r.iterations);
  }, py::arg("n"), "Returns (floor(sqrt(n)), iterations).");

  m.def("gelu", &oracle_gelu);
  m.def("erf", &oracle_erf);
  m.def("i_gelu_real", &i_gelu_real);
  m.def("h_gelu_real", &h_gelu_real);
  m.def("sigmoid_gelu", &sigmoid_gelu);
  m.def("i_exp_real", &i_exp_real);
  m.def("softmax", [](const std::vector<double>& v) { return oracle_softmax(v); });
  m.def("layernorm", [](const std::vector<double>& v, double eps) { return oracle_layernorm(v, eps); },
        py::arg("v"), py::arg("eps") = 0.0);

  m.def("error_report", [](const std::string& approx, const std::string& oracle, double lo,
                           double hi, std::size_t n) {
    const auto a = named_function(approx);
    const auto o = named_function(oracle);
    if (!a || !o) throw InvalidArgument("unknown function name");
    const auto r = error_report(a->f, o->f, lo, hi, n);
    py::dict d;
    d["l2"] = r.l2;
    d["linf"] = r.linf;
    d["argmax"] = r.argmax;
    d["n_points"] = r.n_points;
    return d;
  }, py::arg("approx"), py::arg("oracle"), py::arg("lo") = -4.0, py::arg("hi") = 4.0,
     py::arg("n_points") = kDefaultGridPoints);

  m.def("lsq_fit_quadratic", [](const std::function<double(double)>& f, double lo, double hi,
                                bool lo_open, bool hi_open, std::size_t n) {
    const auto c = lsq_fit_quadratic(f, {lo, hi, lo_open, hi_open}, n);
    return py::make_tuple(c.a, c.b, c.c);
  }, py::arg("f"), py::arg("lo"), py::arg("hi"), py::arg("lo_open") = false,
     py::arg("hi_open") = false, py::arg("n_points") = kDefaultFitPoints,
     "Coefficients (a, b, c) of a(x+b)^2+c.");

  py::class_<Demo>(m, "DemoEncoder")
      .def(py::init(&make_demo), py::arg("dims") = "16x64x4x256", py::arg("layers") = 1,
           py::arg("samples") = 128, py::arg("seed") = 0)
      .def("infer", [](const Demo& d, const std::vector<double>& x, int threads) {
        return d.encoder.infer(x, threads);
      }, py::arg("x"), py::arg("threads") = 1)
      .def("run_integer", [](const Demo& d, const std::vector<double>& x) {
        const auto& dims = d.encoder.layers().front().dims;
        const auto q = quantize(x, d.encoder.input_params(),
                                {static_cast<std::size_t>(dims.seq),
                                 static_cast<std::size_t>(dims.hidden)});
        purity::Probe probe;
        auto y = d.encoder.run(q);
        return py::make_tuple(y.data(), probe.count());
      }, py::arg("x"), "Returns (8-bit output codes, float ops recorded during the run).")
      .def("reference", &Demo::reference, py::arg("x"))
      .def_property_readonly("output_scale", [](const Demo& d) { return d.encoder.output_params().scale(); })
      .def("save", [](const Demo& d, const std::string& path) { save_weights(path, d.encoder.layers()); });

  m.def("random_inputs", [](const std::string& dims, int count, uint64_t seed) {
    return random_inputs(EncoderDims::parse(dims), count, seed);
  }, py::arg("dims"), py::arg("count"), py::arg("seed") = 0);
  m.def("relative_l2", [](const std::vector<double>& a, const std::vector<double>& b) {
    return relative_l2(a, b);
  });

  m.def("microbench", [](const std::string& op, const std::vector<std::string>& sizes, int reps) {
    py::list rows;
    for (const auto& r : bench::microbench(op, sizes, reps)) {
      py::dict d;
      d["op"] = r.op;
      d["size"] = r.size;
      d["int_median_ns"] = r.int_median_ns;
      d["float_median_ns"] = r.float_median_ns;
      d["speedup"] = r.speedup;
      rows.append(d);
    }
    return rows;
  }, py::arg("op"), py::arg("sizes"), py::arg("reps") = bench::kMinRepetitions);
}
