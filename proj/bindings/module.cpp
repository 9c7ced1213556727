#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lmsx/angular.hpp"
#include "lmsx/commands.hpp"
#include "lmsx/config.hpp"
#include "lmsx/loss.hpp"
#include "lmsx/metrics.hpp"

namespace py = pybind11;

namespace {

lmsx::Tensor matrix_from_numpy(const py::array_t<double, py::array::c_style>& a,
                               const char* what) {
  if (a.ndim() != 2) throw lmsx::ShapeMismatchError(std::string(what) + " must be 2-D");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> data(a.data(), a.data() + rows * cols);
  return lmsx::Tensor({rows, cols}, std::move(data));
}

py::array_t<double> numpy_from_matrix(const lmsx::Tensor& t) {
  py::array_t<double> out({t.extent(0), t.extent(1)});
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

py::dict loss_result_to_dict(const lmsx::LossResult& result, bool with_grads) {
  py::dict d;
  d["loss"] = result.loss;
  d["logits"] = numpy_from_matrix(result.logits);
  if (with_grads) {
    d["grad_x"] = numpy_from_matrix(result.grad_x);
    d["grad_w"] = numpy_from_matrix(result.grad_w);
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Large-margin softmax loss: margin math, loss gradients, training";

  m.def("segment_of", &lmsx::angular::segment_of, py::arg("c"), py::arg("m"));
  m.def("psi", &lmsx::angular::psi, py::arg("c"), py::arg("m"));
  m.def("psi_derivative", &lmsx::angular::psi_derivative, py::arg("c"), py::arg("m"));
  m.def("cos_multiple", &lmsx::angular::cos_multiple, py::arg("c"), py::arg("m"));
  m.def("cos_multiple_derivative", &lmsx::angular::cos_multiple_derivative, py::arg("c"),
        py::arg("m"));
  m.def("ideal_margin", &lmsx::ideal_margin, py::arg("m"), py::arg("theta_12"));

  m.def(
      "lambda_at",
      [](double initial, double min, double gamma, long window, long iteration) {
        return lmsx::lambda_at(lmsx::LambdaSchedule{initial, min, gamma, window}, iteration);
      },
      py::arg("initial"), py::arg("min"), py::arg("gamma"), py::arg("window"),
      py::arg("iteration"));

  m.def(
      "lsoftmax_forward",
      [](const py::array_t<double, py::array::c_style>& X, const std::vector<int>& y,
         const py::array_t<double, py::array::c_style>& W, int m, double lambda) {
        const auto result = lmsx::lsoftmax_forward(matrix_from_numpy(X, "X"), y,
                                                   matrix_from_numpy(W, "W"), m, lambda);
        return loss_result_to_dict(result, false);
      },
      py::arg("X"), py::arg("y"), py::arg("W"), py::arg("m"), py::arg("lambda_") = 0.0);

  m.def(
      "lsoftmax_backward",
      [](const py::array_t<double, py::array::c_style>& X, const std::vector<int>& y,
         const py::array_t<double, py::array::c_style>& W, int m, double lambda) {
        const auto result = lmsx::lsoftmax_backward(matrix_from_numpy(X, "X"), y,
                                                    matrix_from_numpy(W, "W"), m, lambda);
        return loss_result_to_dict(result, true);
      },
      py::arg("X"), py::arg("y"), py::arg("W"), py::arg("m"), py::arg("lambda_") = 0.0);

  m.def(
      "make_blobs",
      [](std::size_t n_per_class, int classes, std::size_t dim, double spread,
         std::uint64_t seed) {
        const auto data = lmsx::make_blob_data(n_per_class, classes, dim, spread, seed);
        py::dict d;
        d["features"] = numpy_from_matrix(data.features);
        d["labels"] = data.labels;
        return d;
      },
      py::arg("n_per_class"), py::arg("classes"), py::arg("dim"), py::arg("spread"),
      py::arg("seed"));

  m.def(
      "accuracy",
      [](const py::array_t<double, py::array::c_style>& features, const std::vector<int>& labels,
         const py::array_t<double, py::array::c_style>& W) {
        return lmsx::accuracy(matrix_from_numpy(features, "features"), labels,
                              matrix_from_numpy(W, "W"));
      },
      py::arg("features"), py::arg("labels"), py::arg("W"));

  m.def(
      "angular_stats",
      [](const py::array_t<double, py::array::c_style>& features,
         const std::vector<int>& labels) {
        const auto stats = lmsx::angular_stats(matrix_from_numpy(features, "features"), labels);
        py::dict d;
        d["mean_directions"] = numpy_from_matrix(stats.mean_directions);
        d["per_class_spread"] = stats.per_class_spread;
        d["min_interclass_angle"] = stats.min_interclass_angle;
        d["margin_proxy"] = stats.margin_proxy;
        return d;
      },
      py::arg("features"), py::arg("labels"));

  m.def(
      "train_from_config",
      [](const std::string& config_text) {
        const auto config = lmsx::parse_config_text(config_text);
        std::ostringstream log;
        const auto artifacts = lmsx::cmd_train(config, log);
        py::dict d;
        d["final_train_loss"] = artifacts.final_train_loss;
        d["params_path"] = artifacts.params.string();
        d["metrics_path"] = artifacts.metrics_csv.string();
        d["log"] = log.str();
        return d;
      },
      py::arg("config_text"));

  py::register_exception<lmsx::ConfigError>(m, "ConfigError");
  py::register_exception<lmsx::ZeroNormError>(m, "ZeroNormError");
  py::register_exception<lmsx::ShapeMismatchError>(m, "ShapeMismatchError");
}
