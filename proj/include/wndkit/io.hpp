#pragma once

// JSON serialization of SystemSpec and the named presets.

#include "wndkit/navier_stokes.hpp"
#include "wndkit/system_spec.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace wndkit {

using Json = nlohmann::json;

namespace detail {

inline Json tensor_json(const std::vector<Mat>& blocks, std::vector<int> shape) {
  std::vector<double> flat;
  for (const Mat& m : blocks)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return Json{{"shape", shape}, {"data", flat}};
}

inline std::vector<Mat> tensor_blocks(const Json& j, const char* name, const std::vector<int>& expected) {
  if (!j.contains(name)) throw DomainError(std::string("spec: missing field '") + name + "'");
  const Json& t = j.at(name);
  const auto shape = t.at("shape").get<std::vector<int>>();
  if (shape != expected) {
    std::string want, got;
    for (int s : expected) want += std::to_string(s) + " ";
    for (int s : shape) got += std::to_string(s) + " ";
    throw DimensionError(std::string("spec: '") + name + "' has shape [ " + got + "], expected [ " + want + "]");
  }
  const auto data = t.at("data").get<std::vector<double>>();
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(s);
  if (data.size() != total) throw DimensionError(std::string("spec: '") + name + "' data length does not match shape");
  const int n = expected.back();
  const int rows = expected[expected.size() - 2];
  std::vector<Mat> out(total / static_cast<std::size_t>(rows * n), Mat(rows, n));
  std::size_t k = 0;
  for (auto& m : out)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = data[k++];
  return out;
}

}  // namespace detail

/// Tensors are stored flat in row-major order with explicit shapes:
/// advection [d, N, N], diffusion [d, d, N, N], quadratic [d, N, N, N]
/// (direction, output component, input i, input j), entropy_hessian [N, N].
inline Json spec_to_json(const SystemSpec& spec) {
  const int d = spec.dim(), n = spec.ncomp();
  Json j;
  j["dim"] = d;
  j["ncomp"] = n;
  j["state"] = std::vector<double>(spec.state().data(), spec.state().data() + n);
  j["advection"] = detail::tensor_json(spec.advection(), {d, n, n});
  j["diffusion"] = detail::tensor_json(spec.diffusion(), {d, d, n, n});
  j["quadratic"] = detail::tensor_json(spec.quadratic(), {d, n, n, n});
  j["entropy_hessian"] = detail::tensor_json({spec.entropy_hessian()}, {n, n});
  if (!spec.labels().empty()) j["labels"] = spec.labels();
  return j;
}

inline SystemSpec spec_from_json(const Json& j) {
  for (const char* key : {"dim", "ncomp", "state"})
    if (!j.contains(key)) throw DomainError(std::string("spec: missing field '") + key + "'");
  const int d = j.at("dim").get<int>();
  const int n = j.at("ncomp").get<int>();
  if (d < 1 || d > kMaxDim) throw DimensionError("spec: dim must be in [1, 3]");
  if (n < 1) throw DimensionError("spec: ncomp must be positive");
  const auto state = j.at("state").get<std::vector<double>>();
  if (static_cast<int>(state.size()) != n) throw DimensionError("spec: state length != ncomp");
  auto adv = detail::tensor_blocks(j, "advection", {d, n, n});
  auto dif = detail::tensor_blocks(j, "diffusion", {d, d, n, n});
  auto quad = detail::tensor_blocks(j, "quadratic", {d, n, n, n});
  auto g = detail::tensor_blocks(j, "entropy_hessian", {n, n});
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
  return SystemSpec(d, n, Eigen::Map<const Vec>(state.data(), n), std::move(adv), std::move(dif),
                    std::move(quad), g[0], labels);
}

// ---------------------------------------------------------------------------
// Presets

/// dW/dt + a dW/dx + q d(W^2/2)/dx = nu d^2W/dx^2 on T^1.
inline SystemSpec scalar_advection_diffusion(double a = 1.0, double nu = 0.1, double q = 1.0) {
  return SystemSpec(1, 1, Vec::Zero(1), {Mat::Constant(1, 1, a)}, {Mat::Constant(1, 1, nu)},
                    {Mat::Constant(1, 1, 0.5 * q)}, Mat::Identity(1, 1), {"w"});
}

/// A = [[0, 1], [1, 0]], B = diag(1, 0), G = I, no quadratic term.
inline SystemSpec canonical_2x2() {
  Mat a(2, 2);
  a << 0, 1, 1, 0;
  Mat b = Mat::Zero(2, 2);
  b(0, 0) = 1.0;
  return SystemSpec(1, 2, Vec::Zero(2), {a}, {b}, {Mat::Zero(2, 2), Mat::Zero(2, 2)}, Mat::Identity(2, 2),
                    {"w1", "w2"});
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"ideal-gas-2d", "ideal-gas-1d", "scalar-advection-diffusion",
                                              "canonical-2x2"};
  return names;
}

inline bool is_cns_preset(const std::string& name) { return name == "ideal-gas-2d" || name == "ideal-gas-1d"; }

inline SystemSpec preset(const std::string& name, const ns::TransportCoefficients& tr = {1.0, 0.0, 1.0, 3.0},
                         ns::ReferenceState ref = {}) {
  if (name == "ideal-gas-2d") return ns::cns_preset(2, tr, ref);
  if (name == "ideal-gas-1d") return ns::cns_preset(1, tr, ref);
  if (name == "scalar-advection-diffusion") return scalar_advection_diffusion();
  if (name == "canonical-2x2") return canonical_2x2();
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw DomainError("unknown preset '" + name + "' (known:" + known + ")");
}

}  // namespace wndkit
