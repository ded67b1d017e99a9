#include "same/params.hpp"

#include <cmath>

#include "same/errors.hpp"

namespace same {

const char* to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kNodeHead: return "nc";
    case ParamGroup::kGraphHead: return "gc";
    case ParamGroup::kLinkHead: return "lp";
  }
  return "?";
}

int ParamSet::add(std::string name, ParamGroup group, Tensor value) {
  names.push_back(std::move(name));
  groups.push_back(group);
  values.push_back(std::move(value));
  return static_cast<int>(values.size()) - 1;
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values) n += static_cast<std::size_t>(v.size());
  return n;
}

int ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

double ParamSet::max_abs() const {
  double m = 0;
  for (const auto& v : values)
    if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

void ParamSet::add_scaled(const GradientMap& delta, double scale, const std::vector<bool>& mask) {
  if (delta.size() != values.size()) throw ArgumentError("add_scaled: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (mask.empty() || mask[i]) values[i] += scale * delta[i];
}

GradientMap GradientMap::zeros_like(const ParamSet& params) {
  GradientMap g;
  g.tensors.reserve(params.size());
  for (const auto& v : params.values) g.tensors.push_back(Tensor::Zero(v.rows(), v.cols()));
  return g;
}

GradientMap& GradientMap::add_scaled(const GradientMap& other, double s) {
  if (other.size() != size()) throw ArgumentError("GradientMap::add_scaled: size mismatch");
  for (std::size_t i = 0; i < size(); ++i) tensors[i] += s * other[i];
  return *this;
}

GradientMap& GradientMap::scale(double s) {
  for (auto& t : tensors) t *= s;
  return *this;
}

GradientMap& GradientMap::restrict_to(const std::vector<bool>& mask) {
  for (std::size_t i = 0; i < size(); ++i)
    if (!mask[i]) tensors[i].setZero();
  return *this;
}

double GradientMap::dot(const GradientMap& other) const {
  double s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += tensors[i].cwiseProduct(other[i]).sum();
  return s;
}

double GradientMap::max_abs() const {
  double m = 0;
  for (const auto& t : tensors)
    if (t.size()) m = std::max(m, t.cwiseAbs().maxCoeff());
  return m;
}

bool GradientMap::all_finite() const {
  for (const auto& t : tensors)
    if (!t.allFinite()) return false;
  return true;
}

std::vector<bool> group_mask(const ParamSet& params, std::initializer_list<ParamGroup> groups) {
  std::vector<bool> mask(params.size(), false);
  for (std::size_t i = 0; i < params.size(); ++i)
    for (ParamGroup g : groups)
      if (params.groups[i] == g) mask[i] = true;
  return mask;
}

GradientMap hessian_vector_product(const ObjectiveFn& objective, const ParamSet& params,
                                   const GradientMap& v, double eps_scale) {
  const double v_scale = v.max_abs();
  GradientMap result = GradientMap::zeros_like(params);
  if (v_scale == 0.0) return result;
  const double eps = eps_scale * (1.0 + params.max_abs());

  ParamSet plus = params, minus = params;
  plus.add_scaled(v, eps / v_scale);
  minus.add_scaled(v, -eps / v_scale);
  GradientMap g_plus = GradientMap::zeros_like(params);
  GradientMap g_minus = GradientMap::zeros_like(params);
  objective(plus, g_plus);
  objective(minus, g_minus);

  result = std::move(g_plus);
  result.add_scaled(g_minus, -1.0).scale(v_scale / (2.0 * eps));
  if (!result.all_finite()) throw NumericError("hessian_vector_product: non-finite result");
  return result;
}

}  // namespace same
