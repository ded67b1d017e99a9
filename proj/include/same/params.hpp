#pragma once

#include <functional>
#include <string>
#include <vector>

#include "same/tensor.hpp"

namespace same {

/// Which of the four disjoint parameter sets a tensor belongs to.
enum class ParamGroup { kEncoder, kNodeHead, kGraphHead, kLinkHead };

const char* to_string(ParamGroup group);

struct GradientMap;

/// Flat, named collection of parameter tensors. Parameter ids are indices.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<ParamGroup> groups;
  std::vector<Tensor> values;

  int add(std::string name, ParamGroup group, Tensor value);
  std::size_t size() const { return values.size(); }
  std::size_t num_scalars() const;
  int index_of(const std::string& name) const;  // -1 when absent
  double max_abs() const;

  /// values[i] += scale * delta[i] for every i with mask[i] set (all when empty).
  void add_scaled(const GradientMap& delta, double scale, const std::vector<bool>& mask = {});
};

/// Gradient (or any parameter-shaped vector) keyed by parameter id.
struct GradientMap {
  std::vector<Tensor> tensors;

  static GradientMap zeros_like(const ParamSet& params);
  std::size_t size() const { return tensors.size(); }
  Tensor& operator[](std::size_t i) { return tensors[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors[i]; }

  GradientMap& add_scaled(const GradientMap& other, double scale);
  GradientMap& scale(double s);
  /// Zeroes every entry whose mask bit is unset.
  GradientMap& restrict_to(const std::vector<bool>& mask);
  double dot(const GradientMap& other) const;
  double max_abs() const;
  double norm() const { return std::sqrt(dot(*this)); }
  bool all_finite() const;
};

/// Mask over parameter ids selecting the given groups.
std::vector<bool> group_mask(const ParamSet& params, std::initializer_list<ParamGroup> groups);

/// Value-and-gradient callback over a parameter set.
using ObjectiveFn = std::function<double(const ParamSet&, GradientMap&)>;

/// H v by central differences of the gradient:
/// (grad(theta + eps u) - grad(theta - eps u)) / (2 eps) * |v|_inf,
/// with u = v / |v|_inf and eps = eps_scale * (1 + |theta|_inf).
GradientMap hessian_vector_product(const ObjectiveFn& objective, const ParamSet& params,
                                   const GradientMap& v, double eps_scale = 1e-4);

}  // namespace same
