#pragma once

#include <array>
#include <string>
#include <vector>

#include "led/rng.hpp"
#include "led/tensor.hpp"

namespace led {

// Ground-truth 2D mixture with isotropic shared sigma; the exact oracle every
// evaluation metric compares against.
struct GmmSpec {
  std::vector<std::array<double, 2>> means;
  double sigma = 0.01;
  std::vector<double> weights;

  void validate() const;
  std::size_t mode_count() const { return means.size(); }
};

// n equally weighted modes at angles 2*pi*i/n on a circle.
GmmSpec ring_spec(std::size_t n_modes = 8, double radius = 1.0, double sigma = 0.01);
// side x side equally weighted modes centered at the origin.
GmmSpec grid_spec(std::size_t side = 5, double spacing = 1.0, double sigma = 0.05);

Tensor sample_gmm(const GmmSpec& spec, std::size_t n, Rng& rng);  // (n,2)
double gmm_log_density(const GmmSpec& spec, double x, double y);

// CSV with header "x,y"; the spec is serialized alongside as JSON.
void export_dataset_csv(const Tensor& points, const std::string& path);
Tensor import_dataset_csv(const std::string& path);
std::string gmm_spec_json(const GmmSpec& spec);
GmmSpec gmm_spec_from_json(const std::string& json_text);

}  // namespace led
