#include "led/data.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace led {

void GmmSpec::validate() const {
  if (means.empty()) fail_validation("GmmSpec: needs at least one mode");
  if (!(sigma > 0.0)) fail_validation("GmmSpec: sigma must be positive");
  if (weights.size() != means.size()) fail_validation("GmmSpec: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail_validation("GmmSpec: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) fail_validation("GmmSpec: weights must sum to 1");
}

GmmSpec ring_spec(std::size_t n_modes, double radius, double sigma) {
  if (n_modes < 1) fail_validation("ring_spec: n_modes must be >= 1");
  GmmSpec spec;
  spec.sigma = sigma;
  const double w = 1.0 / static_cast<double>(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / n_modes;
    spec.means.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    spec.weights.push_back(w);
  }
  spec.validate();
  return spec;
}

GmmSpec grid_spec(std::size_t side, double spacing, double sigma) {
  if (side < 1) fail_validation("grid_spec: side must be >= 1");
  GmmSpec spec;
  spec.sigma = sigma;
  const double w = 1.0 / static_cast<double>(side * side);
  const double offset = 0.5 * spacing * static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      spec.means.push_back({spacing * static_cast<double>(i) - offset,
                            spacing * static_cast<double>(j) - offset});
      spec.weights.push_back(w);
    }
  }
  spec.validate();
  return spec;
}

Tensor sample_gmm(const GmmSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    // Ancestral sampling: component by cumulative weight, then the Gaussian.
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = spec.means.size() - 1;
    for (std::size_t k = 0; k < spec.weights.size(); ++k) {
      acc += spec.weights[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    out.at(i, 0) = rng.gaussian(spec.means[pick][0], spec.sigma);
    out.at(i, 1) = rng.gaussian(spec.means[pick][1], spec.sigma);
  }
  return out;
}

double gmm_log_density(const GmmSpec& spec, double x, double y) {
  const double inv2s2 = 0.5 / (spec.sigma * spec.sigma);
  const double log_norm = -std::log(2.0 * std::numbers::pi * spec.sigma * spec.sigma);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(spec.means.size());
  for (std::size_t k = 0; k < spec.means.size(); ++k) {
    const double dx = x - spec.means[k][0];
    const double dy = y - spec.means[k][1];
    terms[k] = std::log(spec.weights[k]) + log_norm - (dx * dx + dy * dy) * inv2s2;
    best = std::max(best, terms[k]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

void export_dataset_csv(const Tensor& points, const std::string& path) {
  if (points.ndim() != 2 || points.cols() != 2) {
    fail_validation("export_dataset_csv: points must be (n,2)");
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("export_dataset_csv: cannot open " + path);
  os << "x,y\n";
  os.precision(17);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    os << points.at(i, 0) << ',' << points.at(i, 1) << '\n';
  }
  if (!os) throw IoError("export_dataset_csv: write failed for " + path);
}

Tensor import_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("import_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,y", 0) != 0) {
    throw IoError("import_dataset_csv: missing 'x,y' header in " + path);
  }
  std::vector<double> data;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string sx, sy;
    if (!std::getline(row, sx, ',') || !std::getline(row, sy)) {
      throw IoError("import_dataset_csv: malformed row '" + line + "'");
    }
    data.push_back(std::stod(sx));
    data.push_back(std::stod(sy));
  }
  const std::size_t n = data.size() / 2;
  return Tensor({n, 2}, std::move(data));
}

std::string gmm_spec_json(const GmmSpec& spec) {
  nlohmann::json j;
  j["sigma"] = spec.sigma;
  j["means"] = nlohmann::json::array();
  for (const auto& m : spec.means) j["means"].push_back({m[0], m[1]});
  j["weights"] = spec.weights;
  return j.dump(2);
}

GmmSpec gmm_spec_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  GmmSpec spec;
  spec.sigma = j.at("sigma").get<double>();
  for (const auto& m : j.at("means")) {
    spec.means.push_back({m.at(0).get<double>(), m.at(1).get<double>()});
  }
  spec.weights = j.at("weights").get<std::vector<double>>();
  spec.validate();
  return spec;
}

}  // namespace led
