#include "led/metrics.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

namespace led {

HqResult hq_and_modes(const Tensor& samples, const GmmSpec& spec) {
  if (samples.ndim() != 2 || samples.cols() != 2 || samples.rows() == 0) {
    fail_validation("hq_and_modes: samples must be a non-empty (n,2) batch");
  }
  spec.validate();
  const double hq_radius = 3.0 * spec.sigma;
  std::vector<std::size_t> hq_per_mode(spec.mode_count(), 0);
  std::size_t hq_count = 0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nearest = 0;
    for (std::size_t k = 0; k < spec.mode_count(); ++k) {
      const double dx = samples.at(i, 0) - spec.means[k][0];
      const double dy = samples.at(i, 1) - spec.means[k][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        nearest = k;
      }
    }
    if (std::sqrt(best) <= hq_radius) {
      ++hq_count;
      ++hq_per_mode[nearest];
    }
  }
  HqResult out;
  out.hq_percent = 100.0 * static_cast<double>(hq_count) / samples.rows();
  const double strict_threshold = 0.01 * static_cast<double>(samples.rows());
  for (std::size_t k = 0; k < spec.mode_count(); ++k) {
    if (hq_per_mode[k] >= 1) ++out.modes_captured;
    if (static_cast<double>(hq_per_mode[k]) >= strict_threshold) ++out.modes_captured_strict;
  }
  return out;
}

BitsPerDim bits_per_dim(const CriticNet& critic, const AlphaEstimate& alpha,
                        const Tensor& dataset) {
  if (!(alpha.mean > 0.0)) fail_validation("bits_per_dim: alpha must be positive");
  if (dataset.ndim() != 2 || dataset.rows() == 0) {
    fail_validation("bits_per_dim: dataset must be non-empty (n,d)");
  }
  const double d = static_cast<double>(dataset.cols());
  Tensor log_n = critic_log_density_batch(critic, dataset);
  double acc = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) acc += -(log_n[i] - alpha.log_mean);
  const double nats = acc / (static_cast<double>(dataset.rows()) * d);
  return {nats, nats / std::numbers::ln2};
}

BitsPerDim generator_bits_per_dim(GeneratorNet& gen, std::size_t n, Rng& rng) {
  if (n == 0) fail_validation("generator_bits_per_dim: n must be >= 1");
  ForwardSamples fwd = generator_sample_raw(gen, n, rng, NetMode::kEval);
  const double d = static_cast<double>(gen.output_dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += -fwd.log_density[i];
  const double nats = acc / (static_cast<double>(n) * d);
  return {nats, nats / std::numbers::ln2};
}

std::vector<AlphaStudyRow> alpha_convergence_study(const CriticFn& critic_fn,
                                                   GeneratorNet& gen,
                                                   const SamplingPolicy& policy,
                                                   const std::vector<std::size_t>& sample_counts,
                                                   std::size_t repeats, Rng& rng,
                                                   const AlphaOptions& opts) {
  if (repeats < 2) fail_validation("alpha_convergence_study: repeats must be >= 2");
  std::vector<AlphaStudyRow> table;
  for (std::size_t n : sample_counts) {
    std::vector<double> estimates(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
      Rng run = rng.fork("alpha-study/" + std::to_string(n), r);
      estimates[r] = estimate_alpha_with(critic_fn, gen, policy, n, run, opts).mean;
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= static_cast<double>(repeats);
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    table.push_back({n, mean, std::sqrt(ss / static_cast<double>(repeats - 1))});
  }
  return table;
}

DensityGrid density_grid(const DensityFn& fn, const GridBounds& bounds,
                         std::size_t resolution) {
  if (resolution < 2) fail_validation("density_grid: resolution must be >= 2");
  if (!(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0)) {
    fail_validation("density_grid: bounds must be non-degenerate");
  }
  DensityGrid grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  grid.log_density = Tensor({resolution, resolution});
  const double hx = (bounds.x1 - bounds.x0) / static_cast<double>(resolution - 1);
  const double hy = (bounds.y1 - bounds.y0) / static_cast<double>(resolution - 1);
  Tensor& ld = grid.log_density;
  parallel_for(resolution, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double x = bounds.x0 + hx * static_cast<double>(i);
      for (std::size_t j = 0; j < resolution; ++j) {
        const double y = bounds.y0 + hy * static_cast<double>(j);
        ld.at(i, j) = fn(x, y);
      }
    }
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double wx = (i == 0 || i == resolution - 1) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < resolution; ++j) {
      const double wy = (j == 0 || j == resolution - 1) ? 0.5 : 1.0;
      acc += wx * wy * std::exp(ld.at(i, j));
    }
  }
  grid.integral = acc * hx * hy;
  return grid;
}

DensityGrid density_grid(const BatchDensityFn& fn, const GridBounds& bounds,
                         std::size_t resolution) {
  if (resolution < 2) fail_validation("density_grid: resolution must be >= 2");
  if (!(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0)) {
    fail_validation("density_grid: bounds must be non-degenerate");
  }
  DensityGrid grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  grid.log_density = Tensor({resolution, resolution});
  const double hx = (bounds.x1 - bounds.x0) / static_cast<double>(resolution - 1);
  const double hy = (bounds.y1 - bounds.y0) / static_cast<double>(resolution - 1);
  Tensor& ld = grid.log_density;
  parallel_for(resolution, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double x = bounds.x0 + hx * static_cast<double>(i);
      Tensor row({resolution, 2});
      for (std::size_t j = 0; j < resolution; ++j) {
        row.at(j, 0) = x;
        row.at(j, 1) = bounds.y0 + hy * static_cast<double>(j);
      }
      Tensor values = fn(row);
      for (std::size_t j = 0; j < resolution; ++j) ld.at(i, j) = values[j];
    }
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double wx = (i == 0 || i == resolution - 1) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < resolution; ++j) {
      const double wy = (j == 0 || j == resolution - 1) ? 0.5 : 1.0;
      acc += wx * wy * std::exp(ld.at(i, j));
    }
  }
  grid.integral = acc * hx * hy;
  return grid;
}

BatchDensityFn critic_batch_density_fn(const CriticNet& critic, double log_alpha) {
  return [&critic, log_alpha](const Tensor& points) {
    Tensor out = critic_log_density_batch(critic, points);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= log_alpha;
    return out;
  };
}

BatchDensityFn gmm_batch_density_fn(const GmmSpec& spec) {
  return [spec](const Tensor& points) {
    Tensor out({points.rows()});
    for (std::size_t i = 0; i < points.rows(); ++i) {
      out[i] = gmm_log_density(spec, points.at(i, 0), points.at(i, 1));
    }
    return out;
  };
}

double integrate_density_two_scale(const DensityFn& fn, const GridBounds& outer,
                                   std::size_t outer_res, const GridBounds& inner,
                                   std::size_t inner_res) {
  if (!(inner.x0 >= outer.x0 && inner.x1 <= outer.x1 && inner.y0 >= outer.y0 &&
        inner.y1 <= outer.y1)) {
    fail_validation("integrate_density_two_scale: inner box must lie inside outer box");
  }
  // Exact panel decomposition: fine grid on the inner box, coarse grids on
  // the four disjoint strips around it.
  double total = density_grid(fn, inner, inner_res).integral;
  auto strip = [&fn, outer_res](double x0, double x1, double y0, double y1) {
    if (!(x1 - x0 > 1e-12 && y1 - y0 > 1e-12)) return 0.0;
    return density_grid(fn, GridBounds{x0, x1, y0, y1}, outer_res).integral;
  };
  total += strip(outer.x0, inner.x0, outer.y0, outer.y1);   // left
  total += strip(inner.x1, outer.x1, outer.y0, outer.y1);   // right
  total += strip(inner.x0, inner.x1, outer.y0, inner.y0);   // below
  total += strip(inner.x0, inner.x1, inner.y1, outer.y1);   // above
  return total;
}

GridBounds default_bounds(const GmmSpec& spec, double pad_sigmas) {
  spec.validate();
  GridBounds b;
  b.x0 = b.y0 = std::numeric_limits<double>::infinity();
  b.x1 = b.y1 = -std::numeric_limits<double>::infinity();
  for (const auto& m : spec.means) {
    b.x0 = std::min(b.x0, m[0]);
    b.x1 = std::max(b.x1, m[0]);
    b.y0 = std::min(b.y0, m[1]);
    b.y1 = std::max(b.y1, m[1]);
  }
  const double pad = pad_sigmas * spec.sigma;
  b.x0 -= pad;
  b.x1 += pad;
  b.y0 -= pad;
  b.y1 += pad;
  return b;
}

double grid_kl(const DensityGrid& p, const DensityGrid& q) {
  if (p.resolution != q.resolution) fail_validation("grid_kl: resolution mismatch");
  const std::size_t n = p.log_density.size();
  // Normalize both to discrete distributions over the shared nodes, then sum
  // p * (log p - log q). Identical grids give exactly zero.
  double max_p = -std::numeric_limits<double>::infinity();
  double max_q = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    max_p = std::max(max_p, p.log_density[i]);
    max_q = std::max(max_q, q.log_density[i]);
  }
  double zp = 0.0, zq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    zp += std::exp(p.log_density[i] - max_p);
    zq += std::exp(q.log_density[i] - max_q);
  }
  const double log_zp = max_p + std::log(zp);
  const double log_zq = max_q + std::log(zq);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = std::exp(p.log_density[i] - log_zp);
    if (pi <= 0.0) continue;
    kl += pi * ((p.log_density[i] - log_zp) - (q.log_density[i] - log_zq));
  }
  return kl;
}

void export_density_grid_csv(const DensityGrid& grid, const std::string& csv_path,
                             const std::string& sidecar_json_path) {
  std::ofstream os(csv_path, std::ios::trunc);
  if (!os) throw IoError("export_density_grid_csv: cannot open " + csv_path);
  os << "x,y,log_density\n";
  os.precision(17);
  const double hx = (grid.bounds.x1 - grid.bounds.x0) / static_cast<double>(grid.resolution - 1);
  const double hy = (grid.bounds.y1 - grid.bounds.y0) / static_cast<double>(grid.resolution - 1);
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      os << grid.bounds.x0 + hx * static_cast<double>(i) << ','
         << grid.bounds.y0 + hy * static_cast<double>(j) << ',' << grid.log_density.at(i, j)
         << '\n';
    }
  }
  if (!os) throw IoError("export_density_grid_csv: write failed");
  nlohmann::json j;
  j["bounds"] = {{"x0", grid.bounds.x0}, {"x1", grid.bounds.x1},
                 {"y0", grid.bounds.y0}, {"y1", grid.bounds.y1}};
  j["resolution"] = grid.resolution;
  j["integral"] = grid.integral;
  std::ofstream sidecar(sidecar_json_path, std::ios::trunc);
  if (!sidecar) throw IoError("export_density_grid_csv: cannot open " + sidecar_json_path);
  sidecar << j.dump(2) << '\n';
}

DensityFn gmm_density_fn(const GmmSpec& spec) {
  return [spec](double x, double y) { return gmm_log_density(spec, x, y); };
}

DensityFn critic_density_fn(const CriticNet& critic, double log_alpha) {
  return [&critic, log_alpha](double x, double y) {
    const double point[2] = {x, y};
    return critic_log_density_point(critic, point) - log_alpha;
  };
}

DensityFn generator_mixture_density_fn(const GeneratorEvaluator& evaluator,
                                       const SamplingPolicy& policy, std::uint64_t seed) {
  return [&evaluator, policy, seed](double x, double y) {
    const double point[2] = {x, y};
    const double log_normal = standard_gaussian_log_density(point);
    double log_gen;
    if (policy.replace_prob >= 1.0) {
      log_gen = 0.0;
    } else {
      // Derive the marginalization stream from the coordinates so the
      // function is pure and grid evaluation is thread-order independent.
      std::uint64_t bx, by;
      std::memcpy(&bx, &x, 8);
      std::memcpy(&by, &y, 8);
      Rng point_rng(seed ^ (bx * 0x9e3779b97f4a7c15ull) ^
                    ((by << 21) | (by >> 43)) ^ 0x5851f42d4c957f2dull);
      log_gen = evaluator.log_density_at(point, point_rng, policy.marginal_samples);
    }
    return mixture_log_density_value(log_gen, log_normal, policy.replace_prob);
  };
}

EvalReport evaluate_model(const CriticNet& critic, GeneratorNet& gen,
                          const SamplingPolicy& policy, const GmmSpec& spec,
                          const EvalOptions& opts, Rng& rng) {
  EvalReport report;

  // Sample-quality protocol: raw generator output (replacement is a training
  // device, not part of the generator under evaluation).
  SamplingPolicy eval_policy = policy;
  eval_policy.replace_prob = 0.0;
  Rng sample_rng = rng.fork("eval/samples");
  MixtureSamples points =
      draw_mixture_samples(gen, eval_policy, opts.sample_points, sample_rng, NetMode::kEval);
  report.hq = hq_and_modes(points.values, spec);

  Rng alpha_rng = rng.fork("eval/alpha");
  report.alpha = estimate_alpha(critic, gen, policy, opts.alpha_samples, alpha_rng);

  Rng test_rng = rng.fork("eval/test-set");
  Tensor test_set = sample_gmm(spec, opts.bpd_points, test_rng);
  report.test_bpd = bits_per_dim(critic, report.alpha, test_set);

  Rng gen_bpd_rng = rng.fork("eval/gen-bpd");
  report.gen_bpd = generator_bits_per_dim(gen, opts.bpd_points, gen_bpd_rng);

  const GridBounds bounds = default_bounds(spec);
  const DensityGrid data_grid =
      density_grid(gmm_batch_density_fn(spec), bounds, opts.kl_resolution);
  const DensityGrid model_grid = density_grid(
      critic_batch_density_fn(critic, report.alpha.log_mean), bounds, opts.kl_resolution);
  report.kl_data_model = grid_kl(data_grid, model_grid);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["modes_captured"] = hq.modes_captured;
  j["modes_captured_strict"] = hq.modes_captured_strict;
  j["hq_percent"] = hq.hq_percent;
  j["nats_per_dim_test"] = test_bpd.nats_per_dim;
  j["bits_per_dim_test"] = test_bpd.bits_per_dim;
  j["nats_per_dim_generator"] = gen_bpd.nats_per_dim;
  j["bits_per_dim_generator"] = gen_bpd.bits_per_dim;
  j["alpha"] = {{"mean", alpha.mean},
                {"stddev", alpha.stddev},
                {"n_samples", alpha.n_samples},
                {"log_mean", alpha.log_mean}};
  j["grid_kl"] = kl_data_model;
  return j.dump(2);
}

}  // namespace led
