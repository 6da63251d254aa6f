#include "heatpinn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "heatpinn/errors.hpp"

namespace heatpinn {

void SamplerConfig::validate() const {
  if (batch_per_term < 1) throw ContractError("sampler: batch_per_term must be >= 1");
  if (!(densify_fraction >= 0 && densify_fraction < 1)) {
    throw ContractError("sampler: densify_fraction must be in [0, 1)");
  }
  if (!(kink_window > 0)) throw ContractError("sampler: kink_window must be > 0");
  if (!(h_min > 0) || !(h_max >= h_min)) throw ContractError("sampler: need 0 < h_min <= h_max");
}

namespace {

class PointSource {
 public:
  PointSource(const SamplerConfig& c, const SamplingDomain& d, std::int64_t epoch)
      : config_(c), domain_(d) {
    std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                      static_cast<std::uint32_t>(epoch),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(epoch) >> 32)};
    rng_.seed(seq);
  }

  double unit() { return uniform_(rng_); }

  // Uniform on [0, 1], or near a kink for the densified share of the list.
  double time(bool near_kink) {
    if (!near_kink || domain_.kink_times.empty()) return unit();
    const auto k = static_cast<std::size_t>(unit() * domain_.kink_times.size());
    const double centre = domain_.kink_times[std::min(k, domain_.kink_times.size() - 1)];
    const double lo = std::max(0.0, centre - config_.kink_window);
    const double hi = std::min(1.0, centre + config_.kink_window);
    return lo + unit() * (hi - lo);
  }

  void fill_h(InputPoint& p) {
    if (!domain_.h_as_inputs) {
      p.h1 = domain_.fixed_h1;
      p.h2 = domain_.fixed_h2;
      return;
    }
    // Log-uniform: h enters the boundary residual as 1/h.
    const double lo = std::log(config_.h_min / domain_.h_ref);
    const double hi = std::log(config_.h_max / domain_.h_ref);
    p.h1 = std::exp(lo + unit() * (hi - lo));
    p.h2 = std::exp(lo + unit() * (hi - lo));
  }

  std::vector<InputPoint> list(int count, bool densify, auto&& place) {
    std::vector<InputPoint> pts(static_cast<std::size_t>(count));
    const int dense =
        densify ? static_cast<int>(std::lround(config_.densify_fraction * count)) : 0;
    for (int i = 0; i < count; ++i) {
      auto& p = pts[static_cast<std::size_t>(i)];
      p.x = unit();
      p.y = domain_.dimensionality == 2 ? unit() : 0.0;
      p.t = time(i < dense);
      fill_h(p);
      place(p);
    }
    return pts;
  }

 private:
  const SamplerConfig& config_;
  const SamplingDomain& domain_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace

CollocationBatch sample_batch(const SamplerConfig& config, const SamplingDomain& domain,
                              std::int64_t epoch) {
  config.validate();
  PointSource src(config, domain, epoch);
  const int n = config.batch_per_term;
  CollocationBatch batch;
  batch.interior = src.list(n, true, [](InputPoint&) {});
  batch.initial = src.list(n, false, [](InputPoint& p) { p.t = 0.0; });
  for (Edge e : domain.boundary_edges) {
    batch.boundaries.push_back(src.list(n, true, [e](InputPoint& p) {
      switch (e) {
        case Edge::x_min: p.x = 0.0; break;
        case Edge::x_max: p.x = 1.0; break;
        case Edge::y_min: p.y = 0.0; break;
        case Edge::y_max: p.y = 1.0; break;
      }
    }));
  }
  return batch;
}

}  // namespace heatpinn
