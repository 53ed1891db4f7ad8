#include "eigenrank/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "eigenrank/errors.hpp"

namespace eigenrank {

namespace {

std::string case_name(std::size_t index, std::size_t count) {
  int digits = 4;
  for (std::size_t c = count; c >= 10000; c /= 10) ++digits;
  std::string number = std::to_string(index);
  if (number.size() < static_cast<std::size_t>(digits))
    number.insert(0, static_cast<std::size_t>(digits) - number.size(), '0');
  return "case-" + number;
}

void check_side(std::size_t width, std::size_t height) {
  if (width < kMinSyntheticSide || height < kMinSyntheticSide) {
    throw Error(ErrorCode::invalid_argument,
                "synthetic images must be at least 16x16, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
}

}  // namespace

SyntheticCase make_case(CaseId id, double difficulty, std::size_t width,
                        std::size_t height, std::uint64_t shape_key) {
  check_side(width, height);
  if (!(difficulty >= 0.0 && difficulty <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "difficulty must lie in [0,1]");
  }
  Stream rng(shape_key);
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  const double cx = w * rng.uniform(0.35, 0.65);
  const double cy = h * rng.uniform(0.35, 0.65);
  const double ax = w * rng.uniform(0.18, 0.30);
  const double ay = h * rng.uniform(0.18, 0.30);

  std::vector<std::uint8_t> px(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5 - cx) / ax;
      const double v = (static_cast<double>(y) + 0.5 - cy) / ay;
      px[y * width + x] = (u * u + v * v <= 1.0) ? 1 : 0;
    }
  }

  GrayImage image{width, height, std::vector<double>(width * height)};
  const double amplitude = 0.5 * difficulty;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          if (xx < 0 || yy < 0 || xx >= static_cast<std::ptrdiff_t>(width) ||
              yy >= static_cast<std::ptrdiff_t>(height))
            continue;
          sum += px[static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx)];
          ++n;
        }
      }
      const double noisy = sum / n + amplitude * rng.uniform(-1.0, 1.0);
      image.values[y * width + x] = std::clamp(noisy, 0.0, 1.0);
    }
  }
  return SyntheticCase{std::move(id), difficulty, std::move(image),
                       BinaryMask(width, height, std::move(px))};
}

std::vector<SyntheticCase> generate_dataset(std::span<const double> difficulties,
                                            std::size_t width, std::size_t height,
                                            std::uint64_t seed) {
  if (difficulties.empty()) {
    throw Error(ErrorCode::invalid_argument, "dataset must contain at least one case");
  }
  check_side(width, height);
  std::vector<SyntheticCase> out;
  out.reserve(difficulties.size());
  for (std::size_t i = 0; i < difficulties.size(); ++i) {
    out.push_back(make_case(CaseId{case_name(i, difficulties.size())}, difficulties[i],
                            width, height, derive_seed(seed, "case-shape", i)));
  }
  return out;
}

std::vector<SyntheticCase> generate_dataset(std::size_t n, std::size_t width,
                                            std::size_t height, std::uint64_t seed) {
  if (n == 0) {
    throw Error(ErrorCode::invalid_argument, "dataset must contain at least one case");
  }
  Stream rng(derive_seed(seed, "difficulty"));
  std::vector<double> difficulties(n);
  for (double& d : difficulties) d = rng.uniform();
  return generate_dataset(difficulties, width, height, seed);
}

Pool make_pool(std::span<const SyntheticCase> cases, std::uint64_t seed) {
  std::vector<CaseRecord> records;
  records.reserve(cases.size());
  for (const auto& c : cases) {
    records.push_back(CaseRecord{c.id, std::nullopt, std::nullopt, c.difficulty});
  }
  return Pool(std::move(records), seed);
}

SyntheticModel synthetic_train(std::span<const double> difficulties, std::uint64_t seed,
                               double jitter) {
  if (difficulties.empty()) {
    throw Error(ErrorCode::invalid_argument, "cannot train on an empty subset");
  }
  double sum = 0.0;
  for (double d : difficulties) sum += d;
  double theta = sum / static_cast<double>(difficulties.size());
  if (jitter != 0.0) {
    Stream rng(derive_seed(seed, "jitter"));
    theta += jitter * rng.uniform(-1.0, 1.0);
  }
  return SyntheticModel{std::clamp(theta, 0.0, 1.0), seed};
}

MaskGeometry mask_geometry(const BinaryMask& mask) {
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<std::pair<double, double>> fg, bg;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      (mask.at(x, y) ? fg : bg).emplace_back(static_cast<double>(x), static_cast<double>(y));

  constexpr double inf = std::numeric_limits<double>::infinity();
  MaskGeometry g{std::vector<double>(w * h, inf), std::vector<double>(w * h, inf)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x);
      const double fy = static_cast<double>(y);
      const std::size_t i = y * w + x;
      if (mask.at(x, y)) {
        g.to_foreground[i] = 0.0;
        const double edge = std::min({fx + 1.0, static_cast<double>(w) - fx,
                                      fy + 1.0, static_cast<double>(h) - fy});
        double best = edge * edge;
        for (const auto& [bx, by] : bg)
          best = std::min(best, (bx - fx) * (bx - fx) + (by - fy) * (by - fy));
        g.to_background[i] = best;
      } else {
        g.to_background[i] = 0.0;
        double best = inf;
        for (const auto& [ax, ay] : fg)
          best = std::min(best, (ax - fx) * (ax - fx) + (ay - fy) * (ay - fy));
        g.to_foreground[i] = best;
      }
    }
  }
  return g;
}

BinaryMask synthetic_predict(const SyntheticModel& model, const SyntheticCase& c,
                             const PerturbationParams& params) {
  return synthetic_predict(model, c, mask_geometry(c.truth), params);
}

BinaryMask synthetic_predict(const SyntheticModel& model, const SyntheticCase& c,
                             const MaskGeometry& geometry,
                             const PerturbationParams& params) {
  const BinaryMask& truth = c.truth;
  const double gap = std::abs(c.difficulty - model.theta);
  Stream rng(hash_bytes(model.jitter_seed, c.id.value));

  const double side = static_cast<double>(std::min(truth.width(), truth.height()));
  const double radius = gap * params.radius_scale * side;
  const double r2 = radius * radius;
  const bool dilate = rng.bernoulli(0.5);

  auto truth_px = truth.pixels();
  std::vector<std::uint8_t> px(truth_px.begin(), truth_px.end());
  if (radius >= 1.0) {
    for (std::size_t i = 0; i < px.size(); ++i) {
      if (dilate && !px[i] && geometry.to_foreground[i] <= r2) px[i] = 1;
      if (!dilate && px[i] && geometry.to_background[i] <= r2) px[i] = 0;
    }
  }
  if (params.flips) {
    const double rate = params.flip_base + params.flip_slope * gap;
    for (auto& p : px)
      if (rng.bernoulli(rate)) p ^= 1;
  }
  return BinaryMask(truth.width(), truth.height(), std::move(px));
}

double true_dice_eval(const BinaryMask& prediction, const SyntheticCase& c) {
  return dice(prediction, c.truth);
}

SyntheticBackend::SyntheticBackend(std::vector<SyntheticCase> cases, SyntheticParams params)
    : cases_(std::move(cases)), params_(params) {
  geometry_.reserve(cases_.size());
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    if (!index_.emplace(cases_[i].id, i).second) {
      throw Error(ErrorCode::invalid_argument,
                  "duplicate case id '" + cases_[i].id.value + "'");
    }
    geometry_.push_back(mask_geometry(cases_[i].truth));
  }
}

const SyntheticCase& SyntheticBackend::find_case(const CaseId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::backend_error, "unknown case '" + id.value + "'");
  }
  return cases_[it->second];
}

ModelHandle SyntheticBackend::add_model(const SyntheticModel& model) {
  ModelHandle handle{"synthetic-" + std::to_string(models_.size())};
  models_.emplace(handle.key, model);
  return handle;
}

const SyntheticModel& SyntheticBackend::model(const ModelHandle& handle) const {
  auto it = models_.find(handle.key);
  if (it == models_.end()) {
    throw Error(ErrorCode::backend_error, "unknown model '" + handle.key + "'");
  }
  return it->second;
}

ModelHandle SyntheticBackend::train(std::span<const CaseId> subset, std::uint64_t seed) {
  std::vector<double> difficulties;
  difficulties.reserve(subset.size());
  for (const auto& id : subset) difficulties.push_back(find_case(id).difficulty);
  return add_model(synthetic_train(difficulties, seed, params_.jitter));
}

BinaryMask SyntheticBackend::predict(const ModelHandle& handle, const CaseId& case_id) const {
  auto it = index_.find(case_id);
  if (it == index_.end()) {
    throw Error(ErrorCode::backend_error, "unknown case '" + case_id.value + "'");
  }
  return synthetic_predict(model(handle), cases_[it->second], geometry_[it->second],
                           params_.perturbation);
}

std::optional<BinaryMask> SyntheticBackend::ground_truth(const CaseId& case_id) const {
  auto it = index_.find(case_id);
  if (it == index_.end()) return std::nullopt;
  return cases_[it->second].truth;
}

nlohmann::json SyntheticBackend::export_model(const ModelHandle& handle) const {
  const SyntheticModel& m = model(handle);
  return {{"backend", "synthetic"}, {"theta", m.theta}, {"jitter_seed", m.jitter_seed}};
}

ModelHandle SyntheticBackend::import_model(const nlohmann::json& description) {
  if (!description.is_object() || !description.contains("theta") ||
      !description.contains("jitter_seed") || !description["theta"].is_number() ||
      !description["jitter_seed"].is_number_unsigned()) {
    throw Error(ErrorCode::invalid_argument,
                "synthetic model needs numeric 'theta' and unsigned 'jitter_seed'");
  }
  const double theta = description["theta"].get<double>();
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "synthetic model theta must lie in [0,1]");
  }
  return add_model(SyntheticModel{theta, description["jitter_seed"].get<std::uint64_t>()});
}

std::string_view to_string(FeasibleSampler sampler) {
  return sampler == FeasibleSampler::kernel_mixture ? "mixture" : "rejection";
}

FeasibleSampler parse_feasible_sampler(std::string_view name) {
  if (name == "mixture") return FeasibleSampler::kernel_mixture;
  if (name == "rejection") return FeasibleSampler::uniform_rejection;
  throw Error(ErrorCode::invalid_argument, "unknown sampler '" + std::string(name) + "'");
}

namespace {

SymmetricMatrix draw_candidate(std::size_t t, double epsilon, Stream& rng,
                               FeasibleSampler sampler) {
  SymmetricMatrix m(t);
  for (std::size_t p = 0; p < t; ++p) m.set(p, p, 1.0);
  if (sampler == FeasibleSampler::kernel_mixture) {
    std::vector<double> x(t);
    for (double& v : x) v = rng.uniform();
    for (std::size_t p = 0; p < t; ++p)
      for (std::size_t q = p + 1; q < t; ++q) m.set(p, q, 1.0 - epsilon * std::abs(x[p] - x[q]));
  } else {
    for (std::size_t p = 0; p < t; ++p)
      for (std::size_t q = p + 1; q < t; ++q) m.set(p, q, 1.0 - epsilon * rng.uniform());
  }
  return m;
}

}  // namespace

DiceMatrix sample_feasible_dice_matrix(std::size_t t, double epsilon, Stream& rng,
                                       FeasibleSampler sampler, int retry_cap) {
  if (t < 2) throw Error(ErrorCode::invalid_argument, "matrix order t must be >= 2");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "epsilon must lie in [0,1]");
  }
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    DiceMatrix candidate(draw_candidate(t, epsilon, rng, sampler));
    if (all_trios_feasible(candidate) && is_psd(candidate, 1e-8)) return candidate;
  }
  std::ostringstream msg;
  msg << "no feasible Dice matrix after " << retry_cap << " draws (t=" << t
      << ", epsilon=" << epsilon << ", sampler=" << to_string(sampler) << ")";
  throw Error(ErrorCode::infeasible, msg.str());
}

std::vector<SimulationRow> run_conjecture_simulation(const SimulationConfig& config) {
  if (config.t_values.empty() || config.trials == 0) {
    throw Error(ErrorCode::invalid_argument, "simulation needs t values and trials >= 1");
  }
  for (std::size_t t : config.t_values) {
    if (t < 2) throw Error(ErrorCode::invalid_argument, "every t must be >= 2");
  }
  std::vector<SimulationRow> rows;
  for (std::size_t t : config.t_values) {
    const std::uint64_t cell_key = derive_seed(
        derive_seed(config.seed, "simulate", t), "epsilon",
        std::bit_cast<std::uint64_t>(config.epsilon));
    std::vector<std::optional<double>> ratios(config.trials);
    std::vector<std::exception_ptr> errors(config.trials);
    auto run_trial = [&](std::size_t i) {
      try {
        Stream rng(derive_seed(cell_key, "trial", i));
        const DiceMatrix m = sample_feasible_dice_matrix(t, config.epsilon, rng, config.sampler);
        ratios[i] = dominance_ratio(eigenvalues(m));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    const std::size_t workers = std::min<std::size_t>(std::max(config.jobs, 1u), config.trials);
    if (workers <= 1) {
      for (std::size_t i = 0; i < config.trials; ++i) run_trial(i);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          for (std::size_t i = w; i < config.trials; i += workers) run_trial(i);
        });
      }
      for (auto& th : threads) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);

    SimulationRow row;
    row.t = t;
    row.epsilon = config.epsilon;
    row.trials = config.trials;
    std::vector<double> defined;
    for (const auto& r : ratios) {
      if (r) defined.push_back(*r);
      else ++row.undefined_count;
    }
    if (defined.empty()) {
      row.degenerate = true;
      row.mean_ratio = row.stdev_ratio = row.mean_abs_deviation =
          std::numeric_limits<double>::quiet_NaN();
    } else {
      const Summary s = summarize_scores(defined);
      row.mean_ratio = s.mean;
      row.stdev_ratio = s.stdev;
      double dev = 0.0;
      for (double r : defined) dev += std::abs(r - 1.0);
      row.mean_abs_deviation = dev / static_cast<double>(defined.size());
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace eigenrank
