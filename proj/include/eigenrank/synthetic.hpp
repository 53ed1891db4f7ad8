#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigenrank/dice_matrix.hpp"
#include "eigenrank/engine.hpp"
#include "eigenrank/mask.hpp"
#include "eigenrank/random.hpp"

namespace eigenrank {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  /// Row-major, values in [0,1].
  std::vector<double> values;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// A generated case. A single scalar `difficulty` drives both the image
/// noise and how badly the perturbation backend segments it.
struct SyntheticCase {
  CaseId id;
  double difficulty = 0.0;
  GrayImage image;
  BinaryMask truth{1, 1};

  friend bool operator==(const SyntheticCase&, const SyntheticCase&) = default;
};

inline constexpr std::size_t kMinSyntheticSide = 16;

/// One case: an axis-aligned ellipse whose center and axes come from
/// `shape_key`, rendered as a 3x3 box-blurred image plus uniform noise of
/// amplitude 0.5·difficulty.
SyntheticCase make_case(CaseId id, double difficulty, std::size_t width,
                        std::size_t height, std::uint64_t shape_key);

/// n cases with difficulty ~ U[0,1]. Ids are "case-0000", "case-0001", ...
std::vector<SyntheticCase> generate_dataset(std::size_t n, std::size_t width,
                                            std::size_t height, std::uint64_t seed);

/// Same shapes as generate_dataset but with caller-chosen difficulties.
std::vector<SyntheticCase> generate_dataset(std::span<const double> difficulties,
                                            std::size_t width, std::size_t height,
                                            std::uint64_t seed);

Pool make_pool(std::span<const SyntheticCase> cases, std::uint64_t seed = 0);

struct SyntheticModel {
  double theta = 0.0;
  std::uint64_t jitter_seed = 0;

  friend bool operator==(const SyntheticModel&, const SyntheticModel&) = default;
};

inline constexpr double kDefaultJitter = 0.02;

/// theta = mean difficulty + jitter·U[-1,1] from the seeded stream, clamped
/// to [0,1]. jitter = 0 gives the plain mean.
SyntheticModel synthetic_train(std::span<const double> difficulties, std::uint64_t seed,
                               double jitter = kDefaultJitter);

struct PerturbationParams {
  /// Morphological radius per unit of |difficulty - theta|, as a fraction of
  /// the shorter image side.
  double radius_scale = 0.25;
  double flip_base = 0.01;
  double flip_slope = 0.2;
  bool flips = true;
};

/// Per-pixel squared Euclidean distances used by erosion/dilation. Outside
/// the image counts as background.
struct MaskGeometry {
  std::vector<double> to_foreground;
  std::vector<double> to_background;
};

MaskGeometry mask_geometry(const BinaryMask& mask);

/// Truth eroded or dilated (a seeded coin) by a disk of radius proportional
/// to gap = |difficulty - theta|, then pixels flipped with probability
/// flip_base + flip_slope·gap. The stream is keyed by
/// hash_bytes(jitter_seed, case id), so the result is a pure function of
/// (model, case).
BinaryMask synthetic_predict(const SyntheticModel& model, const SyntheticCase& c,
                             const PerturbationParams& params = {});
BinaryMask synthetic_predict(const SyntheticModel& model, const SyntheticCase& c,
                             const MaskGeometry& geometry,
                             const PerturbationParams& params = {});

/// Dice of a prediction against the case's ground truth.
double true_dice_eval(const BinaryMask& prediction, const SyntheticCase& c);

struct SyntheticParams {
  double jitter = kDefaultJitter;
  PerturbationParams perturbation;
};

/// SegmenterBackend over an in-memory synthetic dataset.
class SyntheticBackend : public SegmenterBackend {
 public:
  explicit SyntheticBackend(std::vector<SyntheticCase> cases, SyntheticParams params = {});

  std::string name() const override { return "synthetic"; }
  ModelHandle train(std::span<const CaseId> subset, std::uint64_t seed) override;
  BinaryMask predict(const ModelHandle& model, const CaseId& case_id) const override;
  std::optional<BinaryMask> ground_truth(const CaseId& case_id) const override;
  nlohmann::json export_model(const ModelHandle& model) const override;
  ModelHandle import_model(const nlohmann::json& description) override;

  ModelHandle add_model(const SyntheticModel& model);
  const SyntheticModel& model(const ModelHandle& handle) const;
  const SyntheticCase& find_case(const CaseId& id) const;
  std::span<const SyntheticCase> cases() const noexcept { return cases_; }

 private:
  std::vector<SyntheticCase> cases_;
  std::vector<MaskGeometry> geometry_;
  std::map<CaseId, std::size_t> index_;
  std::map<std::string, SyntheticModel> models_;
  SyntheticParams params_;
};

enum class FeasibleSampler {
  /// (1-ε)J + εK with K_pq = 1 - |x_p - x_q|, x ~ U[0,1]: δ_pq = ε|x_p - x_q|.
  /// PSD by construction, so it scales to any t.
  kernel_mixture,
  /// δ_pq iid U[0,ε], whole matrix resampled until every trio and the full
  /// matrix pass. Practical only for t <= 6.
  uniform_rejection,
};

std::string_view to_string(FeasibleSampler sampler);
FeasibleSampler parse_feasible_sampler(std::string_view name);

inline constexpr int kFeasibleRetryCap = 10000;

/// Unit diagonal, off-diagonals 1-δ with δ in [0, epsilon], all trios
/// feasible and PSD within 1e-8. Throws infeasible after `retry_cap`
/// rejected draws.
DiceMatrix sample_feasible_dice_matrix(std::size_t t, double epsilon, Stream& rng,
                                       FeasibleSampler sampler = FeasibleSampler::kernel_mixture,
                                       int retry_cap = kFeasibleRetryCap);

struct SimulationConfig {
  std::vector<std::size_t> t_values;
  double epsilon = 0.1;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  FeasibleSampler sampler = FeasibleSampler::kernel_mixture;
  unsigned jobs = 1;
};

struct SimulationRow {
  std::size_t t = 0;
  double epsilon = 0.0;
  std::size_t trials = 0;
  /// Over defined ratios only; NaN when every trial was undefined.
  double mean_ratio = 0.0;
  double stdev_ratio = 0.0;
  double mean_abs_deviation = 0.0;
  std::size_t undefined_count = 0;
  bool degenerate = false;
};

/// Per t: `trials` feasible matrices, dominance ratio of each spectrum,
/// aggregated. Trial i of cell (t, ε) uses its own derived stream, so the
/// table does not depend on `jobs`.
std::vector<SimulationRow> run_conjecture_simulation(const SimulationConfig& config);

}  // namespace eigenrank
