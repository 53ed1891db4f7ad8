#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eigenrank/mask.hpp"

namespace eigenrank {

struct CaseId {
  std::string value;

  friend auto operator<=>(const CaseId&, const CaseId&) = default;
};

struct CaseRecord {
  CaseId id;
  std::optional<std::filesystem::path> image;
  std::optional<std::filesystem::path> truth;
  std::optional<double> difficulty;
};

/// Ordered collection of unique, nonempty case ids plus per-case metadata.
class Pool {
 public:
  explicit Pool(std::vector<CaseRecord> cases, std::uint64_t seed = 0);

  std::span<const CaseRecord> cases() const noexcept { return cases_; }
  std::vector<CaseId> ids() const;
  std::size_t size() const noexcept { return cases_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  bool contains(const CaseId& id) const;
  const CaseRecord& find(const CaseId& id) const;

 private:
  std::vector<CaseRecord> cases_;
  std::map<CaseId, std::size_t> index_;
  std::uint64_t seed_;
};

struct ModelHandle {
  std::string key;

  friend auto operator<=>(const ModelHandle&, const ModelHandle&) = default;
};

/// Anything that can be trained on a labeled subset and then segment a case.
/// `train` must be deterministic in (subset, seed); `predict` must be
/// deterministic in (model, case) and safe to call concurrently.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;

  virtual std::string name() const = 0;
  virtual ModelHandle train(std::span<const CaseId> subset, std::uint64_t seed) = 0;
  virtual BinaryMask predict(const ModelHandle& model, const CaseId& case_id) const = 0;
  virtual std::optional<BinaryMask> ground_truth(const CaseId& case_id) const = 0;

  /// Serializable description of a trained model, and its inverse.
  virtual nlohmann::json export_model(const ModelHandle& model) const = 0;
  virtual ModelHandle import_model(const nlohmann::json& description) = 0;
};

enum class ScoreMode { lambda_max, entropy };

std::string_view to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view name);

struct EngineOptions {
  OverlapMetric metric = OverlapMetric::dice;
  /// lambda_max: smaller is more disagreement. entropy: normalized Von
  /// Neumann entropy, larger is more disagreement.
  ScoreMode mode = ScoreMode::lambda_max;
  /// Upper bound on concurrent predict calls while scoring one iteration.
  unsigned jobs = 1;
};

/// S₁..S_t plus trained models. Between steps the newest subset has no model
/// yet, so models.size() == subsets.size() - 1; iterate() trains it.
struct SelectionState {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<CaseId>> subsets;
  std::vector<ModelHandle> models;
  /// Scores from the most recent step, keyed only by then-unselected cases.
  std::map<CaseId, double> ledger;
  /// Number of models that produced the current ledger.
  std::size_t iteration = 0;

  std::vector<CaseId> selected() const;
  bool is_selected(const CaseId& id) const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  /// "dice"/"jaccard" for the two-model initialization, else the score mode.
  std::string score_kind;
  std::map<CaseId, double> ledger;
  std::vector<CaseId> constructed;
};

struct SelectionReport {
  std::size_t k = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string backend;
  EngineOptions options;
  /// S₁..S_T.
  std::vector<std::vector<CaseId>> subsets;
  /// S_{T+1}: constructed by the final step but not part of the selection.
  std::vector<CaseId> trailing;
  std::vector<IterationRecord> records;
  std::vector<ModelHandle> models;

  std::vector<CaseId> selected() const;
};

/// Draws disjoint random S₁, S₂, trains both models, records their pairwise
/// overlap on every other case and constructs S₃ from the k lowest.
SelectionState initialize(const Pool& pool, std::size_t k, SegmenterBackend& backend,
                          std::uint64_t seed, const EngineOptions& options = {});

/// Trains the model for the newest subset, scores every unselected case with
/// the full ensemble and appends the k most-disagreed cases as a new subset.
SelectionState iterate(SelectionState state, const Pool& pool,
                       SegmenterBackend& backend, const EngineOptions& options = {});

/// initialize + iterate until S₁..S_T exist; T >= 2.
SelectionReport run_selection(const Pool& pool, std::size_t k, std::size_t iterations,
                              SegmenterBackend& backend, std::uint64_t seed,
                              const EngineOptions& options = {});

/// Score of one case's ensemble predictions under `options.mode`.
double score_predictions(std::span<const BinaryMask> predictions,
                         const EngineOptions& options = {});

/// λ_max of the ensemble's Dice matrix on one case.
double score_case(std::span<const ModelHandle> models, const CaseId& case_id,
                  const SegmenterBackend& backend, const EngineOptions& options = {});

/// Orders `candidates` by disagreement: ascending score in lambda_max mode,
/// descending in entropy mode, then by case id.
std::vector<std::pair<CaseId, double>> order_by_disagreement(
    const std::map<CaseId, double>& ledger, ScoreMode mode);

/// Every pool case scored by a frozen ensemble, most disagreement first.
std::vector<std::pair<CaseId, double>> rank_failures_fixed(
    std::span<const ModelHandle> models, const Pool& pool,
    const SegmenterBackend& backend, const EngineOptions& options = {});

/// Population statistics.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stdev = 0.0;
};

Summary summarize_scores(std::span<const double> scores);

struct Evaluation {
  std::vector<std::pair<CaseId, double>> per_case;
  Summary summary;
};

/// Overlap of the model's prediction with ground truth on each case. Throws
/// invalid_argument naming the first case without truth.
Evaluation evaluate_model(const ModelHandle& model, std::span<const CaseId> cases,
                          const SegmenterBackend& backend,
                          const EngineOptions& options = {});

enum class FailureMode { iterative, fixed };

std::string_view to_string(FailureMode mode);
FailureMode parse_failure_mode(std::string_view name);

struct FailureIteration {
  std::size_t iteration = 0;
  std::vector<CaseId> batch;
  std::map<CaseId, double> ledger;
  /// Probe-model truth overlap over every case eliminated so far and over
  /// the cases still in the pool. Empty when ground truth is unavailable.
  std::optional<Summary> eliminated;
  std::optional<Summary> remaining;
  std::size_t remaining_count = 0;
};

struct FailureReport {
  FailureMode mode = FailureMode::iterative;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  /// Iterative mode only: the random S₁ ∪ S₂ used to seed the ensemble.
  std::vector<CaseId> seed_cases;
  std::optional<Summary> whole_pool;
  std::vector<FailureIteration> iterations;
};

struct FailureRequest {
  std::size_t k = 3;
  std::size_t iterations = 7;
  std::uint64_t seed = 0;
  FailureMode mode = FailureMode::iterative;
  /// Model whose truth overlap is tracked; statistics need ground truth.
  std::optional<ModelHandle> probe;
  /// Frozen ensemble for fixed mode; ignored in iterative mode.
  std::vector<ModelHandle> ensemble;
};

/// Removes the most-disagreed cases from the pool in batches of k.
/// Iterative mode runs the selection loop over the pool (each eliminated
/// batch trains the next ensemble member); fixed mode ranks once with a
/// frozen ensemble.
FailureReport run_failure_elimination(const Pool& pool, const FailureRequest& request,
                                      SegmenterBackend& backend,
                                      const EngineOptions& options = {});

struct ArmStats {
  Summary eigenrank;
  Summary random;
};

struct ComparisonRow {
  std::size_t iteration = 0;
  std::size_t training_size = 0;
  /// Holdout excluding both methods' selections.
  ArmStats common;
  /// Each method on its own complement.
  ArmStats specific;
};

struct SeedComparison {
  std::uint64_t seed = 0;
  std::vector<ComparisonRow> rows;
};

/// Trains one probe per prefix ∪S₁..S_t of each arm and evaluates both on
/// the common and method-specific holdouts. Both arms' probes for a given t
/// share a training seed.
SeedComparison compare_selections(const Pool& pool,
                                  const std::vector<std::vector<CaseId>>& eigen_subsets,
                                  const std::vector<std::vector<CaseId>>& random_subsets,
                                  SegmenterBackend& backend, std::uint64_t seed,
                                  const EngineOptions& options = {});

/// Random arm: a seeded shuffle of the pool cut into groups of k.
std::vector<std::vector<CaseId>> random_subsets(const Pool& pool, std::size_t k,
                                                std::size_t count, std::uint64_t seed);

std::vector<SeedComparison> compare_to_random(const Pool& pool, std::size_t k,
                                              std::size_t iterations,
                                              SegmenterBackend& backend,
                                              std::span<const std::uint64_t> seeds,
                                              const EngineOptions& options = {});

}  // namespace eigenrank
