#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "eigenrank/engine.hpp"

namespace eigenrank {

struct ExternalBackendConfig {
  /// Program and leading arguments; "train ..." / "predict ..." are appended.
  std::vector<std::string> train_command;
  std::vector<std::string> predict_command;
  /// Subset manifests, model directories, predictions and logs live here.
  std::filesystem::path work_dir;
};

/// Drives an out-of-process segmenter:
///
///   <train_command> train --manifest <subset.json> --model-out <dir>
///   <predict_command> predict --model <dir> --image <path> --out <mask.emsk>
///
/// The subset manifest uses the pool manifest schema plus the training seed.
/// Predictions are cached per (model, case) since predict is required to be
/// deterministic.
class ExternalBackend : public SegmenterBackend {
 public:
  ExternalBackend(const Pool& pool, ExternalBackendConfig config);

  std::string name() const override { return "external"; }
  ModelHandle train(std::span<const CaseId> subset, std::uint64_t seed) override;
  BinaryMask predict(const ModelHandle& model, const CaseId& case_id) const override;
  std::optional<BinaryMask> ground_truth(const CaseId& case_id) const override;
  nlohmann::json export_model(const ModelHandle& model) const override;
  ModelHandle import_model(const nlohmann::json& description) override;

 private:
  std::filesystem::path log_path(std::string_view tag) const;

  Pool pool_;
  std::map<CaseId, std::size_t> case_index_;
  ExternalBackendConfig config_;
  std::size_t trained_ = 0;
  mutable std::atomic<std::size_t> calls_{0};
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::string, CaseId>, BinaryMask> cache_;
};

}  // namespace eigenrank
