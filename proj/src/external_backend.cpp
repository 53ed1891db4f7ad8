#include "eigenrank/external_backend.hpp"

#include <cstdio>

#include "eigenrank/errors.hpp"
#include "eigenrank/io.hpp"
#include "eigenrank/random.hpp"
#include "eigenrank/subprocess.hpp"

namespace eigenrank {

namespace {

std::string tail(const std::string& text, std::size_t limit = 400) {
  std::string t = text.size() > limit ? text.substr(text.size() - limit) : text;
  for (char& c : t)
    if (c == '\n' || c == '\r') c = ' ';
  return t;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExternalBackend::ExternalBackend(const Pool& pool, ExternalBackendConfig config)
    : pool_(pool), config_(std::move(config)) {
  if (config_.train_command.empty() || config_.predict_command.empty()) {
    throw Error(ErrorCode::invalid_argument, "external backend needs train and predict commands");
  }
  for (std::size_t i = 0; i < pool_.size(); ++i) case_index_.emplace(pool_.cases()[i].id, i);
  for (const char* sub : {"models", "predictions", "logs"})
    fs::create_directories(config_.work_dir / sub);
}

fs::path ExternalBackend::log_path(std::string_view tag) const {
  return config_.work_dir / "logs" /
         (std::string(tag) + "-" + std::to_string(calls_.fetch_add(1)) + ".log");
}

ModelHandle ExternalBackend::train(std::span<const CaseId> subset, std::uint64_t seed) {
  const std::string name = "model-" + std::to_string(trained_++);
  const fs::path model_dir = fs::absolute(config_.work_dir / "models" / name);
  const fs::path manifest = fs::absolute(config_.work_dir / "models" / (name + ".manifest.json"));
  fs::create_directories(model_dir);

  std::vector<CaseRecord> records;
  for (const auto& id : subset) records.push_back(pool_.find(id));
  nlohmann::json doc = manifest_json(Pool(std::move(records), seed), manifest.parent_path());
  atomic_write(manifest, dump(doc));

  std::vector<std::string> argv = config_.train_command;
  argv.insert(argv.end(), {"train", "--manifest", manifest.string(), "--model-out",
                           model_dir.string()});
  const ProcessResult r = run_process(argv, log_path("train"));
  if (r.exit_code != 0) {
    throw Error(ErrorCode::nonzero_exit, "train command exited with code " +
                                             std::to_string(r.exit_code) + ": " + tail(r.output));
  }
  return ModelHandle{model_dir.string()};
}

BinaryMask ExternalBackend::predict(const ModelHandle& model, const CaseId& case_id) const {
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find({model.key, case_id});
    if (it != cache_.end()) return it->second;
  }
  auto idx = case_index_.find(case_id);
  if (idx == case_index_.end()) {
    throw Error(ErrorCode::backend_error, "unknown case '" + case_id.value + "'");
  }
  const CaseRecord& record = pool_.cases()[idx->second];
  if (!record.image) {
    throw Error(ErrorCode::backend_error, "case '" + case_id.value + "' has no image path");
  }
  const fs::path out_dir = config_.work_dir / "predictions" / hex(hash_bytes(0, model.key));
  fs::create_directories(out_dir);
  const fs::path out = fs::absolute(out_dir / ("case-" + std::to_string(idx->second) + ".emsk"));
  fs::remove(out);

  std::vector<std::string> argv = config_.predict_command;
  argv.insert(argv.end(), {"predict", "--model", model.key, "--image", record.image->string(),
                           "--out", out.string()});
  const ProcessResult r = run_process(argv, log_path("predict"));
  if (r.exit_code != 0) {
    throw Error(ErrorCode::nonzero_exit, "predict command exited with code " +
                                             std::to_string(r.exit_code) + ": " + tail(r.output));
  }
  BinaryMask mask(1, 1);
  try {
    mask = decode_mask(read_file(out));
  } catch (const Error& e) {
    throw Error(ErrorCode::malformed_output,
                "predict output '" + out.string() + "' is not a valid mask (" +
                    std::string(to_string(e.code())) + ": " + e.what() + ")");
  }
  std::lock_guard lock(cache_mutex_);
  cache_.emplace(std::make_pair(model.key, case_id), mask);
  return mask;
}

std::optional<BinaryMask> ExternalBackend::ground_truth(const CaseId& case_id) const {
  auto idx = case_index_.find(case_id);
  if (idx == case_index_.end()) return std::nullopt;
  const CaseRecord& record = pool_.cases()[idx->second];
  if (!record.truth) return std::nullopt;
  return read_mask(*record.truth);
}

nlohmann::json ExternalBackend::export_model(const ModelHandle& model) const {
  return {{"backend", "external"}, {"path", model.key}};
}

ModelHandle ExternalBackend::import_model(const nlohmann::json& description) {
  if (!description.is_object() || !description.contains("path") ||
      !description["path"].is_string()) {
    throw Error(ErrorCode::invalid_argument, "external model needs a string 'path'");
  }
  return ModelHandle{description["path"].get<std::string>()};
}

}  // namespace eigenrank
