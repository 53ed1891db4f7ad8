#include "eigenrank/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "eigenrank/dice_matrix.hpp"
#include "eigenrank/errors.hpp"
#include "eigenrank/random.hpp"

namespace eigenrank {

Pool::Pool(std::vector<CaseRecord> cases, std::uint64_t seed)
    : cases_(std::move(cases)), seed_(seed) {
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    const CaseId& id = cases_[i].id;
    if (id.value.empty()) {
      throw Error(ErrorCode::invalid_argument,
                  "case " + std::to_string(i) + " has an empty id");
    }
    if (!index_.emplace(id, i).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate case id '" + id.value + "'");
    }
  }
}

std::vector<CaseId> Pool::ids() const {
  std::vector<CaseId> out;
  out.reserve(cases_.size());
  for (const auto& c : cases_) out.push_back(c.id);
  return out;
}

bool Pool::contains(const CaseId& id) const { return index_.count(id) != 0; }

const CaseRecord& Pool::find(const CaseId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::invalid_argument, "unknown case id '" + id.value + "'");
  }
  return cases_[it->second];
}

std::string_view to_string(ScoreMode mode) {
  return mode == ScoreMode::lambda_max ? "lambda_max" : "entropy";
}

ScoreMode parse_score_mode(std::string_view name) {
  if (name == "lambda_max") return ScoreMode::lambda_max;
  if (name == "entropy") return ScoreMode::entropy;
  throw Error(ErrorCode::invalid_argument,
              "unknown score mode '" + std::string(name) + "'");
}

std::string_view to_string(FailureMode mode) {
  return mode == FailureMode::iterative ? "iterative" : "fixed";
}

FailureMode parse_failure_mode(std::string_view name) {
  if (name == "iterative") return FailureMode::iterative;
  if (name == "fixed") return FailureMode::fixed;
  throw Error(ErrorCode::invalid_argument,
              "unknown failure mode '" + std::string(name) + "'");
}

std::vector<CaseId> SelectionState::selected() const {
  std::vector<CaseId> out;
  for (const auto& s : subsets) out.insert(out.end(), s.begin(), s.end());
  return out;
}

bool SelectionState::is_selected(const CaseId& id) const {
  for (const auto& s : subsets)
    if (std::find(s.begin(), s.end(), id) != s.end()) return true;
  return false;
}

std::vector<CaseId> SelectionReport::selected() const {
  std::vector<CaseId> out;
  for (const auto& s : subsets) out.insert(out.end(), s.begin(), s.end());
  return out;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. If several calls
// throw, the exception from the lowest index wins so failures are
// reproducible.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1u), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

BinaryMask predict_with_context(const SegmenterBackend& backend,
                                const ModelHandle& model, const CaseId& id) {
  try {
    return backend.predict(model, id);
  } catch (const Error& e) {
    throw Error(e.code(), "predicting case '" + id.value + "' with model '" +
                              model.key + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::backend_error, "predicting case '" + id.value +
                                              "' with model '" + model.key +
                                              "': " + e.what());
  }
}

ModelHandle train_with_context(SegmenterBackend& backend,
                               std::span<const CaseId> subset, std::uint64_t seed,
                               std::size_t index) {
  try {
    return backend.train(subset, seed);
  } catch (const Error& e) {
    throw Error(e.code(),
                "training model " + std::to_string(index) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::backend_error,
                "training model " + std::to_string(index) + ": " + e.what());
  }
}

std::uint64_t training_seed(std::uint64_t seed, std::size_t model_index) {
  return derive_seed(seed, "train", model_index);
}

std::vector<CaseId> take_front(const std::vector<std::pair<CaseId, double>>& ranked,
                               std::size_t k) {
  std::vector<CaseId> out;
  for (std::size_t i = 0; i < k && i < ranked.size(); ++i) out.push_back(ranked[i].first);
  return out;
}

std::vector<CaseId> unselected_cases(const Pool& pool, const std::set<CaseId>& taken) {
  std::vector<CaseId> out;
  for (const auto& c : pool.cases())
    if (!taken.count(c.id)) out.push_back(c.id);
  return out;
}

std::set<CaseId> as_set(const std::vector<std::vector<CaseId>>& groups,
                        std::size_t count) {
  std::set<CaseId> out;
  for (std::size_t i = 0; i < count && i < groups.size(); ++i)
    out.insert(groups[i].begin(), groups[i].end());
  return out;
}

}  // namespace

std::vector<std::pair<CaseId, double>> order_by_disagreement(
    const std::map<CaseId, double>& ledger, ScoreMode mode) {
  std::vector<std::pair<CaseId, double>> ranked(ledger.begin(), ledger.end());
  // std::map iteration is already id-ordered, so a stable sort on the score
  // alone realizes the (score, id) tie-break.
  if (mode == ScoreMode::lambda_max) {
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
  } else {
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
  }
  return ranked;
}

double score_predictions(std::span<const BinaryMask> predictions,
                         const EngineOptions& options) {
  const DiceMatrix m = build_dice_matrix(predictions, options.metric);
  const std::vector<double> eigs = eigenvalues(m);
  if (options.mode == ScoreMode::lambda_max) return eigs.front();
  return von_neumann_entropy(eigs, true);
}

double score_case(std::span<const ModelHandle> models, const CaseId& case_id,
                  const SegmenterBackend& backend, const EngineOptions& options) {
  if (models.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "scoring needs at least 2 models");
  }
  std::vector<BinaryMask> predictions;
  predictions.reserve(models.size());
  for (const auto& m : models) predictions.push_back(predict_with_context(backend, m, case_id));
  return score_predictions(predictions, options);
}

namespace {

std::map<CaseId, double> score_all(std::span<const ModelHandle> models,
                                   const std::vector<CaseId>& cases,
                                   const SegmenterBackend& backend,
                                   const EngineOptions& options) {
  std::vector<double> scores(cases.size());
  parallel_for(cases.size(), options.jobs, [&](std::size_t i) {
    scores[i] = score_case(models, cases[i], backend, options);
  });
  std::map<CaseId, double> ledger;
  for (std::size_t i = 0; i < cases.size(); ++i) ledger.emplace(cases[i], scores[i]);
  return ledger;
}

}  // namespace

SelectionState initialize(const Pool& pool, std::size_t k, SegmenterBackend& backend,
                          std::uint64_t seed, const EngineOptions& options) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "subset size k must be >= 1");
  if (pool.size() < 3 * k) {
    throw Error(ErrorCode::pool_too_small,
                "initialization needs " + std::to_string(3 * k) +
                    " cases, pool has " + std::to_string(pool.size()));
  }
  std::vector<CaseId> ids = pool.ids();
  Stream(derive_seed(seed, "init")).shuffle(ids);

  SelectionState state;
  state.k = k;
  state.seed = seed;
  state.subsets.emplace_back(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  state.subsets.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(k),
                             ids.begin() + static_cast<std::ptrdiff_t>(2 * k));
  for (std::size_t i = 0; i < 2; ++i) {
    state.models.push_back(
        train_with_context(backend, state.subsets[i], training_seed(seed, i + 1), i + 1));
  }

  const std::vector<CaseId> rest = unselected_cases(pool, as_set(state.subsets, 2));
  std::vector<double> scores(rest.size());
  parallel_for(rest.size(), options.jobs, [&](std::size_t i) {
    const BinaryMask a = predict_with_context(backend, state.models[0], rest[i]);
    const BinaryMask b = predict_with_context(backend, state.models[1], rest[i]);
    scores[i] = overlap(options.metric, a, b);
  });
  for (std::size_t i = 0; i < rest.size(); ++i) state.ledger.emplace(rest[i], scores[i]);

  state.subsets.push_back(
      take_front(order_by_disagreement(state.ledger, ScoreMode::lambda_max), k));
  state.iteration = 2;
  return state;
}

SelectionState iterate(SelectionState state, const Pool& pool,
                       SegmenterBackend& backend, const EngineOptions& options) {
  if (state.subsets.empty() || state.models.size() + 1 != state.subsets.size()) {
    throw Error(ErrorCode::invalid_argument,
                "selection state must hold exactly one untrained subset");
  }
  const std::size_t t = state.subsets.size();
  const std::vector<CaseId> rest =
      unselected_cases(pool, as_set(state.subsets, state.subsets.size()));
  if (rest.size() < state.k) {
    throw Error(ErrorCode::pool_too_small,
                "iteration " + std::to_string(t) + " needs " + std::to_string(state.k) +
                    " unselected cases, only " + std::to_string(rest.size()) +
                    " remain (short by " + std::to_string(state.k - rest.size()) + ")");
  }
  state.models.push_back(
      train_with_context(backend, state.subsets.back(), training_seed(state.seed, t), t));

  state.ledger = score_all(state.models, rest, backend, options);
  state.subsets.push_back(take_front(order_by_disagreement(state.ledger, options.mode), state.k));
  state.iteration = t;
  return state;
}

namespace {

IterationRecord record_of(const SelectionState& state, const EngineOptions& options) {
  IterationRecord r;
  r.iteration = state.iteration;
  r.score_kind = state.iteration == 2 ? std::string(to_string(options.metric))
                                      : std::string(to_string(options.mode));
  r.ledger = state.ledger;
  r.constructed = state.subsets.back();
  return r;
}

}  // namespace

SelectionReport run_selection(const Pool& pool, std::size_t k, std::size_t iterations,
                              SegmenterBackend& backend, std::uint64_t seed,
                              const EngineOptions& options) {
  if (iterations < 2) {
    throw Error(ErrorCode::invalid_argument, "selection needs at least 2 iterations");
  }
  if (pool.size() < (iterations + 1) * k) {
    throw Error(ErrorCode::pool_too_small,
                std::to_string(iterations) + " iterations of k=" + std::to_string(k) +
                    " need " + std::to_string((iterations + 1) * k) +
                    " cases, pool has " + std::to_string(pool.size()));
  }
  SelectionReport report;
  report.k = k;
  report.iterations = iterations;
  report.seed = seed;
  report.backend = backend.name();
  report.options = options;

  SelectionState state = initialize(pool, k, backend, seed, options);
  report.records.push_back(record_of(state, options));
  for (std::size_t t = 3; t <= iterations; ++t) {
    state = iterate(std::move(state), pool, backend, options);
    report.records.push_back(record_of(state, options));
  }
  report.subsets.assign(state.subsets.begin(),
                        state.subsets.begin() + static_cast<std::ptrdiff_t>(iterations));
  report.trailing = state.subsets.back();
  report.models = state.models;
  return report;
}

std::vector<std::pair<CaseId, double>> rank_failures_fixed(
    std::span<const ModelHandle> models, const Pool& pool,
    const SegmenterBackend& backend, const EngineOptions& options) {
  if (models.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "failure ranking needs at least 2 models");
  }
  return order_by_disagreement(score_all(models, pool.ids(), backend, options),
                               options.mode);
}

Summary summarize_scores(std::span<const double> scores) {
  Summary s;
  s.count = scores.size();
  if (scores.empty()) return s;
  double sum = 0.0;
  for (double v : scores) sum += v;
  s.mean = sum / static_cast<double>(scores.size());
  double ss = 0.0;
  for (double v : scores) ss += (v - s.mean) * (v - s.mean);
  s.stdev = std::sqrt(ss / static_cast<double>(scores.size()));
  return s;
}

Evaluation evaluate_model(const ModelHandle& model, std::span<const CaseId> cases,
                          const SegmenterBackend& backend, const EngineOptions& options) {
  std::vector<BinaryMask> truths;
  truths.reserve(cases.size());
  for (const auto& id : cases) {
    auto truth = backend.ground_truth(id);
    if (!truth) {
      throw Error(ErrorCode::invalid_argument,
                  "case '" + id.value + "' has no ground truth");
    }
    truths.push_back(std::move(*truth));
  }
  std::vector<double> scores(cases.size());
  parallel_for(cases.size(), options.jobs, [&](std::size_t i) {
    scores[i] = overlap(options.metric, predict_with_context(backend, model, cases[i]),
                        truths[i]);
  });
  Evaluation e;
  for (std::size_t i = 0; i < cases.size(); ++i) e.per_case.emplace_back(cases[i], scores[i]);
  e.summary = summarize_scores(scores);
  return e;
}

namespace {

std::optional<Summary> stats_over(const std::map<CaseId, double>& probe_scores,
                                  const std::vector<CaseId>& cases) {
  if (probe_scores.empty()) return std::nullopt;
  std::vector<double> v;
  v.reserve(cases.size());
  for (const auto& id : cases) v.push_back(probe_scores.at(id));
  return summarize_scores(v);
}

}  // namespace

FailureReport run_failure_elimination(const Pool& pool, const FailureRequest& request,
                                      SegmenterBackend& backend,
                                      const EngineOptions& options) {
  const std::size_t k = request.k;
  if (k == 0) throw Error(ErrorCode::invalid_argument, "batch size k must be >= 1");
  FailureReport report;
  report.mode = request.mode;
  report.k = k;
  report.seed = request.seed;

  std::map<CaseId, double> probe_scores;
  if (request.probe) {
    bool all_truth = true;
    for (const auto& c : pool.cases()) {
      if (!backend.ground_truth(c.id)) {
        all_truth = false;
        break;
      }
    }
    if (all_truth) {
      const std::vector<CaseId> ids = pool.ids();
      for (auto& [id, score] : evaluate_model(*request.probe, ids, backend, options).per_case)
        probe_scores.emplace(id, score);
    }
  }
  report.whole_pool = stats_over(probe_scores, pool.ids());
  if (request.iterations == 0) return report;

  std::vector<std::vector<CaseId>> batches;
  std::vector<std::map<CaseId, double>> ledgers;
  if (request.mode == FailureMode::iterative) {
    if (pool.size() < (request.iterations + 2) * k) {
      throw Error(ErrorCode::pool_too_small,
                  std::to_string(request.iterations) + " elimination rounds of k=" +
                      std::to_string(k) + " need " +
                      std::to_string((request.iterations + 2) * k) +
                      " cases, pool has " + std::to_string(pool.size()));
    }
    SelectionState state = initialize(pool, k, backend, request.seed, options);
    report.seed_cases = state.subsets[0];
    report.seed_cases.insert(report.seed_cases.end(), state.subsets[1].begin(),
                             state.subsets[1].end());
    batches.push_back(state.subsets.back());
    ledgers.push_back(state.ledger);
    for (std::size_t i = 2; i <= request.iterations; ++i) {
      state = iterate(std::move(state), pool, backend, options);
      batches.push_back(state.subsets.back());
      ledgers.push_back(state.ledger);
    }
  } else {
    if (pool.size() < request.iterations * k) {
      throw Error(ErrorCode::pool_too_small,
                  std::to_string(request.iterations) + " elimination rounds of k=" +
                      std::to_string(k) + " need " +
                      std::to_string(request.iterations * k) + " cases, pool has " +
                      std::to_string(pool.size()));
    }
    const auto ranked = rank_failures_fixed(request.ensemble, pool, backend, options);
    for (std::size_t i = 0; i < request.iterations; ++i) {
      std::vector<CaseId> batch;
      std::map<CaseId, double> ledger;
      for (std::size_t j = i * k; j < (i + 1) * k; ++j) {
        batch.push_back(ranked[j].first);
        ledger.emplace(ranked[j].first, ranked[j].second);
      }
      batches.push_back(std::move(batch));
      ledgers.push_back(std::move(ledger));
    }
  }

  std::set<CaseId> removed(report.seed_cases.begin(), report.seed_cases.end());
  std::vector<CaseId> eliminated;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    FailureIteration it;
    it.iteration = i + 1;
    it.batch = batches[i];
    it.ledger = std::move(ledgers[i]);
    eliminated.insert(eliminated.end(), batches[i].begin(), batches[i].end());
    removed.insert(batches[i].begin(), batches[i].end());
    const std::vector<CaseId> remaining = unselected_cases(pool, removed);
    it.remaining_count = remaining.size();
    it.eliminated = stats_over(probe_scores, eliminated);
    it.remaining = stats_over(probe_scores, remaining);
    report.iterations.push_back(std::move(it));
  }
  return report;
}

std::vector<std::vector<CaseId>> random_subsets(const Pool& pool, std::size_t k,
                                                std::size_t count, std::uint64_t seed) {
  if (pool.size() < k * count) {
    throw Error(ErrorCode::pool_too_small,
                "random arm needs " + std::to_string(k * count) + " cases, pool has " +
                    std::to_string(pool.size()));
  }
  std::vector<CaseId> ids = pool.ids();
  Stream(derive_seed(seed, "random-arm")).shuffle(ids);
  std::vector<std::vector<CaseId>> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i].assign(ids.begin() + static_cast<std::ptrdiff_t>(i * k),
                  ids.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
  return out;
}

SeedComparison compare_selections(const Pool& pool,
                                  const std::vector<std::vector<CaseId>>& eigen_subsets,
                                  const std::vector<std::vector<CaseId>>& random_groups,
                                  SegmenterBackend& backend, std::uint64_t seed,
                                  const EngineOptions& options) {
  const std::size_t rounds = std::min(eigen_subsets.size(), random_groups.size());
  SeedComparison out;
  out.seed = seed;

  std::set<CaseId> both = as_set(eigen_subsets, rounds);
  const std::set<CaseId> random_all = as_set(random_groups, rounds);
  both.insert(random_all.begin(), random_all.end());
  const std::vector<CaseId> common = unselected_cases(pool, both);

  for (std::size_t t = 1; t <= rounds; ++t) {
    const std::set<CaseId> eig_set = as_set(eigen_subsets, t);
    const std::set<CaseId> rnd_set = as_set(random_groups, t);
    std::vector<CaseId> eig_train, rnd_train;
    for (std::size_t i = 0; i < t; ++i) {
      eig_train.insert(eig_train.end(), eigen_subsets[i].begin(), eigen_subsets[i].end());
      rnd_train.insert(rnd_train.end(), random_groups[i].begin(), random_groups[i].end());
    }
    const std::uint64_t probe_seed = derive_seed(seed, "probe", t);
    const ModelHandle eig_model = train_with_context(backend, eig_train, probe_seed, t);
    const ModelHandle rnd_model = train_with_context(backend, rnd_train, probe_seed, t);

    ComparisonRow row;
    row.iteration = t;
    row.training_size = eig_train.size();
    row.common.eigenrank = evaluate_model(eig_model, common, backend, options).summary;
    row.common.random = evaluate_model(rnd_model, common, backend, options).summary;
    row.specific.eigenrank =
        evaluate_model(eig_model, unselected_cases(pool, eig_set), backend, options).summary;
    row.specific.random =
        evaluate_model(rnd_model, unselected_cases(pool, rnd_set), backend, options).summary;
    out.rows.push_back(row);
  }
  return out;
}

std::vector<SeedComparison> compare_to_random(const Pool& pool, std::size_t k,
                                              std::size_t iterations,
                                              SegmenterBackend& backend,
                                              std::span<const std::uint64_t> seeds,
                                              const EngineOptions& options) {
  std::vector<SeedComparison> out;
  for (std::uint64_t seed : seeds) {
    const SelectionReport report = run_selection(pool, k, iterations, backend, seed, options);
    const auto random_groups = random_subsets(pool, k, iterations, seed);
    out.push_back(compare_selections(pool, report.subsets, random_groups, backend, seed,
                                     options));
  }
  return out;
}

}  // namespace eigenrank
