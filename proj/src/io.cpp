#include "eigenrank/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "eigenrank/errors.hpp"

namespace eigenrank {

using nlohmann::json;

std::string encode_mask(const BinaryMask& mask) {
  std::string out(kMaskMagic);
  out += '\n';
  out += std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n";
  auto px = mask.pixels();
  out.append(px.begin(), px.end());
  return out;
}

namespace {

bool parse_dimension(std::string_view text, std::size_t& value) {
  if (text.empty() || text.size() > 9 || text[0] < '1' || text[0] > '9') return false;
  value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return true;
}

}  // namespace

BinaryMask decode_mask(std::string_view bytes) {
  if (bytes.size() < kMaskMagic.size() + 1 || bytes.substr(0, kMaskMagic.size()) != kMaskMagic ||
      bytes[kMaskMagic.size()] != '\n') {
    throw Error(ErrorCode::bad_magic, "mask file does not start with \"EMSK1\\n\"");
  }
  bytes.remove_prefix(kMaskMagic.size() + 1);
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos || eol > 32) {
    throw Error(ErrorCode::bad_header, "mask header line is missing or too long");
  }
  const std::string_view header = bytes.substr(0, eol);
  const auto space = header.find(' ');
  std::size_t width = 0, height = 0;
  if (space == std::string_view::npos || !parse_dimension(header.substr(0, space), width) ||
      !parse_dimension(header.substr(space + 1), height)) {
    throw Error(ErrorCode::bad_header,
                "mask header \"" + std::string(header) + "\" is not \"<width> <height>\"");
  }
  bytes.remove_prefix(eol + 1);
  const std::size_t expected = width * height;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::truncated, "mask payload has " + std::to_string(bytes.size()) +
                                          " bytes, expected " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::trailing_bytes,
                "mask payload has " + std::to_string(bytes.size() - expected) +
                    " bytes after the expected " + std::to_string(expected));
  }
  std::vector<std::uint8_t> px(bytes.begin(), bytes.end());
  return BinaryMask(width, height, std::move(px));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void atomic_write(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io_error, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::io_error, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

BinaryMask read_mask(const fs::path& path) {
  try {
    return decode_mask(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
  atomic_write(path, encode_mask(mask));
}

void write_pgm(const GrayImage& image, const fs::path& path) {
  std::string out = "P5\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  for (double v : image.values) {
    out += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  atomic_write(path, out);
}

GrayImage read_pgm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5" || maxval != 255 || w == 0 || h == 0) {
    throw Error(ErrorCode::bad_header, path.string() + ": not an 8-bit binary PGM");
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != w * h) {
    throw Error(ErrorCode::truncated, path.string() + ": PGM payload size mismatch");
  }
  GrayImage img{w, h, std::vector<double>(w * h)};
  for (std::size_t i = 0; i < w * h; ++i)
    img.values[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0;
  return img;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double pinned(double value) {
  if (!std::isfinite(value)) return value;
  return std::strtod(format_number(value).c_str(), nullptr);
}

namespace {

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return pinned(v);
}

std::vector<std::string> id_strings(std::span<const CaseId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(id.value);
  return out;
}

json ledger_json(const std::map<CaseId, double>& ledger) {
  json out = json::object();
  for (const auto& [id, score] : ledger) out[id.value] = number_or_null(score);
  return out;
}

[[noreturn]] void manifest_fail(const fs::path& path, const std::string& why) {
  throw Error(ErrorCode::manifest_error, path.string() + ": " + why);
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    manifest_fail(path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array()) {
    manifest_fail(path, "expected an object with a \"cases\" array");
  }
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) manifest_fail(path, "\"seed\" must be unsigned");
    seed = doc["seed"].get<std::uint64_t>();
  }
  const fs::path dir = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path f(p);
    return f.is_absolute() ? f : dir / f;
  };

  std::vector<CaseRecord> records;
  for (std::size_t i = 0; i < doc["cases"].size(); ++i) {
    const json& c = doc["cases"][i];
    const std::string where = "case " + std::to_string(i);
    if (!c.is_object() || !c.contains("id") || !c["id"].is_string()) {
      manifest_fail(path, where + " needs a string \"id\"");
    }
    CaseRecord r;
    r.id = CaseId{c["id"].get<std::string>()};
    for (const char* key : {"image", "truth"}) {
      if (!c.contains(key)) continue;
      if (!c[key].is_string()) manifest_fail(path, where + " \"" + key + "\" must be a path");
      const fs::path file = resolve(c[key].get<std::string>());
      if (!fs::exists(file)) {
        manifest_fail(path, where + " ('" + r.id.value + "') references missing file '" +
                                file.string() + "'");
      }
      (std::string_view(key) == "image" ? r.image : r.truth) = file;
    }
    if (c.contains("difficulty")) {
      if (!c["difficulty"].is_number()) manifest_fail(path, where + " difficulty must be a number");
      r.difficulty = c["difficulty"].get<double>();
    }
    records.push_back(std::move(r));
  }
  try {
    return Manifest{Pool(std::move(records), seed), dir};
  } catch (const Error& e) {
    manifest_fail(path, e.what());
  }
}

nlohmann::json manifest_json(const Pool& pool, const fs::path& relative_to) {
  json cases = json::array();
  for (const auto& c : pool.cases()) {
    json entry = {{"id", c.id.value}};
    if (c.image) entry["image"] = fs::relative(*c.image, relative_to).generic_string();
    if (c.truth) entry["truth"] = fs::relative(*c.truth, relative_to).generic_string();
    if (c.difficulty) entry["difficulty"] = *c.difficulty;
    cases.push_back(std::move(entry));
  }
  return {{"seed", pool.seed()}, {"cases", std::move(cases)}};
}

void save_manifest(const Pool& pool, const fs::path& path) {
  atomic_write(path, dump(manifest_json(pool, path.parent_path())));
}

std::vector<SyntheticCase> load_synthetic_cases(const Pool& pool) {
  std::vector<SyntheticCase> out;
  out.reserve(pool.size());
  for (const auto& c : pool.cases()) {
    if (!c.truth || !c.difficulty) {
      throw Error(ErrorCode::manifest_error,
                  "case '" + c.id.value + "' needs \"truth\" and \"difficulty\" for the synthetic backend");
    }
    SyntheticCase sc;
    sc.id = c.id;
    sc.difficulty = *c.difficulty;
    sc.truth = read_mask(*c.truth);
    if (c.image) sc.image = read_pgm(*c.image);
    out.push_back(std::move(sc));
  }
  return out;
}

fs::path write_synthetic_dataset(std::span<const SyntheticCase> cases, std::uint64_t seed,
                                 const fs::path& directory) {
  fs::create_directories(directory / "images");
  fs::create_directories(directory / "truth");
  std::vector<CaseRecord> records;
  for (const auto& c : cases) {
    const fs::path image = directory / "images" / (c.id.value + ".pgm");
    const fs::path truth = directory / "truth" / (c.id.value + ".emsk");
    write_pgm(c.image, image);
    write_mask(c.truth, truth);
    records.push_back(CaseRecord{c.id, image, truth, c.difficulty});
  }
  const fs::path manifest = directory / "manifest.json";
  save_manifest(Pool(std::move(records), seed), manifest);
  return manifest;
}

nlohmann::json to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", number_or_null(s.mean)}, {"stdev", number_or_null(s.stdev)}};
}

nlohmann::json to_json(const SelectionReport& report, const SegmenterBackend& backend) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"iteration", r.iteration},
                       {"score_kind", r.score_kind},
                       {"ledger", ledger_json(r.ledger)},
                       {"constructed", id_strings(r.constructed)}});
  }
  json subsets = json::array();
  for (const auto& s : report.subsets) subsets.push_back(id_strings(s));
  json models = json::array();
  for (const auto& m : report.models) models.push_back(backend.export_model(m));
  return {{"kind", "selection"},
          {"parameters",
           {{"k", report.k},
            {"iterations", report.iterations},
            {"seed", report.seed},
            {"backend", report.backend},
            {"metric", to_string(report.options.metric)},
            {"score_mode", to_string(report.options.mode)}}},
          {"records", std::move(records)},
          {"subsets", std::move(subsets)},
          {"trailing", id_strings(report.trailing)},
          {"selected", id_strings(report.selected())},
          {"models", std::move(models)}};
}

nlohmann::json to_json(const FailureReport& report) {
  json iterations = json::array();
  for (const auto& it : report.iterations) {
    json entry = {{"iteration", it.iteration},
                  {"batch", id_strings(it.batch)},
                  {"ledger", ledger_json(it.ledger)},
                  {"remaining_count", it.remaining_count}};
    if (it.eliminated) entry["eliminated"] = to_json(*it.eliminated);
    if (it.remaining) entry["remaining"] = to_json(*it.remaining);
    iterations.push_back(std::move(entry));
  }
  json out = {{"kind", "failure"},
              {"parameters",
               {{"k", report.k}, {"seed", report.seed}, {"mode", to_string(report.mode)}}},
              {"seed_cases", id_strings(report.seed_cases)},
              {"iterations", std::move(iterations)}};
  if (report.whole_pool) out["whole_pool"] = to_json(*report.whole_pool);
  return out;
}

nlohmann::json to_json(const Evaluation& evaluation) {
  json per_case = json::object();
  for (const auto& [id, score] : evaluation.per_case) per_case[id.value] = number_or_null(score);
  return {{"kind", "evaluation"}, {"per_case", std::move(per_case)},
          {"summary", to_json(evaluation.summary)}};
}

nlohmann::json to_json(std::span<const SeedComparison> comparisons) {
  json seeds = json::array();
  for (const auto& c : comparisons) {
    json rows = json::array();
    for (const auto& r : c.rows) {
      rows.push_back({{"iteration", r.iteration},
                      {"training_size", r.training_size},
                      {"common", {{"eigenrank", to_json(r.common.eigenrank)},
                                  {"random", to_json(r.common.random)}}},
                      {"specific", {{"eigenrank", to_json(r.specific.eigenrank)},
                                    {"random", to_json(r.specific.random)}}}});
    }
    seeds.push_back({{"seed", c.seed}, {"rows", std::move(rows)}});
  }
  return {{"kind", "comparison"}, {"seeds", std::move(seeds)}};
}

nlohmann::json ranking_json(std::span<const std::pair<CaseId, double>> ranking) {
  json rows = json::array();
  for (const auto& [id, score] : ranking) rows.push_back({{"id", id.value}, {"score", number_or_null(score)}});
  return {{"kind", "ranking"}, {"ranking", std::move(rows)}};
}

std::vector<nlohmann::json> load_model_descriptions(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_argument, path.string() + ": invalid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("models")) {
    if (!doc["models"].is_array()) {
      throw Error(ErrorCode::invalid_argument, path.string() + ": \"models\" must be an array");
    }
    return std::vector<json>(doc["models"].begin(), doc["models"].end());
  }
  if (doc.is_object()) return {doc};
  throw Error(ErrorCode::invalid_argument, path.string() + ": expected a model object or {\"models\": [...]}");
}

std::string simulation_csv(std::span<const SimulationRow> rows) {
  std::string out = "t,epsilon,mean_ratio,stdev_ratio,undefined_count\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + format_number(r.epsilon) + "," +
           format_number(r.mean_ratio) + "," + format_number(r.stdev_ratio) + "," +
           std::to_string(r.undefined_count) + "\n";
  }
  return out;
}

std::string describe_matrix(const DiceMatrix& m) {
  const SpectralSummary s = summarize(m);
  std::ostringstream out;
  out << "matrix\n";
  for (std::size_t p = 0; p < m.order(); ++p) {
    for (std::size_t q = 0; q < m.order(); ++q) out << (q ? " " : "") << format_number(m.at(p, q));
    out << "\n";
  }
  out << "eigenvalues";
  for (double v : s.eigenvalues) out << " " << format_number(v);
  out << "\nlambda_max " << format_number(s.lambda_max) << "\n";
  out << "entropy_raw " << format_number(s.entropy_raw) << "\n";
  out << "entropy_normalized " << format_number(s.entropy_normalized) << "\n";
  out << "psd " << (s.psd ? "true" : "false") << "\n";
  return out.str();
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace eigenrank
