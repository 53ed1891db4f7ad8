#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eigenrank/dice_matrix.hpp"
#include "eigenrank/engine.hpp"
#include "eigenrank/mask.hpp"
#include "eigenrank/synthetic.hpp"

namespace eigenrank {

namespace fs = std::filesystem;

// Mask files: "EMSK1\n", then "<width> <height>\n", then width·height bytes,
// each 0x00 or 0x01, row-major. Nothing may follow the payload.
inline constexpr std::string_view kMaskMagic = "EMSK1";

std::string encode_mask(const BinaryMask& mask);
/// Throws bad_magic, bad_header, truncated, trailing_bytes or bad_pixel.
BinaryMask decode_mask(std::string_view bytes);

BinaryMask read_mask(const fs::path& path);
void write_mask(const BinaryMask& mask, const fs::path& path);

/// Binary PGM (P5, maxval 255); values are quantized on write.
void write_pgm(const GrayImage& image, const fs::path& path);
GrayImage read_pgm(const fs::path& path);

std::string read_file(const fs::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void atomic_write(const fs::path& path, std::string_view content);

/// %.12g; "nan" for NaN.
std::string format_number(double value);
/// `value` rounded to 12 significant digits, so JSON output stays short and
/// byte-stable.
double pinned(double value);

struct Manifest {
  Pool pool;
  fs::path directory;
};

/// JSON document {"seed": n, "cases": [{"id", "image"?, "truth"?,
/// "difficulty"?}]}. Relative paths resolve against the manifest's
/// directory. Ids must be unique and every referenced file must exist.
Manifest load_manifest(const fs::path& path);
nlohmann::json manifest_json(const Pool& pool, const fs::path& relative_to);
void save_manifest(const Pool& pool, const fs::path& path);

/// Rebuilds synthetic cases from a manifest; each case needs a truth mask
/// and a difficulty.
std::vector<SyntheticCase> load_synthetic_cases(const Pool& pool);

/// Writes images/, truth/ and manifest.json under `directory`.
fs::path write_synthetic_dataset(std::span<const SyntheticCase> cases, std::uint64_t seed,
                                 const fs::path& directory);

nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const SelectionReport& report, const SegmenterBackend& backend);
nlohmann::json to_json(const FailureReport& report);
nlohmann::json to_json(const Evaluation& evaluation);
nlohmann::json to_json(std::span<const SeedComparison> comparisons);
nlohmann::json ranking_json(std::span<const std::pair<CaseId, double>> ranking);

/// Reads a models document ({"models": [...]}, which a selection report also
/// satisfies) or a single model object.
std::vector<nlohmann::json> load_model_descriptions(const fs::path& path);

/// Columns: t,epsilon,mean_ratio,stdev_ratio,undefined_count.
std::string simulation_csv(std::span<const SimulationRow> rows);

/// Human-readable matrix, spectrum, λ_max, entropies and PSD flag.
std::string describe_matrix(const DiceMatrix& m);

/// Stable serialization: sorted keys, two-space indent, trailing newline.
std::string dump(const nlohmann::json& doc);

}  // namespace eigenrank
