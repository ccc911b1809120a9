#pragma once

/**
 * @file
 * @brief Instance files, solution documents and CSV helpers.
 *
 * Instance files are JSON documents tagged by `kind` ("qkl", "troc" or
 * "qlqr"); see schema/instance.schema.json. Numbers in CSV output use 17
 * significant digits so every double round-trips exactly.
 */

#include "qctl/qkl.hpp"
#include "qctl/qlqr.hpp"
#include "qctl/troc.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qctl::io {

inline constexpr int kSchemaVersion = 1;

/// Malformed or schema-violating instance; the message names the offending field or line.
class InstanceError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

struct Overrides
{
  std::optional<double> q;
  std::optional<double> lambda;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
};

using Instance = std::variant<QklInstance, FiniteTrocInstance, QlqrInstance>;

struct LoadedInstance
{
  std::string kind;
  Instance instance;
  /// qkl only: iterate to stationarity, using horizon as the stage cap.
  bool stationary{false};
  std::uint64_t seed{0};
  /// Effective configuration after overrides; hashed (seed excluded) to tie solutions to instances.
  nlohmann::json effective;
  std::uint64_t hash{0};
};

/// Schema diagnostics, one per violated rule ("field 'x': ..."). Empty when valid.
[[nodiscard]] std::vector<std::string> validate_instance_json(const nlohmann::json & doc);

/// Validates, applies overrides and builds the typed instance. Throws InstanceError.
[[nodiscard]] LoadedInstance parse_instance(const nlohmann::json & doc, const Overrides & overrides = {});

/// Reads and parses a file. JSON syntax errors are reported with line and column.
[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path & path);

[[nodiscard]] LoadedInstance load_instance_file(const std::filesystem::path & path, const Overrides & overrides = {});

// Solution documents. from_json throws InstanceError on malformed documents.
[[nodiscard]] nlohmann::json to_json(const QklSolution & s);
[[nodiscard]] nlohmann::json to_json(const TrocSolution & s);
[[nodiscard]] nlohmann::json to_json(const QlqrSolution & s);
[[nodiscard]] QklSolution qkl_solution_from_json(const nlohmann::json & doc);
[[nodiscard]] TrocSolution troc_solution_from_json(const nlohmann::json & doc);
[[nodiscard]] QlqrSolution qlqr_solution_from_json(const nlohmann::json & doc);

[[nodiscard]] std::string format_double(double v);
[[nodiscard]] std::string csv_row(const std::vector<double> & values);

/// Writes via a temporary sibling and rename so readers never observe partial files.
void write_file_atomic(const std::filesystem::path & path, std::string_view content);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t v);

}  // namespace qctl::io
