#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccmg/game.hpp"

// Helpers shared by the file loaders; not part of the public interface.
namespace ccmg::detail {

std::string read_text(const std::filesystem::path& path);
/// Reads and parses a JSON file; syntax errors become ParseError with a line number.
nlohmann::json read_json(const std::filesystem::path& path);
/// Row-major flattening against fixed extents; mismatches go to `issues`.
void flatten(const nlohmann::json& value, std::span<const std::size_t> extents,
             const std::string& where, std::vector<double>& out, std::vector<Violation>& issues);
nlohmann::json nest(std::span<const double> flat, std::span<const std::size_t> extents);

}  // namespace ccmg::detail
