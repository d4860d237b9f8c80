#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace ccmg {

inline constexpr const char* kVersion = "0.1.0";

/// Envelope for every command's output. Carries no timings or paths to the
/// machine, so identical inputs give byte-identical reports.
struct RunReport {
  std::string command;
  std::optional<std::string> game_digest;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const;
};

}  // namespace ccmg
