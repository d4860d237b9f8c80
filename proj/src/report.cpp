#include "ccmg/report.hpp"

namespace ccmg {

nlohmann::json RunReport::to_json() const {
  nlohmann::json out;
  out["command"] = command;
  out["game_digest"] = game_digest ? nlohmann::json(*game_digest) : nlohmann::json();
  out["params"] = params;
  out["results"] = results;
  out["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json();
  out["version"] = kVersion;
  return out;
}

}  // namespace ccmg
