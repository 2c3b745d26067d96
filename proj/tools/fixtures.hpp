#pragma once

// Shared by the fixture generator and the selftest.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "azprobe/cache.hpp"
#include "azprobe/network.hpp"

namespace fixtures {

inline const std::vector<std::string> hashed_files = {"games20.pgn",        "random_games.pgn", "planted_t1000.azpw",
                                                      "planted_t2000.azpw", "cov_golden.csv",   "openings_golden.csv",
                                                      "selftest.cfg"};

inline std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(azprobe::cache::corpus_hash({bytes})));
  return buf;
}

inline azprobe::network::NetworkConfig planted_config() {
  azprobe::network::NetworkConfig cfg;
  cfg.blocks = 3;
  cfg.channels = 8;
  cfg.history = 1;
  cfg.value_hidden = 8;
  return cfg;
}

/// Channel 0 = 4.5 + 0.5 * (mover piece value - opponent piece value) on each square, with a
/// value head reading it as tanh(0.05 * material difference). Channels 2 and 3 carry the mover's
/// and the opponent's piece values without offset. The later step adds a mover-pawn detector on channel 1.
inline azprobe::network::Checkpoint planted_checkpoint(const azprobe::network::NetworkConfig& cfg, std::uint64_t step,
                                                       bool pawn_channel) {
  const float value[6] = {0, 9, 5, 3, 3, 1};  // K Q R B N P
  std::map<int, float> coeffs;
  for (int k = 0; k < 6; ++k) {
    if (value[k] == 0) continue;
    coeffs[k] = 0.5f * value[k];
    coeffs[6 + k] = -0.5f * value[k];
  }
  auto ck = azprobe::network::plant_linear_feature(cfg, 0, coeffs, 4.5f, step);
  azprobe::network::plant_value_head(ck, 0, 4.5f, 0.1f);
  std::map<int, float> mine, theirs;
  for (int k = 1; k < 6; ++k) {
    mine[k] = value[k];
    theirs[6 + k] = value[k];
  }
  azprobe::network::add_planted_channel(ck, 2, mine, 0.0f);
  azprobe::network::add_planted_channel(ck, 3, theirs, 0.0f);
  if (pawn_channel) azprobe::network::add_planted_channel(ck, 1, {{5, 1.0f}}, 0.0f);
  return ck;
}

}  // namespace fixtures
