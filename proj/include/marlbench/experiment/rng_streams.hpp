#pragma once

#include <array>
#include <cstdint>

#include "marlbench/numeric/rng.hpp"

namespace marlbench::experiment {

// The named random streams of one experiment. Each is an independent
// deterministic function of (seed, name); consuming one never perturbs
// another. Evaluation additionally derives a fresh per-evaluation seed as
// (seed, "evaluation", iteration), so running evaluation more or less often
// cannot shift any other stream.
struct RngStreams {
  num::RngStream collection;
  num::RngStream evaluation;
  num::RngStream init;
  num::RngStream buffer_sampling;
  num::RngStream env;
};

inline constexpr std::array<const char*, 5> kStreamNames = {"collection", "evaluation", "init",
                                                            "buffer_sampling", "env"};

inline RngStreams derive_rng_streams(std::uint64_t seed) {
  RngStreams s;
  s.collection = num::derive_stream(seed, "collection");
  s.evaluation = num::derive_stream(seed, "evaluation");
  s.init = num::derive_stream(seed, "init");
  s.buffer_sampling = num::derive_stream(seed, "buffer_sampling");
  s.env = num::derive_stream(seed, "env");
  return s;
}

}  // namespace marlbench::experiment
