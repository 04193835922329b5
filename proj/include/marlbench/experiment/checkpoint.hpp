#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "marlbench/config/config.hpp"

namespace marlbench::experiment {

inline constexpr char kCheckpointMagic[8] = {'M', 'B', 'C', 'K', 'P', 'T', '0', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kCheckpointSentinel = 0x454e4421;  // "END!"

// Validate the header and return the embedded resolved configuration.
// Throws ConfigError on missing files, foreign formats, or version mismatch.
config::ConfigTree read_checkpoint_config(const std::string& path);

void write_checkpoint_header(std::ostream& os);
void read_checkpoint_header(std::istream& is, const std::string& path);

}  // namespace marlbench::experiment
