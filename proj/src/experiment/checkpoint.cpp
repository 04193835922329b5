#include "marlbench/experiment/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "marlbench/core/binio.hpp"
#include "marlbench/core/errors.hpp"

namespace marlbench::experiment {

void write_checkpoint_header(std::ostream& os) {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  binio::write_pod<std::uint32_t>(os, kCheckpointVersion);
}

void read_checkpoint_header(std::istream& is, const std::string& path) {
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ConfigError("not a checkpoint file: " + path);
  std::uint32_t version;
  try {
    version = binio::read_pod<std::uint32_t>(is);
  } catch (const std::runtime_error&) {
    throw ConfigError("corrupt checkpoint: " + path);
  }
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint version mismatch in " + path + ": file has " + std::to_string(version) +
                      ", supported " + std::to_string(kCheckpointVersion));
}

config::ConfigTree read_checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  read_checkpoint_header(is, path);
  try {
    return config::parse_snapshot_string(binio::read_string(is));
  } catch (const std::runtime_error& e) {
    throw ConfigError("corrupt checkpoint " + path + ": " + e.what());
  }
}

}  // namespace marlbench::experiment
