#pragma once

#include <filesystem>
#include <string>

#include "ata/common/io.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return ATA_DATA_DIR; }

inline ata::Json data_json(const std::string& rel) { return ata::load_json_file(data_dir() / rel); }

}  // namespace testing
