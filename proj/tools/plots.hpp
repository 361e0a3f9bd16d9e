#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mfgsolve {

// Reads the CSVs of a run directory and writes SVG files next to them.
// Returns the written file names; warnings go to `warnings`.
std::vector<std::string> emit_plots(const std::filesystem::path& dir, std::vector<std::string>& warnings);

}  // namespace mfgsolve
