// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Electrodogram images: binary PGM, one row per channel with the highest
// channel on top, one column per frame, pixel = round(255 * lgf(value)).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ace/ace.hpp"

namespace avseci::harness {

// Row-major, height channels() x width frames().
std::vector<std::uint8_t> electrodogram_pixels(const ace::Electrodogram& e);
std::string electrodogram_pgm(const ace::Electrodogram& e);
// One line per channel (channel 0 first), comma separated.
std::string electrodogram_csv(const ace::Electrodogram& e);

struct PlotFiles {
  std::filesystem::path pgm;
  std::filesystem::path csv;
};

// Reads an ELEC file and writes <out>.pgm and <out>.csv.
PlotFiles plot_electrodogram(const std::filesystem::path& elec_file, const std::filesystem::path& out);

}  // namespace avseci::harness
