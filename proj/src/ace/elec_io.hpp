// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>

#include "ace/ace.hpp"

namespace avseci::ace {

// Text form: a header line
//   ELEC v1 channels=22 frame_rate=500 frames=<T_e>
// then one CSV row of channel values per frame. Paths ending in ".f32" use
// the binary form: little-endian float32, frame-major, with the same header
// stored in a "<path>.json" sidecar.
void write_electrodogram(const Electrodogram& e, const std::filesystem::path& path);
Electrodogram read_electrodogram(const std::filesystem::path& path);

std::string electrodogram_header(const Electrodogram& e);

}  // namespace avseci::ace
