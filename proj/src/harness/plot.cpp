// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "harness/plot.hpp"

#include <cmath>
#include <cstdio>

#include "ace/elec_io.hpp"
#include "common/error.hpp"
#include "common/files.hpp"

namespace avseci::harness {

std::vector<std::uint8_t> electrodogram_pixels(const ace::Electrodogram& e) {
  const int h = e.channels(), w = e.frames();
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  for (int r = 0; r < h; ++r) {
    const int ch = h - 1 - r;
    for (int t = 0; t < w; ++t) {
      const double v = e.data(ch, t);
      if (!std::isfinite(v)) throw NumericError("plot: non-finite value at channel " + std::to_string(ch));
      px[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(t)] =
          static_cast<std::uint8_t>(std::lround(255.0 * ace::lgf(v)));
    }
  }
  return px;
}

std::string electrodogram_pgm(const ace::Electrodogram& e) {
  if (e.frames() == 0 || e.channels() == 0) throw DataError("plot: empty electrodogram");
  const auto px = electrodogram_pixels(e);
  std::string out = "P5\n" + std::to_string(e.frames()) + " " + std::to_string(e.channels()) + "\n255\n";
  out.append(px.begin(), px.end());
  return out;
}

std::string electrodogram_csv(const ace::Electrodogram& e) {
  std::string out;
  char buf[32];
  for (int c = 0; c < e.channels(); ++c) {
    for (int t = 0; t < e.frames(); ++t) {
      std::snprintf(buf, sizeof buf, t ? ",%.9g" : "%.9g", e.data(c, t));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

PlotFiles plot_electrodogram(const std::filesystem::path& elec_file, const std::filesystem::path& out) {
  const ace::Electrodogram e = ace::read_electrodogram(elec_file);
  PlotFiles files{out, out};
  files.pgm += ".pgm";
  files.csv += ".csv";
  if (!out.parent_path().empty()) std::filesystem::create_directories(out.parent_path());
  write_file_atomic(files.pgm, electrodogram_pgm(e));
  write_file_atomic(files.csv, electrodogram_csv(e));
  return files;
}

}  // namespace avseci::harness
