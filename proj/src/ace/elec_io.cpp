// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ace/elec_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "common/files.hpp"

namespace avseci::ace {

namespace {

struct Header {
  int channels = 0;
  int frame_rate = 0;
  long frames = -1;
};

Header parse_header(const std::string& line, const std::string& where) {
  std::istringstream ss(line);
  std::string magic, version;
  ss >> magic >> version;
  if (magic != "ELEC" || version != "v1") {
    throw FormatError(where + ": not an ELEC v1 file");
  }
  Header h;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": bad header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    long value = 0;
    try {
      std::size_t used = 0;
      value = std::stol(tok.substr(eq + 1), &used);
      if (used != tok.size() - eq - 1) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw FormatError(where + ": bad header value '" + tok + "'");
    }
    if (key == "channels") h.channels = static_cast<int>(value);
    else if (key == "frame_rate") h.frame_rate = static_cast<int>(value);
    else if (key == "frames") h.frames = value;
  }
  if (h.channels <= 0 || h.frame_rate <= 0 || h.frames < 0) {
    throw FormatError(where + ": incomplete ELEC header");
  }
  return h;
}

bool is_binary(const std::filesystem::path& path) { return path.extension() == ".f32"; }

}  // namespace

std::string electrodogram_header(const Electrodogram& e) {
  return "ELEC v1 channels=" + std::to_string(e.channels()) +
         " frame_rate=" + std::to_string(e.frame_rate) +
         " frames=" + std::to_string(e.frames());
}

void write_electrodogram(const Electrodogram& e, const std::filesystem::path& path) {
  const std::string header = electrodogram_header(e);
  if (is_binary(path)) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(static_cast<std::size_t>(e.data.size()) * 4);
    for (int t = 0; t < e.frames(); ++t) {
      for (int c = 0; c < e.channels(); ++c) append_f32_le(bytes, static_cast<float>(e.data(c, t)));
    }
    write_file_atomic(path, bytes);
    nlohmann::json side = {{"header", header},
                           {"channels", e.channels()},
                           {"frame_rate", e.frame_rate},
                           {"frames", e.frames()},
                           {"n_active", e.n_active}};
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    write_file_atomic(sidecar, side.dump(2) + "\n");
    return;
  }
  std::string out = header + "\n";
  char buf[32];
  for (int t = 0; t < e.frames(); ++t) {
    for (int c = 0; c < e.channels(); ++c) {
      std::snprintf(buf, sizeof buf, c == 0 ? "%.9g" : ",%.9g", e.data(c, t));
      out += buf;
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Electrodogram read_electrodogram(const std::filesystem::path& path) {
  const std::string where = path.string();
  Electrodogram e;
  if (is_binary(path)) {
    std::filesystem::path sidecar = path;
    sidecar += ".json";
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(read_file_text(sidecar));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(sidecar.string() + ": " + ex.what());
    }
    if (!side.contains("header") || !side["header"].is_string()) {
      throw FormatError(sidecar.string() + ": missing header");
    }
    const Header h = parse_header(side["header"].get<std::string>(), sidecar.string());
    const auto bytes = read_file_bytes(path);
    const std::size_t expect = static_cast<std::size_t>(h.channels) * static_cast<std::size_t>(h.frames) * 4;
    if (bytes.size() != expect) {
      throw FormatError(where + ": payload has " + std::to_string(bytes.size()) +
                        " bytes, header implies " + std::to_string(expect));
    }
    e.frame_rate = h.frame_rate;
    e.n_active = side.value("n_active", kDefaultMaxima);
    e.data.resize(h.channels, h.frames);
    std::size_t off = 0;
    for (long t = 0; t < h.frames; ++t) {
      for (int c = 0; c < h.channels; ++c, off += 4) e.data(c, t) = read_f32_le(bytes.data() + off);
    }
  } else {
    std::istringstream in(read_file_text(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError(where + ": empty file");
    const Header h = parse_header(line, where);
    e.frame_rate = h.frame_rate;
    e.data.resize(h.channels, h.frames);
    for (long t = 0; t < h.frames; ++t) {
      if (!std::getline(in, line)) {
        throw FormatError(where + ": expected " + std::to_string(h.frames) + " frames, got " +
                          std::to_string(t));
      }
      const char* p = line.c_str();
      for (int c = 0; c < h.channels; ++c) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p || !std::isfinite(v)) {
          throw FormatError(where + ": bad value in frame " + std::to_string(t));
        }
        e.data(c, t) = v;
        p = end;
        if (c + 1 < h.channels) {
          if (*p != ',') throw FormatError(where + ": expected ',' in frame " + std::to_string(t));
          ++p;
        }
      }
      while (*p == ' ' || *p == '\r') ++p;
      if (*p != '\0') throw FormatError(where + ": trailing data in frame " + std::to_string(t));
    }
  }
  int max_active = 0;
  for (Eigen::Index t = 0; t < e.data.cols(); ++t) {
    max_active = std::max(max_active, static_cast<int>((e.data.col(t).array() != 0.0).count()));
  }
  if (!is_binary(path)) e.n_active = std::max(max_active, 1);
  return e;
}

}  // namespace avseci::ace
