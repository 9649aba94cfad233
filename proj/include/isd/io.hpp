#pragma once

#include "isd/core.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace isd {

// ISD1 container, little-endian:
//   magic "ISD1"
//   u32 n_trials, u32 n_channels, u32 n_samples
//   f32 fs
//   u32 n_classes, then per class: u16 name length + UTF-8 bytes
//   n_trials u16 labels
//   payload: f32 samples in [trial][channel][sample] order
//
// Samples are stored as f32 and widened to f64 in memory. A delimited-text
// import is also accepted (see load_trialset_text).

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw std::runtime_error("ISD1: truncated file");
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

} // namespace detail

inline void save_trialset(const TrialSet& ts, const std::string& path) {
  validate(ts);
  if (ts.n_trials() == 0) throw std::runtime_error("ISD1: container requires at least one trial");
  if (ts.n_classes() > 65535) throw std::runtime_error("ISD1: more than 65535 classes");
  for (int y : ts.labels)
    if (y > 65535) throw std::runtime_error("ISD1: label exceeds u16 range");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ISD1: cannot open for writing: " + path);

  os.write("ISD1", 4);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_trials()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_channels()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_samples()));
  detail::write_le<float>(os, static_cast<float>(ts.fs));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_classes()));
  for (const std::string& name : ts.class_names) {
    if (name.size() > 65535) throw std::runtime_error("ISD1: class name too long");
    detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (int y : ts.labels) detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(y));
  for (const Matrix& trial : ts.trials)
    for (int ch = 0; ch < trial.rows(); ++ch)
      for (int s = 0; s < trial.cols(); ++s)
        detail::write_le<float>(os, static_cast<float>(trial(ch, s)));

  if (!os) throw std::runtime_error("ISD1: write failed: " + path);
}

inline TrialSet load_trialset_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "ISD1", 4) != 0)
    throw std::runtime_error("ISD1: bad magic");

  const auto n_trials = detail::read_le<std::uint32_t>(is);
  const auto n_channels = detail::read_le<std::uint32_t>(is);
  const auto n_samples = detail::read_le<std::uint32_t>(is);
  const float fs = detail::read_le<float>(is);
  const auto n_classes = detail::read_le<std::uint32_t>(is);
  if (n_trials == 0 || n_channels == 0 || n_samples == 0)
    throw std::runtime_error("ISD1: empty dimension in header");
  if (!(fs > 0.0f)) throw std::runtime_error("ISD1: non-positive sampling rate");
  if (n_classes == 0 || n_classes > 65535) throw std::runtime_error("ISD1: bad class count");

  TrialSet ts;
  ts.fs = fs;
  ts.class_names.resize(n_classes);
  for (std::uint32_t i = 0; i < n_classes; ++i) {
    const auto len = detail::read_le<std::uint16_t>(is);
    std::string name(len, '\0');
    if (len > 0 && !is.read(name.data(), len)) throw std::runtime_error("ISD1: truncated class name");
    ts.class_names[i] = std::move(name);
  }
  ts.labels.resize(n_trials);
  for (std::uint32_t i = 0; i < n_trials; ++i) {
    const auto y = detail::read_le<std::uint16_t>(is);
    if (y >= n_classes) throw std::runtime_error("ISD1: label out of range");
    ts.labels[i] = y;
  }
  ts.trials.resize(n_trials);
  for (std::uint32_t i = 0; i < n_trials; ++i) {
    Matrix trial(n_channels, n_samples);
    for (std::uint32_t ch = 0; ch < n_channels; ++ch)
      for (std::uint32_t s = 0; s < n_samples; ++s) {
        const float v = detail::read_le<float>(is);
        if (!std::isfinite(v)) throw std::runtime_error("ISD1: non-finite sample value");
        trial(ch, s) = v;
      }
    ts.trials[i] = std::move(trial);
  }
  return ts;
}

// One header line "channels=C samples=T fs=F [classes=a,b,...]", then one
// row per trial: label followed by C*T samples channel-major. Comma or
// whitespace delimited.
inline TrialSet load_trialset_text(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("text import: empty file");

  int channels = -1, samples = -1;
  double fs = -1.0;
  std::vector<std::string> class_names;
  {
    std::string tok;
    std::istringstream hs(header);
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("text import: bad header token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "channels") channels = std::stoi(val);
      else if (key == "samples") samples = std::stoi(val);
      else if (key == "fs") fs = std::stod(val);
      else if (key == "classes") {
        std::istringstream cs(val);
        std::string name;
        while (std::getline(cs, name, ',')) class_names.push_back(name);
      } else throw std::runtime_error("text import: unknown header key '" + key + "'");
    }
  }
  if (channels <= 0 || samples <= 0 || fs <= 0.0)
    throw std::runtime_error("text import: header must define channels, samples, fs");

  TrialSet ts;
  ts.fs = fs;
  std::string line;
  while (std::getline(is, line)) {
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    int label;
    if (!(ls >> label)) continue; // blank line
    if (label < 0) throw std::runtime_error("text import: negative label");
    Matrix trial(channels, samples);
    for (int ch = 0; ch < channels; ++ch)
      for (int s = 0; s < samples; ++s) {
        double v;
        if (!(ls >> v)) throw std::runtime_error("text import: short row");
        trial(ch, s) = v;
      }
    double extra;
    if (ls >> extra) throw std::runtime_error("text import: row has trailing values");
    ts.trials.push_back(std::move(trial));
    ts.labels.push_back(label);
  }
  if (ts.trials.empty()) throw std::runtime_error("text import: no trials");

  int max_label = 0;
  for (int y : ts.labels) max_label = std::max(max_label, y);
  if (class_names.empty())
    for (int c = 0; c <= max_label; ++c) class_names.push_back("class" + std::to_string(c));
  if (max_label >= static_cast<int>(class_names.size()))
    throw std::runtime_error("text import: label exceeds class list");
  ts.class_names = std::move(class_names);

  validate(ts);
  return ts;
}

inline TrialSet load_trialset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  if (is.gcount() == 4 && std::memcmp(magic, "ISD1", 4) == 0) {
    is.seekg(0);
    TrialSet ts = load_trialset_binary(is);
    validate(ts);
    return ts;
  }
  if (is.gcount() == 0) throw std::runtime_error("ISD1: empty file: " + path);
  is.clear();
  is.seekg(0);
  return load_trialset_text(is);
}

} // namespace isd
