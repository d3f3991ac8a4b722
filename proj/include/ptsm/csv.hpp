#pragma once

// SimLog <-> CSV. Columns: t, q1..qn, qd1..qdn, e1..en, ed1..edn, s1..sn,
// tau1..taun, d1..dn, V. Numbers use the shortest round-trip representation.

#include "ptsm/sim.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace ptsm {

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, p);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string> csv_header(int n) {
  std::vector<std::string> h{"t"};
  for (const char* prefix : {"q", "qd", "e", "ed", "s", "tau", "d"}) {
    for (int i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i));
  }
  h.push_back("V");
  return h;
}

inline void write_csv(std::ostream& os, const SimLog& log) {
  const int n = log.dof();
  const auto header = csv_header(n);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  std::string line;
  for (std::size_t k = 0; k < log.size(); ++k) {
    line = format_double(log.t[k]);
    for (const auto* series : {&log.q, &log.qdot, &log.e, &log.edot, &log.s, &log.tau, &log.d}) {
      for (double v : (*series)[k]) {
        line += ',';
        line += format_double(v);
      }
    }
    line += ',';
    line += format_double(log.V[k]);
    os << line << '\n';
  }
}

inline void write_csv(const std::string& path, const SimLog& log) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(os, log);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline SimLog read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 9 || (cols.size() - 2) % 7 != 0) throw std::runtime_error("read_csv: bad header");
  const int n = int((cols.size() - 2) / 7);
  if (cols != csv_header(n)) throw std::runtime_error("read_csv: header does not match the column contract");

  SimLog log;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> v;
    v.reserve(cols.size());
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      v.push_back(parse_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (v.size() != cols.size()) throw std::runtime_error("read_csv: row " + std::to_string(row) + " has wrong width");
    log.t.push_back(v[0]);
    std::size_t off = 1;
    for (auto* series : {&log.q, &log.qdot, &log.e, &log.edot, &log.s, &log.tau, &log.d}) {
      series->push_back(Eigen::Map<const RealVec>(v.data() + off, n));
      off += std::size_t(n);
    }
    log.V.push_back(v[off]);
  }
  return log;
}

inline SimLog read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(is);
}

}  // namespace ptsm
