#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "magframe/bounds.hpp"
#include "magframe/matrixrep.hpp"

namespace magframe {

using json = nlohmann::json;

// Fixed 17-significant-digit formatting: round-trips doubles exactly and keeps
// outputs byte-identical across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Small CSV table with an explicit header row; all numeric cells go through
// the fixed formatter.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  explicit CsvTable(std::vector<std::string> h = {}) : header(std::move(h)) {}

  std::vector<std::string>& add_row() { return rows.emplace_back(); }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(cplx v) {
    return format_double(v.real()) + "+" + format_double(v.imag()) + "i";
  }

  template <class... T>
  void append(const T&... vals) {
    auto& r = add_row();
    (r.push_back(cell(vals)), ...);
  }

  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
      }
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    write(os);
  }
};

inline void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << j.dump(2) << '\n';
}

// Report serializers.
inline json to_json(const SchurReport& r) {
  return {{"row_sup", r.row_sup},
          {"col_sup", r.col_sup},
          {"constant", r.constant},
          {"norm_estimate", r.norm_estimate}};
}

inline json to_json(const DecayReport& r, const std::vector<DecayVerdict>* verdicts = nullptr) {
  json rows = json::array();
  for (size_t wi = 0; wi < r.weights.size(); ++wi) {
    const WeightTuple& w = r.weights[wi];
    json row = {{"nL", w.nL},   {"nR", w.nR}, {"nLs", w.nLs}, {"nRs", w.nRs},
                {"mL", w.mL},   {"mR", w.mR}, {"sups", json::array()}};
    for (size_t b = 0; b < r.boxes.size(); ++b) row["sups"].push_back(r.sups(wi, b));
    if (verdicts) {
      row["saturating"] = (*verdicts)[wi].saturating;
      row["rate"] = (*verdicts)[wi].rate;
    }
    rows.push_back(std::move(row));
  }
  json boxes = json::array();
  for (const DecayBox& b : r.boxes) boxes.push_back({{"a", b.a}, {"k", b.k}});
  return {{"boxes", boxes}, {"weights", rows}};
}

inline json to_json(const BoundednessReport& r) {
  return {{"in_hs", r.in_hs},
          {"out_hs", r.out_hs},
          {"ratios", r.ratios},
          {"max_ratio", r.max_ratio},
          {"schur", to_json(r.schur)}};
}

inline CsvTable decay_csv(const DecayReport& r, const std::vector<DecayVerdict>* verdicts = nullptr) {
  std::vector<std::string> header = {"nL", "nR", "nLs", "nRs", "mL", "mR"};
  for (const DecayBox& b : r.boxes)
    header.push_back("sup_a" + std::to_string(b.a) + "_k" + std::to_string(b.k));
  if (verdicts) header.push_back("verdict");
  CsvTable t(header);
  for (size_t wi = 0; wi < r.weights.size(); ++wi) {
    auto& row = t.add_row();
    const WeightTuple& w = r.weights[wi];
    for (int v : {w.nL, w.nR, w.nLs, w.nRs}) row.push_back(CsvTable::cell(v));
    row.push_back(format_double(w.mL));
    row.push_back(format_double(w.mR));
    for (size_t b = 0; b < r.boxes.size(); ++b) row.push_back(format_double(r.sups(wi, b)));
    if (verdicts) row.push_back((*verdicts)[wi].saturating ? "saturating" : "growing");
  }
  return t;
}

// Operator matrix elements with explicit frame-index columns.
inline CsvTable elements_csv(const FrameSpec& spec, const OperatorMatrixElements& el,
                             double threshold = 0.0) {
  CsvTable t({"alpha_i", "k_i", "alpha_j", "k_j", "re", "im"});
  auto idx = [&](const MultiIndex& m) {
    std::string s = std::to_string(m[0]);
    for (int i = 1; i < m.dim; ++i) s += ";" + std::to_string(m[i]);
    return s;
  };
  for (std::int64_t i = 0; i < el.e.rows(); ++i)
    for (std::int64_t j = 0; j < el.e.cols(); ++j) {
      cplx v = el.e(i, j);
      if (std::abs(v) < threshold) continue;
      FrameId a = spec.id_from_flat(i), b = spec.id_from_flat(j);
      t.append(idx(a.alpha), idx(a.k), idx(b.alpha), idx(b.k), v.real(), v.imag());
    }
  return t;
}

// Dense kernel binary format: one JSON header line (dimension, half-width,
// points per axis, row-major layout), then interleaved re/im doubles in the
// machine's native little-endian order.
inline void save_operator(const OperatorMatrix& op, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  json h = {{"dimension", op.grid.dim},
            {"L", op.grid.half_width},
            {"M", op.grid.points},
            {"layout", "row-major"}};
  os << h.dump() << '\n';
  for (std::int64_t i = 0; i < op.k.rows(); ++i)
    for (std::int64_t j = 0; j < op.k.cols(); ++j) {
      double re = op.k(i, j).real(), im = op.k(i, j).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof re);
      os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

inline OperatorMatrix load_operator(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  json h = json::parse(line);
  if (h.value("layout", "") != "row-major")
    throw std::runtime_error("load_operator: unsupported layout");
  UniformGrid g(h.at("dimension").get<int>(), h.at("L").get<double>(),
                h.at("M").get<int>());
  OperatorMatrix op(g);
  for (std::int64_t i = 0; i < op.k.rows(); ++i)
    for (std::int64_t j = 0; j < op.k.cols(); ++j) {
      double re, im;
      is.read(reinterpret_cast<char*>(&re), sizeof re);
      is.read(reinterpret_cast<char*>(&im), sizeof im);
      op.k(i, j) = cplx(re, im);
    }
  if (!is) throw std::runtime_error("load_operator: truncated payload");
  return op;
}

}  // namespace magframe
