#pragma once

// JSON serialization of instances, SDPs and solve reports. Complex numbers
// are written as [re, im] pairs; matrices as arrays of rows.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lowrank/burer_monteiro.hpp"
#include "lowrank/problems.hpp"

namespace lowrank::io {

using nlohmann::json;

inline json to_json(const CVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

inline json to_json(const RVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const CMatrix& M) {
  json out = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back({M(r, c).real(), M(r, c).imag()});
    out.push_back(std::move(row));
  }
  return out;
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline CVector cvector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of [re, im] pairs");
  CVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = detail::complex_from(j[i]);
  return v;
}

inline RVector rvector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  RVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

inline CMatrix cmatrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  CMatrix M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Index>(r), static_cast<Index>(c)) = detail::complex_from(j[r][c]);
    }
  }
  return M;
}

// ---------------------------------------------------------------------------

inline json to_json(const PhaseRetrievalInstance& inst) {
  json out = {{"type", "phase_retrieval"},
              {"ensemble", to_string(inst.ensemble.kind)},
              {"field", to_string(inst.field)},
              {"n", inst.n()},
              {"m", inst.m()},
              {"B", to_json(inst.B())},
              {"b", to_json(inst.b)}};
  out["x_true"] = inst.x_true ? to_json(*inst.x_true) : json(nullptr);
  return out;
}

inline PhaseRetrievalInstance phase_retrieval_from_json(const json& j) {
  if (detail::field(j, "type") != "phase_retrieval") throw ConfigError("not a phase_retrieval instance");
  PhaseRetrievalInstance inst;
  inst.ensemble.kind = ensemble_from_string(detail::field(j, "ensemble").get<std::string>());
  inst.field = field_from_string(detail::field(j, "field").get<std::string>());
  inst.ensemble.B = cmatrix_from_json(detail::field(j, "B"));
  inst.b = rvector_from_json(detail::field(j, "b"));
  if (inst.b.size() != inst.m()) throw InvalidDimension("instance: b has wrong length");
  if (j.contains("x_true") && !j.at("x_true").is_null()) {
    inst.x_true = cvector_from_json(j.at("x_true"));
    if (inst.x_true->size() != inst.n()) throw InvalidDimension("instance: x_true has wrong length");
  }
  return inst;
}

inline json to_json(const SyncInstance& inst) {
  return {{"type", "sync"},
          {"n", inst.n()},
          {"sigma", inst.sigma},
          {"C", to_json(inst.C.dense())},
          {"W", to_json(inst.W.dense())},
          {"z_true", to_json(inst.z_true)}};
}

inline SyncInstance sync_from_json(const json& j) {
  if (detail::field(j, "type") != "sync") throw ConfigError("not a sync instance");
  SyncInstance inst{HermitianMatrix(cmatrix_from_json(detail::field(j, "C"))),
                    cvector_from_json(detail::field(j, "z_true")),
                    detail::field(j, "sigma").get<double>(),
                    HermitianMatrix(cmatrix_from_json(detail::field(j, "W")))};
  if (inst.z_true.size() != inst.n() || inst.W.dim() != inst.n()) {
    throw InvalidDimension("sync instance: inconsistent sizes");
  }
  return inst;
}

/// {"type": "unit_diag_sdp", "dim": N, "provenance": ..., "cost": N rows of
/// N [re, im] pairs}.
inline json to_json(const UnitDiagSDP& sdp) {
  return {{"type", "unit_diag_sdp"},
          {"dim", sdp.dim()},
          {"provenance", to_string(sdp.provenance)},
          {"cost", to_json(sdp.cost.dense())}};
}

inline UnitDiagSDP sdp_from_json(const json& j) {
  if (detail::field(j, "type") != "unit_diag_sdp") throw ConfigError("not a unit_diag_sdp");
  UnitDiagSDP sdp{HermitianMatrix(cmatrix_from_json(detail::field(j, "cost"))),
                  j.contains("provenance")
                      ? provenance_from_string(j.at("provenance").get<std::string>())
                      : Provenance::Raw,
                  std::nullopt};
  if (detail::field(j, "dim").get<Index>() != sdp.dim()) throw InvalidDimension("sdp: dim mismatch");
  return sdp;
}

inline json to_json(const SolveReport& report) {
  json out = {{"estimate", to_json(report.estimate)},
              {"iterations", report.iterations},
              {"converged", report.converged},
              {"residual_trace", report.residual_trace},
              {"objective_trace", report.objective_trace}};
  out["rel_error_mod_phase"] =
      report.rel_error_mod_phase ? json(*report.rel_error_mod_phase) : json(nullptr);
  return out;
}

inline SolveReport report_from_json(const json& j) {
  SolveReport report;
  report.estimate = cvector_from_json(detail::field(j, "estimate"));
  report.iterations = detail::field(j, "iterations").get<int>();
  report.converged = detail::field(j, "converged").get<bool>();
  report.residual_trace = detail::field(j, "residual_trace").get<std::vector<double>>();
  report.objective_trace = detail::field(j, "objective_trace").get<std::vector<double>>();
  if (j.contains("rel_error_mod_phase") && !j.at("rel_error_mod_phase").is_null()) {
    report.rel_error_mod_phase = j.at("rel_error_mod_phase").get<double>();
  }
  return report;
}

// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace lowrank::io
