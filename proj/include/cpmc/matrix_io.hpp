#pragma once

#include <json.hpp>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "driver.hpp"
#include "partial_matrix.hpp"

namespace cpmc {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Text format: first non-comment line is the order n, then n rows of n
// whitespace-separated fields, each a decimal number or `*` for a missing
// entry; `#` starts a comment line. The readable pattern must be symmetric.
inline PartialSymMatrix parse_matrix(const std::string& document) {
  std::istringstream in(document);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  int n = -1;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.empty()) continue;
    if (n < 0) {
      if (fields.size() != 1) throw ParseError("first line must hold the order n alone");
      try {
        size_t used = 0;
        n = std::stoi(fields[0], &used);
        if (used != fields[0].size()) throw std::invalid_argument("");
      } catch (...) {
        throw ParseError("order line is not an integer: " + fields[0]);
      }
      if (n <= 0) throw ParseError("order must be positive");
      continue;
    }
    rows.push_back(std::move(fields));
  }
  if (n < 0) throw ParseError("empty document");
  if (static_cast<int>(rows.size()) != n)
    throw ParseError("expected " + std::to_string(n) + " matrix rows, found " +
                     std::to_string(rows.size()));

  std::vector<std::vector<double>> val(n, std::vector<double>(n));
  std::vector<std::vector<bool>> given(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                       " fields, expected " + std::to_string(n));
    for (int j = 0; j < n; ++j) {
      const std::string& f = rows[i][j];
      if (f == "*") continue;
      try {
        size_t used = 0;
        val[i][j] = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument("");
      } catch (...) {
        throw ParseError("bad field at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                         "): " + f);
      }
      given[i][j] = true;
    }
  }

  std::vector<std::pair<int, int>> pairs;
  std::vector<double> values;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (given[i][j] != given[j][i])
        throw ParseError("asymmetric pattern at (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ")");
      if (!given[i][j]) continue;
      if (val[i][j] != val[j][i])
        throw ParseError("conflicting symmetric values at (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ")");
      pairs.emplace_back(i, j);
      values.push_back(val[i][j]);
    }
  }
  return PartialSymMatrix{IndexSet(n, pairs), values};
}

inline bool operator==(const FlatCheck& a, const FlatCheck& b) {
  return a.t == b.t && a.rank_prev == b.rank_prev && a.rank_cur == b.rank_cur &&
         a.flat == b.flat && a.note == b.note;
}
inline bool operator==(const OrderRecord& a, const OrderRecord& b) {
  return a.k == b.k && a.solver_status == b.solver_status && a.iterations == b.iterations &&
         a.flat_checks == b.flat_checks && a.note == b.note;
}

// The machine-readable record of one run. JSON serialization uses
// shortest-round-trip doubles, so documents survive a parse/emit cycle
// bit-for-bit in every numeric field; `timestamp` is informational only.
struct ResultDocument {
  std::string verdict;
  int n = 0;
  int k_reached = 0;
  std::vector<double> completion;  // row-major, empty unless Completable
  std::vector<std::vector<double>> atoms;
  std::vector<double> weights;
  double max_entry_error = 0.0;
  double max_simplex_residual = 0.0;
  double min_weight = 0.0;
  bool certificate_verified = false;
  double certificate_margin = 0.0;
  std::string path;
  std::string note;
  OrderLog log;
  // settings echo
  int d = 4;
  int k_max = 6;
  double rank_tol = 1e-6;
  double feas_tol = 1e-8;
  std::uint64_t seed = 1;
  std::string mode = "auto";
  double perturb = 0.0;
  std::string timestamp;  // excluded from determinism comparisons

  bool operator==(const ResultDocument&) const = default;
};

inline std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::Auto: return "auto";
    case RunMode::SdpOnly: return "sdp-only";
    case RunMode::FastOnly: return "fast-only";
  }
  return "auto";
}

inline ResultDocument make_result_document(const CompletionResult& r, int n,
                                           const DriverSettings& settings, double perturb) {
  ResultDocument doc;
  switch (r.verdict) {
    case Verdict::Completable: doc.verdict = "Completable"; break;
    case Verdict::NotCompletable: doc.verdict = "NotCompletable"; break;
    case Verdict::Inconclusive: doc.verdict = "Inconclusive"; break;
  }
  doc.n = n;
  doc.k_reached = r.k_reached;
  if (r.completion.size() > 0) {
    doc.completion.reserve(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) doc.completion.push_back(r.completion(i, j));
  }
  for (const auto& u : r.decomposition.atoms)
    doc.atoms.emplace_back(u.data(), u.data() + u.size());
  doc.weights = r.decomposition.weights;
  doc.max_entry_error = r.report.max_entry_error;
  doc.max_simplex_residual = r.report.max_simplex_residual;
  doc.min_weight = r.report.min_weight;
  doc.certificate_verified = r.certificate_verified;
  doc.certificate_margin = r.certificate.margin;
  doc.path = r.path;
  doc.note = r.note;
  doc.log = r.log;
  doc.d = settings.d;
  doc.k_max = settings.k_max;
  doc.rank_tol = settings.rank_tol;
  doc.feas_tol = settings.tol_feas;
  doc.seed = settings.seed;
  doc.mode = mode_name(settings.mode);
  doc.perturb = perturb;
  return doc;
}

inline void to_json(nlohmann::json& j, const FlatCheck& c) {
  j = nlohmann::json{{"t", c.t},       {"rank_prev", c.rank_prev}, {"rank_cur", c.rank_cur},
                     {"flat", c.flat}, {"note", c.note}};
}
inline void from_json(const nlohmann::json& j, FlatCheck& c) {
  j.at("t").get_to(c.t);
  j.at("rank_prev").get_to(c.rank_prev);
  j.at("rank_cur").get_to(c.rank_cur);
  j.at("flat").get_to(c.flat);
  j.at("note").get_to(c.note);
}
inline void to_json(nlohmann::json& j, const OrderRecord& r) {
  j = nlohmann::json{{"k", r.k},
                     {"status", r.solver_status},
                     {"iterations", r.iterations},
                     {"flat_checks", r.flat_checks},
                     {"note", r.note}};
}
inline void from_json(const nlohmann::json& j, OrderRecord& r) {
  j.at("k").get_to(r.k);
  j.at("status").get_to(r.solver_status);
  j.at("iterations").get_to(r.iterations);
  j.at("flat_checks").get_to(r.flat_checks);
  j.at("note").get_to(r.note);
}

inline void to_json(nlohmann::json& j, const ResultDocument& d) {
  j = nlohmann::json{{"verdict", d.verdict},
                     {"n", d.n},
                     {"k_reached", d.k_reached},
                     {"completion", d.completion},
                     {"atoms", d.atoms},
                     {"weights", d.weights},
                     {"verification",
                      {{"max_entry_error", d.max_entry_error},
                       {"max_simplex_residual", d.max_simplex_residual},
                       {"min_weight", d.min_weight}}},
                     {"certificate", {{"verified", d.certificate_verified}, {"margin", d.certificate_margin}}},
                     {"path", d.path},
                     {"note", d.note},
                     {"log", d.log},
                     {"settings",
                      {{"d", d.d},
                       {"k_max", d.k_max},
                       {"rank_tol", d.rank_tol},
                       {"feas_tol", d.feas_tol},
                       {"seed", d.seed},
                       {"mode", d.mode},
                       {"perturb", d.perturb}}},
                     {"timestamp", d.timestamp}};
}
inline void from_json(const nlohmann::json& j, ResultDocument& d) {
  j.at("verdict").get_to(d.verdict);
  j.at("n").get_to(d.n);
  j.at("k_reached").get_to(d.k_reached);
  j.at("completion").get_to(d.completion);
  j.at("atoms").get_to(d.atoms);
  j.at("weights").get_to(d.weights);
  j.at("verification").at("max_entry_error").get_to(d.max_entry_error);
  j.at("verification").at("max_simplex_residual").get_to(d.max_simplex_residual);
  j.at("verification").at("min_weight").get_to(d.min_weight);
  j.at("certificate").at("verified").get_to(d.certificate_verified);
  j.at("certificate").at("margin").get_to(d.certificate_margin);
  j.at("path").get_to(d.path);
  j.at("note").get_to(d.note);
  j.at("log").get_to(d.log);
  j.at("settings").at("d").get_to(d.d);
  j.at("settings").at("k_max").get_to(d.k_max);
  j.at("settings").at("rank_tol").get_to(d.rank_tol);
  j.at("settings").at("feas_tol").get_to(d.feas_tol);
  j.at("settings").at("seed").get_to(d.seed);
  j.at("settings").at("mode").get_to(d.mode);
  j.at("settings").at("perturb").get_to(d.perturb);
  j.at("timestamp").get_to(d.timestamp);
}

inline std::string result_to_json(const ResultDocument& d) {
  nlohmann::json j = d;
  return j.dump(2) + "\n";
}

inline ResultDocument result_from_json(const std::string& text) {
  return nlohmann::json::parse(text).get<ResultDocument>();
}

inline std::string result_to_text(const ResultDocument& d) {
  std::ostringstream os;
  os.precision(6);
  os << "verdict: " << d.verdict << "\n";
  os << "order reached: k = " << d.k_reached << " (path: " << d.path << ")\n";
  if (!d.note.empty()) os << "note: " << d.note << "\n";
  if (!d.completion.empty()) {
    os << "completed matrix:\n";
    for (int i = 0; i < d.n; ++i) {
      os << " ";
      for (int j = 0; j < d.n; ++j) os << " " << d.completion[i * d.n + j];
      os << "\n";
    }
  }
  if (!d.atoms.empty()) {
    os << "decomposition (" << d.atoms.size() << " atoms):\n";
    for (size_t i = 0; i < d.atoms.size(); ++i) {
      os << "  weight " << d.weights[i] << " atom (";
      for (size_t j = 0; j < d.atoms[i].size(); ++j)
        os << (j ? ", " : "") << d.atoms[i][j];
      os << ")\n";
    }
    os << "verification: max entry error " << d.max_entry_error << ", max simplex residual "
       << d.max_simplex_residual << ", min weight " << d.min_weight << "\n";
  }
  if (d.verdict == "NotCompletable") {
    os << "certificate: " << (d.certificate_verified ? "verified" : "not verified") << ", margin "
       << d.certificate_margin << "\n";
  }
  for (const auto& rec : d.log) {
    os << "k=" << rec.k << ": " << rec.solver_status << " (" << rec.iterations << " iterations)";
    for (const auto& c : rec.flat_checks) {
      os << " [t=" << c.t << " ranks " << c.rank_prev << "/" << c.rank_cur
         << (c.flat ? " flat" : "") << "]";
    }
    if (!rec.note.empty()) os << " " << rec.note;
    os << "\n";
  }
  os << "settings: d=" << d.d << " kmax=" << d.k_max << " rank-tol=" << d.rank_tol
     << " feas-tol=" << d.feas_tol << " seed=" << d.seed << " mode=" << d.mode;
  if (d.perturb > 0) os << " perturb=" << d.perturb;
  os << "\n";
  return os.str();
}

}  // namespace cpmc
