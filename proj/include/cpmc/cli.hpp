#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "driver.hpp"
#include "matrix_io.hpp"

namespace cpmc {

// exit codes: 0 Completable, 1 NotCompletable, 2 Inconclusive,
// 3 usage/parse error, 4 internal failure
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"decides whether a partial symmetric matrix extends to a completely positive one"};
  app.get_formatter()->column_width(28);

  std::string input_path;
  DriverSettings settings;
  double perturb = 0.0;
  std::string mode = "auto";
  std::string out_path;
  std::string format = "json";

  app.add_option("input", input_path, "matrix file (`*` marks missing entries, `#` comments)")
      ->required();
  app.add_option("--d", settings.d, "degree of the random convex objective (even, > 2)");
  app.add_option("--kmax", settings.k_max, "highest relaxation order tried");
  app.add_option("--seed", settings.seed, "random seed (objective and extraction)");
  app.add_option("--rank-tol", settings.rank_tol, "singular value threshold for the rank test");
  app.add_option("--feas-tol", settings.tol_feas, "solver feasibility tolerance");
  app.add_option("--mode", mode, "auto | sdp-only | fast-only")
      ->check(CLI::IsMember({"auto", "sdp-only", "fast-only"}));
  app.add_option("--perturb", perturb, "add this to every given diagonal before solving");
  app.add_option("--out", out_path, "write the result document here instead of stdout");
  app.add_option("--format", format, "json | text")->check(CLI::IsMember({"json", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream oss;
    const int code = app.exit(e, oss, oss);
    err << oss.str();
    return code == 0 ? 0 : 3;  // --help exits cleanly
  }

  if (mode == "sdp-only") settings.mode = RunMode::SdpOnly;
  else if (mode == "fast-only") settings.mode = RunMode::FastOnly;
  else settings.mode = RunMode::Auto;

  PartialSymMatrix A{IndexSet(1, {}), {}};
  try {
    std::ifstream in(input_path);
    if (!in) {
      err << "cannot open " << input_path << "\n";
      return 3;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    A = parse_matrix(buf.str());
    if (perturb > 0.0) A = perturb_given_diagonals(A, perturb);
    else if (perturb < 0.0) throw ParseError("--perturb must be positive");
  } catch (const std::exception& e) {
    err << "parse error: " << e.what() << "\n";
    return 3;
  }

  CompletionResult result;
  try {
    result = fast_path_dispatch(A, settings);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 4;
  }

  ResultDocument doc = make_result_document(result, A.order(), settings, perturb);
  {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&tt));
    doc.timestamp = buf;
  }

  const std::string payload = (format == "text") ? result_to_text(doc) : result_to_json(doc);
  if (!out_path.empty()) {
    std::ofstream of(out_path);
    if (!of) {
      err << "cannot write " << out_path << "\n";
      return 3;
    }
    of << payload;
  } else {
    out << payload;
  }

  switch (result.verdict) {
    case Verdict::Completable: return 0;
    case Verdict::NotCompletable: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 4;
}

}  // namespace cpmc
