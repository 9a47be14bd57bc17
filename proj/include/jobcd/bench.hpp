#pragma once

// Benchmark harness: matrix readers, problem/solver dispatch, trace and summary writers.

#include "jobcd/baselines.hpp"
#include "jobcd/diagnostics.hpp"
#include "jobcd/vr_j_jobcd.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>

namespace jobcd {

enum class MatrixFormat { Csv, MatrixMarket };
enum class Problem { Hevp, Hspp, Quadratic };
enum class Solver { Gs, J, Vrj, Umcm, Admm };

inline Problem parse_problem(std::string_view s) {
  if (s == "hevp") return Problem::Hevp;
  if (s == "hspp") return Problem::Hspp;
  if (s == "quadratic") return Problem::Quadratic;
  throw Error("unknown problem '" + std::string(s) + "' (expected hevp, hspp or quadratic)");
}

inline Solver parse_solver(std::string_view s) {
  if (s == "gs") return Solver::Gs;
  if (s == "j") return Solver::J;
  if (s == "vrj") return Solver::Vrj;
  if (s == "umcm") return Solver::Umcm;
  if (s == "admm") return Solver::Admm;
  throw Error("unknown solver '" + std::string(s) + "' (expected gs, j, vrj, umcm or admm)");
}

inline const char* to_string(Problem p) {
  switch (p) {
    case Problem::Hevp: return "hevp";
    case Problem::Hspp: return "hspp";
    case Problem::Quadratic: return "quadratic";
  }
  return "?";
}

inline const char* to_string(Solver s) {
  switch (s) {
    case Solver::Gs: return "gs";
    case Solver::J: return "j";
    case Solver::Vrj: return "vrj";
    case Solver::Umcm: return "umcm";
    case Solver::Admm: return "admm";
  }
  return "?";
}

inline MatrixFormat parse_format(std::string_view s) {
  if (s == "csv") return MatrixFormat::Csv;
  if (s == "mm" || s == "mtx" || s == "matrixmarket") return MatrixFormat::MatrixMarket;
  throw Error("unknown matrix format '" + std::string(s) + "' (expected csv or matrixmarket)");
}

namespace bench_detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view tok, std::size_t line, std::size_t col) {
  const std::string s(trim(tok));
  char* end = nullptr;
  const double v = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                ": not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < s.size()) {
    while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    const std::size_t start = k;
    while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    if (k > start) out.push_back(s.substr(start, k - start));
  }
  return out;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline Matrix parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    std::size_t col = 1;
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), lineno, col));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      ++col;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error("dimension error at line " + std::to_string(lineno) + ": expected " +
                  std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "csv: no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Matrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  require(static_cast<bool>(std::getline(in, line)), "matrixmarket: empty input");
  ++lineno;
  const auto banner = split_ws(line);
  if (banner.size() < 5 || lower(banner[0]) != "%%matrixmarket" || lower(banner[1]) != "matrix")
    throw Error("parse error at line 1: missing '%%MatrixMarket matrix' banner");
  const std::string layout = lower(banner[2]);
  const std::string field = lower(banner[3]);
  const std::string symmetry = lower(banner[4]);
  require(layout == "array" || layout == "coordinate", "matrixmarket: unsupported layout '" + layout + "'");
  require(field == "real" || field == "integer" || field == "double" || (field == "pattern" && layout == "coordinate"),
          "matrixmarket: unsupported field '" + field + "'");
  require(symmetry == "general" || symmetry == "symmetric" || symmetry == "skew-symmetric",
          "matrixmarket: unsupported symmetry '" + symmetry + "'");

  const auto next_data_line = [&](std::vector<std::string_view>& toks) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '%') continue;
      toks = split_ws(line);
      return true;
    }
    return false;
  };
  const auto to_index = [&](std::string_view tok, std::size_t col) {
    const double v = parse_double(tok, lineno, col);
    if (v != std::floor(v) || v < 0)
      throw Error("parse error at line " + std::to_string(lineno) + ", column " + std::to_string(col) +
                  ": expected a non-negative integer");
    return static_cast<Index>(v);
  };

  std::vector<std::string_view> toks;
  if (!next_data_line(toks)) throw Error("matrixmarket: missing size line");
  const bool coord = layout == "coordinate";
  if (toks.size() != (coord ? 3u : 2u))
    throw Error("parse error at line " + std::to_string(lineno) + ": malformed size line");
  const Index rows = to_index(toks[0], 1);
  const Index cols = to_index(toks[1], 2);
  require(rows >= 1 && cols >= 1, "matrixmarket: empty matrix");
  const bool sym = symmetry != "general";
  const double mirror = symmetry == "skew-symmetric" ? -1.0 : 1.0;
  require(!sym || rows == cols, "matrixmarket: symmetric matrix must be square");
  Matrix m = Matrix::Zero(rows, cols);

  if (coord) {
    const Index nnz = to_index(toks[2], 3);
    for (Index k = 0; k < nnz; ++k) {
      if (!next_data_line(toks))
        throw Error("dimension error: expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
      const std::size_t want = field == "pattern" ? 2u : 3u;
      if (toks.size() != want)
        throw Error("parse error at line " + std::to_string(lineno) + ": expected " + std::to_string(want) +
                    " fields, found " + std::to_string(toks.size()));
      const Index i = to_index(toks[0], 1) - 1;
      const Index j = to_index(toks[1], 2) - 1;
      if (i < 0 || j < 0 || i >= rows || j >= cols)
        throw Error("dimension error at line " + std::to_string(lineno) + ": index out of range");
      const double v = field == "pattern" ? 1.0 : parse_double(toks[2], lineno, 3);
      m(i, j) += v;
      if (sym && i != j) m(j, i) += mirror * v;
    }
  } else {
    // Column-major; symmetric storage lists the lower triangle only.
    for (Index j = 0; j < cols; ++j) {
      for (Index i = sym ? j : 0; i < rows; ++i) {
        if (sym && symmetry == "skew-symmetric" && i == j) continue;
        if (!next_data_line(toks)) throw Error("dimension error: too few entries for a " + std::to_string(rows) +
                                               "x" + std::to_string(cols) + " array");
        if (toks.size() != 1)
          throw Error("parse error at line " + std::to_string(lineno) + ": expected one value per line");
        m(i, j) = parse_double(toks[0], lineno, 1);
        if (sym && i != j) m(j, i) = mirror * m(i, j);
      }
    }
  }
  if (next_data_line(toks)) throw Error("dimension error at line " + std::to_string(lineno) + ": trailing entries");
  return m;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace bench_detail

inline Matrix load_matrix(std::istream& in, MatrixFormat format) {
  return format == MatrixFormat::Csv ? bench_detail::parse_csv(in) : bench_detail::parse_matrix_market(in);
}

inline Matrix load_matrix(const std::string& path, MatrixFormat format) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  return load_matrix(in, format);
}

/// Format from the extension: .mtx / .mm are MatrixMarket, everything else CSV.
inline MatrixFormat guess_format(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : bench_detail::lower(path.substr(dot + 1));
  return (ext == "mtx" || ext == "mm") ? MatrixFormat::MatrixMarket : MatrixFormat::Csv;
}

struct RunSpec {
  Problem problem = Problem::Hevp;
  Solver solver = Solver::Gs;
  Index n = 10;
  Index p = 5;
  Index m = 20;
  std::uint64_t seed = 0;
  std::optional<double> theta;
  std::optional<double> varsigma;              // empty: auto
  std::optional<QMode> q_mode;                 // gs only; empty: problem default
  std::optional<double> time_limit;
  std::optional<std::size_t> max_iters;
  double alpha = 1.0;                          // hspp
  std::optional<Index> manifold_p;             // hspp; empty: p
  std::optional<std::string> data_path;        // m x n data (hevp, hspp)
  std::optional<std::string> targets_path;     // m x m targets (hspp)
  std::optional<MatrixFormat> data_format;     // empty: from the extension
  std::optional<std::string> trace_path;
  std::optional<std::string> summary_path;
  std::size_t trace_every = 1;
  bool omit_timing = false;
  unsigned threads = 0;                        // vrj; 0: hardware count
  bool vr_enabled = true;
  std::optional<Index> batch_large;
  std::optional<Index> batch_small;
  std::optional<double> switch_prob;
  // Baselines.
  double penalty = 10.0;
  std::optional<double> step;
  double dual_step = 1e-2;
};

struct RunSummary {
  double final_objective = 0.0;
  double final_residual = 0.0;
  std::size_t iters = 0;
  double elapsed = 0.0;
  std::vector<IterationRecord> trace;
  Matrix x;
};

inline void validate(const RunSpec& s) {
  require(s.n >= 1, "n must be >= 1");
  require(s.p >= 0 && s.p <= s.n, "p must satisfy 0 <= p <= n");
  require(s.m >= 1, "m must be >= 1");
  require(s.max_iters.has_value() || s.time_limit.has_value(), "one of --max-iters / --time-limit is required");
  require(!s.time_limit || *s.time_limit >= 0.0, "time limit must be >= 0");
  require(s.alpha > 0.0, "alpha must be positive");
  if (s.solver == Solver::Vrj || s.solver == Solver::J) require(s.n % 2 == 0, "n must be even");
  if (s.problem == Problem::Hspp) {
    const Index mp = s.manifold_p.value_or(s.p);
    require(mp >= 0 && mp < s.n, "hspp: the manifold signature needs at least one negative direction");
  }
}

/// Builds the objective for a spec. Data that is not supplied is drawn from N(0, 1)
/// with a stream derived from the run seed.
inline std::unique_ptr<FiniteSumObjective> build_objective(const RunSpec& s) {
  Rng data_rng(derive_seed(s.seed, 100));
  const auto load = [&](const std::string& path) { return load_matrix(path, s.data_format.value_or(guess_format(path))); };
  const auto data = [&] {
    if (!s.data_path) return detail::gaussian(s.m, s.n, data_rng);
    Matrix d = load(*s.data_path);
    require(d.cols() == s.n, "data has " + std::to_string(d.cols()) + " columns, expected n = " + std::to_string(s.n));
    return d;
  };
  switch (s.problem) {
    case Problem::Hevp:
      return std::make_unique<HevpObjective>(data());
    case Problem::Hspp: {
      const Matrix d = data();
      std::optional<Matrix> t;
      if (s.targets_path) {
        t = load(*s.targets_path);
        require(t->rows() == d.rows() && t->cols() == d.rows(), "targets must be m x m");
      }
      const Signature manifold(s.n, s.manifold_p.value_or(s.p));
      auto obj = std::make_unique<HsppObjective>(hspp_objective(d, t, s.alpha, manifold, s.seed));
      return obj;
    }
    case Problem::Quadratic: {
      // C symmetric Gaussian, D = BᵀB / n positive semidefinite.
      const Matrix g = detail::gaussian(s.n, s.n, data_rng);
      const Matrix b = detail::gaussian(s.n, s.n, data_rng);
      const Matrix c = 0.5 * (g + g.transpose());
      const Matrix dd = b.transpose() * b / static_cast<double>(s.n);
      auto quad = std::make_shared<QuadraticObjective>(c, dd);
      struct Owning final : FiniteSumObjective {
        std::shared_ptr<QuadraticObjective> q;
        explicit Owning(std::shared_ptr<QuadraticObjective> qq) : q(std::move(qq)) {}
        double value(const Matrix& x) const override { return q->value(x); }
        Matrix gradient(const Matrix& x) const override { return q->gradient(x); }
        const KroneckerH* kronecker() const override { return q->kronecker(); }
        double lipschitz_bound() const override { return q->lipschitz_bound(); }
        std::unique_ptr<ObjectiveTracker> track(const Matrix& x) const override { return q->track(x); }
        Index n_terms() const override { return 1; }
        double term_value(Index, const Matrix& x) const override { return q->value(x); }
        Matrix term_gradient(Index, const Matrix& x) const override { return q->gradient(x); }
      };
      return std::make_unique<Owning>(std::move(quad));
    }
  }
  throw Error("unknown problem");
}

/// Curvature mode for gs when not given: Exact where the objective carries a
/// Kronecker description (hevp with H = 0, quadratic), Scalar for hspp.
inline QMode default_q_mode(const RunSpec& s) {
  if (s.q_mode) return *s.q_mode;
  return s.problem == Problem::Hspp ? QMode::Scalar : QMode::Exact;
}

inline RunSummary run(const RunSpec& spec, const TraceCallback& on_trace = {}) {
  validate(spec);
  const auto obj = build_objective(spec);
  const Signature sig(spec.n, spec.p);
  const JOrthMatrix x0 = cs_random_init(sig, spec.seed);

  SolveResult res;
  switch (spec.solver) {
    case Solver::Gs: {
      GsConfig cfg;
      cfg.q_mode = default_q_mode(spec);
      cfg.theta = spec.theta;
      cfg.varsigma = spec.varsigma;
      cfg.max_iters = spec.max_iters;
      cfg.time_limit = spec.time_limit;
      cfg.seed = spec.seed;
      cfg.trace_every = spec.trace_every;
      res = gs_solve(*obj, x0, cfg, on_trace);
      break;
    }
    case Solver::J:
    case Solver::Vrj: {
      JacobiConfig cfg;
      cfg.theta = spec.theta;
      cfg.varsigma = spec.varsigma;
      cfg.max_iters = spec.max_iters;
      cfg.time_limit = spec.time_limit;
      cfg.seed = spec.seed;
      cfg.trace_every = spec.trace_every;
      cfg.vr_enabled = spec.solver == Solver::Vrj && spec.vr_enabled;
      cfg.batch_large = spec.batch_large;
      cfg.batch_small = spec.batch_small;
      cfg.switch_prob = spec.switch_prob;
      cfg.threads = spec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.threads;
      res = vrj_solve(*obj, x0, cfg, on_trace);
      break;
    }
    case Solver::Umcm:
    case Solver::Admm: {
      BaselineConfig cfg;
      cfg.penalty = spec.penalty;
      cfg.step = spec.step;
      cfg.dual_step = spec.dual_step;
      cfg.max_iters = spec.max_iters;
      cfg.time_limit = spec.time_limit;
      cfg.seed = spec.seed;
      cfg.trace_every = spec.trace_every;
      res = spec.solver == Solver::Umcm ? umcm_solve(*obj, x0, cfg, on_trace) : admm_solve(*obj, x0, cfg, on_trace);
      break;
    }
  }
  RunSummary out;
  out.final_objective = res.trace.back().objective;
  out.final_residual = res.trace.back().residual;
  out.iters = res.iters;
  out.elapsed = res.elapsed;
  out.trace = std::move(res.trace);
  out.x = res.x.x();
  return out;
}

inline void write_trace(std::ostream& os, const std::vector<IterationRecord>& trace, bool omit_timing = false) {
  using bench_detail::fmt;
  os << "iter,elapsed_s,objective,residual,step_norm_sq\n";
  for (const auto& r : trace)
    os << r.iter << ',' << (omit_timing ? "0" : fmt(r.elapsed)) << ',' << fmt(r.objective) << ','
       << fmt(r.residual) << ',' << fmt(r.v_dist) << '\n';
}

inline void write_summary(std::ostream& os, const RunSummary& s, bool omit_timing = false) {
  using bench_detail::fmt;
  os << "final_objective,final_residual,iters,elapsed_s\n"
     << fmt(s.final_objective) << ',' << fmt(s.final_residual) << ',' << s.iters << ','
     << (omit_timing ? "0" : fmt(s.elapsed)) << '\n';
}

/// Runs the spec and writes the trace / summary files it names.
inline RunSummary run_and_write(const RunSpec& spec) {
  RunSummary s = run(spec);
  if (spec.trace_path) {
    std::ofstream out(*spec.trace_path);
    require(static_cast<bool>(out), "cannot write '" + *spec.trace_path + "'");
    write_trace(out, s.trace, spec.omit_timing);
  }
  if (spec.summary_path) {
    std::ofstream out(*spec.summary_path);
    require(static_cast<bool>(out), "cannot write '" + *spec.summary_path + "'");
    write_summary(out, s, spec.omit_timing);
  }
  return s;
}

/// `objective(residual)` in two-decimal scientific notation, e.g. -3.96e+01(1.20e-10).
inline std::string result_cell(double objective, double residual) {
  return bench_detail::fmt_cell(objective) + "(" + bench_detail::fmt_cell(residual) + ")";
}

struct CompareRow {
  Solver solver = Solver::Gs;
  std::optional<RunSummary> summary;
  std::string error;
};

/// Runs every spec from the first spec's initialization seed and writes one CSV row
/// per spec. Per-row failures are reported in the `status` column.
inline std::vector<CompareRow> compare(std::vector<RunSpec> specs, std::ostream& os) {
  for (std::size_t k = 1; k < specs.size(); ++k) {
    const RunSpec& a = specs.front();
    const RunSpec& b = specs[k];
    require(a.problem == b.problem && a.n == b.n && a.p == b.p && a.m == b.m,
            "compare: all specs must share problem and dimensions (n, p, m)");
  }
  os << "solver,objective,residual,iters,cell,status\n";
  std::vector<CompareRow> rows;
  for (auto& s : specs) {
    s.seed = specs.front().seed;
    CompareRow row;
    row.solver = s.solver;
    try {
      row.summary = run(s);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    using bench_detail::fmt;
    os << to_string(s.solver) << ',';
    if (row.summary)
      os << fmt(row.summary->final_objective) << ',' << fmt(row.summary->final_residual) << ','
         << row.summary->iters << ',' << result_cell(row.summary->final_objective, row.summary->final_residual)
         << ",ok\n";
    else
      os << ",,,ERROR," << bench_detail::csv_quote("error: " + row.error) << '\n';
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace jobcd
