#include "pcd/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pcd/error.hpp"

namespace pcd {

CoverageDataset build_spectra(const std::vector<ExecutionRecord>& records) {
  if (records.empty()) throw EmptySuite("no execution records");
  const auto n = static_cast<Eigen::Index>(records.front().coverage.size());
  const auto m = static_cast<Eigen::Index>(records.size());

  CoverageDataset ds;
  ds.matrix.resize(m, n);
  ds.errors.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(rec.coverage.size()) != n)
      throw EmptySuite("records come from programs of different sizes");
    for (Eigen::Index j = 0; j < n; ++j) ds.matrix(i, j) = rec.coverage[static_cast<std::size_t>(j)];
    ds.errors(i) = rec.failed() ? 1 : 0;
    ds.test_ids.push_back(rec.test_id.empty() ? "t" + std::to_string(i + 1) : rec.test_id);
  }
  for (Eigen::Index j = 0; j < n; ++j) ds.stmt_ids.push_back("S" + std::to_string(j + 1));
  ds.provenance.assign(static_cast<std::size_t>(m), Provenance::Real);
  return ds;
}

SpectrumTally tally(const CoverageDataset& ds) {
  const Eigen::Index n = ds.statements();
  const int fails = static_cast<int>(ds.failing());
  const int passes = static_cast<int>(ds.passing());
  SpectrumTally t;
  // errors^T * X counts failing executions per column.
  t.a_ef = (ds.errors.transpose() * ds.matrix).transpose();
  t.a_ep = ds.matrix.colwise().sum().transpose() - t.a_ef;
  t.a_nf = Eigen::VectorXi::Constant(n, fails) - t.a_ef;
  t.a_np = Eigen::VectorXi::Constant(n, passes) - t.a_ep;
  return t;
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

Eigen::VectorXd score(Formula formula, const SpectrumTally& t) {
  const Eigen::Index n = t.a_ef.size();
  Eigen::VectorXd s(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ef = t.a_ef(j), ep = t.a_ep(j), nf = t.a_nf(j), np = t.a_np(j);
    switch (formula) {
      case Formula::Dstar:
        // Executed by every failing test and no passing one: the x/0 case is
        // mapped just above the largest finite value any statement can reach.
        s(j) = ep + nf == 0.0 && ef > 0.0 ? ef * ef + 1.0 : safe_div(ef * ef, ep + nf);
        break;
      case Formula::Ochiai:
        s(j) = safe_div(ef, std::sqrt((ef + nf) * (ef + ep)));
        break;
      case Formula::Barinel:
        s(j) = ep + ef == 0.0 ? 0.0 : 1.0 - ep / (ep + ef);
        break;
      case Formula::Gp02:
        s(j) = ef + ep == 0.0 ? 0.0 : 2.0 * (ef + std::sqrt(np)) + std::sqrt(ep);
        break;
    }
  }
  return s;
}

RankedList rank(const Eigen::VectorXd& scores) {
  const auto n = static_cast<std::size_t>(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (!std::isfinite(scores(j)))
      throw NonFiniteScore("score of S" + std::to_string(j + 1) + " is not finite");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });

  RankedList r;
  r.scores = scores;
  r.rank_of.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    r.order.push_back(static_cast<StmtIndex>(idx[pos]) + 1);
    r.rank_of[idx[pos]] = static_cast<int>(pos) + 1;
  }
  return r;
}

Eigen::MatrixXi select_columns(const Eigen::MatrixXi& matrix, const std::vector<StmtIndex>& stmts) {
  Eigen::MatrixXi out(matrix.rows(), static_cast<Eigen::Index>(stmts.size()));
  for (std::size_t k = 0; k < stmts.size(); ++k) {
    if (stmts[k] < 1 || stmts[k] > matrix.cols())
      throw InvalidTarget("statement S" + std::to_string(stmts[k]) + " outside the matrix");
    out.col(static_cast<Eigen::Index>(k)) = matrix.col(stmts[k] - 1);
  }
  return out;
}

std::string to_string(Formula f) {
  switch (f) {
    case Formula::Dstar: return "dstar";
    case Formula::Ochiai: return "ochiai";
    case Formula::Barinel: return "barinel";
    case Formula::Gp02: return "gp02";
  }
  return "?";
}

Formula formula_from_string(std::string_view text) {
  for (Formula f : {Formula::Dstar, Formula::Ochiai, Formula::Barinel, Formula::Gp02})
    if (to_string(f) == text) return f;
  throw ConfigError("unknown SFL formula '" + std::string(text) + "'");
}

std::string to_csv(const CoverageDataset& ds, bool with_provenance) {
  std::ostringstream os;
  os << "test";
  for (const auto& id : ds.stmt_ids) os << ',' << id;
  os << ",result";
  if (with_provenance) os << ",provenance";
  os << '\n';
  for (Eigen::Index i = 0; i < ds.tests(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    os << (row < ds.test_ids.size() ? ds.test_ids[row] : "t" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < ds.statements(); ++j) os << ',' << ds.matrix(i, j);
    os << ',' << ds.errors(i);
    if (with_provenance)
      os << ','
         << (row < ds.provenance.size() && ds.provenance[row] == Provenance::Synthetic ? "synthetic"
                                                                                        : "real");
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

int bit(const std::string& cell, std::size_t line) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw DatasetFormatError("line " + std::to_string(line) + ": expected 0/1, got '" + cell + "'");
}

}  // namespace

CoverageDataset from_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line)) throw DatasetFormatError("empty CSV");
  const auto header = split(line);
  const bool has_prov = !header.empty() && header.back() == "provenance";
  const std::size_t tail = has_prov ? 2 : 1;
  if (header.size() < 2 + tail || header[header.size() - tail] != "result")
    throw DatasetFormatError("header must be test,<statements...>,result[,provenance]");
  const std::size_t n = header.size() - 1 - tail;

  CoverageDataset ds;
  ds.stmt_ids.assign(header.begin() + 1, header.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  std::vector<std::vector<int>> rows;
  std::vector<int> errors;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DatasetFormatError("line " + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " cells");
    ds.test_ids.push_back(cells[0]);
    std::vector<int> row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = bit(cells[1 + j], lineno);
    rows.push_back(std::move(row));
    errors.push_back(bit(cells[1 + n], lineno));
    ds.provenance.push_back(has_prov && cells.back() == "synthetic" ? Provenance::Synthetic
                                                                    : Provenance::Real);
  }
  ds.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  ds.errors.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j)
      ds.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.errors(static_cast<Eigen::Index>(i)) = errors[i];
  }
  return ds;
}

}  // namespace pcd
