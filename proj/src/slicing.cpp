#include "pcd/slicing.hpp"

#include <algorithm>
#include <set>

#include "pcd/error.hpp"
#include "pcd/spectra.hpp"

namespace pcd {

SliceCriterion default_criterion(const ExecutionRecord& record) {
  SliceCriterion c;
  c.input_test = record.test_id;
  if (record.first_wrong_output) {
    const auto& ev = record.output_events[*record.first_wrong_output];
    c.occurrence = ev.occurrence;
    c.output_stm = record.trace[ev.occurrence].stmt;
    for (const auto& e : record.output_events)
      if (e.occurrence == ev.occurrence) c.output_vars.push_back(e.var);
    return c;
  }
  std::optional<std::size_t> occ = record.fault_occurrence;
  if (!occ && !record.output_events.empty()) occ = record.output_events.back().occurrence;
  if (!occ && !record.trace.empty()) occ = record.trace.size() - 1;
  if (!occ) throw CriterionNotExecuted("test '" + record.test_id + "' executed nothing");
  c.occurrence = occ;
  c.output_stm = record.trace[*occ].stmt;
  c.output_vars = record.trace[*occ].uses;
  return c;
}

std::vector<StmtIndex> dynamic_slice(const ExecutionRecord& record,
                                     const SliceCriterion& criterion) {
  if (!criterion.input_test.empty() && !record.test_id.empty() &&
      criterion.input_test != record.test_id)
    throw CriterionNotExecuted("criterion names test '" + criterion.input_test +
                               "' but the record is '" + record.test_id + "'");

  std::optional<std::size_t> start = criterion.occurrence;
  if (start) {
    if (*start >= record.trace.size() || record.trace[*start].stmt != criterion.output_stm)
      throw CriterionNotExecuted("occurrence does not execute S" +
                                 std::to_string(criterion.output_stm));
  } else {
    for (std::size_t i = record.trace.size(); i-- > 0;)
      if (record.trace[i].stmt == criterion.output_stm) {
        start = i;
        break;
      }
    if (!start)
      throw CriterionNotExecuted("S" + std::to_string(criterion.output_stm) +
                                 " does not occur in the trace of '" + record.test_id + "'");
  }

  const std::size_t n = record.trace.size();
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<std::vector<std::pair<std::size_t, const std::string*>>> data(n);
  for (const auto& e : record.data_edges) data[e.use].push_back({e.def, &e.var});
  for (const auto& e : record.control_edges) preds[e.occurrence].push_back(e.predicate);

  const std::set<std::string> wanted(criterion.output_vars.begin(), criterion.output_vars.end());
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> work{*start};
  seen[*start] = 1;
  while (!work.empty()) {
    const std::size_t occ = work.back();
    work.pop_back();
    auto push = [&](std::size_t next) {
      if (!seen[next]) {
        seen[next] = 1;
        work.push_back(next);
      }
    };
    for (std::size_t p : preds[occ]) push(p);
    for (const auto& [def, var] : data[occ])
      if (occ != *start || wanted.empty() || wanted.count(*var)) push(def);
  }

  std::set<StmtIndex> stmts;
  for (std::size_t i = 0; i < n; ++i)
    if (seen[i]) stmts.insert(record.trace[i].stmt);
  return {stmts.begin(), stmts.end()};
}

FaultSemanticContext fault_context(const CoverageDataset& dataset,
                                   const std::vector<ExecutionRecord>& failing,
                                   const std::vector<SliceCriterion>& criteria) {
  if (failing.empty()) throw NoFailingTests("fault context needs at least one failing test");
  if (failing.size() != criteria.size())
    throw CriterionNotExecuted("one criterion per failing record is required");

  std::set<StmtIndex> united;
  for (std::size_t i = 0; i < failing.size(); ++i)
    for (StmtIndex s : dynamic_slice(failing[i], criteria[i])) united.insert(s);

  FaultSemanticContext ctx;
  ctx.stm_sc.assign(united.begin(), united.end());
  ctx.context_matrix = select_columns(dataset.matrix, ctx.stm_sc);
  return ctx;
}

FaultSemanticContext fault_context(const CoverageDataset& dataset,
                                   const std::vector<ExecutionRecord>& records,
                                   std::optional<std::size_t> max_failing) {
  std::vector<ExecutionRecord> failing;
  std::vector<SliceCriterion> criteria;
  for (const auto& r : records) {
    if (!r.failed()) continue;
    if (max_failing && failing.size() >= *max_failing) break;
    failing.push_back(r);
    criteria.push_back(default_criterion(r));
  }
  return fault_context(dataset, failing, criteria);
}

}  // namespace pcd
