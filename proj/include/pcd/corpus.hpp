#pragma once

// Faulty-version corpora: program templates with input ranges, single-token
// mutants of them, and generated test suites with reference oracles.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcd/minilang.hpp"

namespace pcd {

struct TestCase {
  std::string id;
  Valuation inputs;
  Valuation oracle;
};

/// A reference program plus how to draw its test inputs. Directives live in
/// `#@` comment lines of the template source:
///   #@ tests 24
///   #@ range x -5 5
struct ProgramTemplate {
  std::string name;
  std::string source;
  int tests = 24;
  std::map<std::string, std::pair<Value, Value>> ranges;  // inclusive; default [-10, 10]
};

ProgramTemplate parse_template(const std::string& name, const std::string& text);

struct FaultyVersion {
  std::string id;
  Program program;    // faulty
  Program reference;  // correct
  Mutation mutation;
  std::vector<StmtIndex> faulty;  // ground truth
  std::vector<TestCase> tests;
};

struct CorpusSpec {
  std::vector<ProgramTemplate> templates;
  int mutations_per_template = 1;
  bool include_golden = true;
  int min_context = 4;  // smallest admissible slice union
};

/// Reads `<dir>/templates/*.ml` (sorted by file name) and the optional
/// key=value `<dir>/plan.txt` (mutations_per_template, include_golden).
CorpusSpec load_corpus_spec(const std::string& dir);

/// The 16-statement golden version: 4 passing and 2 failing
/// tests, fault at S3 (k = 0 instead of 6).
FaultyVersion golden_version();

/// Deterministic in `seed`. Tests are drawn per template; a mutant is kept
/// when it fails at least one test but fewer than half, never loops forever
/// and its failing slices cover at least `min_context` statements. Throws
/// TemplateError when a template does not parse, its reference faults on a
/// drawn input, or no mutant qualifies.
std::vector<FaultyVersion> generate_corpus(const CorpusSpec& spec, std::uint64_t seed);

/// Writes one directory per version (program.ml, reference.ml,
/// mutation.json, tests.json).
void write_corpus(const std::vector<FaultyVersion>& versions, const std::string& dir);

/// corpus_gen: generate_corpus + write_corpus; returns the version count.
std::size_t corpus_gen(const CorpusSpec& spec, std::uint64_t seed, const std::string& out_dir);

FaultyVersion load_version(const std::string& dir);
/// Version directories under `dir`, sorted by name.
std::vector<std::string> list_versions(const std::string& dir);

/// Executes every test of the version against its faulty program.
std::vector<ExecutionRecord> run_suite(const FaultyVersion& version, const ExecOptions& options = {});

}  // namespace pcd
