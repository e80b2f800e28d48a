#include "pcd/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcd/error.hpp"
#include "pcd/rng.hpp"
#include "pcd/slicing.hpp"
#include "pcd/spectra.hpp"

namespace fs = std::filesystem;

namespace pcd {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  os << text;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const char* kGoldenSource = R"(# golden 16-statement example
input x, y, z, w
if (x > 0) {
  a = x + 1
  k = 6
  if (w > 0) {
    b = a * 2
    c = b + w
  }
  d1 = k * y
  d2 = k * z
  if (w > 5) {
    e = a + w
  }
  if (y > 0) {
    g = a + y
  }
  h = a * 3
  output(d1)
  output(d2)
} else {
  output(x)
}
)";

}  // namespace

ProgramTemplate parse_template(const std::string& name, const std::string& text) {
  ProgramTemplate t;
  t.name = name;
  t.source = text;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string l = trim(line);
    if (l.rfind("#@", 0) != 0) continue;
    std::istringstream ds(l.substr(2));
    std::string key;
    ds >> key;
    if (key == "tests") {
      if (!(ds >> t.tests) || t.tests < 2) throw TemplateError(name + ":" + std::to_string(lineno) + ": bad test count");
    } else if (key == "range") {
      std::string var;
      Value lo = 0, hi = 0;
      if (!(ds >> var >> lo >> hi) || lo > hi)
        throw TemplateError(name + ":" + std::to_string(lineno) + ": expected `range <var> <lo> <hi>`");
      t.ranges[var] = {lo, hi};
    } else {
      throw TemplateError(name + ":" + std::to_string(lineno) + ": unknown directive '" + key + "'");
    }
  }
  return t;
}

CorpusSpec load_corpus_spec(const std::string& dir) {
  CorpusSpec spec;
  const fs::path root(dir);
  const fs::path tdir = root / "templates";
  if (!fs::is_directory(tdir)) throw IoError("no templates directory under " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(tdir))
    if (e.is_regular_file() && e.path().extension() == ".ml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) spec.templates.push_back(parse_template(f.stem().string(), read_file(f)));

  const fs::path plan = root / "plan.txt";
  if (fs::exists(plan)) {
    std::istringstream is(read_file(plan));
    std::string line;
    while (std::getline(is, line)) {
      line = trim(line.substr(0, line.find('#')));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("plan.txt: expected key = value in '" + line + "'");
      const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key == "mutations_per_template")
        spec.mutations_per_template = std::stoi(value);
      else if (key == "include_golden")
        spec.include_golden = value == "true" || value == "1";
      else if (key == "min_context")
        spec.min_context = std::stoi(value);
      else
        throw ConfigError("plan.txt: unknown key '" + key + "'");
    }
  }
  return spec;
}

FaultyVersion golden_version() {
  FaultyVersion v;
  v.id = "golden-analog";
  v.reference = parse(kGoldenSource);
  v.mutation = {3, MutationKind::ConstantReplacement, "0", 0};
  v.program = seed_fault(v.reference, v.mutation);
  v.faulty = {3};
  const std::vector<Valuation> inputs = {
      {{"x", 1}, {"y", 0}, {"z", 0}, {"w", 6}},  {{"x", 2}, {"y", 0}, {"z", 0}, {"w", 0}},
      {{"x", 3}, {"y", 2}, {"z", 0}, {"w", 7}},  {{"x", -1}, {"y", 1}, {"z", 1}, {"w", 1}},
      {{"x", -2}, {"y", 3}, {"z", 2}, {"w", 9}}, {{"x", 1}, {"y", 0}, {"z", 3}, {"w", 8}},
  };
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    v.tests.push_back({"t" + std::to_string(i + 1), inputs[i], execute(v.reference, inputs[i], std::nullopt).outputs});
  }
  return v;
}

namespace {

std::vector<TestCase> draw_tests(const Program& reference, const ProgramTemplate& tmpl, std::uint64_t seed) {
  auto rng = substream(seed, "tests:" + tmpl.name);
  std::vector<TestCase> tests;
  for (int i = 0; i < tmpl.tests; ++i) {
    TestCase tc;
    tc.id = "t" + std::to_string(i + 1);
    for (const auto& var : reference.inputs) {
      const auto it = tmpl.ranges.find(var);
      const auto [lo, hi] = it == tmpl.ranges.end() ? std::pair<Value, Value>{-10, 10} : it->second;
      tc.inputs[var] = std::uniform_int_distribution<Value>(lo, hi)(rng);
    }
    const auto rec = execute(reference, tc.inputs, std::nullopt);
    if (rec.fault != Fault::None)
      throw TemplateError(tmpl.name + ": reference program has no oracle for " + tc.id + " (" +
                          rec.fault_message + ")");
    if (rec.outputs.empty()) throw TemplateError(tmpl.name + ": reference program emits no output for " + tc.id);
    tc.oracle = rec.outputs;
    tests.push_back(std::move(tc));
  }
  return tests;
}

bool admissible(const FaultyVersion& v, int min_context) {
  const auto records = run_suite(v);
  int fails = 0;
  for (const auto& r : records) {
    if (r.fault == Fault::NonTermination) return false;
    fails += r.failed() ? 1 : 0;
  }
  const int passes = static_cast<int>(records.size()) - fails;
  if (fails < 1 || fails >= passes) return false;
  try {
    const auto ctx = fault_context(build_spectra(records), records);
    return static_cast<int>(ctx.stm_sc.size()) >= min_context;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::vector<FaultyVersion> generate_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  std::vector<FaultyVersion> out;
  if (spec.include_golden) out.push_back(golden_version());

  for (const auto& tmpl : spec.templates) {
    Program reference;
    try {
      reference = parse(tmpl.source);
    } catch (const ParseError& e) {
      throw TemplateError(tmpl.name + ": " + e.what());
    }
    const auto tests = draw_tests(reference, tmpl, seed);

    auto mutations = enumerate_mutations(reference);
    auto rng = substream(seed, "mutations:" + tmpl.name);
    std::shuffle(mutations.begin(), mutations.end(), rng);

    int kept = 0;
    for (const auto& m : mutations) {
      if (kept == spec.mutations_per_template) break;
      FaultyVersion v;
      v.reference = reference;
      v.mutation = m;
      v.program = seed_fault(reference, m);
      v.faulty = {m.target};
      v.tests = tests;
      if (!admissible(v, spec.min_context)) continue;
      ++kept;
      v.id = tmpl.name + "-m" + std::to_string(kept);
      out.push_back(std::move(v));
    }
    if (kept < spec.mutations_per_template)
      throw TemplateError(tmpl.name + ": only " + std::to_string(kept) + " admissible mutants");
  }
  return out;
}

namespace {

nlohmann::ordered_json valuation_json(const Valuation& v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, x] : v) j[k] = x;
  return j;
}

Valuation valuation_from(const nlohmann::json& j) {
  Valuation v;
  for (auto it = j.begin(); it != j.end(); ++it) v[it.key()] = it.value().get<Value>();
  return v;
}

}  // namespace

void write_corpus(const std::vector<FaultyVersion>& versions, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  for (const auto& v : versions) {
    const fs::path vd = fs::path(dir) / v.id;
    fs::create_directories(vd, ec);
    if (ec) throw IoError("cannot create " + vd.string() + ": " + ec.message());
    write_file(vd / "program.ml", to_source(v.program));
    write_file(vd / "reference.ml", to_source(v.reference));

    nlohmann::ordered_json m;
    m["target"] = v.mutation.target;
    m["kind"] = to_string(v.mutation.kind);
    m["payload"] = v.mutation.payload;
    m["occurrence"] = v.mutation.occurrence;
    m["faulty"] = v.faulty;
    write_file(vd / "mutation.json", m.dump(2) + "\n");

    nlohmann::ordered_json tests = nlohmann::ordered_json::array();
    for (const auto& t : v.tests)
      tests.push_back({{"id", t.id}, {"inputs", valuation_json(t.inputs)}, {"oracle", valuation_json(t.oracle)}});
    write_file(vd / "tests.json", tests.dump(2) + "\n");
  }
}

std::size_t corpus_gen(const CorpusSpec& spec, std::uint64_t seed, const std::string& out_dir) {
  const auto versions = generate_corpus(spec, seed);
  write_corpus(versions, out_dir);
  return versions.size();
}

FaultyVersion load_version(const std::string& dir) {
  const fs::path vd(dir);
  FaultyVersion v;
  v.id = vd.filename().string();
  if (v.id.empty()) v.id = vd.parent_path().filename().string();
  v.program = parse(read_file(vd / "program.ml"));
  v.reference = parse(read_file(vd / "reference.ml"));
  try {
    const auto m = nlohmann::json::parse(read_file(vd / "mutation.json"));
    v.mutation.target = m.at("target").get<StmtIndex>();
    v.mutation.kind = mutation_kind_from_string(m.at("kind").get<std::string>());
    v.mutation.payload = m.at("payload").get<std::string>();
    v.mutation.occurrence = m.at("occurrence").get<int>();
    v.faulty = m.at("faulty").get<std::vector<StmtIndex>>();
    for (const auto& t : nlohmann::json::parse(read_file(vd / "tests.json")))
      v.tests.push_back({t.at("id").get<std::string>(), valuation_from(t.at("inputs")), valuation_from(t.at("oracle"))});
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(v.id + ": " + e.what());
  }
  return v;
}

std::vector<std::string> list_versions(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory " + dir + " does not exist");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "program.ml")) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ExecutionRecord> run_suite(const FaultyVersion& version, const ExecOptions& options) {
  std::vector<ExecutionRecord> records;
  for (const auto& t : version.tests) {
    auto r = execute(version.program, t.inputs, t.oracle, options);
    r.test_id = t.id;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace pcd
