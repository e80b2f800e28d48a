#pragma once

// A tiny structured imperative language over 64-bit integers: assignments,
// if/else, while and output statements. Every statement gets a stable 1-based
// index in source order; the interpreter records coverage, the executed
// occurrence trace and dynamic data/control dependence edges.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pcd {

using StmtIndex = int;  // 1-based statement number S_1..S_N
using Value = std::int64_t;
using Valuation = std::map<std::string, Value>;

enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnaryOp { Neg, Not };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Literal, Variable, Unary, Binary };
  Kind kind = Kind::Literal;
  Value literal = 0;
  std::string name;
  UnaryOp unary_op = UnaryOp::Neg;
  BinaryOp binary_op = BinaryOp::Add;
  ExprPtr lhs;  // operand of unary, left of binary
  ExprPtr rhs;
};

enum class StmtKind { Assign, If, While, Output };

struct Statement {
  StmtIndex index = 0;
  StmtKind kind = StmtKind::Assign;
  std::string target;                // Assign
  ExprPtr expr;                      // Assign value, If/While condition
  std::vector<std::string> outputs;  // Output
  std::vector<StmtIndex> then_body;  // If/While body
  std::vector<StmtIndex> else_body;  // If only
  StmtIndex parent = 0;              // enclosing If/While, 0 at top level
  int line = 0;
};

struct Program {
  std::vector<std::string> inputs;     // declared with `input a, b`
  std::vector<Statement> statements;   // statements[i].index == i + 1
  std::vector<StmtIndex> top_level;

  std::size_t size() const noexcept { return statements.size(); }
  const Statement& at(StmtIndex index) const;
};

Program parse(std::string_view source);

/// Canonical source text; parse(to_source(p)) reproduces p's structure.
std::string to_source(const Program& program);

/// Tokens of one statement's own header (bodies excluded).
std::vector<std::string> statement_tokens(const Program& program, StmtIndex index);

/// Variables read by a statement's own expression / output list.
std::vector<std::string> statement_uses(const Statement& statement);

// ---------------------------------------------------------------- execution

struct Occurrence {
  StmtIndex stmt = 0;
  std::string def;                // variable written, empty if none
  std::vector<std::string> uses;  // distinct variables read, sorted

  bool operator==(const Occurrence&) const = default;
};

struct DataEdge {
  std::size_t use = 0;  // occurrence reading `var`
  std::size_t def = 0;  // its dynamically most recent definition
  std::string var;

  bool operator==(const DataEdge&) const = default;
};

struct ControlEdge {
  std::size_t occurrence = 0;
  std::size_t predicate = 0;

  bool operator==(const ControlEdge&) const = default;
};

struct OutputEvent {
  std::size_t occurrence = 0;
  std::string var;
  Value value = 0;

  bool operator==(const OutputEvent&) const = default;
};

enum class Verdict { Pass, Fail };
enum class Fault { None, RuntimeFault, NonTermination };

struct ExecutionRecord {
  std::string test_id;
  std::vector<std::uint8_t> coverage;  // length N
  std::vector<Occurrence> trace;
  std::vector<DataEdge> data_edges;
  std::vector<ControlEdge> control_edges;
  std::vector<OutputEvent> output_events;
  Valuation outputs;  // last emitted value per variable
  Verdict verdict = Verdict::Pass;
  Fault fault = Fault::None;
  std::string fault_message;
  std::optional<std::size_t> fault_occurrence;
  /// Index into output_events of the earliest wrong output (see execute).
  std::optional<std::size_t> first_wrong_output;

  bool failed() const noexcept { return verdict == Verdict::Fail; }
  bool operator==(const ExecutionRecord&) const = default;
};

struct ExecOptions {
  std::size_t loop_cap = 10000;  // total while-iterations per run
};

/// Runs `program` on `input`. With an oracle the verdict is Fail iff a runtime
/// fault or non-termination occurred, or the final output map differs from
/// the oracle. A program with no output statement is compared on its final
/// variable values instead. Without an oracle only faults fail. A wrong output is the last
/// emission of a variable whose final value is wrong (or unexpected); the
/// earliest such emission in the trace is `first_wrong_output`.
ExecutionRecord execute(const Program& program, const Valuation& input,
                        const std::optional<Valuation>& oracle,
                        const ExecOptions& options = {});

// ---------------------------------------------------------------- mutation

enum class MutationKind { ConstantReplacement, OperatorFlip, OffByOne };

struct Mutation {
  StmtIndex target = 0;
  MutationKind kind = MutationKind::ConstantReplacement;
  /// Replacement literal (constant), operator spelling (flip) or "+1"/"-1".
  std::string payload;
  /// Which literal / operator of the statement, in pre-order.
  int occurrence = 0;

  bool operator==(const Mutation&) const = default;
};

std::string to_string(MutationKind kind);
MutationKind mutation_kind_from_string(std::string_view text);
std::string to_string(BinaryOp op);

/// Returns a copy of `program` with exactly one statement rewritten.
Program seed_fault(const Program& program, const Mutation& mutation);

/// All single-token mutations applicable to a program, in statement order.
std::vector<Mutation> enumerate_mutations(const Program& program);

}  // namespace pcd
