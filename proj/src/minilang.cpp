#include "pcd/minilang.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "pcd/error.hpp"

namespace pcd {

namespace {

// ------------------------------------------------------------------ lexer

enum class Tok { Ident, Number, Keyword, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

bool is_keyword(std::string_view word) {
  return word == "if" || word == "else" || word == "while" || word == "output" ||
         word == "input";
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ';') {
      advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      tok.text = std::string(src.substr(i, j - i));
      tok.kind = is_keyword(tok.text) ? Tok::Keyword : Tok::Ident;
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      tok.text = std::string(src.substr(i, j - i));
      tok.kind = Tok::Number;
      advance(j - i);
    } else {
      static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||"};
      tok.kind = Tok::Punct;
      bool matched = false;
      if (i + 1 < src.size()) {
        for (const char* op : two) {
          if (src[i] == op[0] && src[i + 1] == op[1]) {
            tok.text = op;
            matched = true;
            break;
          }
        }
      }
      if (!matched) {
        if (std::string_view("+-*/%<>=!(){},").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        tok.text = std::string(1, c);
      }
      advance(tok.text.size());
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

// ------------------------------------------------------------------ parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program run() {
    while (peek_is(Tok::Keyword, "input")) {
      next();
      do {
        program_.inputs.push_back(expect(Tok::Ident, "input name").text);
      } while (accept(","));
    }
    program_.top_level = block_items(/*parent=*/0, /*closing=*/false);
    return std::move(program_);
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool peek_is(Tok kind, std::string_view text) const {
    return peek().kind == kind && peek().text == text;
  }
  const Token& next() { return toks_[pos_++]; }
  bool accept(std::string_view punct) {
    if (peek_is(Tok::Punct, punct)) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(what + ", found " + found, t.line, t.column);
  }
  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail("expected " + what);
    return next();
  }
  void expect_punct(std::string_view punct) {
    if (!accept(punct)) fail("expected '" + std::string(punct) + "'");
  }

  std::vector<StmtIndex> block_items(StmtIndex parent, bool closing) {
    std::vector<StmtIndex> items;
    while (true) {
      if (closing && accept("}")) return items;
      if (peek().kind == Tok::End) {
        if (closing) fail("expected '}'");
        return items;
      }
      items.push_back(statement(parent));
    }
  }

  std::vector<StmtIndex> block(StmtIndex parent) {
    expect_punct("{");
    return block_items(parent, true);
  }

  StmtIndex reserve(StmtKind kind, StmtIndex parent, int line) {
    Statement s;
    s.index = static_cast<StmtIndex>(program_.statements.size()) + 1;
    s.kind = kind;
    s.parent = parent;
    s.line = line;
    program_.statements.push_back(std::move(s));
    return program_.statements.back().index;
  }
  Statement& stmt(StmtIndex idx) { return program_.statements[idx - 1]; }

  StmtIndex statement(StmtIndex parent) {
    const Token& head = peek();
    if (head.kind == Tok::Keyword && head.text == "if") return if_statement(parent);
    if (head.kind == Tok::Keyword && head.text == "while") {
      next();
      const StmtIndex idx = reserve(StmtKind::While, parent, head.line);
      expect_punct("(");
      ExprPtr cond = expr();
      expect_punct(")");
      stmt(idx).expr = std::move(cond);
      auto body = block(idx);
      stmt(idx).then_body = std::move(body);
      return idx;
    }
    if (head.kind == Tok::Keyword && head.text == "output") {
      next();
      const StmtIndex idx = reserve(StmtKind::Output, parent, head.line);
      expect_punct("(");
      std::vector<std::string> vars;
      do {
        vars.push_back(expect(Tok::Ident, "variable name").text);
      } while (accept(","));
      expect_punct(")");
      stmt(idx).outputs = std::move(vars);
      return idx;
    }
    if (head.kind == Tok::Ident) {
      const int line = head.line;
      std::string name = next().text;
      expect_punct("=");
      const StmtIndex idx = reserve(StmtKind::Assign, parent, line);
      ExprPtr value = expr();
      stmt(idx).target = std::move(name);
      stmt(idx).expr = std::move(value);
      return idx;
    }
    fail("expected a statement");
  }

  StmtIndex if_statement(StmtIndex parent) {
    const int line = next().line;
    const StmtIndex idx = reserve(StmtKind::If, parent, line);
    expect_punct("(");
    ExprPtr cond = expr();
    expect_punct(")");
    stmt(idx).expr = std::move(cond);
    auto then_body = block(idx);
    stmt(idx).then_body = std::move(then_body);
    if (peek_is(Tok::Keyword, "else")) {
      next();
      std::vector<StmtIndex> else_body;
      if (peek_is(Tok::Keyword, "if"))
        else_body.push_back(if_statement(idx));
      else
        else_body = block(idx);
      stmt(idx).else_body = std::move(else_body);
    }
    return idx;
  }

  // precedence climbing
  static int precedence(std::string_view op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return 0;
  }
  static BinaryOp binary_from(std::string_view op) {
    if (op == "+") return BinaryOp::Add;
    if (op == "-") return BinaryOp::Sub;
    if (op == "*") return BinaryOp::Mul;
    if (op == "/") return BinaryOp::Div;
    if (op == "%") return BinaryOp::Mod;
    if (op == "<") return BinaryOp::Lt;
    if (op == "<=") return BinaryOp::Le;
    if (op == ">") return BinaryOp::Gt;
    if (op == ">=") return BinaryOp::Ge;
    if (op == "==") return BinaryOp::Eq;
    if (op == "!=") return BinaryOp::Ne;
    if (op == "&&") return BinaryOp::And;
    return BinaryOp::Or;
  }

  ExprPtr expr(int min_prec = 1) {
    ExprPtr lhs = unary();
    while (peek().kind == Tok::Punct) {
      const int prec = precedence(peek().text);
      if (prec == 0 || prec < min_prec) break;
      const std::string op = next().text;
      ExprPtr rhs = expr(prec + 1);
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Binary;
      node->binary_op = binary_from(op);
      node->lhs = std::move(lhs);
      node->rhs = std::move(rhs);
      lhs = std::move(node);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (peek_is(Tok::Punct, "-") || peek_is(Tok::Punct, "!")) {
      const bool neg = next().text == "-";
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Unary;
      node->unary_op = neg ? UnaryOp::Neg : UnaryOp::Not;
      node->lhs = unary();
      return node;
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Literal;
      try {
        node->literal = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        fail("integer literal out of range");
      }
      next();
      return node;
    }
    if (t.kind == Tok::Ident) {
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Variable;
      node->name = next().text;
      return node;
    }
    if (accept("(")) {
      ExprPtr inner = expr();
      expect_punct(")");
      return inner;
    }
    fail("expected an expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program program_;
};

void collect_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      break;
    case Expr::Kind::Variable:
      out.insert(e.name);
      break;
    case Expr::Kind::Unary:
      collect_vars(*e.lhs, out);
      break;
    case Expr::Kind::Binary:
      collect_vars(*e.lhs, out);
      collect_vars(*e.rhs, out);
      break;
  }
}

void validate(Program& program) {
  std::set<std::string> assigned;
  for (const auto& s : program.statements)
    if (s.kind == StmtKind::Assign) assigned.insert(s.target);
  if (program.inputs.empty()) {
    std::set<std::string> free;
    for (const auto& s : program.statements)
      for (const auto& v : statement_uses(s))
        if (!assigned.count(v)) free.insert(v);
    program.inputs.assign(free.begin(), free.end());
    return;
  }
  const std::set<std::string> inputs(program.inputs.begin(), program.inputs.end());
  for (const auto& s : program.statements)
    for (const auto& v : statement_uses(s))
      if (!assigned.count(v) && !inputs.count(v))
        throw ParseError("variable '" + v + "' is neither an input nor assigned", s.line, 1);
}

// ------------------------------------------------------------------ printer

int precedence_of(const Expr& e) {
  if (e.kind != Expr::Kind::Binary) return 10;
  switch (e.binary_op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    default: return 6;
  }
}

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      return std::to_string(e.literal);
    case Expr::Kind::Variable:
      return e.name;
    case Expr::Kind::Unary: {
      std::string inner = print_expr(*e.lhs);
      if (e.lhs->kind == Expr::Kind::Binary) inner = "(" + inner + ")";
      return (e.unary_op == UnaryOp::Neg ? "-" : "!") + inner;
    }
    case Expr::Kind::Binary: {
      const int p = precedence_of(e);
      std::string l = print_expr(*e.lhs);
      std::string r = print_expr(*e.rhs);
      if (precedence_of(*e.lhs) < p) l = "(" + l + ")";
      if (precedence_of(*e.rhs) <= p) r = "(" + r + ")";
      return l + " " + to_string(e.binary_op) + " " + r;
    }
  }
  return {};
}

std::string header_text(const Statement& s) {
  switch (s.kind) {
    case StmtKind::Assign:
      return s.target + " = " + print_expr(*s.expr);
    case StmtKind::If:
      return "if (" + print_expr(*s.expr) + ") {";
    case StmtKind::While:
      return "while (" + print_expr(*s.expr) + ") {";
    case StmtKind::Output: {
      std::string out = "output(";
      for (std::size_t i = 0; i < s.outputs.size(); ++i)
        out += (i ? ", " : "") + s.outputs[i];
      return out + ")";
    }
  }
  return {};
}

void print_block(const Program& p, const std::vector<StmtIndex>& items, int depth,
                 std::ostringstream& os) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (StmtIndex idx : items) {
    const Statement& s = p.at(idx);
    os << pad << header_text(s) << '\n';
    if (s.kind == StmtKind::If || s.kind == StmtKind::While) {
      print_block(p, s.then_body, depth + 1, os);
      if (!s.else_body.empty()) {
        os << pad << "} else {\n";
        print_block(p, s.else_body, depth + 1, os);
      }
      os << pad << "}\n";
    }
  }
}

// --------------------------------------------------------------- execution

struct Abort {};

class Interpreter {
 public:
  Interpreter(const Program& program, const Valuation& input, const ExecOptions& opts,
              ExecutionRecord& rec)
      : program_(program), vars_(input), opts_(opts), rec_(rec) {}

  const Valuation& state() const { return vars_; }

  void run() {
    try {
      exec_block(program_.top_level, std::nullopt);
    } catch (const Abort&) {
    }
  }

 private:
  std::size_t begin(StmtIndex idx, std::optional<std::size_t> control,
                    const std::vector<std::string>& uses, std::string def) {
    const std::size_t occ = rec_.trace.size();
    Occurrence o;
    o.stmt = idx;
    o.uses = uses;
    o.def = std::move(def);
    rec_.trace.push_back(std::move(o));
    if (control) rec_.control_edges.push_back({occ, *control});
    for (const auto& v : uses) {
      auto it = last_def_.find(v);
      if (it != last_def_.end()) rec_.data_edges.push_back({occ, it->second, v});
    }
    return occ;
  }

  [[noreturn]] void fault(std::size_t occ, Fault kind, std::string message) {
    rec_.fault = kind;
    rec_.fault_message = std::move(message);
    rec_.fault_occurrence = occ;
    throw Abort{};
  }

  Value eval(const Expr& e, std::size_t occ) {
    switch (e.kind) {
      case Expr::Kind::Literal:
        return e.literal;
      case Expr::Kind::Variable: {
        auto it = vars_.find(e.name);
        if (it == vars_.end())
          fault(occ, Fault::RuntimeFault, "read of unassigned variable '" + e.name + "'");
        return it->second;
      }
      case Expr::Kind::Unary: {
        const Value v = eval(*e.lhs, occ);
        if (e.unary_op == UnaryOp::Not) return v == 0 ? 1 : 0;
        if (v == std::numeric_limits<Value>::min())
          fault(occ, Fault::RuntimeFault, "integer overflow");
        return -v;
      }
      case Expr::Kind::Binary: {
        // Both operands are always evaluated so every listed use is a read.
        const Value a = eval(*e.lhs, occ);
        const Value b = eval(*e.rhs, occ);
        Value r = 0;
        switch (e.binary_op) {
          case BinaryOp::Add:
            if (__builtin_add_overflow(a, b, &r)) fault(occ, Fault::RuntimeFault, "integer overflow");
            return r;
          case BinaryOp::Sub:
            if (__builtin_sub_overflow(a, b, &r)) fault(occ, Fault::RuntimeFault, "integer overflow");
            return r;
          case BinaryOp::Mul:
            if (__builtin_mul_overflow(a, b, &r)) fault(occ, Fault::RuntimeFault, "integer overflow");
            return r;
          case BinaryOp::Div:
          case BinaryOp::Mod:
            if (b == 0) fault(occ, Fault::RuntimeFault, "division by zero");
            if (a == std::numeric_limits<Value>::min() && b == -1)
              fault(occ, Fault::RuntimeFault, "integer overflow");
            return e.binary_op == BinaryOp::Div ? a / b : a % b;
          case BinaryOp::Lt: return a < b;
          case BinaryOp::Le: return a <= b;
          case BinaryOp::Gt: return a > b;
          case BinaryOp::Ge: return a >= b;
          case BinaryOp::Eq: return a == b;
          case BinaryOp::Ne: return a != b;
          case BinaryOp::And: return (a != 0) && (b != 0);
          case BinaryOp::Or: return (a != 0) || (b != 0);
        }
      }
    }
    return 0;
  }

  void exec_block(const std::vector<StmtIndex>& items, std::optional<std::size_t> control) {
    for (StmtIndex idx : items) exec(program_.at(idx), control);
  }

  void exec(const Statement& s, std::optional<std::size_t> control) {
    const auto uses = statement_uses(s);
    switch (s.kind) {
      case StmtKind::Assign: {
        const std::size_t occ = begin(s.index, control, uses, s.target);
        vars_[s.target] = eval(*s.expr, occ);
        last_def_[s.target] = occ;
        break;
      }
      case StmtKind::Output: {
        const std::size_t occ = begin(s.index, control, uses, {});
        for (const auto& v : s.outputs) {
          auto it = vars_.find(v);
          if (it == vars_.end())
            fault(occ, Fault::RuntimeFault, "output of unassigned variable '" + v + "'");
          rec_.output_events.push_back({occ, v, it->second});
        }
        break;
      }
      case StmtKind::If: {
        const std::size_t occ = begin(s.index, control, uses, {});
        if (eval(*s.expr, occ) != 0)
          exec_block(s.then_body, occ);
        else
          exec_block(s.else_body, occ);
        break;
      }
      case StmtKind::While: {
        std::optional<std::size_t> governing = control;
        while (true) {
          const std::size_t occ = begin(s.index, governing, uses, {});
          if (eval(*s.expr, occ) == 0) break;
          if (++iterations_ > opts_.loop_cap)
            fault(occ, Fault::NonTermination,
                  "loop iteration cap " + std::to_string(opts_.loop_cap) + " exceeded");
          exec_block(s.then_body, occ);
          governing = occ;
        }
        break;
      }
    }
  }

  const Program& program_;
  Valuation vars_;
  const ExecOptions& opts_;
  ExecutionRecord& rec_;
  std::map<std::string, std::size_t> last_def_;
  std::size_t iterations_ = 0;
};

// ---------------------------------------------------------------- mutation

ExprPtr rewrite(const ExprPtr& e, const std::function<ExprPtr(const Expr&)>& visit) {
  if (ExprPtr replaced = visit(*e)) return replaced;
  if (e->kind == Expr::Kind::Unary) {
    ExprPtr inner = rewrite(e->lhs, visit);
    if (inner == e->lhs) return e;
    auto copy = std::make_shared<Expr>(*e);
    copy->lhs = std::move(inner);
    return copy;
  }
  if (e->kind == Expr::Kind::Binary) {
    ExprPtr l = rewrite(e->lhs, visit);
    ExprPtr r = rewrite(e->rhs, visit);
    if (l == e->lhs && r == e->rhs) return e;
    auto copy = std::make_shared<Expr>(*e);
    copy->lhs = std::move(l);
    copy->rhs = std::move(r);
    return copy;
  }
  return e;
}

void preorder(const Expr& e, const std::function<void(const Expr&)>& f) {
  f(e);
  if (e.lhs) preorder(*e.lhs, f);
  if (e.rhs) preorder(*e.rhs, f);
}

std::optional<BinaryOp> binary_from_spelling(std::string_view s) {
  static const std::pair<const char*, BinaryOp> table[] = {
      {"+", BinaryOp::Add}, {"-", BinaryOp::Sub},  {"*", BinaryOp::Mul},  {"/", BinaryOp::Div},
      {"%", BinaryOp::Mod}, {"<", BinaryOp::Lt},   {"<=", BinaryOp::Le},  {">", BinaryOp::Gt},
      {">=", BinaryOp::Ge}, {"==", BinaryOp::Eq},  {"!=", BinaryOp::Ne},  {"&&", BinaryOp::And},
      {"||", BinaryOp::Or}};
  for (const auto& [text, op] : table)
    if (s == text) return op;
  return std::nullopt;
}

BinaryOp flipped(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return BinaryOp::Sub;
    case BinaryOp::Sub: return BinaryOp::Add;
    case BinaryOp::Mul: return BinaryOp::Add;
    case BinaryOp::Div: return BinaryOp::Mul;
    case BinaryOp::Mod: return BinaryOp::Div;
    case BinaryOp::Lt: return BinaryOp::Le;
    case BinaryOp::Le: return BinaryOp::Lt;
    case BinaryOp::Gt: return BinaryOp::Ge;
    case BinaryOp::Ge: return BinaryOp::Gt;
    case BinaryOp::Eq: return BinaryOp::Ne;
    case BinaryOp::Ne: return BinaryOp::Eq;
    case BinaryOp::And: return BinaryOp::Or;
    case BinaryOp::Or: return BinaryOp::And;
  }
  return op;
}

}  // namespace

const Statement& Program::at(StmtIndex index) const {
  if (index < 1 || static_cast<std::size_t>(index) > statements.size())
    throw InvalidTarget("statement S" + std::to_string(index) + " out of range 1.." +
                        std::to_string(statements.size()));
  return statements[static_cast<std::size_t>(index) - 1];
}

Program parse(std::string_view source) {
  Program p = Parser(lex(source)).run();
  validate(p);
  return p;
}

std::string to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

std::string to_source(const Program& program) {
  std::ostringstream os;
  if (!program.inputs.empty()) {
    os << "input ";
    for (std::size_t i = 0; i < program.inputs.size(); ++i)
      os << (i ? ", " : "") << program.inputs[i];
    os << '\n';
  }
  print_block(program, program.top_level, 0, os);
  return os.str();
}

std::vector<std::string> statement_tokens(const Program& program, StmtIndex index) {
  std::vector<std::string> out;
  for (auto& t : lex(header_text(program.at(index))))
    if (t.kind != Tok::End) out.push_back(std::move(t.text));
  return out;
}

std::vector<std::string> statement_uses(const Statement& s) {
  std::set<std::string> vars;
  if (s.kind == StmtKind::Output)
    vars.insert(s.outputs.begin(), s.outputs.end());
  else if (s.expr)
    collect_vars(*s.expr, vars);
  return {vars.begin(), vars.end()};
}

ExecutionRecord execute(const Program& program, const Valuation& input,
                        const std::optional<Valuation>& oracle, const ExecOptions& options) {
  ExecutionRecord rec;
  Interpreter interp(program, input, options, rec);
  interp.run();
  const bool has_outputs = std::any_of(program.statements.begin(), program.statements.end(),
                                       [](const Statement& s) { return s.kind == StmtKind::Output; });

  rec.coverage.assign(program.size(), 0);
  for (const auto& occ : rec.trace) rec.coverage[static_cast<std::size_t>(occ.stmt) - 1] = 1;

  std::map<std::string, std::size_t> last_event;
  for (std::size_t i = 0; i < rec.output_events.size(); ++i) {
    rec.outputs[rec.output_events[i].var] = rec.output_events[i].value;
    last_event[rec.output_events[i].var] = i;
  }

  bool wrong = rec.fault != Fault::None;
  if (oracle) {
    for (const auto& [var, value] : rec.outputs) {
      auto it = oracle->find(var);
      if (it == oracle->end() || it->second != value) {
        wrong = true;
        const std::size_t ev = last_event[var];
        if (!rec.first_wrong_output || ev < *rec.first_wrong_output) rec.first_wrong_output = ev;
      }
    }
    for (const auto& [var, value] : *oracle) {
      if (rec.outputs.count(var)) continue;
      // programs without output statements are judged on their final store
      const auto it = interp.state().find(var);
      if (has_outputs || it == interp.state().end() || it->second != value) wrong = true;
    }
  }
  rec.verdict = wrong ? Verdict::Fail : Verdict::Pass;
  return rec;
}

std::string to_string(MutationKind kind) {
  switch (kind) {
    case MutationKind::ConstantReplacement: return "constant-replacement";
    case MutationKind::OperatorFlip: return "operator-flip";
    case MutationKind::OffByOne: return "off-by-one";
  }
  return "?";
}

MutationKind mutation_kind_from_string(std::string_view text) {
  if (text == "constant-replacement") return MutationKind::ConstantReplacement;
  if (text == "operator-flip") return MutationKind::OperatorFlip;
  if (text == "off-by-one") return MutationKind::OffByOne;
  throw InvalidTarget("unknown mutation kind '" + std::string(text) + "'");
}

Program seed_fault(const Program& program, const Mutation& m) {
  const Statement& target = program.at(m.target);
  if (!target.expr)
    throw InvalidTarget("S" + std::to_string(m.target) + " has no expression to mutate");

  int seen = 0;
  bool applied = false;
  auto visit = [&](const Expr& e) -> ExprPtr {
    if (applied) return nullptr;
    const bool literal_kind = m.kind != MutationKind::OperatorFlip;
    if (literal_kind && e.kind == Expr::Kind::Literal) {
      if (seen++ != m.occurrence) return nullptr;
      auto copy = std::make_shared<Expr>(e);
      try {
        if (m.kind == MutationKind::ConstantReplacement) {
          copy->literal = std::stoll(m.payload);
        } else {
          const Value delta = std::stoll(m.payload);
          if (delta != 1 && delta != -1) throw InvalidTarget("off-by-one payload must be +1 or -1");
          copy->literal = e.literal + delta;
        }
      } catch (const std::logic_error&) {
        throw InvalidTarget("bad literal payload '" + m.payload + "'");
      }
      applied = true;
      return copy;
    }
    if (!literal_kind && e.kind == Expr::Kind::Binary) {
      if (seen++ != m.occurrence) return nullptr;
      auto op = binary_from_spelling(m.payload);
      if (!op) throw InvalidTarget("unknown operator '" + m.payload + "'");
      auto copy = std::make_shared<Expr>(e);
      copy->binary_op = *op;
      applied = true;
      return copy;
    }
    return nullptr;
  };
  ExprPtr mutated = rewrite(target.expr, visit);
  if (!applied)
    throw InvalidTarget("S" + std::to_string(m.target) + " has no " +
                        (m.kind == MutationKind::OperatorFlip ? "operator" : "literal") + " #" +
                        std::to_string(m.occurrence));

  Program out = program;
  out.statements[static_cast<std::size_t>(m.target) - 1].expr = std::move(mutated);
  return out;
}

std::vector<Mutation> enumerate_mutations(const Program& program) {
  std::vector<Mutation> out;
  for (const auto& s : program.statements) {
    if (!s.expr) continue;
    int literal = 0;
    int op = 0;
    preorder(*s.expr, [&](const Expr& e) {
      if (e.kind == Expr::Kind::Literal) {
        if (e.literal != 0)
          out.push_back({s.index, MutationKind::ConstantReplacement, "0", literal});
        out.push_back({s.index, MutationKind::OffByOne, "+1", literal});
        out.push_back({s.index, MutationKind::OffByOne, "-1", literal});
        ++literal;
      } else if (e.kind == Expr::Kind::Binary) {
        out.push_back({s.index, MutationKind::OperatorFlip, to_string(flipped(e.binary_op)), op});
        ++op;
      }
    });
  }
  return out;
}

}  // namespace pcd
