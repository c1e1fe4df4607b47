#include "poincare/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

namespace poincare {

struct Expression::Node {
  enum Kind { number, symbol, unary_minus, binary, call } kind = number;
  double value = 0.0;
  std::string name;  // symbol, function or operator
  int slot = -1;
  std::vector<std::shared_ptr<Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<Expression::Node>;

const std::map<std::string, int>& function_arity() {
  static const std::map<std::string, int> table = {
      {"sin", 1},  {"cos", 1},  {"tan", 1},   {"exp", 1},   {"log", 1},
      {"sqrt", 1}, {"abs", 1},  {"atan2", 2}, {"arg", 2},
  };
  return table;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("expression: " + msg + " at column " +
                          std::to_string(pos_ + 1) + " in '" + s_ + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  static NodePtr make_binary(const std::string& op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Expression::Node::binary;
    n->name = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary("+", lhs, term());
      } else if (accept('-')) {
        lhs = make_binary("-", lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary("*", lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary("/", lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than ^, so -x^2 = -(x^2).
  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Expression::Node::unary_minus;
      n->args = {unary()};
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_binary("^", base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    std::string name = s_.substr(start, pos_ - start);
    if (accept('[')) {
      skip();
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) fail("expected index");
      name += "[" + s_.substr(digits, pos_ - digits) + "]";
      expect(']');
    }
    auto n = std::make_shared<Expression::Node>();
    if (accept('(')) {
      const auto it = function_arity().find(name);
      if (it == function_arity().end()) fail("unknown function '" + name + "'");
      n->kind = Expression::Node::call;
      n->name = name;
      n->args.push_back(expr());
      while (accept(',')) n->args.push_back(expr());
      expect(')');
      if (static_cast<int>(n->args.size()) != it->second) {
        fail("'" + name + "' takes " + std::to_string(it->second) + " argument(s)");
      }
      return n;
    }
    if (name == "pi") {
      n->value = std::numbers::pi;
      return n;
    }
    n->kind = Expression::Node::symbol;
    n->name = name;
    return n;
  }
};

void collect(const NodePtr& n, std::set<std::string>& out) {
  if (n->kind == Expression::Node::symbol) out.insert(n->name);
  for (const auto& a : n->args) collect(a, out);
}

void bind_node(const NodePtr& n, const std::map<std::string, int>& symbols) {
  if (n->kind == Expression::Node::symbol) {
    const auto it = symbols.find(n->name);
    if (it == symbols.end()) {
      throw ExpressionError("expression: unknown symbol '" + n->name + "'");
    }
    n->slot = it->second;
  }
  for (const auto& a : n->args) bind_node(a, symbols);
}

double eval(const Expression::Node& n, const Vector& v) {
  switch (n.kind) {
    case Expression::Node::number:
      return n.value;
    case Expression::Node::symbol:
      if (n.slot < 0 || n.slot >= v.size()) {
        throw ExpressionError("expression: symbol '" + n.name + "' is not bound");
      }
      return v(n.slot);
    case Expression::Node::unary_minus:
      return -eval(*n.args[0], v);
    case Expression::Node::binary: {
      const double a = eval(*n.args[0], v);
      const double b = eval(*n.args[1], v);
      switch (n.name[0]) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return b == 0.0 ? std::nan("") : a / b;
        default: return std::pow(a, b);
      }
    }
    case Expression::Node::call: {
      const double a = eval(*n.args[0], v);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "tan") return std::tan(a);
      if (n.name == "exp") return std::exp(a);
      if (n.name == "log") return a > 0.0 ? std::log(a) : std::nan("");
      if (n.name == "sqrt") return a >= 0.0 ? std::sqrt(a) : std::nan("");
      if (n.name == "abs") return std::abs(a);
      const double b = eval(*n.args[1], v);
      if (n.name == "atan2") return std::atan2(a, b);
      return std::atan2(b, a);  // arg(x, y)
    }
  }
  return std::nan("");
}

}  // namespace

Expression::Expression(const std::string& text)
    : text_(text), root_(Parser(text).parse()) {}

void Expression::bind(const std::map<std::string, int>& symbols) {
  if (!root_) throw ExpressionError("expression: empty");
  bind_node(root_, symbols);
}

double Expression::evaluate(const Vector& values) const {
  if (!root_) throw ExpressionError("expression: empty");
  return eval(*root_, values);
}

std::vector<std::string> Expression::identifiers() const {
  std::set<std::string> names;
  if (root_) collect(root_, names);
  return {names.begin(), names.end()};
}

std::map<std::string, int> state_symbols(const SystemSpec& sys) {
  std::map<std::string, int> table;
  const int dim = sys.dimension();
  for (int i = 0; i < dim; ++i) table["s[" + std::to_string(i) + "]"] = i;
  std::vector<std::string> names;
  switch (sys.kind) {
    case SystemKind::harmonic:
      names = {"x", "xdot"};
      break;
    case SystemKind::kepler:
      names = {"x", "y", "xdot", "ydot"};
      break;
    case SystemKind::pendulum:
      names = {"theta1", "theta2", "theta1dot", "theta2dot"};
      break;
    case SystemKind::mirror:
      names = {"rho", "z", "rhodot", "zdot"};
      break;
    case SystemKind::threebody:
      names = {"x1", "y1", "x2", "y2", "x3", "y3",
               "x1dot", "y1dot", "x2dot", "y2dot", "x3dot", "y3dot"};
      break;
  }
  for (int i = 0; i < dim; ++i) table[names[static_cast<std::size_t>(i)]] = i;
  int slot = dim;
  for (const auto& [name, value] : sys.params) table[name] = slot++;
  // Defaults for parameters that were not set explicitly.
  for (const char* name : {"eps", "mass"}) {
    if (table.count(name)) continue;
    if ((sys.kind == SystemKind::kepler && std::string(name) == "eps") ||
        (sys.kind == SystemKind::threebody && std::string(name) == "mass")) {
      table[name] = slot++;
    }
  }
  return table;
}

Vector symbol_values(const SystemSpec& sys, const Vector& state) {
  const auto table = state_symbols(sys);
  int slots = 0;
  for (const auto& [name, slot] : table) slots = std::max(slots, slot + 1);
  Vector v(slots);
  v.head(state.size()) = state;
  for (const auto& [name, slot] : table) {
    if (slot >= state.size()) v(slot) = sys.param(name);
  }
  return v;
}

}  // namespace poincare
