#include "sit/minilang/parser.hpp"

#include <functional>
#include <memory>

#include "sit/error.hpp"

namespace sit::minilang {

namespace {

constexpr int kMaxDepth = 200;

struct Tmp {
  std::string kind;
  int token = -1;
  std::vector<std::unique_ptr<Tmp>> kids;
};
using TmpPtr = std::unique_ptr<Tmp>;

TmpPtr make(std::string kind) {
  auto t = std::make_unique<Tmp>();
  t->kind = std::move(kind);
  return t;
}

std::string terminal_kind(const Token& t) {
  switch (t.kind) {
    case TokenKind::kIdentifier: return "Name";
    case TokenKind::kInteger:
    case TokenKind::kString: return "Constant";
    case TokenKind::kKeyword: return "Keyword";
    case TokenKind::kOperator: return "Op";
    case TokenKind::kPunctuation: return "Punct";
  }
  return "Punct";
}

class Parser {
 public:
  explicit Parser(std::span<const Token> toks) : toks_(toks) {}

  TmpPtr program() {
    auto root = make("Module");
    if (toks_.empty()) return root;
    const int indent = toks_[0].col;
    while (!eof()) {
      if (!line_initial(pos_) || peek().col != indent)
        fail(peek().col > indent ? "statement at block indentation" : "newline");
      root->kids.push_back(statement(indent));
    }
    return root;
  }

 private:
  std::span<const Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxDepth) p.fail("shallower nesting");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  bool eof() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  bool line_initial(std::size_t i) const {
    return i == 0 || (i < toks_.size() && toks_[i].line > toks_[i - 1].line);
  }
  bool at(std::string_view lexeme) const {
    return !eof() && peek().lexeme == lexeme &&
           peek().kind != TokenKind::kString;
  }
  bool at_kind(TokenKind k) const { return !eof() && peek().kind == k; }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ParseError(expected, eof() ? "end of input" : "'" + peek().lexeme + "'",
                     pos_);
  }

  TmpPtr terminal() {
    if (eof()) fail("token");
    auto t = make(terminal_kind(peek()));
    t->token = static_cast<int>(pos_++);
    return t;
  }
  TmpPtr expect(std::string_view lexeme) {
    if (!at(lexeme)) fail("'" + std::string(lexeme) + "'");
    return terminal();
  }
  TmpPtr expect_name() {
    if (!at_kind(TokenKind::kIdentifier)) fail("identifier");
    return terminal();
  }

  // A statement must be followed by a line break, the end of input, or a
  // dedent handled by the caller.
  void end_of_statement() {
    if (!eof() && !line_initial(pos_)) fail("newline");
  }

  TmpPtr statement(int indent) {
    DepthGuard g(*this);
    if (at("def")) return funcdef(indent);
    if (at("if")) return if_stmt(indent, "if");
    if (at("while")) return loop(indent);
    if (at("for")) return for_stmt(indent);
    auto s = simple_statement();
    end_of_statement();
    return s;
  }

  TmpPtr simple_statement() {
    if (at("return")) {
      auto n = make("Return");
      n->kids.push_back(terminal());
      n->kids.push_back(expression());
      return n;
    }
    if (at_kind(TokenKind::kIdentifier) && pos_ + 1 < toks_.size() &&
        toks_[pos_ + 1].lexeme == "=" &&
        toks_[pos_ + 1].kind == TokenKind::kOperator) {
      auto n = make("Assign");
      n->kids.push_back(terminal());
      n->kids.push_back(terminal());
      n->kids.push_back(expression());
      return n;
    }
    if (eof() || at_kind(TokenKind::kKeyword)) fail("statement");
    auto n = make("Expr");
    n->kids.push_back(expression());
    return n;
  }

  // Parses `':' suite` and appends the colon and body statements to `owner`.
  void suite(Tmp& owner, int indent) {
    owner.kids.push_back(expect(":"));
    if (eof()) fail("statement");
    if (peek().line == toks_[pos_ - 1].line) {
      owner.kids.push_back(simple_statement());
      end_of_statement();
      return;
    }
    const int block = peek().col;
    if (block <= indent) fail("indented block");
    while (!eof() && line_initial(pos_) && peek().col >= block) {
      if (peek().col != block) fail("statement at block indentation");
      owner.kids.push_back(statement(block));
    }
    if (!eof() && line_initial(pos_) && peek().col > indent)
      fail("dedent to an enclosing block");
  }

  // True when the next token continues the compound statement at `indent`
  // (elif/else clause).
  bool continues(std::string_view kw, int indent) const {
    return at(kw) && line_initial(pos_) && peek().col == indent;
  }

  TmpPtr funcdef(int indent) {
    auto n = make("FunctionDef");
    n->kids.push_back(terminal());
    n->kids.push_back(expect_name());
    n->kids.push_back(expect("("));
    if (!at(")")) {
      auto args = make("Arguments");
      args->kids.push_back(expect_name());
      while (at(",")) {
        args->kids.push_back(terminal());
        args->kids.push_back(expect_name());
      }
      n->kids.push_back(std::move(args));
    }
    n->kids.push_back(expect(")"));
    suite(*n, indent);
    return n;
  }

  TmpPtr if_stmt(int indent, std::string_view kw) {
    auto n = make("If");
    n->kids.push_back(expect(kw));
    n->kids.push_back(expression());
    suite(*n, indent);
    if (continues("elif", indent)) {
      DepthGuard g(*this);
      n->kids.push_back(if_stmt(indent, "elif"));
    } else if (continues("else", indent)) {
      auto e = make("Else");
      e->kids.push_back(terminal());
      suite(*e, indent);
      n->kids.push_back(std::move(e));
    }
    return n;
  }

  TmpPtr loop(int indent) {
    auto n = make("While");
    n->kids.push_back(terminal());
    n->kids.push_back(expression());
    suite(*n, indent);
    return n;
  }

  TmpPtr for_stmt(int indent) {
    auto n = make("For");
    n->kids.push_back(terminal());
    n->kids.push_back(expect_name());
    n->kids.push_back(expect("in"));
    n->kids.push_back(expression());
    suite(*n, indent);
    return n;
  }

  TmpPtr expression() {
    DepthGuard g(*this);
    auto left = additive();
    if (at("==") || at("<") || at(">")) {
      auto n = make("Compare");
      n->kids.push_back(std::move(left));
      n->kids.push_back(terminal());
      n->kids.push_back(additive());
      return n;
    }
    return left;
  }

  TmpPtr additive() {
    auto left = term();
    while (at("+") || at("-")) {
      auto n = make("BinaryOp");
      n->kids.push_back(std::move(left));
      n->kids.push_back(terminal());
      n->kids.push_back(term());
      left = std::move(n);
    }
    return left;
  }

  TmpPtr term() {
    auto left = unary();
    while (at("*") || at("/")) {
      auto n = make("BinaryOp");
      n->kids.push_back(std::move(left));
      n->kids.push_back(terminal());
      n->kids.push_back(unary());
      left = std::move(n);
    }
    return left;
  }

  TmpPtr unary() {
    DepthGuard g(*this);
    if (at("-")) {
      auto n = make("UnaryOp");
      n->kids.push_back(terminal());
      n->kids.push_back(unary());
      return n;
    }
    return primary();
  }

  TmpPtr primary() {
    if (eof()) fail("expression");
    if (at("(")) {
      auto n = make("Paren");
      n->kids.push_back(terminal());
      n->kids.push_back(expression());
      n->kids.push_back(expect(")"));
      return n;
    }
    if (at_kind(TokenKind::kInteger) || at_kind(TokenKind::kString))
      return terminal();
    if (at_kind(TokenKind::kIdentifier)) {
      auto name = terminal();
      if (!at("(")) return name;
      auto call = make("Call");
      call->kids.push_back(std::move(name));
      call->kids.push_back(terminal());
      if (!at(")")) {
        call->kids.push_back(expression());
        while (at(",")) {
          call->kids.push_back(terminal());
          call->kids.push_back(expression());
        }
      }
      call->kids.push_back(expect(")"));
      return call;
    }
    fail("expression");
  }
};

void flatten(const Tmp& t, std::span<const Token> toks,
             std::vector<AstNode>& out) {
  const int id = static_cast<int>(out.size());
  out.emplace_back();
  {
    AstNode& n = out.back();
    n.id = id;
    n.kind = t.kind;
    n.is_terminal = t.token >= 0;
    n.token = t.token;
    if (n.is_terminal) {
      n.lexeme = toks[static_cast<std::size_t>(t.token)].lexeme;
      n.token_kind = toks[static_cast<std::size_t>(t.token)].kind;
    }
  }
  for (const auto& k : t.kids) {
    out[static_cast<std::size_t>(id)].children.push_back(static_cast<int>(out.size()));
    flatten(*k, toks, out);
  }
}

bool is_statement_kind(std::string_view k) {
  return k == "Assign" || k == "Return" || k == "Expr" || k == "FunctionDef" ||
         k == "If" || k == "Else" || k == "While" || k == "For";
}

}  // namespace

Ast parse(std::span<const Token> tokens) {
  Parser p(tokens);
  auto tree = p.program();
  std::vector<AstNode> nodes;
  flatten(*tree, tokens, nodes);
  return Ast(std::move(nodes));
}

Ast parse_source(std::string_view source) {
  const auto toks = lex(source);
  return parse(toks);
}

std::vector<StatementSpan> statements(const Ast& ast) {
  std::vector<StatementSpan> spans;
  std::function<void(int, std::vector<int>&)> collect = [&](int id, std::vector<int>& acc) {
    const auto& n = ast.node(id);
    if (n.is_terminal) {
      acc.push_back(id);
      return;
    }
    for (int c : n.children) collect(c, acc);
  };
  std::function<void(int)> visit = [&](int id) {
    const auto& n = ast.node(id);
    StatementSpan span;
    span.stmt_id = static_cast<int>(spans.size());
    const bool compound = n.kind == "FunctionDef" || n.kind == "If" ||
                          n.kind == "Else" || n.kind == "While" ||
                          n.kind == "For";
    if (!compound) {
      collect(id, span.terminal_ids);
      spans.push_back(std::move(span));
      return;
    }
    std::size_t i = 0;
    for (; i < n.children.size(); ++i) {
      const int c = n.children[i];
      collect(c, span.terminal_ids);
      const auto& cn = ast.node(c);
      if (cn.is_terminal && cn.lexeme == ":" &&
          cn.token_kind == TokenKind::kPunctuation)
        break;
    }
    spans.push_back(std::move(span));
    for (++i; i < n.children.size(); ++i) visit(n.children[i]);
  };
  for (int c : ast.root().children) {
    if (is_statement_kind(ast.node(c).kind)) visit(c);
  }
  return spans;
}

}  // namespace sit::minilang
