#include <mjflow/parser.hpp>

#include <mjflow/lexer.hpp>

namespace mjflow {

namespace {

class Parser {
 public:
  Parser(std::vector<Token> toks, MjFilePtr file, DiagList& diags)
      : toks_(std::move(toks)), file_(std::move(file)), diags_(diags) {}

  void parse_program() {
    while (!at(Tok::End)) {
      if (at(Tok::KwClass)) {
        parse_class();
      } else {
        error("expected 'class'");
        sync_to_class();
      }
    }
  }

 private:
  std::vector<Token> toks_;
  MjFilePtr file_;
  DiagList& diags_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const {
    size_t i = pos_ + k;
    if (i >= toks_.size()) i = toks_.size() - 1;
    return toks_[i];
  }
  bool at(Tok t) const { return peek().kind == t; }
  Token take() {
    Token t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok t) {
    if (at(t)) {
      take();
      return true;
    }
    return false;
  }
  Token expect(Tok t, const char* ctx) {
    if (at(t)) return take();
    error(std::string("expected ") + token_name(t) + " " + ctx + ", found " +
          token_name(peek().kind));
    return peek();
  }
  void error(const std::string& msg) {
    diags_.push_back({DiagPhase::Parse, file_->path, peek().line, peek().column, msg});
  }
  SrcSpan here() const { return {peek().line, peek().column}; }

  void sync_to_class() {
    while (!at(Tok::End) && !at(Tok::KwClass)) take();
  }
  void sync_to_stmt() {
    while (!at(Tok::End) && !at(Tok::Semi) && !at(Tok::RBrace)) take();
    accept(Tok::Semi);
  }

  std::vector<AnnotationSrc> parse_annotations() {
    std::vector<AnnotationSrc> out;
    while (at(Tok::Annotation)) {
      Token t = take();
      out.push_back({t.text, {t.line, t.column}});
    }
    return out;
  }

  bool at_type_start() const {
    switch (peek().kind) {
      case Tok::KwInt:
      case Tok::KwBoolean:
      case Tok::KwString:
      case Tok::KwVoid:
      case Tok::Ident:
        return true;
      default:
        return false;
    }
  }

  TypeExpr parse_type(bool allow_void) {
    TypeExpr t;
    switch (peek().kind) {
      case Tok::KwInt: take(); t.base = TypeBase::Int; break;
      case Tok::KwBoolean: take(); t.base = TypeBase::Bool; break;
      case Tok::KwString: take(); t.base = TypeBase::String; break;
      case Tok::KwVoid:
        take();
        t.base = TypeBase::Void;
        if (!allow_void) error("'void' is not a value type");
        break;
      case Tok::Ident: {
        Token id = take();
        t.base = TypeBase::Class;
        t.class_name = id.text;
        break;
      }
      default:
        error("expected a type");
        break;
    }
    while (at(Tok::LBracket) && peek(1).kind == Tok::RBracket) {
      take();
      take();
      ++t.dims;
    }
    if (t.base == TypeBase::Void && t.dims > 0) error("array of void");
    return t;
  }

  void parse_class() {
    SrcSpan span = here();
    expect(Tok::KwClass, "to start a class");
    ClassSrc cls;
    cls.span = span;
    cls.name = expect(Tok::Ident, "after 'class'").text;
    if (accept(Tok::KwExtends)) {
      cls.superclass = expect(Tok::Ident, "after 'extends'").text;
    }
    expect(Tok::LBrace, "to open the class body");
    while (!at(Tok::RBrace) && !at(Tok::End)) {
      parse_member(cls);
    }
    expect(Tok::RBrace, "to close the class body");
    file_->classes.push_back(std::move(cls));
  }

  void parse_member(ClassSrc& cls) {
    auto annotations = parse_annotations();

    // static initializer block
    if (at(Tok::KwStatic) && peek(1).kind == Tok::LBrace) {
      if (!annotations.empty()) error("annotations are not allowed on static blocks");
      take(); // static
      NodeId block = parse_block();
      cls.static_blocks.push_back(block);
      return;
    }

    bool is_static = accept(Tok::KwStatic);
    bool is_native = accept(Tok::KwNative);

    // constructor: ClassName ( ... )
    if (at(Tok::Ident) && peek().text == cls.name && peek(1).kind == Tok::LParen) {
      MethodSrc m;
      m.span = here();
      m.name = take().text;
      m.is_ctor = true;
      m.is_static = is_static;
      m.is_native = is_native;
      m.annotations = std::move(annotations);
      m.return_type.base = TypeBase::Void;
      if (is_static) error("constructors cannot be static");
      if (is_native) error("constructors cannot be native");
      parse_params(m);
      m.body = parse_block();
      cls.methods.push_back(std::move(m));
      return;
    }

    if (!at_type_start()) {
      error("expected a member declaration");
      sync_to_stmt();
      return;
    }
    TypeExpr type = parse_type(/*allow_void=*/true);
    Token name = expect(Tok::Ident, "as the member name");

    if (at(Tok::LParen)) {
      MethodSrc m;
      m.span = {name.line, name.column};
      m.name = name.text;
      m.return_type = type;
      m.is_static = is_static;
      m.is_native = is_native;
      m.annotations = std::move(annotations);
      parse_params(m);
      if (is_native) {
        expect(Tok::Semi, "after native method declaration");
      } else {
        m.body = parse_block();
      }
      cls.methods.push_back(std::move(m));
      return;
    }

    // field
    if (is_native) error("fields cannot be native");
    if (type.base == TypeBase::Void) error("fields cannot have void type");
    FieldSrc f;
    f.span = {name.line, name.column};
    f.name = name.text;
    f.type = type;
    f.is_static = is_static;
    f.annotations = std::move(annotations);
    if (accept(Tok::Assign)) {
      f.init = parse_expr();
    }
    expect(Tok::Semi, "after field declaration");
    cls.fields.push_back(std::move(f));
  }

  void parse_params(MethodSrc& m) {
    expect(Tok::LParen, "to open the parameter list");
    if (!at(Tok::RParen)) {
      do {
        ParamSrc p;
        p.annotations = parse_annotations();
        p.span = here();
        p.type = parse_type(/*allow_void=*/false);
        p.name = expect(Tok::Ident, "as the parameter name").text;
        m.params.push_back(std::move(p));
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "to close the parameter list");
  }

  NodeId parse_block() {
    SrcSpan span = here();
    expect(Tok::LBrace, "to open a block");
    NodeId block = file_->make_node(NodeKind::Block, span);
    std::vector<NodeId> stmts;
    while (!at(Tok::RBrace) && !at(Tok::End)) {
      stmts.push_back(parse_stmt());
    }
    expect(Tok::RBrace, "to close a block");
    file_->node(block).children = std::move(stmts);
    return block;
  }

  NodeId parse_stmt() {
    SrcSpan span = here();
    switch (peek().kind) {
      case Tok::LBrace:
        return parse_block();
      case Tok::KwIf: {
        take();
        expect(Tok::LParen, "after 'if'");
        NodeId cond = parse_expr();
        expect(Tok::RParen, "after the condition");
        NodeId then_s = parse_stmt();
        NodeId node = file_->make_node(NodeKind::IfStmt, span);
        file_->node(node).children = {cond, then_s};
        if (accept(Tok::KwElse)) {
          NodeId else_s = parse_stmt();
          file_->node(node).children.push_back(else_s);
        }
        return node;
      }
      case Tok::KwWhile: {
        take();
        expect(Tok::LParen, "after 'while'");
        NodeId cond = parse_expr();
        expect(Tok::RParen, "after the condition");
        NodeId body = parse_stmt();
        NodeId node = file_->make_node(NodeKind::WhileStmt, span);
        file_->node(node).children = {cond, body};
        return node;
      }
      case Tok::KwReturn: {
        take();
        NodeId node = file_->make_node(NodeKind::ReturnStmt, span);
        if (!at(Tok::Semi)) {
          NodeId e = parse_expr();
          file_->node(node).children = {e};
        }
        expect(Tok::Semi, "after 'return'");
        return node;
      }
      case Tok::KwThrow: {
        take();
        NodeId e = parse_expr();
        expect(Tok::Semi, "after 'throw'");
        NodeId node = file_->make_node(NodeKind::ThrowStmt, span);
        file_->node(node).children = {e};
        return node;
      }
      case Tok::KwTry: {
        take();
        NodeId body = parse_block();
        NodeId node = file_->make_node(NodeKind::TryStmt, span);
        file_->node(node).children = {body};
        bool any = false;
        while (at(Tok::KwCatch)) {
          any = true;
          SrcSpan cspan = here();
          take();
          expect(Tok::LParen, "after 'catch'");
          TypeExpr type = parse_type(/*allow_void=*/false);
          Token var = expect(Tok::Ident, "as the catch variable");
          expect(Tok::RParen, "after the catch variable");
          NodeId cbody = parse_block();
          NodeId cnode = file_->make_node(NodeKind::CatchClause, cspan);
          file_->node(cnode).type = type;
          file_->node(cnode).text = var.text;
          file_->node(cnode).children = {cbody};
          file_->node(node).children.push_back(cnode);
        }
        if (!any) error("'try' requires at least one catch clause");
        return node;
      }
      case Tok::KwEvent: {
        take();
        expect(Tok::LParen, "after 'event'");
        Token name = expect(Tok::StringLit, "as the event name");
        expect(Tok::RParen, "after the event name");
        expect(Tok::Semi, "after event statement");
        NodeId node = file_->make_node(NodeKind::EventStmt, span);
        file_->node(node).text = name.text;
        return node;
      }
      default:
        break;
    }

    // local variable declaration: Type Ident [= expr] ;
    if (starts_var_decl()) {
      TypeExpr type = parse_type(/*allow_void=*/false);
      Token name = expect(Tok::Ident, "as the variable name");
      NodeId node = file_->make_node(NodeKind::VarDeclStmt, span);
      file_->node(node).type = type;
      file_->node(node).text = name.text;
      if (accept(Tok::Assign)) {
        NodeId init = parse_expr();
        file_->node(node).children = {init};
      }
      expect(Tok::Semi, "after variable declaration");
      return node;
    }

    // expression or assignment statement
    NodeId e = parse_expr();
    if (accept(Tok::Assign)) {
      NodeKind k = file_->node(e).kind;
      if (k != NodeKind::VarRef && k != NodeKind::FieldGet && k != NodeKind::Index) {
        error("assignment target must be a variable, field, or array element");
      }
      NodeId rhs = parse_expr();
      expect(Tok::Semi, "after assignment");
      NodeId node = file_->make_node(NodeKind::AssignStmt, span);
      file_->node(node).children = {e, rhs};
      return node;
    }
    expect(Tok::Semi, "after expression statement");
    NodeId node = file_->make_node(NodeKind::ExprStmt, span);
    file_->node(node).children = {e};
    return node;
  }

  // Type Ident ... at statement position. Distinguishes `A x = ...;` from
  // `a.f = ...;` / `a[i] = ...;` / `m();`.
  bool starts_var_decl() const {
    switch (peek().kind) {
      case Tok::KwInt:
      case Tok::KwBoolean:
      case Tok::KwString:
        return true;
      case Tok::Ident: {
        size_t k = 1;
        while (peek(k).kind == Tok::LBracket && peek(k + 1).kind == Tok::RBracket) k += 2;
        return peek(k).kind == Tok::Ident;
      }
      default:
        return false;
    }
  }

  NodeId parse_expr() { return parse_or(); }

  NodeId parse_or() {
    NodeId lhs = parse_and();
    while (at(Tok::OrOr)) {
      SrcSpan span = here();
      take();
      NodeId rhs = parse_and();
      lhs = make_binary("||", lhs, rhs, span);
    }
    return lhs;
  }
  NodeId parse_and() {
    NodeId lhs = parse_equality();
    while (at(Tok::AndAnd)) {
      SrcSpan span = here();
      take();
      NodeId rhs = parse_equality();
      lhs = make_binary("&&", lhs, rhs, span);
    }
    return lhs;
  }
  NodeId parse_equality() {
    NodeId lhs = parse_relational();
    while (at(Tok::EqEq) || at(Tok::NotEq)) {
      SrcSpan span = here();
      std::string op = take().text;
      NodeId rhs = parse_relational();
      lhs = make_binary(op, lhs, rhs, span);
    }
    return lhs;
  }
  NodeId parse_relational() {
    NodeId lhs = parse_additive();
    while (at(Tok::Lt) || at(Tok::Le) || at(Tok::Gt) || at(Tok::Ge)) {
      SrcSpan span = here();
      std::string op = take().text;
      NodeId rhs = parse_additive();
      lhs = make_binary(op, lhs, rhs, span);
    }
    return lhs;
  }
  NodeId parse_additive() {
    NodeId lhs = parse_multiplicative();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      SrcSpan span = here();
      std::string op = take().text;
      NodeId rhs = parse_multiplicative();
      lhs = make_binary(op, lhs, rhs, span);
    }
    return lhs;
  }
  NodeId parse_multiplicative() {
    NodeId lhs = parse_unary();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      SrcSpan span = here();
      std::string op = take().text;
      NodeId rhs = parse_unary();
      lhs = make_binary(op, lhs, rhs, span);
    }
    return lhs;
  }

  NodeId make_binary(const std::string& op, NodeId l, NodeId r, SrcSpan span) {
    NodeId node = file_->make_node(NodeKind::Binary, span);
    file_->node(node).text = op;
    file_->node(node).children = {l, r};
    return node;
  }

  bool at_cast() const {
    if (!at(Tok::LParen)) return false;
    size_t k = 1;
    switch (peek(k).kind) {
      case Tok::KwInt:
      case Tok::KwBoolean:
      case Tok::KwString:
        break;
      case Tok::Ident:
        break;
      default:
        return false;
    }
    ++k;
    while (peek(k).kind == Tok::LBracket && peek(k + 1).kind == Tok::RBracket) k += 2;
    if (peek(k).kind != Tok::RParen) return false;
    // primitive type names can only be casts
    if (peek(1).kind != Tok::Ident) return true;
    switch (peek(k + 1).kind) {
      case Tok::Ident:
      case Tok::IntLit:
      case Tok::StringLit:
      case Tok::LParen:
      case Tok::KwThis:
      case Tok::KwNew:
      case Tok::KwNull:
      case Tok::KwTrue:
      case Tok::KwFalse:
      case Tok::Not:
        return true;
      default:
        return false;
    }
  }

  NodeId parse_unary() {
    SrcSpan span = here();
    if (at(Tok::Not) || at(Tok::Minus)) {
      std::string op = take().text;
      NodeId e = parse_unary();
      NodeId node = file_->make_node(NodeKind::Unary, span);
      file_->node(node).text = op;
      file_->node(node).children = {e};
      return node;
    }
    if (at_cast()) {
      take(); // (
      TypeExpr type = parse_type(/*allow_void=*/false);
      expect(Tok::RParen, "to close the cast");
      NodeId e = parse_unary();
      NodeId node = file_->make_node(NodeKind::Cast, span);
      file_->node(node).type = type;
      file_->node(node).children = {e};
      return node;
    }
    return parse_postfix();
  }

  NodeId parse_postfix() {
    NodeId e = parse_primary();
    for (;;) {
      SrcSpan span = here();
      if (accept(Tok::Dot)) {
        Token name = expect(Tok::Ident, "after '.'");
        if (at(Tok::LParen)) {
          NodeId node = file_->make_node(NodeKind::CallExpr, span);
          file_->node(node).text = name.text;
          file_->node(node).flags |= kFlagHasBase;
          file_->node(node).children = {e};
          parse_args(node);
          e = node;
        } else {
          NodeId node = file_->make_node(NodeKind::FieldGet, span);
          file_->node(node).text = name.text;
          file_->node(node).children = {e};
          e = node;
        }
        continue;
      }
      if (at(Tok::LBracket)) {
        take();
        NodeId idx = parse_expr();
        expect(Tok::RBracket, "to close the index");
        NodeId node = file_->make_node(NodeKind::Index, span);
        file_->node(node).children = {e, idx};
        e = node;
        continue;
      }
      break;
    }
    return e;
  }

  void parse_args(NodeId call) {
    expect(Tok::LParen, "to open the argument list");
    if (!at(Tok::RParen)) {
      do {
        NodeId a = parse_expr();
        file_->node(call).children.push_back(a);
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "to close the argument list");
  }

  NodeId parse_primary() {
    SrcSpan span = here();
    switch (peek().kind) {
      case Tok::IntLit: {
        Token t = take();
        NodeId node = file_->make_node(NodeKind::IntLit, span);
        file_->node(node).int_value = t.int_value;
        return node;
      }
      case Tok::StringLit: {
        Token t = take();
        NodeId node = file_->make_node(NodeKind::StringLit, span);
        file_->node(node).text = t.text;
        return node;
      }
      case Tok::KwTrue:
      case Tok::KwFalse: {
        bool v = take().kind == Tok::KwTrue;
        NodeId node = file_->make_node(NodeKind::BoolLit, span);
        if (v) file_->node(node).flags |= kFlagBoolTrue;
        return node;
      }
      case Tok::KwNull:
        take();
        return file_->make_node(NodeKind::NullLit, span);
      case Tok::KwThis:
        take();
        return file_->make_node(NodeKind::This, span);
      case Tok::KwSuper: {
        take();
        NodeId node = file_->make_node(NodeKind::CallExpr, span);
        file_->node(node).flags |= kFlagSuperCall;
        parse_args(node);
        return node;
      }
      case Tok::KwNew: {
        take();
        TypeExpr type = parse_type(/*allow_void=*/false);
        if (at(Tok::LBracket)) {
          take();
          NodeId size = parse_expr();
          expect(Tok::RBracket, "to close the array size");
          NodeId node = file_->make_node(NodeKind::NewArray, span);
          file_->node(node).type = type;
          file_->node(node).children = {size};
          return node;
        }
        if (type.base != TypeBase::Class || type.dims > 0) {
          error("'new' requires a class name or an array type");
        }
        NodeId node = file_->make_node(NodeKind::NewObject, span);
        file_->node(node).text = type.class_name;
        parse_args(node);
        return node;
      }
      case Tok::LParen: {
        take();
        NodeId e = parse_expr();
        expect(Tok::RParen, "to close the parenthesized expression");
        return e;
      }
      case Tok::Ident: {
        Token name = take();
        if (at(Tok::LParen)) {
          NodeId node = file_->make_node(NodeKind::CallExpr, span);
          file_->node(node).text = name.text;
          parse_args(node);
          return node;
        }
        NodeId node = file_->make_node(NodeKind::VarRef, span);
        file_->node(node).text = name.text;
        return node;
      }
      default:
        error(std::string("expected an expression, found ") + token_name(peek().kind));
        take();
        return file_->make_node(NodeKind::NullLit, span);
    }
  }
};

} // namespace

MjFilePtr parse_file(const std::string& text, const std::string& path, DiagList& diags) {
  auto file = std::make_shared<MjFile>();
  file->path = path;
  size_t before = diags.size();
  auto tokens = lex(text, path, diags);
  Parser parser(std::move(tokens), file, diags);
  if (diags.size() == before) {
    parser.parse_program();
  }
  return file;
}

} // namespace mjflow
