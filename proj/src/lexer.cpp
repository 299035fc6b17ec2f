#include <mjflow/lexer.hpp>

#include <cctype>
#include <unordered_map>

namespace mjflow {

std::string Diagnostic::to_string() const {
  std::string phase_name;
  switch (phase) {
    case DiagPhase::Parse: phase_name = "parse"; break;
    case DiagPhase::Bind: phase_name = "bind"; break;
    case DiagPhase::Config: phase_name = "config"; break;
  }
  std::string out = file;
  if (line > 0) {
    out += ":" + std::to_string(line) + ":" + std::to_string(column);
  }
  out += ": " + phase_name + " error: " + message;
  return out;
}

namespace {

const std::unordered_map<std::string_view, Tok>& keywords() {
  static const std::unordered_map<std::string_view, Tok> kw = {
      {"class", Tok::KwClass},     {"extends", Tok::KwExtends},
      {"static", Tok::KwStatic},   {"native", Tok::KwNative},
      {"int", Tok::KwInt},         {"boolean", Tok::KwBoolean},
      {"string", Tok::KwString},   {"void", Tok::KwVoid},
      {"if", Tok::KwIf},           {"else", Tok::KwElse},
      {"while", Tok::KwWhile},     {"return", Tok::KwReturn},
      {"throw", Tok::KwThrow},     {"try", Tok::KwTry},
      {"catch", Tok::KwCatch},     {"new", Tok::KwNew},
      {"null", Tok::KwNull},       {"true", Tok::KwTrue},
      {"false", Tok::KwFalse},     {"this", Tok::KwThis},
      {"event", Tok::KwEvent},     {"super", Tok::KwSuper},
  };
  return kw;
}

} // namespace

std::vector<Token> lex(std::string_view text, const std::string& file, DiagList& diags) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1;
  int col = 1;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto error = [&](const std::string& msg) {
    diags.push_back({DiagPhase::Parse, file, line, col, msg});
  };
  auto push = [&](Tok k, std::string t, int l, int c) {
    Token tok;
    tok.kind = k;
    tok.text = std::move(t);
    tok.line = l;
    tok.column = c;
    out.push_back(std::move(tok));
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      int sl = line, sc = col;
      advance(2);
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == '*' && i + 1 < text.size() && text[i + 1] == '/') {
          advance(2);
          closed = true;
          break;
        }
        advance(1);
      }
      if (!closed) {
        diags.push_back({DiagPhase::Parse, file, sl, sc, "unterminated block comment"});
      }
      continue;
    }

    int tl = line, tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t s = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
        advance(1);
      }
      std::string word(text.substr(s, i - s));
      auto it = keywords().find(word);
      if (it != keywords().end()) {
        push(it->second, std::move(word), tl, tc);
      } else {
        push(Tok::Ident, std::move(word), tl, tc);
      }
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t s = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) advance(1);
      std::string word(text.substr(s, i - s));
      Token tok;
      tok.kind = Tok::IntLit;
      tok.text = word;
      try {
        tok.int_value = std::stoll(word);
      } catch (...) {
        error("integer literal out of range: " + word);
        tok.int_value = 0;
      }
      tok.line = tl;
      tok.column = tc;
      out.push_back(std::move(tok));
      continue;
    }
    if (c == '"') {
      advance(1);
      std::string value;
      bool closed = false;
      while (i < text.size()) {
        char d = text[i];
        if (d == '"') {
          advance(1);
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\' && i + 1 < text.size()) {
          char e = text[i + 1];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case '\\': value += '\\'; break;
            case '"': value += '"'; break;
            default:
              error(std::string("unknown escape \\") + e);
              value += e;
          }
          advance(2);
          continue;
        }
        value += d;
        advance(1);
      }
      if (!closed) {
        diags.push_back({DiagPhase::Parse, file, tl, tc, "unterminated string literal"});
      }
      push(Tok::StringLit, std::move(value), tl, tc);
      continue;
    }
    if (c == '@') {
      advance(1);
      size_t s = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
        advance(1);
      }
      if (s == i) {
        error("expected annotation name after '@'");
        continue;
      }
      push(Tok::Annotation, std::string(text.substr(s, i - s)), tl, tc);
      continue;
    }

    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (two('=', '=')) { push(Tok::EqEq, "==", tl, tc); advance(2); continue; }
    if (two('!', '=')) { push(Tok::NotEq, "!=", tl, tc); advance(2); continue; }
    if (two('<', '=')) { push(Tok::Le, "<=", tl, tc); advance(2); continue; }
    if (two('>', '=')) { push(Tok::Ge, ">=", tl, tc); advance(2); continue; }
    if (two('&', '&')) { push(Tok::AndAnd, "&&", tl, tc); advance(2); continue; }
    if (two('|', '|')) { push(Tok::OrOr, "||", tl, tc); advance(2); continue; }

    Tok k = Tok::End;
    switch (c) {
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case ';': k = Tok::Semi; break;
      case ',': k = Tok::Comma; break;
      case '.': k = Tok::Dot; break;
      case '=': k = Tok::Assign; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '%': k = Tok::Percent; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '!': k = Tok::Not; break;
      default:
        error(std::string("unexpected character '") + c + "'");
        advance(1);
        continue;
    }
    push(k, std::string(1, c), tl, tc);
    advance(1);
  }

  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

const char* token_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of file";
    case Tok::Ident: return "identifier";
    case Tok::IntLit: return "integer literal";
    case Tok::StringLit: return "string literal";
    case Tok::Annotation: return "annotation";
    case Tok::KwClass: return "'class'";
    case Tok::KwExtends: return "'extends'";
    case Tok::KwStatic: return "'static'";
    case Tok::KwNative: return "'native'";
    case Tok::KwInt: return "'int'";
    case Tok::KwBoolean: return "'boolean'";
    case Tok::KwString: return "'string'";
    case Tok::KwVoid: return "'void'";
    case Tok::KwIf: return "'if'";
    case Tok::KwElse: return "'else'";
    case Tok::KwWhile: return "'while'";
    case Tok::KwReturn: return "'return'";
    case Tok::KwThrow: return "'throw'";
    case Tok::KwTry: return "'try'";
    case Tok::KwCatch: return "'catch'";
    case Tok::KwNew: return "'new'";
    case Tok::KwNull: return "'null'";
    case Tok::KwTrue: return "'true'";
    case Tok::KwFalse: return "'false'";
    case Tok::KwThis: return "'this'";
    case Tok::KwEvent: return "'event'";
    case Tok::KwSuper: return "'super'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Semi: return "';'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Assign: return "'='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Percent: return "'%'";
    case Tok::EqEq: return "'=='";
    case Tok::NotEq: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::AndAnd: return "'&&'";
    case Tok::OrOr: return "'||'";
    case Tok::Not: return "'!'";
  }
  return "?";
}

} // namespace mjflow
