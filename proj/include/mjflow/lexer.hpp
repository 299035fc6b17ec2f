#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <mjflow/diag.hpp>

namespace mjflow {

enum class Tok : uint8_t {
  End,
  Ident,
  IntLit,
  StringLit,
  Annotation, // @Name
  // keywords
  KwClass,
  KwExtends,
  KwStatic,
  KwNative,
  KwInt,
  KwBoolean,
  KwString,
  KwVoid,
  KwIf,
  KwElse,
  KwWhile,
  KwReturn,
  KwThrow,
  KwTry,
  KwCatch,
  KwNew,
  KwNull,
  KwTrue,
  KwFalse,
  KwThis,
  KwEvent,
  KwSuper,
  // punctuation / operators
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Semi,
  Comma,
  Dot,
  Assign, // =
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  EqEq,
  NotEq,
  Lt,
  Le,
  Gt,
  Ge,
  AndAnd,
  OrOr,
  Not,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;   // identifier / literal spelling / annotation name
  int64_t int_value = 0;
  int line = 1;
  int column = 1;
};

// Tokenizes MJ source. Comments are // and /* */. String literals support
// \n \t \\ \" escapes. Lexical errors are reported as diagnostics and the
// offending character is skipped.
std::vector<Token> lex(std::string_view text, const std::string& file, DiagList& diags);

const char* token_name(Tok t);

} // namespace mjflow
