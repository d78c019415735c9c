#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "patchtrace/minijay/lexer.hpp"

namespace patchtrace::minijay {

enum class BinaryOp { add, sub, mul, div, lt, le, gt, ge, eq, ne, logic_and, logic_or };
enum class UnaryOp { logic_not, negate };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind {
        int_lit,
        str_lit,
        bool_lit,
        nil_lit,
        name,      // IDENT ("." IDENT)* — variable, field chain or qualified callee
        field_get, // .field on a non-name expression
        call,
        make,      // new qualified(args)
        binary,
        unary,
    };

    Kind kind = Kind::nil_lit;
    std::uint32_t line = 0;

    std::int64_t int_value = 0;
    bool bool_value = false;
    std::string str_value; // decoded string literal

    std::vector<std::string> path; // name / make
    ExprPtr object;                // field_get receiver
    std::string field;

    ExprPtr callee;
    std::vector<ExprPtr> args;

    BinaryOp bin_op = BinaryOp::add;
    UnaryOp un_op = UnaryOp::negate;
    ExprPtr lhs, rhs, operand;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Block {
    std::vector<StmtPtr> statements;
};

struct Stmt {
    enum class Kind { var_decl, assign, if_stmt, while_stmt, return_stmt, expr_stmt };

    Kind kind = Kind::expr_stmt;
    std::uint32_t line = 0;

    std::string var_name;            // var_decl
    std::vector<std::string> target; // assign path
    ExprPtr value;                   // initializer / rhs / condition / return / expression
    Block body;                      // if-then / while
    Block else_body;
    bool has_else = false;
};

// Byte and token extents of a `{ ... }` body, braces included.
struct BodySpan {
    std::size_t open_offset = 0;
    std::size_t close_offset = 0;
    std::size_t first_token = 0; // index of '{' in SourceUnit::tokens
    std::size_t last_token = 0;  // index of '}'
};

struct FunctionDecl {
    std::string name; // "init" for constructors
    bool is_ctor = false;
    std::vector<std::string> params;
    Block body;
    BodySpan span;
    std::uint32_t line = 0;
};

struct FieldDecl {
    std::string name;
    ExprPtr init; // may be null
    std::uint32_t line = 0;
};

struct ClassDecl;

struct ClassMember {
    enum class Kind { field, function, nested_class };
    Kind kind = Kind::field;
    FieldDecl field;
    FunctionDecl function;
    std::unique_ptr<ClassDecl> nested;
};

struct ClassDecl {
    std::string name;
    std::vector<ClassMember> members;
    std::uint32_t line = 0;
};

struct TopLevel {
    enum class Kind { class_decl, function };
    Kind kind = Kind::function;
    std::unique_ptr<ClassDecl> class_decl;
    FunctionDecl function;
};

// A fully parsed `.mj` file. Keeps the raw source and the token stream so
// body spans can be normalized and instrumented byte-exactly.
struct SourceUnit {
    std::string path;
    std::string package; // dotted, possibly empty
    std::vector<TopLevel> declarations;
    std::vector<Token> tokens;
    std::string source;
};

} // namespace patchtrace::minijay
