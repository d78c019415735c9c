#pragma once

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patchtrace/core/signature.hpp"
#include "patchtrace/minijay/ast.hpp"
#include "patchtrace/minijay/lexer.hpp"

namespace patchtrace::minijay {

namespace detail {

class Parser {
public:
    Parser(std::vector<Token> tokens, std::string path, std::string source)
        : tokens_(std::move(tokens)), path_(std::move(path)), source_(std::move(source))
    {}

    SourceUnit parse_unit()
    {
        SourceUnit unit;
        unit.path = path_;
        if (at_keyword("package"))
            unit.package = parse_package_decl();
        while (!at_eof()) {
            TopLevel decl;
            if (at_keyword("class")) {
                decl.kind = TopLevel::Kind::class_decl;
                decl.class_decl = parse_class();
            } else if (at_keyword("fn")) {
                decl.kind = TopLevel::Kind::function;
                decl.function = parse_function(false);
            } else {
                fail("expected 'class' or 'fn'");
            }
            unit.declarations.push_back(std::move(decl));
        }
        unit.tokens = std::move(tokens_);
        unit.source = std::move(source_);
        return unit;
    }

private:
    std::vector<Token> tokens_;
    std::string path_;
    std::string source_;
    std::size_t pos_ = 0; // index of the next non-trivia token

    // --- token helpers -----------------------------------------------------

    const Token& peek()
    {
        skip_trivia();
        return tokens_[pos_];
    }

    void skip_trivia()
    {
        while (pos_ < tokens_.size() && is_trivia(tokens_[pos_]))
            ++pos_;
    }

    const Token& next()
    {
        const Token& tok = peek();
        ++pos_;
        return tok;
    }

    bool at_eof() { return peek().kind == TokenKind::eof; }

    bool at_keyword(std::string_view kw)
    {
        const Token& tok = peek();
        return tok.kind == TokenKind::keyword && tok.text == kw;
    }

    bool at_punct(std::string_view p)
    {
        const Token& tok = peek();
        return tok.kind == TokenKind::punct && tok.text == p;
    }

    void expect_keyword(std::string_view kw)
    {
        if (!at_keyword(kw))
            fail("expected '" + std::string(kw) + "'");
        ++pos_;
    }

    const Token& expect_punct(std::string_view p)
    {
        if (!at_punct(p))
            fail("expected '" + std::string(p) + "'");
        return next();
    }

    std::string expect_ident()
    {
        if (peek().kind != TokenKind::identifier)
            fail("expected an identifier");
        return next().text;
    }

    [[noreturn]] void fail(const std::string& message)
    {
        const Token& tok = peek();
        std::string found = tok.kind == TokenKind::eof ? "end of file" : "'" + tok.text + "'";
        raise(ErrorKind::parse_error,
              path_ + ":" + std::to_string(tok.line) + ":" + std::to_string(tok.column) + ": "
                  + message + ", found " + found);
    }

    // --- grammar -----------------------------------------------------------

    std::string parse_package_decl()
    {
        expect_keyword("package");
        std::string package;
        while (true) {
            const Token& tok = peek();
            if (tok.kind != TokenKind::identifier || !is_package_segment(tok.text))
                fail("expected a lowercase package segment");
            package += next().text;
            if (at_punct(".")) {
                ++pos_;
                package += '.';
                continue;
            }
            break;
        }
        expect_punct(";");
        return package;
    }

    std::unique_ptr<ClassDecl> parse_class()
    {
        auto decl = std::make_unique<ClassDecl>();
        decl->line = peek().line;
        expect_keyword("class");
        decl->name = expect_ident();
        if (!is_container_segment(decl->name))
            fail("class name '" + decl->name + "' must start with an uppercase letter");
        expect_punct("{");
        while (!at_punct("}")) {
            ClassMember member;
            if (at_keyword("fn")) {
                member.kind = ClassMember::Kind::function;
                member.function = parse_function(false);
            } else if (at_keyword("init")) {
                member.kind = ClassMember::Kind::function;
                member.function = parse_function(true);
            } else if (at_keyword("class")) {
                member.kind = ClassMember::Kind::nested_class;
                member.nested = parse_class();
            } else if (at_keyword("var")) {
                member.kind = ClassMember::Kind::field;
                member.field = parse_field();
            } else {
                fail("expected a class member");
            }
            decl->members.push_back(std::move(member));
        }
        expect_punct("}");
        return decl;
    }

    FunctionDecl parse_function(bool is_ctor)
    {
        FunctionDecl fn;
        fn.is_ctor = is_ctor;
        fn.line = peek().line;
        if (is_ctor) {
            expect_keyword("init");
            fn.name = "init";
        } else {
            expect_keyword("fn");
            fn.name = expect_ident();
        }
        expect_punct("(");
        if (!at_punct(")")) {
            while (true) {
                fn.params.push_back(expect_ident());
                if (at_punct(",")) {
                    ++pos_;
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        fn.body = parse_block(&fn.span);
        return fn;
    }

    FieldDecl parse_field()
    {
        FieldDecl field;
        field.line = peek().line;
        expect_keyword("var");
        field.name = expect_ident();
        if (at_punct("=")) {
            ++pos_;
            field.init = parse_expr();
        }
        expect_punct(";");
        return field;
    }

    Block parse_block(BodySpan* span = nullptr)
    {
        skip_trivia();
        const Token& open = expect_punct("{");
        std::size_t open_index = pos_ - 1;
        Block block;
        while (!at_punct("}"))
            block.statements.push_back(parse_stmt());
        const Token& close = expect_punct("}");
        if (span) {
            span->open_offset = open.offset;
            span->close_offset = close.offset;
            span->first_token = open_index;
            span->last_token = pos_ - 1;
        }
        return block;
    }

    StmtPtr parse_stmt()
    {
        auto stmt = std::make_unique<Stmt>();
        stmt->line = peek().line;

        if (at_keyword("var")) {
            ++pos_;
            stmt->kind = Stmt::Kind::var_decl;
            stmt->var_name = expect_ident();
            if (at_punct("=")) {
                ++pos_;
                stmt->value = parse_expr();
            }
            expect_punct(";");
            return stmt;
        }
        if (at_keyword("if")) {
            ++pos_;
            stmt->kind = Stmt::Kind::if_stmt;
            expect_punct("(");
            stmt->value = parse_expr();
            expect_punct(")");
            stmt->body = parse_block();
            if (at_keyword("else")) {
                ++pos_;
                stmt->has_else = true;
                stmt->else_body = parse_block();
            }
            return stmt;
        }
        if (at_keyword("while")) {
            ++pos_;
            stmt->kind = Stmt::Kind::while_stmt;
            expect_punct("(");
            stmt->value = parse_expr();
            expect_punct(")");
            stmt->body = parse_block();
            return stmt;
        }
        if (at_keyword("return")) {
            ++pos_;
            stmt->kind = Stmt::Kind::return_stmt;
            if (!at_punct(";"))
                stmt->value = parse_expr();
            expect_punct(";");
            return stmt;
        }

        // Assignment (`a.b.c = expr;`) or expression statement; decided by a
        // bounded lookahead over the dotted path.
        if (peek().kind == TokenKind::identifier) {
            std::size_t saved = pos_;
            std::vector<std::string> target;
            target.push_back(next().text);
            while (at_punct(".")) {
                ++pos_;
                if (peek().kind != TokenKind::identifier)
                    break;
                target.push_back(next().text);
            }
            if (at_punct("=")) {
                ++pos_;
                stmt->kind = Stmt::Kind::assign;
                stmt->target = std::move(target);
                stmt->value = parse_expr();
                expect_punct(";");
                return stmt;
            }
            pos_ = saved;
        }

        stmt->kind = Stmt::Kind::expr_stmt;
        stmt->value = parse_expr();
        expect_punct(";");
        return stmt;
    }

    // --- expressions, precedence climbing ----------------------------------

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or()
    {
        auto lhs = parse_and();
        while (at_punct("||"))
            lhs = binary(BinaryOp::logic_or, std::move(lhs), (++pos_, parse_and()));
        return lhs;
    }

    ExprPtr parse_and()
    {
        auto lhs = parse_equality();
        while (at_punct("&&"))
            lhs = binary(BinaryOp::logic_and, std::move(lhs), (++pos_, parse_equality()));
        return lhs;
    }

    ExprPtr parse_equality()
    {
        auto lhs = parse_comparison();
        while (at_punct("==") || at_punct("!=")) {
            BinaryOp op = peek().text == "==" ? BinaryOp::eq : BinaryOp::ne;
            ++pos_;
            lhs = binary(op, std::move(lhs), parse_comparison());
        }
        return lhs;
    }

    ExprPtr parse_comparison()
    {
        auto lhs = parse_additive();
        while (at_punct("<") || at_punct("<=") || at_punct(">") || at_punct(">=")) {
            std::string op_text = peek().text;
            ++pos_;
            BinaryOp op = op_text == "<" ? BinaryOp::lt
                : op_text == "<="        ? BinaryOp::le
                : op_text == ">"         ? BinaryOp::gt
                                         : BinaryOp::ge;
            lhs = binary(op, std::move(lhs), parse_additive());
        }
        return lhs;
    }

    ExprPtr parse_additive()
    {
        auto lhs = parse_multiplicative();
        while (at_punct("+") || at_punct("-")) {
            BinaryOp op = peek().text == "+" ? BinaryOp::add : BinaryOp::sub;
            ++pos_;
            lhs = binary(op, std::move(lhs), parse_multiplicative());
        }
        return lhs;
    }

    ExprPtr parse_multiplicative()
    {
        auto lhs = parse_unary();
        while (at_punct("*") || at_punct("/")) {
            BinaryOp op = peek().text == "*" ? BinaryOp::mul : BinaryOp::div;
            ++pos_;
            lhs = binary(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    ExprPtr parse_unary()
    {
        if (at_punct("!") || at_punct("-")) {
            auto expr = std::make_unique<Expr>();
            expr->kind = Expr::Kind::unary;
            expr->line = peek().line;
            expr->un_op = peek().text == "!" ? UnaryOp::logic_not : UnaryOp::negate;
            ++pos_;
            expr->operand = parse_unary();
            return expr;
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix()
    {
        auto expr = parse_primary();
        while (true) {
            if (at_punct(".")) {
                ++pos_;
                std::string field = expect_ident();
                if (expr->kind == Expr::Kind::name) {
                    expr->path.push_back(std::move(field));
                } else {
                    auto get = std::make_unique<Expr>();
                    get->kind = Expr::Kind::field_get;
                    get->line = expr->line;
                    get->field = std::move(field);
                    get->object = std::move(expr);
                    expr = std::move(get);
                }
                continue;
            }
            if (at_punct("(")) {
                auto call = std::make_unique<Expr>();
                call->kind = Expr::Kind::call;
                call->line = peek().line;
                call->callee = std::move(expr);
                call->args = parse_args();
                expr = std::move(call);
                continue;
            }
            break;
        }
        return expr;
    }

    std::vector<ExprPtr> parse_args()
    {
        expect_punct("(");
        std::vector<ExprPtr> args;
        if (!at_punct(")")) {
            while (true) {
                args.push_back(parse_expr());
                if (at_punct(",")) {
                    ++pos_;
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        return args;
    }

    ExprPtr parse_primary()
    {
        auto expr = std::make_unique<Expr>();
        expr->line = peek().line;

        const Token& tok = peek();
        if (tok.kind == TokenKind::integer) {
            expr->kind = Expr::Kind::int_lit;
            try {
                expr->int_value = std::stoll(next().text);
            } catch (const std::out_of_range&) {
                fail("integer literal out of range");
            }
            return expr;
        }
        if (tok.kind == TokenKind::string) {
            expr->kind = Expr::Kind::str_lit;
            expr->str_value = decode_string(next().text);
            return expr;
        }
        if (at_keyword("true") || at_keyword("false")) {
            expr->kind = Expr::Kind::bool_lit;
            expr->bool_value = next().text == "true";
            return expr;
        }
        if (at_keyword("nil")) {
            ++pos_;
            expr->kind = Expr::Kind::nil_lit;
            return expr;
        }
        if (at_keyword("new")) {
            ++pos_;
            expr->kind = Expr::Kind::make;
            expr->path.push_back(expect_ident());
            while (at_punct(".")) {
                ++pos_;
                expr->path.push_back(expect_ident());
            }
            expr->args = parse_args();
            return expr;
        }
        if (at_punct("(")) {
            ++pos_;
            expr = parse_expr();
            expect_punct(")");
            return expr;
        }
        if (tok.kind == TokenKind::identifier) {
            expr->kind = Expr::Kind::name;
            expr->path.push_back(next().text);
            return expr;
        }
        fail("expected an expression");
    }

    ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs)
    {
        auto expr = std::make_unique<Expr>();
        expr->kind = Expr::Kind::binary;
        expr->line = lhs->line;
        expr->bin_op = op;
        expr->lhs = std::move(lhs);
        expr->rhs = std::move(rhs);
        return expr;
    }

    std::string decode_string(const std::string& raw)
    {
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            if (raw[i] == '\\') {
                char esc = raw[++i];
                out += esc == 'n' ? '\n' : esc == 't' ? '\t' : esc;
            } else {
                out += raw[i];
            }
        }
        return out;
    }
};

} // namespace detail

// Parses a whole `.mj` file; either a complete SourceUnit or a positioned
// ParseError/LexError, never a partial result.
inline SourceUnit parse_unit(std::string_view source, std::string path)
{
    detail::Parser parser(tokenize(source), std::move(path), std::string(source));
    return parser.parse_unit();
}

} // namespace patchtrace::minijay
