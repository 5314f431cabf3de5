#pragma once
// Recursive-descent parser for the ASCII formula syntax:
//
//   formula := quant | impl
//   quant   := ("forall" | "exists" | "exists!") VAR "." formula
//   impl    := disj ["->" impl]
//   disj    := conj {"|" conj}
//   conj    := neg {"&" neg}
//   neg     := "!" neg | quant | "(" formula ")" | atom
//   atom    := REL "(" term {"," term} ")" | term "=" term
//   term    := VAR | CONST | FUN "(" term {"," term} ")"
//
// Precedence: ! > & > | > ->; "->" associates to the right and
// quantifier bodies extend as far right as possible. Identifiers that name
// a constant, an element or a numeral index denote elements; any other bare
// identifier is a variable.

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "defconv/error.hpp"
#include "defconv/formula.hpp"
#include "defconv/structure.hpp"

namespace defconv {

namespace detail {

struct Token {
    enum class Kind {
        ident,
        number,
        lparen,
        rparen,
        comma,
        dot,
        equals,
        amp,
        bar,
        bang,
        arrow,
        kw_forall,
        kw_exists,
        kw_exists_unique,
        end
    };
    Kind kind = Kind::end;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

inline const char* describe(Token::Kind k) {
    switch (k) {
        case Token::Kind::ident: return "identifier";
        case Token::Kind::number: return "number";
        case Token::Kind::lparen: return "'('";
        case Token::Kind::rparen: return "')'";
        case Token::Kind::comma: return "','";
        case Token::Kind::dot: return "'.'";
        case Token::Kind::equals: return "'='";
        case Token::Kind::amp: return "'&'";
        case Token::Kind::bar: return "'|'";
        case Token::Kind::bang: return "'!'";
        case Token::Kind::arrow: return "'->'";
        case Token::Kind::kw_forall: return "'forall'";
        case Token::Kind::kw_exists: return "'exists'";
        case Token::Kind::kw_exists_unique: return "'exists!'";
        case Token::Kind::end: return "end of input";
    }
    return "token";
}

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1, col = 1, i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            advance(1);
            continue;
        }
        Token tok;
        tok.line = line;
        tok.column = col;
        if (std::isalpha(c) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            tok.text = std::string(text.substr(i, j - i));
            tok.kind = Token::Kind::ident;
            if (tok.text == "forall") {
                tok.kind = Token::Kind::kw_forall;
            } else if (tok.text == "exists") {
                if (j < text.size() && text[j] == '!') {
                    tok.kind = Token::Kind::kw_exists_unique;
                    tok.text = "exists!";
                    ++j;
                } else {
                    tok.kind = Token::Kind::kw_exists;
                }
            }
            advance(j - i);
        } else if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            tok.kind = Token::Kind::number;
            tok.text = std::string(text.substr(i, j - i));
            advance(j - i);
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            tok.kind = Token::Kind::arrow;
            tok.text = "->";
            advance(2);
        } else {
            switch (c) {
                case '(': tok.kind = Token::Kind::lparen; break;
                case ')': tok.kind = Token::Kind::rparen; break;
                case ',': tok.kind = Token::Kind::comma; break;
                case '.': tok.kind = Token::Kind::dot; break;
                case '=': tok.kind = Token::Kind::equals; break;
                case '&': tok.kind = Token::Kind::amp; break;
                case '|': tok.kind = Token::Kind::bar; break;
                case '!': tok.kind = Token::Kind::bang; break;
                default:
                    throw ParseError(std::string("unexpected character '") +
                                         static_cast<char>(c) + "'",
                                     line, col);
            }
            tok.text = std::string(1, static_cast<char>(c));
            advance(1);
        }
        out.push_back(std::move(tok));
    }
    Token end;
    end.kind = Token::Kind::end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

class Parser {
public:
    Parser(std::string_view text, const FiniteStructure& sig)
        : tokens_(tokenize(text)), sig_(sig) {}

    Formula parse() {
        Formula f = formula();
        if (peek().kind != Token::Kind::end) fail("expected end of input");
        return f;
    }

private:
    using K = Token::Kind;

    const Token& peek() const { return tokens_[pos_]; }
    const Token& take() { return tokens_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw ParseError(msg + ", found " + describe(t.kind) +
                             (t.text.empty() ? "" : " '" + t.text + "'"),
                         t.line, t.column);
    }

    [[noreturn]] void fail_at(const Token& t, const std::string& msg) const {
        throw ParseError(msg, t.line, t.column);
    }

    void expect(K kind) {
        if (peek().kind != kind) fail(std::string("expected ") + describe(kind));
        ++pos_;
    }

    static bool starts_quantifier(K k) {
        return k == K::kw_forall || k == K::kw_exists || k == K::kw_exists_unique;
    }

    Formula formula() {
        if (starts_quantifier(peek().kind)) return quantified();
        return implication();
    }

    Formula quantified() {
        const Token& q = take();
        Formula::Kind kind = q.kind == K::kw_forall   ? Formula::Kind::forall
                             : q.kind == K::kw_exists ? Formula::Kind::exists
                                                      : Formula::Kind::exists_unique;
        if (peek().kind != K::ident) fail("expected a variable after quantifier");
        const Token& var = take();
        if (sig_.kind_of(var.text) != SymbolKind::none) {
            fail_at(var, "bound variable '" + var.text + "' shadows a symbol of the signature");
        }
        expect(K::dot);
        return Formula::quantifier(kind, var.text, formula());
    }

    Formula implication() {
        Formula lhs = disjunction();
        if (peek().kind == K::arrow) {
            ++pos_;
            return Formula::implies(std::move(lhs), implication());
        }
        return lhs;
    }

    Formula disjunction() {
        std::vector<Formula> parts;
        parts.push_back(conjunction());
        while (peek().kind == K::bar) {
            ++pos_;
            parts.push_back(conjunction());
        }
        if (parts.size() == 1) return std::move(parts.front());
        return Formula::disjunction(std::move(parts));
    }

    Formula conjunction() {
        std::vector<Formula> parts;
        parts.push_back(negation());
        while (peek().kind == K::amp) {
            ++pos_;
            parts.push_back(negation());
        }
        if (parts.size() == 1) return std::move(parts.front());
        return Formula::conjunction(std::move(parts));
    }

    Formula negation() {
        K k = peek().kind;
        if (k == K::bang) {
            ++pos_;
            return Formula::negation(negation());
        }
        if (starts_quantifier(k)) return quantified();
        if (k == K::lparen) {
            ++pos_;
            Formula inner = formula();
            expect(K::rparen);
            return inner;
        }
        return atom();
    }

    Formula atom() {
        const Token& t = peek();
        if (t.kind == K::ident && sig_.kind_of(t.text) == SymbolKind::relation) {
            ++pos_;
            std::vector<Term> args = arguments(t);
            check_arity(t, sig_.relation(t.text)->arity, args.size());
            return Formula::relation(t.text, std::move(args));
        }
        if (t.kind != K::ident && t.kind != K::number) fail("expected a formula");
        Term lhs = term();
        expect(K::equals);
        Term rhs = term();
        return Formula::equality(std::move(lhs), std::move(rhs));
    }

    std::vector<Term> arguments(const Token& head) {
        if (peek().kind != K::lparen) {
            fail("symbol '" + head.text + "' must be applied to arguments");
        }
        ++pos_;
        std::vector<Term> args;
        args.push_back(term());
        while (peek().kind == K::comma) {
            ++pos_;
            args.push_back(term());
        }
        expect(K::rparen);
        return args;
    }

    void check_arity(const Token& head, std::size_t declared, std::size_t given) const {
        if (declared != given) {
            fail_at(head, "arity mismatch for '" + head.text + "': declared " +
                              std::to_string(declared) + ", given " + std::to_string(given));
        }
    }

    Term term() {
        const Token& t = peek();
        if (t.kind == K::number) {
            ++pos_;
            if (!sig_.resolve_constant(t.text)) {
                fail_at(t, "element index " + t.text + " is outside the universe");
            }
            return Term::constant(t.text);
        }
        if (t.kind != K::ident) fail("expected a term");
        ++pos_;
        bool applied = peek().kind == K::lparen;
        switch (sig_.kind_of(t.text)) {
            case SymbolKind::function: {
                std::vector<Term> args = arguments(t);
                check_arity(t, sig_.function(t.text)->arity, args.size());
                return Term::apply(t.text, std::move(args));
            }
            case SymbolKind::relation:
                fail_at(t, "relation '" + t.text + "' used as a term");
            case SymbolKind::constant:
            case SymbolKind::element:
                if (applied) fail_at(t, "arity mismatch for '" + t.text + "': constants take no arguments");
                return Term::constant(t.text);
            case SymbolKind::none:
                if (applied) fail_at(t, "unknown symbol '" + t.text + "'");
                return Term::variable(t.text);
        }
        fail_at(t, "unreachable");
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    const FiniteStructure& sig_;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text, const FiniteStructure& signature) {
    return detail::Parser(text, signature).parse();
}

}  // namespace defconv
