#include "pwnn/expression.hpp"

#include "pwnn/errors.hpp"

#include <cctype>
#include <charconv>

namespace pwnn {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, std::size_t dimension) : text_(text), dimension_(dimension) {}

    Expression run() {
        out_.source_ = std::string(text_);
        out_.root_ = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return std::move(out_);
    }

private:
    using Kind = Expression::Kind;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Expression::Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size() - 1);
    }

    int binary(Kind kind, int lhs, int rhs) { return add({kind, 0.0, 0, lhs, rhs}); }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = binary(Kind::Add, lhs, term());
            } else if (accept('-')) {
                lhs = binary(Kind::Sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    int term() {
        int lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary(Kind::Mul, lhs, unary());
            } else if (accept('/')) {
                lhs = binary(Kind::Div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    int unary() {
        if (accept('-')) return add({Kind::Neg, 0.0, 0, unary(), -1});
        if (accept('+')) return unary();
        return power();
    }

    int power() {
        const int base = primary();
        if (!accept('^')) return base;
        const std::size_t at = pos_;
        const int exponent = unary();
        if (!constant(exponent)) {
            pos_ = at;
            fail("exponent must be a constant");
        }
        return add({Kind::Pow, fold(exponent), 0, base, -1});
    }

    bool constant(int i) const {
        const auto& n = out_.nodes_[static_cast<std::size_t>(i)];
        if (n.kind == Kind::X || n.kind == Kind::Y) return false;
        return (n.lhs < 0 || constant(n.lhs)) && (n.rhs < 0 || constant(n.rhs));
    }

    double fold(int i) const {
        Expression tmp;
        tmp.nodes_ = out_.nodes_;
        tmp.root_ = i;
        return tmp.evaluate<double>(0.0, {});
    }

    int primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (accept('(')) {
            const int inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string_view word = text_.substr(start, pos_ - start);
            if (word == "x") return add({Kind::X, 0.0, 0, -1, -1});
            if (word.size() > 1 && word[0] == 'y' && word.find_first_not_of("0123456789", 1) == std::string_view::npos) {
                std::size_t k = 0;
                std::from_chars(word.data() + 1, word.data() + word.size(), k);
                if (k == 0 || k > dimension_) {
                    pos_ = start;
                    fail("state component '" + std::string(word) + "' outside y1..y" + std::to_string(dimension_));
                }
                return add({Kind::Y, 0.0, k - 1, -1, -1});
            }
            Kind fn;
            if (word == "sin") {
                fn = Kind::Sin;
            } else if (word == "cos") {
                fn = Kind::Cos;
            } else if (word == "exp") {
                fn = Kind::Exp;
            } else {
                pos_ = start;
                fail("unknown identifier '" + std::string(word) + "'");
            }
            if (!accept('(')) fail("expected '(' after " + std::string(word));
            const int arg = expr();
            if (!accept(')')) fail("expected ')'");
            return add({fn, 0.0, 0, arg, -1});
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    int number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        return add({Kind::Number, v, 0, -1, -1});
    }

    std::string_view text_;
    std::size_t dimension_;
    std::size_t pos_ = 0;
    Expression out_;
};

Expression Expression::parse(std::string_view text, std::size_t dimension) {
    return ExpressionParser(text, dimension).run();
}

bool Expression::uses_state() const {
    for (const auto& n : nodes_) {
        if (n.kind == Kind::Y) return true;
    }
    return false;
}

bool Expression::uses_x() const {
    for (const auto& n : nodes_) {
        if (n.kind == Kind::X) return true;
    }
    return false;
}

}  // namespace pwnn
