#include "dpos/expr.hpp"

#include "dpos/error.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace dpos {

struct Expr::Node {
    Op op;
    double value = 0.0;
    int index = -1;
    std::string name;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

bool is_unary_fn(Expr::Op op) {
    switch (op) {
        case Expr::Op::Sin:
        case Expr::Op::Cos:
        case Expr::Op::Tan:
        case Expr::Op::Tanh:
        case Expr::Op::Exp:
        case Expr::Op::Log:
        case Expr::Op::Sqrt:
            return true;
        default:
            return false;
    }
}

const char* fn_name(Expr::Op op) {
    switch (op) {
        case Expr::Op::Sin: return "sin";
        case Expr::Op::Cos: return "cos";
        case Expr::Op::Tan: return "tan";
        case Expr::Op::Tanh: return "tanh";
        case Expr::Op::Exp: return "exp";
        case Expr::Op::Log: return "log";
        case Expr::Op::Sqrt: return "sqrt";
        default: return "?";
    }
}

double eval_node(const Expr::Node& n, std::span<const double> vars) {
    using Op = Expr::Op;
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return vars[static_cast<std::size_t>(n.index)];
        case Op::Add: return eval_node(*n.lhs, vars) + eval_node(*n.rhs, vars);
        case Op::Sub: return eval_node(*n.lhs, vars) - eval_node(*n.rhs, vars);
        case Op::Mul: return eval_node(*n.lhs, vars) * eval_node(*n.rhs, vars);
        case Op::Div: return eval_node(*n.lhs, vars) / eval_node(*n.rhs, vars);
        case Op::Neg: return -eval_node(*n.lhs, vars);
        case Op::Pow: return std::pow(eval_node(*n.lhs, vars), eval_node(*n.rhs, vars));
        case Op::Sin: return std::sin(eval_node(*n.lhs, vars));
        case Op::Cos: return std::cos(eval_node(*n.lhs, vars));
        case Op::Tan: return std::tan(eval_node(*n.lhs, vars));
        case Op::Tanh: return std::tanh(eval_node(*n.lhs, vars));
        case Op::Exp: return std::exp(eval_node(*n.lhs, vars));
        case Op::Log: return std::log(eval_node(*n.lhs, vars));
        case Op::Sqrt: return std::sqrt(eval_node(*n.lhs, vars));
    }
    return std::nan("");
}

void print_node(const Expr::Node& n, std::ostream& os) {
    using Op = Expr::Op;
    switch (n.op) {
        case Op::Const: os << n.value; return;
        case Op::Var: os << n.name; return;
        case Op::Neg: os << "(-"; print_node(*n.lhs, os); os << ")"; return;
        default: break;
    }
    if (is_unary_fn(n.op)) {
        os << fn_name(n.op) << "(";
        print_node(*n.lhs, os);
        os << ")";
        return;
    }
    const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*"
                    : n.op == Op::Div ? "/" : "^";
    os << "(";
    print_node(*n.lhs, os);
    os << sym;
    print_node(*n.rhs, os);
    os << ")";
}

class Parser {
public:
    Parser(std::string_view text, const SymbolTable& symbols) : text_(text), symbols_(symbols) {}

    Expr parse() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ < text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << "expression column " << pos_ + 1 << ": " << what << " in \"" << text_ << "\"";
        throw Error(ErrorCode::ConfigParse, os.str());
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view token) {
        skip_ws();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        while (true) {
            if (accept("+")) lhs = lhs + parse_term();
            else if (accept("-")) lhs = lhs - parse_term();
            else return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        while (true) {
            skip_ws();
            if (text_.substr(pos_, 2) == "**") return lhs;  // handled in parse_power
            if (accept("*")) lhs = lhs * parse_unary();
            else if (accept("/")) lhs = lhs / parse_unary();
            else return lhs;
        }
    }

    Expr parse_unary() {
        if (accept("-")) return -parse_unary();
        if (accept("+")) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept("**") || accept("^")) return pow(base, parse_unary());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            if (!accept(")")) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    Expr parse_number() {
        const std::string rest(text_.substr(pos_));
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(rest, &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return Expr::constant(value);
    }

    Expr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        static const std::map<std::string, Expr::Op> fns = {
            {"sin", Expr::Op::Sin},   {"cos", Expr::Op::Cos}, {"tan", Expr::Op::Tan},
            {"tanh", Expr::Op::Tanh}, {"exp", Expr::Op::Exp}, {"log", Expr::Op::Log},
            {"sqrt", Expr::Op::Sqrt},
        };
        if (auto it = fns.find(name); it != fns.end()) {
            if (!accept("(")) fail("expected '(' after " + name);
            Expr arg = parse_expr();
            if (!accept(")")) fail("expected ')'");
            return apply(it->second, arg);
        }
        for (std::size_t i = 0; i < symbols_.variables.size(); ++i)
            if (symbols_.variables[i] == name) return Expr::variable(static_cast<int>(i), name);
        if (auto it = symbols_.constants.find(name); it != symbols_.constants.end())
            return Expr::constant(it->second);
        if (name == "pi") return Expr::constant(M_PI);
        pos_ = start;
        fail("unknown symbol '" + name + "'");
    }

    std::string_view text_;
    const SymbolTable& symbols_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::constant(double value) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::variable(int index, std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->index = index;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr::Op Expr::op() const { return node_->op; }

bool Expr::is_constant(double value) const {
    return node_->op == Op::Const && node_->value == value;
}

double Expr::eval(std::span<const double> vars) const { return eval_node(*node_, vars); }

std::string Expr::str() const {
    std::ostringstream os;
    print_node(*node_, os);
    return os.str();
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
        return Expr::constant(a.node_->value + b.node_->value);
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Add;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return -b;
    if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
        return Expr::constant(a.node_->value - b.node_->value);
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Sub;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.op() == Expr::Op::Const && b.op() == Expr::Op::Const)
        return Expr::constant(a.node_->value * b.node_->value);
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Mul;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr::constant(0.0);
    if (b.is_constant(1.0)) return a;
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Div;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr operator-(const Expr& a) {
    if (a.op() == Expr::Op::Const) return Expr::constant(-a.node_->value);
    if (a.op() == Expr::Op::Neg) return Expr(a.node_->lhs);
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Neg;
    n->lhs = a.node_;
    return Expr(std::move(n));
}

Expr pow(const Expr& a, const Expr& b) {
    if (b.is_constant(1.0)) return a;
    if (b.is_constant(0.0)) return Expr::constant(1.0);
    auto n = std::make_shared<Expr::Node>();
    n->op = Expr::Op::Pow;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr apply(Expr::Op fn, const Expr& a) {
    auto n = std::make_shared<Expr::Node>();
    n->op = fn;
    n->lhs = a.node_;
    return Expr(std::move(n));
}

Expr Expr::derivative(int index) const {
    const Node& n = *node_;
    const Expr a = n.lhs ? Expr(n.lhs) : Expr::constant(0.0);
    const Expr b = n.rhs ? Expr(n.rhs) : Expr::constant(0.0);
    switch (n.op) {
        case Op::Const: return constant(0.0);
        case Op::Var: return constant(n.index == index ? 1.0 : 0.0);
        case Op::Add: return a.derivative(index) + b.derivative(index);
        case Op::Sub: return a.derivative(index) - b.derivative(index);
        case Op::Mul: return a.derivative(index) * b + a * b.derivative(index);
        case Op::Div:
            return (a.derivative(index) * b - a * b.derivative(index)) / (b * b);
        case Op::Neg: return -a.derivative(index);
        case Op::Pow: {
            const Expr db = b.derivative(index);
            if (db.is_constant(0.0))
                return b * pow(a, b - constant(1.0)) * a.derivative(index);
            return pow(a, b) * (db * apply(Op::Log, a) + b * a.derivative(index) / a);
        }
        case Op::Sin: return apply(Op::Cos, a) * a.derivative(index);
        case Op::Cos: return -(apply(Op::Sin, a) * a.derivative(index));
        case Op::Tan: {
            const Expr c = apply(Op::Cos, a);
            return a.derivative(index) / (c * c);
        }
        case Op::Tanh: {
            const Expr t = apply(Op::Tanh, a);
            return (constant(1.0) - t * t) * a.derivative(index);
        }
        case Op::Exp: return apply(Op::Exp, a) * a.derivative(index);
        case Op::Log: return a.derivative(index) / a;
        case Op::Sqrt: return a.derivative(index) / (constant(2.0) * apply(Op::Sqrt, a));
    }
    return constant(0.0);
}

Expr parse_expression(std::string_view text, const SymbolTable& symbols) {
    return Parser(text, symbols).parse();
}

}  // namespace dpos
