#include "dpos/config.hpp"

#include "dpos/error.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dpos {

namespace {

std::string where(int line, int column) {
    std::ostringstream os;
    os << "line " << line << ", column " << column;
    return os.str();
}

class ConfigParser {
public:
    explicit ConfigParser(std::string_view text) : text_(text) {}

    ConfigValue parse() {
        ConfigValue root(ConfigValue::Table{}, 1, 1);
        ConfigValue::Table* current = &root.as_table();
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                current = parse_table_header(root);
            } else {
                const int kl = line_, kc = column_;
                std::string key = parse_key();
                skip_inline_ws();
                expect('=');
                skip_inline_ws();
                ConfigValue value = parse_value();
                if (current->count(key))
                    fail_at(kl, kc, "duplicate key '" + key + "'");
                current->emplace(std::move(key), std::move(value));
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail_at(int line, int column, const std::string& what) const {
        throw Error(ErrorCode::ConfigParse, "config " + where(line, column) + ": " + what);
    }
    [[noreturn]] void fail(const std::string& what) const { fail_at(line_, column_, what); }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return eof() ? '\0' : text_[pos_]; }

    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }

    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') advance();
    }

    // whitespace, newlines and comments (inside arrays and between entries)
    void skip_all_ws() {
        while (!eof()) {
            skip_inline_ws();
            skip_comment();
            if (peek() == '\n') advance();
            else break;
        }
    }

    void skip_blank_lines() { skip_all_ws(); }

    void end_of_line() {
        skip_inline_ws();
        skip_comment();
        if (eof()) return;
        if (peek() != '\n') fail("expected end of line");
        advance();
    }

    std::string parse_key() {
        if (peek() == '"') return parse_string_raw();
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                          peek() == '-'))
            key.push_back(advance());
        if (key.empty()) fail("expected a key");
        return key;
    }

    ConfigValue::Table* parse_table_header(ConfigValue& root) {
        expect('[');
        skip_inline_ws();
        ConfigValue::Table* table = &root.as_table();
        while (true) {
            const int l = line_, c = column_;
            std::string key = parse_key();
            auto it = table->find(key);
            if (it == table->end())
                it = table->emplace(key, ConfigValue(ConfigValue::Table{}, l, c)).first;
            else if (!it->second.is_table())
                fail_at(l, c, "'" + key + "' is not a table");
            table = &it->second.as_table();
            skip_inline_ws();
            if (peek() == '.') {
                advance();
                skip_inline_ws();
                continue;
            }
            break;
        }
        expect(']');
        return table;
    }

    std::string parse_string_raw() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = advance();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                const char e = advance();
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(std::string("unknown escape '\\") + e + "'");
                }
                continue;
            }
            out.push_back(c);
        }
        return out;
    }

    ConfigValue parse_value() {
        const int l = line_, c = column_;
        const char ch = peek();
        if (ch == '"') return ConfigValue(parse_string_raw(), l, c);
        if (ch == '[') return parse_array();
        if (ch == '{') return parse_inline_table();
        if (text_.substr(pos_, 4) == "true") {
            for (int i = 0; i < 4; ++i) advance();
            return ConfigValue(true, l, c);
        }
        if (text_.substr(pos_, 5) == "false") {
            for (int i = 0; i < 5; ++i) advance();
            return ConfigValue(false, l, c);
        }
        return parse_number();
    }

    ConfigValue parse_number() {
        const int l = line_, c = column_;
        std::string token;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' ||
                          peek() == '+' || peek() == '-' || peek() == '_'))
            token.push_back(advance());
        if (token.empty()) fail_at(l, c, "expected a value");
        std::string digits;
        for (char ch : token)
            if (ch != '_') digits.push_back(ch);
        std::string body = digits;
        double sign = 1.0;
        if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
            if (body[0] == '-') sign = -1.0;
            body.erase(0, 1);
        }
        if (body == "inf") return ConfigValue(sign * HUGE_VAL, l, c);
        if (body == "nan") return ConfigValue(std::nan(""), l, c);
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(digits, &used);
        } catch (const std::exception&) {
            fail_at(l, c, "invalid value '" + token + "'");
        }
        if (used != digits.size()) fail_at(l, c, "invalid number '" + token + "'");
        return ConfigValue(value, l, c);
    }

    ConfigValue parse_array() {
        const int l = line_, c = column_;
        expect('[');
        ConfigValue::Array items;
        skip_all_ws();
        while (peek() != ']') {
            if (eof()) fail_at(l, c, "unterminated array");
            items.push_back(parse_value());
            skip_all_ws();
            if (peek() == ',') {
                advance();
                skip_all_ws();
            } else if (peek() != ']') {
                fail("expected ',' or ']'");
            }
        }
        advance();
        return ConfigValue(std::move(items), l, c);
    }

    ConfigValue parse_inline_table() {
        const int l = line_, c = column_;
        expect('{');
        ConfigValue::Table table;
        skip_inline_ws();
        while (peek() != '}') {
            if (eof() || peek() == '\n') fail_at(l, c, "unterminated inline table");
            const int kl = line_, kc = column_;
            std::string key = parse_key();
            skip_inline_ws();
            expect('=');
            skip_inline_ws();
            if (table.count(key)) fail_at(kl, kc, "duplicate key '" + key + "'");
            table.emplace(std::move(key), parse_value());
            skip_inline_ws();
            if (peek() == ',') {
                advance();
                skip_inline_ws();
            } else if (peek() != '}') {
                fail("expected ',' or '}'");
            }
        }
        advance();
        return ConfigValue(std::move(table), l, c);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

}  // namespace

void ConfigValue::fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigParse, "config " + where(line_, column_) + ": " + what);
}

double ConfigValue::as_number() const {
    if (!is_number()) fail("expected a number");
    return std::get<double>(data_);
}

bool ConfigValue::as_bool() const {
    if (!is_bool()) fail("expected a boolean");
    return std::get<bool>(data_);
}

const std::string& ConfigValue::as_string() const {
    if (!is_string()) fail("expected a string");
    return std::get<std::string>(data_);
}

const ConfigValue::Array& ConfigValue::as_array() const {
    if (!is_array()) fail("expected an array");
    return std::get<Array>(data_);
}

const ConfigValue::Table& ConfigValue::as_table() const {
    if (!is_table()) fail("expected a table");
    return std::get<Table>(data_);
}

ConfigValue::Table& ConfigValue::as_table() {
    if (!is_table()) fail("expected a table");
    return std::get<Table>(data_);
}

std::vector<double> ConfigValue::as_number_list() const {
    std::vector<double> out;
    for (const auto& v : as_array()) out.push_back(v.as_number());
    return out;
}

std::vector<std::vector<double>> ConfigValue::as_number_rows() const {
    std::vector<std::vector<double>> rows;
    for (const auto& r : as_array()) {
        rows.push_back(r.as_number_list());
        if (rows.size() > 1 && rows.back().size() != rows.front().size())
            r.fail("ragged matrix rows");
    }
    return rows;
}

const ConfigValue* ConfigValue::find(const std::string& key) const {
    const auto& t = as_table();
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

ConfigValue parse_config(std::string_view text) { return ConfigParser(text).parse(); }

ConfigValue load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace dpos
