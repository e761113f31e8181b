#pragma once

// Declarative configuration files: a TOML subset.
//
//   # comment
//   model = "pendulum"
//   params = {k = 3.0, u = 1.2}
//   [cone]
//   halfspaces = [[1, 0],
//                 [1, 1]]
//
// Supported: bare keys, [table] and [table.sub] headers, numbers (integers are
// stored as doubles; inf/nan accepted), booleans, basic strings with escapes,
// arrays (may span lines) and inline tables.

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dpos {

class ConfigValue {
public:
    using Array = std::vector<ConfigValue>;
    using Table = std::map<std::string, ConfigValue>;

    ConfigValue() : data_(Table{}) {}
    template <typename T>
    ConfigValue(T value, int line, int column) : data_(std::move(value)), line_(line), column_(column) {}

    [[nodiscard]] bool is_number() const { return std::holds_alternative<double>(data_); }
    [[nodiscard]] bool is_bool() const { return std::holds_alternative<bool>(data_); }
    [[nodiscard]] bool is_string() const { return std::holds_alternative<std::string>(data_); }
    [[nodiscard]] bool is_array() const { return std::holds_alternative<Array>(data_); }
    [[nodiscard]] bool is_table() const { return std::holds_alternative<Table>(data_); }

    // Accessors throw Error(ConfigParse) naming this value's position.
    [[nodiscard]] double as_number() const;
    [[nodiscard]] bool as_bool() const;
    [[nodiscard]] const std::string& as_string() const;
    [[nodiscard]] const Array& as_array() const;
    [[nodiscard]] const Table& as_table() const;
    [[nodiscard]] Table& as_table();

    [[nodiscard]] std::vector<double> as_number_list() const;
    [[nodiscard]] std::vector<std::vector<double>> as_number_rows() const;

    /// nullptr when absent; only valid on tables.
    [[nodiscard]] const ConfigValue* find(const std::string& key) const;

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

    [[noreturn]] void fail(const std::string& what) const;

private:
    std::variant<double, bool, std::string, Array, Table> data_;
    int line_ = 1;
    int column_ = 1;
};

/// Parses a document into its root table.
[[nodiscard]] ConfigValue parse_config(std::string_view text);

[[nodiscard]] ConfigValue load_config_file(const std::string& path);

}  // namespace dpos
