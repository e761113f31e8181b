#pragma once

// Command-line front end: check, strict, pf-field, classify, simulate, hilbert.
//
// Settings come from an optional config file and from flags; a flag given on
// the command line always wins over the same setting in the file.
// Exit status: 0 success, 2 verdict NotPositive / NonStrict, 1 error (a JSON
// error envelope is written to the output).

#include "dpos/config.hpp"
#include "dpos/dynsys.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpos {

struct RunConfig {
    std::string command;
    std::optional<std::string> model;
    std::map<std::string, double> params;
    std::optional<Matrix> matrix;
    /// Whole config document when it declares [system] and/or [cone].
    std::optional<ConfigValue> document;

    std::optional<std::string> format;  ///< json | csv
    std::optional<std::string> out;
    std::optional<std::string> svg;
    std::optional<std::string> decay;  ///< strict: extra Hilbert-decay CSV

    std::optional<double> tolerance;
    std::optional<double> step;
    std::optional<double> horizon;
    std::optional<double> window;
    std::optional<std::vector<int>> grid;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<int> per_facet;
    std::optional<std::vector<double>> box_lo;
    std::optional<std::vector<double>> box_hi;
    std::optional<std::vector<double>> x0;
    std::optional<std::vector<double>> u;
    std::vector<std::vector<double>> dx;
    std::vector<std::vector<double>> dy;
};

/// Reads run settings from a parsed config document (top level keys plus a
/// [settings] table).
[[nodiscard]] RunConfig config_from_document(const ConfigValue& root);

/// Copies every setting present in `top` over `base`; params merge per key.
void overlay(RunConfig& base, const RunConfig& top);

[[nodiscard]] SystemDef build_system(const RunConfig& cfg);

/// Executes a fully resolved configuration, writing the main artifact to
/// `out` (or to cfg.out). Throws dpos::Error on failure.
[[nodiscard]] int run(const RunConfig& cfg, std::ostream& out);

/// Parses argv, merges the config file, runs, and maps errors to exit 1 with a
/// JSON envelope on `out`.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

/// "1,2.5,-3" -> {1, 2.5, -3}; InvalidInput on junk.
[[nodiscard]] std::vector<double> parse_number_list(const std::string& text);

}  // namespace dpos
