#pragma once

#include <string>
#include <utility>
#include <vector>

#include "netobs/errors.hpp"

namespace netobs {

// Parser for the structured-text format used by model and experiment files:
//
//   # comment
//   species = ["H2", "O2"]
//   temperature = 2500
//   conservation = [[2, 0, 1], [0, 2, 1]]
//   [[reaction]]
//   reactants = {H2: 1, O2: 1}
//   kf = 2.5
//   kr = {A: 1e10, b: 0, Ea: 50000}
//
// Top-level `key = value` pairs come first; `[[name]]` opens a new entry in
// the array of tables `name`, and subsequent pairs belong to that entry.
// Values are numbers, double-quoted strings, `[...]` arrays (nestable), or
// `{key: value, ...}` inline maps. Parsing is strict: loaders reject keys
// they do not recognize, and every diagnostic carries a line number.

struct KvValue {
    enum class Kind { Number, String, Array, Map };

    Kind kind = Kind::Number;
    double number = 0.0;
    bool is_integer = false;
    std::string text;
    std::vector<KvValue> array;
    std::vector<std::pair<std::string, KvValue>> map;
    int line = 0;

    double as_number(const std::string& context) const;
    long as_integer(const std::string& context) const;
    const std::string& as_string(const std::string& context) const;
    const std::vector<KvValue>& as_array(const std::string& context) const;
    const std::vector<std::pair<std::string, KvValue>>& as_map(const std::string& context) const;
};

struct KvTable {
    std::string name;
    int line = 0;
    std::vector<std::pair<std::string, KvValue>> entries;

    const KvValue* find(const std::string& key) const;
    const KvValue& at(const std::string& key) const;
};

struct KvDocument {
    std::string source;  // path, for diagnostics
    KvTable root;        // top-level keys
    std::vector<KvTable> tables;

    std::vector<const KvTable*> tables_named(const std::string& name) const;
};

KvDocument parse_kv_text(const std::string& text, const std::string& source_name);
KvDocument parse_kv_file(const std::string& path);

}  // namespace netobs
