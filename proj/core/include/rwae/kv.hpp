#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rwae {

// Sectioned key=value text. Grammar: '[section]' headers, 'key = value' lines,
// '#' comments, blank lines. Order-preserving; duplicate keys are errors.
struct KvSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const;
};

struct KvFile {
    std::vector<KvSection> sections;

    KvSection* find(const std::string& name);
    const KvSection* find(const std::string& name) const;
    KvSection& get_or_add(const std::string& name);
    void set(const std::string& section, const std::string& key, const std::string& value);
};

// Throws format_error on malformed lines or duplicate keys.
KvFile parse_kv_text(const std::string& text);
std::string to_kv_text(const KvFile& f);

std::string trim(const std::string& s);

} // namespace rwae
