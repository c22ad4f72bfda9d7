#include "rwae/kv.hpp"

#include <sstream>

#include "rwae/errors.hpp"

namespace rwae {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::string* KvSection::find(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return &v;
    }
    return nullptr;
}

KvSection* KvFile::find(const std::string& name) {
    for (auto& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

const KvSection* KvFile::find(const std::string& name) const {
    for (const auto& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

KvSection& KvFile::get_or_add(const std::string& name) {
    if (KvSection* s = find(name)) return *s;
    sections.push_back({name, {}});
    return sections.back();
}

void KvFile::set(const std::string& section, const std::string& key, const std::string& value) {
    KvSection& s = get_or_add(section);
    for (auto& [k, v] : s.entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    s.entries.emplace_back(key, value);
}

KvFile parse_kv_text(const std::string& text) {
    KvFile out;
    KvSection* current = nullptr;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw format_error("kv line " + std::to_string(lineno) + ": bad section header");
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (out.find(name)) {
                throw format_error("kv line " + std::to_string(lineno) + ": duplicate section [" +
                                   name + "]");
            }
            out.sections.push_back({name, {}});
            current = &out.sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw format_error("kv line " + std::to_string(lineno) + ": expected key=value");
        }
        if (!current) {
            throw format_error("kv line " + std::to_string(lineno) + ": entry before any section");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw format_error("kv line " + std::to_string(lineno) + ": empty key");
        }
        if (current->find(key)) {
            throw format_error("kv line " + std::to_string(lineno) + ": duplicate key '" + key +
                               "'");
        }
        current->entries.emplace_back(key, value);
    }
    return out;
}

std::string to_kv_text(const KvFile& f) {
    std::ostringstream os;
    for (const auto& s : f.sections) {
        os << "[" << s.name << "]\n";
        for (const auto& [k, v] : s.entries) {
            os << k << " = " << v << "\n";
        }
    }
    return os.str();
}

} // namespace rwae
